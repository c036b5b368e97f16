#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "sepsplit/bigcomplex.hpp"
#include "sepsplit/errors.hpp"

namespace sepsplit {

// Gauss–Legendre rule on [−1, 1] at a given precision.
struct GaussRule {
  int bits = 0;
  std::vector<BigReal> nodes;
  std::vector<BigReal> weights;
};

// Cached, thread-safe.
std::shared_ptr<const GaussRule> gauss_legendre(int n, int bits);
// Rule size used by quad_adaptive at this precision.
int default_rule_size(int bits);

using ComplexFn = std::function<BigComplex(const BigComplex&)>;

struct QuadResult {
  BigComplex value;
  BigReal est_error;
  long evaluations = 0;
  int panels = 0;
};

// Thrown when refinement is exhausted; carries the best estimate so far.
class QuadratureError : public NumericalError {
 public:
  QuadratureError(const std::string& what, QuadResult best)
      : NumericalError(what), best_(std::move(best)) {}
  const QuadResult& best() const { return best_; }

 private:
  QuadResult best_;
};

struct QuadOptions {
  int rule = 0;           // 0 → default_rule_size(bits)
  int max_panels = 20000;
  // Initial panels are no longer than this (0: one panel per path segment).
  BigReal max_panel_length;
};

// ∫ f(z) dz along the piecewise-linear path through the given waypoints.
// Globally adaptive: the panel with the largest error estimate is bisected
// until the summed estimate is ≤ tol·(1 + |result|).
QuadResult quad_adaptive(const ComplexFn& f, const std::vector<BigComplex>& path, const BigReal& tol,
                         int bits, const QuadOptions& opt = {});

// Fixed-rule integral of f over the segment [a, b].
BigComplex quad_fixed(const ComplexFn& f, const BigComplex& a, const BigComplex& b, const GaussRule& rule);

// Value at x = 0 of the polynomial through (x_i, v_i) (Neville).
BigComplex extrapolate_to_zero(const std::vector<BigReal>& x, const std::vector<BigComplex>& v);

}  // namespace sepsplit
