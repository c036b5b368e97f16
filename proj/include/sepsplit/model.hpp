#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sepsplit/bigcomplex.hpp"
#include "sepsplit/fourier.hpp"
#include "sepsplit/rational.hpp"

namespace sepsplit {

enum class Kind { Polynomial, Trigonometric };

// Polynomial V(x) = Σ_d c_d x^d, or trigonometric
// V(x) = Σ_j c_j cos(jx) + s_j sin(jx) (the j = 0 entry is a constant).
struct Potential {
  Kind kind = Kind::Polynomial;
  std::map<int, BigReal> coefficients;
  std::map<int, BigReal> sin_coefficients;  // trigonometric kind only

  // Degree M (polynomial) or highest harmonic (trigonometric).
  int degree() const;
  BigReal value(const BigReal& x) const;
  BigComplex value(const BigComplex& x) const;
  // n-th derivative, n ≤ 3
  BigReal derivative(const BigReal& x, int n) const;
  BigComplex derivative(const BigComplex& x, int n) const;
  BigReal coefficient(int d) const;
  BigReal sin_coefficient(int j) const;

  friend bool operator==(const Potential& a, const Potential& b);
};

struct CriticalClass {
  bool hyperbolic = false;
  BigReal lambda;  // sqrt(−V''(0)) when hyperbolic
  int m = 0;       // parabolic: order of the first nonvanishing derivative
  BigReal v_m;     // parabolic: coefficient of x^m
};

// Classification of the origin; nullopt when it is neither (e.g. a center).
std::optional<CriticalClass> critical_class(const Potential& v);
// Leading coefficient at infinity (polynomial kind).
BigReal v_infinity(const Potential& v);

// x-factor of a perturbation term. Polynomial kind: x^k (k ≥ 0).
// Trigonometric kind: k > 0 → cos(kx), k < 0 → sin(|k|x), k = 0 → 1.
struct PerturbationTerm {
  int x_power = 0;
  int y_power = 0;
  FourierSeries series;
};

struct PerturbationModel {
  Kind kind = Kind::Polynomial;
  std::vector<PerturbationTerm> terms;
  std::optional<FourierSeries> linear;  // a(τ)·x, trigonometric kind

  bool empty() const;
  bool depends_on_y() const;
  // Order of vanishing at the origin, n.
  int order_n() const;
  int max_degree_N() const;
  int max_harmonic() const;

  friend bool operator==(const PerturbationModel& a, const PerturbationModel& b);
};

struct SystemModel {
  std::string name;
  Potential potential;
  PerturbationModel perturbation;
  Rational eta;
  BigReal mu;

  friend bool operator==(const SystemModel& a, const SystemModel& b);
};

enum class Regime {
  RegularAboveStar,
  RegularEtaZeroEllBelow2r,
  SingularEllAbove2r,
  SingularEllEquals2r,
  BelowSingularOutOfScope,
};

std::string to_string(Regime r);

struct HypothesisFlag {
  std::string id;
  bool pass = false;
  std::string message;
};

struct RegimeReport {
  Rational ell;
  Rational r;
  Rational eta_star;
  Rational mu_hat_exponent;
  Regime regime = Regime::RegularAboveStar;
  std::vector<HypothesisFlag> hypothesis_flags;
};

// Order r implied by the degree relation M = 2r/(r−1) (polynomial) or r = 1 (trig).
Rational expected_order_r(const Potential& v);

std::vector<HypothesisFlag> validate_hypotheses(const SystemModel& model);
Rational perturbation_order_ell(const PerturbationModel& p, const Rational& r, int degree_M);
RegimeReport classify_regime(const SystemModel& model, const Rational& r);
BigReal mu_hat(const BigReal& mu, const BigReal& eps, const Rational& eta, const Rational& ell,
               const Rational& r);

// Bounds on term powers.
constexpr int kMaxPolynomialDegree = 16;
constexpr int kMaxTrigHarmonic = 16;

}  // namespace sepsplit
