#pragma once

#include <functional>
#include <vector>

#include "sepsplit/bigcomplex.hpp"
#include "sepsplit/model.hpp"

namespace sepsplit {

enum class XFactor { Power, Cos, Sin };

// coeff · a_series(τ) · g(x) · y^l with g = x^k, cos(kx) or sin(kx);
// series < 0 means the time factor is 1.
struct FieldTerm {
  BigReal coeff;
  int series = -1;
  XFactor xf = XFactor::Power;
  int k = 0;
  int l = 0;
};

using Field = std::vector<FieldTerm>;

// H and its first and second partial derivatives in the form above, for
// H = y²/2 + V(x) + μ ε^η H₁(x, y, t/ε).
struct VectorFieldSpec {
  std::vector<FourierSeries> time_series;
  BigReal omega;  // 1/ε: τ = ω t
  Field H, Hx, Hy, Hxx, Hxy, Hyy;
  bool autonomous() const { return time_series.empty(); }
};

// Full perturbed field at ε (perturbation scaled by μ ε^η).
VectorFieldSpec make_field(const SystemModel& m, const BigReal& eps);
// Unperturbed field H₀ = y²/2 + V(x).
VectorFieldSpec make_unperturbed_field(const Potential& v);

BigReal evaluate_field(const Field& f, const VectorFieldSpec& spec, const BigReal& x, const BigReal& y,
                       const BigReal& t);

// Taylor coefficients of the flow by automatic recurrences. Component layout:
// 0 x, 1 y, then (vx, vy) per tangent vector, then the action
// ∫ (y·H_y − H) dt when requested.
template <class T>
class JetEngine {
 public:
  JetEngine(const VectorFieldSpec& spec, int order, int bits, int ntangent, bool action);
  ~JetEngine();
  JetEngine(const JetEngine&) = delete;
  JetEngine& operator=(const JetEngine&) = delete;

  int order() const { return order_; }
  int ncomp() const { return ncomp_; }
  // t0 is only used by time-dependent fields.
  void compute(const std::vector<T>& state, const BigReal& t0);
  const std::vector<T>& coeffs(int comp) const;

 private:
  struct Impl;
  Impl* impl_;
  int order_;
  int ncomp_;
};

// Order heuristic from the requested tolerance.
int taylor_order_for(const BigReal& tol);

struct IntegratorOptions {
  int bits = 128;
  BigReal tol;           // local error per unit time; zero → 2^{−(bits−16)}
  int order = 0;         // zero → from tol
  int ntangent = 0;      // 0, 1 or 2 tangent vectors
  bool action = false;
  long max_steps = 2000000;
};

// Real-time integrator for the perturbed (or unperturbed) model flow.
class TaylorIntegrator {
 public:
  TaylorIntegrator(VectorFieldSpec spec, IntegratorOptions opt);
  ~TaylorIntegrator();
  TaylorIntegrator(const TaylorIntegrator&) = delete;
  TaylorIntegrator& operator=(const TaylorIntegrator&) = delete;

  // Advances state (size ncomp) from t0 to t1 in place; t1 < t0 integrates backward.
  void integrate(std::vector<BigReal>& state, const BigReal& t0, const BigReal& t1);
  int ncomp() const;
  long steps_taken() const { return steps_; }
  const IntegratorOptions& options() const { return opt_; }

 private:
  VectorFieldSpec spec_;
  IntegratorOptions opt_;
  JetEngine<BigReal>* engine_;
  long steps_ = 0;
};

struct FlowResult {
  BigReal x, y;
  bool has_jacobian = false;
  BigReal j11, j12, j21, j22;  // ∂(x1,y1)/∂(x0,y0)
};

// Flow of the model at ε from (x0, y0) over [t0, t1].
FlowResult integrate_flow(const SystemModel& model, const BigReal& eps, const BigReal& x0,
                          const BigReal& y0, const BigReal& t0, const BigReal& t1, const BigReal& tol,
                          int bits, bool with_variational);

// A Taylor step of the complex unperturbed flow, kept as dense output: the
// expansion is valid for |u − center| ≤ radius.
struct TaylorPatch {
  BigComplex center;
  BigReal radius;
  std::vector<BigComplex> q, p;
  void evaluate(const BigComplex& u, BigComplex& qv, BigComplex& pv) const;
};

// Complex-time integrator for H₀ along straight segments.
class ComplexFlow {
 public:
  ComplexFlow(const Potential& v, int bits, BigReal tol = BigReal());
  ~ComplexFlow();
  ComplexFlow(const ComplexFlow&) = delete;
  ComplexFlow& operator=(const ComplexFlow&) = delete;

  // Integrates (q, p) from u0 to u1 along the segment. max_step(u) caps the
  // step length at the current point (may return +inf / nothing).
  // Patches are appended to `track` when non-null.
  void integrate(BigComplex& q, BigComplex& p, const BigComplex& u0, const BigComplex& u1,
                 const std::function<BigReal(const BigComplex&)>& max_step,
                 std::vector<TaylorPatch>* track = nullptr);
  int bits() const { return bits_; }
  int order() const;

 private:
  int bits_;
  BigReal tol_;
  VectorFieldSpec spec_;
  JetEngine<BigComplex>* engine_;
};

}  // namespace sepsplit
