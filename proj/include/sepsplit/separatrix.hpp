#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sepsplit/model.hpp"
#include "sepsplit/power_series.hpp"
#include "sepsplit/taylor.hpp"

namespace sepsplit {

// Leading behavior of cos q₀ and sin q₀ at +ia (trigonometric potentials):
// cos q₀ ≈ C1/(u − ia)^{2/M}, sin q₀ ≈ C2/(u − ia)^{2/M}.
struct TrigLocalConstants {
  BigComplex C1, C2;
  int M = 1;
};

enum class SeparatrixSource { Catalog, Numeric };

struct SeparatrixInfo {
  BigReal a;
  Rational r;
  BigComplex C_plus;  // p₀ ≈ C₊/(u − ia)^r
  std::optional<TrigLocalConstants> trig;
  SeparatrixSource source = SeparatrixSource::Numeric;
  std::string catalog_name;
  // Base point at u = 0. Polynomial potentials: the turning point (x*, 0).
  // Trigonometric potentials: the point of maximal speed (x*, p*).
  BigReal apex_x, apex_p;
  BigReal lambda;
  int degree_M = 0;
  // Relative gap between the balance and continuation values of |C₊|
  // (numeric pipeline only).
  double cplus_agreement = 0.0;
};

struct SeparatrixPoint {
  BigComplex q, p;
};

// Recognizes V = −x²/2 + x⁴/4 and V = cos x − 1 exactly.
std::optional<SeparatrixInfo> catalog_lookup(const Potential& v, int bits);
std::optional<SeparatrixPoint> catalog_evaluate(const SeparatrixInfo& info, const BigComplex& u);

// Base point of the parameterization.
void find_apex(const Potential& v, int bits, BigReal& x, BigReal& p);

struct ApexSeries {
  PowerSeries<BigReal> q, p;
};
// Taylor series of (q₀, p₀) at u = 0 from q″ = −V′(q).
ApexSeries taylor_at_apex(const Potential& v, int order, int bits);

struct SingularityFit {
  BigReal a;
  Rational r;
  double r_estimate = 0.0;
  double rms_residual = 0.0;
};

// Domb–Sykes style fit of log|c_{2m}| ≈ c + γ log m − 2m log a (+ d/m) over
// the tail of an even series whose singularity behaves like (u − ia)^{−s};
// r = γ + 2 − derivative, with derivative = 1 when the series is p₀.
SingularityFit locate_singularity(const PowerSeries<BigReal>& series, int derivative = 0);

// |C₊| from the dominant balance at infinity (polynomial potentials).
BigReal cplus_from_balance(const Potential& v, const Rational& r, int bits);

// C₊ by continuation of p₀ up the imaginary axis and extrapolation of
// (u − ia)^r p₀(u); magnitude from the balance, phase from the continuation.
BigComplex coefficient_Cplus(const Potential& v, const SeparatrixInfo& partial, int bits,
                             double* agreement = nullptr);

struct AnalyzeOptions {
  bool use_catalog = true;
  int series_order = 400;
};

// Catalog lookup, falling back to the numeric pipeline.
SeparatrixInfo analyze_separatrix(const Potential& v, int bits, const AnalyzeOptions& opt = {});

// Evaluates (q₀(u), p₀(u)) in the strip |Im u| < a. Closed forms are used for
// catalog systems; otherwise the flow is continued from the base point along
// the real axis and then vertically, with cached real-axis and horizontal
// tracks. Not thread-safe; use one instance per task.
class SeparatrixEvaluator {
 public:
  SeparatrixEvaluator(const Potential& v, SeparatrixInfo info, int bits, double delta_min = 1e-3);

  const SeparatrixInfo& info() const { return info_; }
  int bits() const { return bits_; }
  SeparatrixPoint operator()(const BigComplex& u);
  // Builds a dense track along Im u = v, |Re u| ≤ extent, so that later calls on
  // that line are cheap.
  void prepare_line(const BigReal& v, const BigReal& extent);
  bool closed_form() const { return info_.source == SeparatrixSource::Catalog; }

 private:
  struct Track {
    BigReal im;
    int dir = 1;  // +1: Re u ≥ 0, −1: Re u ≤ 0
    BigReal extent;
    std::vector<TaylorPatch> patches;
  };
  int guard_bits(const BigReal& extent) const;
  void base_point(int work, BigComplex& q, BigComplex& p) const;
  const Track& real_track(int dir, const BigReal& extent);
  bool eval_on_track(const Track& t, const BigComplex& u, SeparatrixPoint& out) const;
  SeparatrixPoint continue_vertically(const BigComplex& u);
  SeparatrixPoint reflect(const SeparatrixPoint& p) const;

  Potential v_;
  SeparatrixInfo info_;
  int bits_;
  double delta_min_;
  bool even_ = false;
  std::vector<Track> tracks_;
};

// Convenience wrapper over a fresh evaluator.
SeparatrixPoint evaluate_complex(const Potential& v, const SeparatrixInfo& info, const BigComplex& u, int bits);

}  // namespace sepsplit
