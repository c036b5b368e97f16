#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sepsplit/fourier.hpp"
#include "sepsplit/model.hpp"
#include "sepsplit/separatrix.hpp"

namespace sepsplit {

struct MelnikovCoefficient {
  int k = 0;
  BigReal eps;
  BigComplex value;
  std::string method;  // "contour_quadrature" | "closed_form"
  BigReal est_error;
  long evaluations = 0;
};

// k-th Fourier coefficient in τ of H₁(q, p, τ) at a point of phase space.
BigComplex h1_harmonic(const PerturbationModel& p, int k, const BigComplex& q, const BigComplex& pv);
BigComplex h1_on_separatrix(const SystemModel& model, SeparatrixEvaluator& sep, int k, const BigComplex& u);

struct MelnikovOptions {
  double shift_c = 1.0;  // contour at Im r = sign(k)(a − cε)
  BigReal tol;           // zero → 2^{−(bits−20)}
  int max_panels = 60000;
};

// M^[k](ε) = ∫ H₁^[k](q₀(r), p₀(r)) e^{ikr/ε} dr by quadrature on the shifted contour.
MelnikovCoefficient melnikov_coefficient(const SystemModel& model, SeparatrixEvaluator& sep, int k,
                                         const BigReal& eps, int bits, const MelnikovOptions& opt = {});

// L(u, τ; ε) = Σ_{k≠0} M^[k] e^{ik(τ − u/ε)}. Missing negative harmonics are
// taken as conjugates of the positive ones.
BigReal melnikov_potential(const std::map<int, MelnikovCoefficient>& coeffs, const BigReal& u, const BigReal& tau,
                           const BigReal& eps);

struct AsymptoticConstants {
  Rational ell;
  BigComplex C_hat;          // lim (u − ia)^ℓ H₁^[1] (ℓ = 0: lim (u − ia) a^[1] p₀)
  BigComplex C_hat_numeric;  // the same limit by extrapolation
  BigComplex f0;
  bool inner_available = false;  // A/Q/F/b computed (polynomial case)
  std::vector<HarmonicSeries> A, Q, F;
  BigComplex b;
};

// Ĉ from the leading local expansions of each monomial.
BigComplex chat_symbolic(const SystemModel& model, const SeparatrixInfo& sep, const Rational& ell, int bits);
// Ĉ as a numerical limit along u = i(a − δ).
BigComplex chat_numeric(const SystemModel& model, SeparatrixEvaluator& sep, const Rational& ell, int bits);
// f₀ = −2π e^{iπℓ/2} Ĉ / Γ(ℓ), with f₀ = 2πĈ for the logarithmic case ℓ = 0.
BigComplex f0_from_chat(const BigComplex& chat, const Rational& ell);

void constant_Chat_and_f0(const SystemModel& model, SeparatrixEvaluator& sep, int bits, AsymptoticConstants& out);

struct InnerFunctions {
  std::vector<HarmonicSeries> A, Q, F;
};
InnerFunctions functions_AQF(const SystemModel& model, const SeparatrixInfo& sep, const Rational& ell, int bits);
BigComplex constant_b(const InnerFunctions& f, const Rational& r, int bits);

AsymptoticConstants compute_constants(const SystemModel& model, SeparatrixEvaluator& sep, int bits);

enum class FSource { MelnikovF0, InnerFMu };

struct LobeAreaPrediction {
  BigReal eps;
  Regime regime = Regime::RegularAboveStar;
  BigReal area;
  std::string formula_id;
  FSource f_source = FSource::MelnikovF0;
  bool unknown_phase_C = false;
  bool f0_substituted = false;  // singular formula evaluated with f₀ in place of f(μ̂)
  Rational nu;
  std::string error_form;
  std::vector<std::string> caveats;
};

// f_mu is required when f_source is InnerFMu in a singular regime.
LobeAreaPrediction predict_area(const SystemModel& model, const SeparatrixInfo& sep, const AsymptoticConstants& c,
                                const BigReal& eps, FSource f_source,
                                const std::optional<BigComplex>& f_mu = std::nullopt);

}  // namespace sepsplit
