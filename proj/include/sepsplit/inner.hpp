#pragma once

#include <vector>

#include "sepsplit/fourier.hpp"
#include "sepsplit/melnikov.hpp"
#include "sepsplit/rational.hpp"

namespace sepsplit {

// Inner Hamilton–Jacobi equation
//   ∂τψ + ½z^{2r}(∂zψ)² − 1/(2z^{2r}) + (μ̂/z^ℓ) Σ_l A_l(τ)(z^{2r}∂zψ)^l = 0,
// with ψ = −1/((2r−1)z^{2r−1}) + μ̂ψ̄ + K. ψ̄ is solved mode by mode in τ on the
// horizontal line Im z = −depth.
struct InnerProblem {
  Rational r;
  Rational ell;
  BigReal mu_hat;
  std::vector<HarmonicSeries> A;  // A_l, l = 0..N
  int kf = 8;                     // modes |k| ≤ kf
  double depth = 12.0;            // Y in Im z = −Y
  double length = 120.0;          // T: the line runs to Re z = ∓T
  double panel = 4.0;             // Chebyshev panel length
  double half_window = 2.0;       // overlap panel |Re z| ≤ half_window
  int nodes = 32;                 // Chebyshev–Lobatto nodes per panel
  double kappa = 8.0;             // sector |Im z| > θ Re z + κ
  double theta = 0.8660254037844386;  // tan(π/3)/2
  BigComplex gauge;               // K^u = K^s
  int max_iterations = 150;
  double relaxation = 1.0;        // ω in ψ ← ψ + ω(T(ψ) − ψ)
  int bits = 128;
};

// A_l from a polynomial model (ℓ ≥ 2r required).
InnerProblem make_inner_problem(const SystemModel& model, const SeparatrixInfo& sep, const AsymptoticConstants& c,
                                const BigReal& mu_hat, int bits);

enum class Branch { Unstable, Stable };

struct InnerSolution {
  Branch branch = Branch::Unstable;
  double depth = 0.0;
  int kf = 0;
  BigReal mu_hat;
  BigComplex gauge;
  std::vector<BigComplex> z;                    // nodes along the line, increasing Re z
  std::vector<std::vector<BigComplex>> psi;     // ψ̄ modes [node][k + kf]
  std::vector<std::vector<BigComplex>> dpsi;    // ∂zψ̄ modes
  int iterations = 0;
  BigReal increment;   // sup distance of the last two iterates
  BigReal residual;    // HJ residual at panel midpoints (ψ̄ scale)
  BigReal decay;       // max |z^ℓ ψ̄| over the line

  // ∂zψ₀ = z^{−2r} + μ̂∂zψ̄ at a node and phase τ.
  BigComplex w(std::size_t node, const BigReal& tau, const Rational& r) const;
};

InnerSolution solve_inner_branch(const InnerProblem& problem, Branch branch, const BigReal& tol);

struct InnerDiffSample {
  BigComplex z;
  std::vector<BigComplex> modes;      // Δψ̄ = ψ̄^u − ψ̄^s by τ-mode, index k + kf
  std::vector<BigComplex> psi_modes;  // Δψ₀ = μ̂Δψ̄ (+ K^u − K^s)
};

// Differences at the shared nodes with |Re z| ≤ half_window.
std::vector<InnerDiffSample> inner_difference(const InnerSolution& u, const InnerSolution& s,
                                              double half_window);

struct StokesData {
  BigComplex chi_minus1;
  BigComplex chi_minus2;
  BigComplex f_mu;
  BigReal residual;    // max relative deviation of the pointwise estimates from the fit
  BigReal correction;  // max relative size of the finite-depth term β z^{−p}
  double decay_slope = 0.0;  // d ln|Δψ̄| / d Im z across depths
  std::vector<double> depths;
  HarmonicSeries F1;
  BigComplex b;
};

// Fits μ̂χ^[−1] from Δψ₀ e^{i(z − τ + μ̂ g)}, g = −F₁ − μ̂ b ln z (ℓ = 2r) or 0
// (ℓ > 2r), extrapolating in z^{−1} or z^{2r−ℓ}. `samples` holds one entry per depth.
StokesData extract_chi(const std::vector<std::vector<InnerDiffSample>>& samples, const InnerProblem& problem,
                       const HarmonicSeries& F1, const BigComplex& b, const BigComplex& C_plus);

// Solves both branches at each depth (in parallel when OpenMP is enabled) and
// extracts the Stokes data.
StokesData stokes_constant(const InnerProblem& problem, const std::vector<double>& depths, const BigComplex& C_plus,
                           const HarmonicSeries& F1, const BigComplex& b);

// First-order value of χ^[−1] (μ̂ → 0) for integer ℓ by the residue at z = 0.
BigComplex chi_first_order(const InnerProblem& problem);

}  // namespace sepsplit
