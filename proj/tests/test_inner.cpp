#include <doctest.h>

#include <cmath>

#include "sepsplit/errors.hpp"
#include "sepsplit/inner.hpp"
#include "sepsplit/model_io.hpp"

using namespace sepsplit;

namespace {

std::string models_dir() { return std::string(SEPSPLIT_SOURCE_DIR) + "/models/"; }

struct Setup {
  SystemModel model;
  SeparatrixInfo info;
  AsymptoticConstants k;
  explicit Setup(const std::string& file, int bits = 128) : model(load_model(models_dir() + file)) {
    info = analyze_separatrix(model.potential, bits);
    SeparatrixEvaluator ev(model.potential, info, bits);
    k = compute_constants(model, ev, bits);
  }
  HarmonicSeries F1() const { return k.F.size() > 1 ? k.F[1] : HarmonicSeries(); }
};

// Reduced discretization for unit tests.
InnerProblem small_problem(const Setup& s, double mu_hat) {
  InnerProblem pb = make_inner_problem(s.model, s.info, s.k, BigReal(mu_hat, 128), 128);
  pb.kf = 4;
  pb.length = 80;
  pb.kappa = 6.0;  // lets depth 8 clear the overlap sector
  return pb;
}

}  // namespace

TEST_CASE("inner problem for x^4 sin(tau)") {
  PrecisionGuard g(128);
  Setup s("duffing_x4.json");
  InnerProblem pb = make_inner_problem(s.model, s.info, s.k, BigReal(1e-3, 128), 128);
  CHECK(pb.r == Rational(2));
  CHECK(pb.ell == Rational(4));
  REQUIRE(!pb.A.empty());
  // A₀(τ) = −2 sin τ: e^{iτ} coefficient i
  BigComplex a1 = pb.A[0].coeff(1, 128);
  CHECK(abs(a1 - BigComplex(BigReal::zero(128), BigReal(1.0, 128))).to_double() < 1e-30);
  CHECK(pb.A[0].coeff(0, 128).is_zero());
}

TEST_CASE("first-order Stokes coefficient by residues") {
  PrecisionGuard g(128);
  Setup s("duffing_x4.json");
  InnerProblem pb = make_inner_problem(s.model, s.info, s.k, BigReal(1e-3, 128), 128);
  BigComplex chi = chi_first_order(pb);
  // −πi/3, so that C₊² χ = 2πi/3 = f₀
  CHECK(std::abs(chi.re.to_double()) < 1e-30);
  CHECK(chi.im.to_double() == doctest::Approx(-M_PI / 3).epsilon(1e-15));
  BigComplex f = s.info.C_plus * s.info.C_plus * chi;
  CHECK(abs(f - s.k.f0).to_double() < 1e-30);
}

TEST_CASE("unstable and stable inner solutions converge and decay") {
  PrecisionGuard g(128);
  Setup s("duffing_x4.json");
  InnerProblem pb = small_problem(s, 1e-3);
  pb.depth = 8;
  BigReal tol = pow2(-100, 128);
  auto u = solve_inner_branch(pb, Branch::Unstable, tol);
  auto st = solve_inner_branch(pb, Branch::Stable, tol);
  for (const auto* sol : {&u, &st}) {
    CHECK(sol->iterations < pb.max_iterations);
    CHECK(sol->increment.to_double() < 1e-25);
    CHECK(sol->residual.to_double() < 1e-12);
    CHECK(sol->decay.to_double() < 10.0);  // |z^ℓ ψ̄| bounded
  }

  SUBCASE("difference is one exponentially small harmonic") {
    auto diff = inner_difference(u, st, pb.half_window);
    REQUIRE(!diff.empty());
    const auto& mid = diff[diff.size() / 2];
    double m1 = abs(mid.modes[pb.kf + 1]).to_double();
    CHECK(m1 > 0);
    CHECK(m1 < 2.0 * std::exp(-pb.depth) * 1.1);
    CHECK(abs(mid.modes[pb.kf - 1]).to_double() < 1e-6 * m1);  // e^{−iτ} mode sits at e^{−3Y}-ish
  }

  SUBCASE("equal gauges leave the difference unchanged") {
    auto d0 = inner_difference(u, st, pb.half_window);
    auto u2 = u, s2 = st;
    BigComplex shift(BigReal(0.7, 128), BigReal(-0.2, 128));
    u2.gauge = u2.gauge + shift;
    s2.gauge = s2.gauge + shift;
    auto d1 = inner_difference(u2, s2, pb.half_window);
    REQUIRE(d0.size() == d1.size());
    for (std::size_t i = 0; i < d0.size(); ++i)
      for (std::size_t k = 0; k < d0[i].psi_modes.size(); ++k)
        CHECK(abs(d0[i].psi_modes[k] - d1[i].psi_modes[k]).to_double() < 1e-35);
  }
}

TEST_CASE("Stokes constant at small mu_hat approaches f0") {
  PrecisionGuard g(128);
  Setup s("duffing_x4.json");
  InnerProblem pb = small_problem(s, 1e-3);
  auto sd = stokes_constant(pb, {8, 10}, s.info.C_plus, s.F1(), s.k.b);
  CHECK((abs(sd.f_mu - s.k.f0) / abs(s.k.f0)).to_double() < 0.02);
  CHECK(sd.decay_slope == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("trigonometric inner problems are rejected") {
  PrecisionGuard g(128);
  auto m = load_model(models_dir() + "pendulum.json");
  auto info = analyze_separatrix(m.potential, 128);
  SeparatrixEvaluator ev(m.potential, info, 128);
  auto k = compute_constants(m, ev, 128);
  CHECK_THROWS_AS(make_inner_problem(m, info, k, BigReal(1e-3, 128), 128), ValidationError);
}
