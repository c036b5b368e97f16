#include <doctest.h>

#include <cmath>
#include <random>

#include "sepsplit/errors.hpp"
#include "sepsplit/melnikov.hpp"
#include "sepsplit/model_io.hpp"
#include "sepsplit/splitting.hpp"

using namespace sepsplit;

namespace {

std::string models_dir() { return std::string(SEPSPLIT_SOURCE_DIR) + "/models/"; }

struct Duffing {
  SystemModel model = load_model(models_dir() + "duffing_x1.json");
  SeparatrixInfo info = analyze_separatrix(model.potential, 128);
};

}  // namespace

TEST_CASE("precision schedule") {
  CHECK(schedule_bits(M_PI / 2, 0.3) == 128);
  // ⌈2(a/ε)/ln 2⌉ + 64 at a/ε = 31.4159...: ⌈90.64⌉ + 64
  CHECK(schedule_bits(M_PI / 2, 0.05) == 155);
  CHECK(schedule_bits(M_PI / 2, 0.02) > schedule_bits(M_PI / 2, 0.05));
}

TEST_CASE("geometric grid") {
  auto g = geometric_grid(0.3, 0.08, 6);
  REQUIRE(g.size() == 6);
  CHECK(g.front() == doctest::Approx(0.3));
  CHECK(g.back() == doctest::Approx(0.08));
  for (std::size_t i = 1; i < g.size(); ++i) {
    CHECK(g[i] < g[i - 1]);
    CHECK(g[i] / g[i - 1] == doctest::Approx(g[1] / g[0]));
  }
  CHECK_THROWS_AS(geometric_grid(0.3, -0.1, 4), ValidationError);
  CHECK_THROWS_AS(geometric_grid(0.3, 0.1, 0), ValidationError);
}

TEST_CASE("law fits on synthetic data") {
  PrecisionGuard g(128);
  std::vector<double> eps = geometric_grid(0.3, 0.08, 8);
  SUBCASE("exact law is recovered") {
    std::vector<BigReal> area;
    for (double e : eps) area.push_back(exp(BigReal(std::log(1.7) + 2.0 * std::log(e) - 1.5 / e)));
    auto f = fit_law(eps, area);
    CHECK(f.K.to_double() == doctest::Approx(1.7).epsilon(1e-8));
    CHECK(f.beta.to_double() == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(f.a_fit.to_double() == doctest::Approx(1.5).epsilon(1e-8));
    CHECK(f.a_err < 1e-8);
  }
  SUBCASE("jackknife stability under noise") {
    std::mt19937 rng(2024);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<BigReal> area;
    for (double e : eps) area.push_back(exp(BigReal(std::log(1.7) + 2.0 * std::log(e) - 1.5 / e + noise(rng))));
    auto f = fit_law(eps, area);
    CHECK(f.a_fit.to_double() == doctest::Approx(1.5).epsilon(0.05));
    for (std::size_t drop = 0; drop < eps.size(); ++drop) {
      std::vector<double> e2;
      std::vector<BigReal> a2;
      for (std::size_t i = 0; i < eps.size(); ++i)
        if (i != drop) {
          e2.push_back(eps[i]);
          a2.push_back(area[i]);
        }
      auto f2 = fit_law(e2, a2);
      CHECK(std::abs(f2.a_fit.to_double() - f.a_fit.to_double()) < 3 * f.a_err + 1e-12);
      CHECK(std::abs(f2.beta.to_double() - f.beta.to_double()) < 3 * f.beta_err + 1e-12);
    }
  }
  SUBCASE("fixed-a law with a logarithmic correction") {
    std::vector<BigReal> area;
    for (double e : eps) area.push_back(exp(BigReal(0.4 - 3.0 * std::log(e) - 1.5 / e + 0.8 * std::log(1 / e))));
    auto f = fit_law_fixed_a(eps, area, 1.5, -3.0);
    REQUIRE(f.log_coeff);
    CHECK(f.log_coeff->to_double() == doctest::Approx(0.8).epsilon(1e-8));
    CHECK(f.K.to_double() == doctest::Approx(std::exp(0.4)).epsilon(1e-8));
  }
  CHECK_THROWS_AS(fit_law({0.3, 0.2, 0.1}, {BigReal(1.0), BigReal(0.5), BigReal(0.1)}), ValidationError);
}

TEST_CASE("Poincare map is symplectic and the periodic orbit is hyperbolic") {
  PrecisionGuard g(128);
  Duffing d;
  auto spec = make_map_spec(d.model, BigReal(0.3, 128), BigReal::zero(128), 128);
  double tol = spec.tol_int.to_double();
  for (auto [x, y] : {std::pair{0.1, 0.05}, {1.0, -0.3}, {-0.4, 0.6}}) {
    auto img = poincare_map(spec, BigReal(x, 128), BigReal(y, 128));
    REQUIRE(img.jacobian);
    CHECK(abs(img.jacobian->det() - BigReal(1.0, 128)).to_double() <= 1e3 * tol);
  }
  auto po = find_periodic_orbit(spec);
  CHECK(po.residual <= pow2(-104, 128));
  CHECK(po.det_error.to_double() <= 1e3 * tol);
  CHECK(po.Lambda.to_double() > 1.0);
  // Λ ≈ e^{2πε} for the unit saddle
  CHECK(std::log(po.Lambda.to_double()) == doctest::Approx(2 * M_PI * 0.3).epsilon(0.05));
  auto back = poincare_map(spec, po.x, po.y, false);
  CHECK(abs(back.x - po.x).to_double() < 1e-28);

  SUBCASE("seed distance passes the halving test") {
    BigReal tolm = pow2(-64, 128), dep;
    BigReal delta = seed_distance(spec, po, ManifoldBranch::Unstable, tolm, &dep);
    CHECK(dep <= tolm);
    CHECK(delta.to_double() <= 1e-4);
    CHECK(delta.to_double() > std::ldexp(1.0, -64));
  }
}

TEST_CASE("zero perturbation means zero splitting") {
  PrecisionGuard g(128);
  Duffing d;
  SystemModel m = d.model;
  m.mu = BigReal::zero(128);
  auto r = measure_splitting(m, d.info, BigReal(0.25, 128), BigReal::zero(128), 128);
  CHECK(r.area.is_zero());
  CHECK(r.method == "below_resolution");
}

TEST_CASE("lobe area at the symmetric section") {
  // sin τ is even about τ = π/2, so (x, y, τ) → (x, −y, π − τ) reverses the
  // flow and P is reversible at τ₀ = π/2 with symmetry line y = 0.
  PrecisionGuard g(128);
  Duffing d;
  BigReal eps(0.3, 128), tau0 = const_pi(128) / 2L;
  auto r = measure_splitting(d.model, d.info, eps, tau0, 128);
  CHECK(r.method == "action_sum");
  double A = r.area.to_double();
  CHECK(std::abs(r.area_action.to_double() - r.area_boundary.to_double()) <= 1e-4 * A);
  CHECK(r.est_error.to_double() < 1e-10 * A);
  double ymin = std::min(std::abs(r.pair.z1.y.to_double()), std::abs(r.pair.z2.y.to_double()));
  CHECK(ymin < 1e-25);
  CHECK(std::abs(r.pair.z1.sin_angle.to_double()) > 1e-3);
  SeparatrixEvaluator ev(d.model.potential, d.info, 128);
  auto k = compute_constants(d.model, ev, 128);
  auto p = predict_area(d.model, d.info, k, eps, FSource::MelnikovF0);
  CHECK(A == doctest::Approx(p.area.to_double()).epsilon(0.25));
}

TEST_CASE("parabolic systems are out of scope for measurement") {
  auto m = parse_model_string(R"({"name": "inline", "potential": {"kind": "polynomial", "coefficients": {"4": -0.25, "6": 0.1}},
    "perturbation": {"kind": "polynomial", "terms": [{"x_power": 3, "y_power": 0, "fourier": {"sin": {"1": 1}}}]},
    "eta": 0, "mu": 1})");
  SeparatrixInfo dummy;
  CHECK_THROWS_AS(measure_splitting(m, dummy, BigReal(0.2, 128), BigReal::zero(128), 128), ValidationError);
}
