#include <doctest.h>

#include <cmath>

#include "sepsplit/errors.hpp"
#include "sepsplit/kernels.hpp"
#include "sepsplit/melnikov.hpp"
#include "sepsplit/model_io.hpp"

using namespace sepsplit;

namespace {

std::string models_dir() { return std::string(SEPSPLIT_SOURCE_DIR) + "/models/"; }

SystemModel lambda_model(const std::string& lambda) {
  return parse_model_string(R"({"name": "inline", "potential": {"kind": "polynomial", "coefficients": {"2": -0.5, "4": 0.25}},
    "perturbation": {"kind": "polynomial", "terms": [
      {"x_power": 4, "y_power": 0, "fourier": {"sin": {"1": 1}}},
      {"x_power": 2, "y_power": 1, "fourier": {"cos": {"1": ")" +
                            lambda + R"("}}}]}, "eta": 0, "mu": 0.1})");
}

SystemModel duffing_power(int n) {
  return parse_model_string(R"({"name": "inline", "potential": {"kind": "polynomial", "coefficients": {"2": -0.5, "4": 0.25}},
    "perturbation": {"kind": "polynomial", "terms": [{"x_power": )" +
                            std::to_string(n) + R"(, "y_power": 0, "fourier": {"sin": {"1": 1}}}]}, "eta": 0, "mu": 1})");
}

struct Duffing {
  SystemModel model = load_model(models_dir() + "duffing_x1.json");
  SeparatrixInfo info = analyze_separatrix(model.potential, 128);
};

}  // namespace

TEST_CASE("M^[1] for x sin(tau) matches the residue closed form") {
  PrecisionGuard g(128);
  Duffing d;
  SeparatrixEvaluator ev(d.model.potential, d.info, 128);
  BigReal pi = const_pi(128);
  for (double e : {0.5, 0.25}) {
    CAPTURE(e);
    BigReal eps(e, 128);
    auto c = melnikov_coefficient(d.model, ev, 1, eps, 128);
    // −(√2π/2) i sech(π/(2ε))
    BigComplex exact(BigReal::zero(128), -(sqrt(BigReal(2.0, 128)) * pi / 2L) / cosh(pi / (eps * 2L)));
    CHECK((abs(c.value - exact) / abs(exact)).to_double() < 1e-20);
    CHECK(c.est_error.to_double() < 1e-20 * abs(exact).to_double() + 1e-30);
  }
}

TEST_CASE("conjugate symmetry of M^[-k]") {
  PrecisionGuard g(128);
  Duffing d;
  auto m4 = duffing_power(3);
  SeparatrixEvaluator ev(m4.potential, d.info, 128);
  BigReal eps(0.3, 128);
  auto p = melnikov_coefficient(m4, ev, 1, eps, 128);
  auto n = melnikov_coefficient(m4, ev, -1, eps, 128);
  CHECK((abs(n.value - conj(p.value)) / abs(p.value)).to_double() < 1e-25);
}

TEST_CASE("insufficient precision is reported") {
  PrecisionGuard g(64);
  Duffing d;
  SeparatrixEvaluator ev(d.model.potential, d.info, 64);
  CHECK_THROWS_AS(melnikov_coefficient(d.model, ev, 1, BigReal(0.01, 64), 64), NumericalError);
}

TEST_CASE("f0 for x^n sin(tau) is 2^{n/2} pi i/(n-1)!") {
  PrecisionGuard g(128);
  Duffing d;
  SeparatrixEvaluator ev(d.model.potential, d.info, 128);
  for (int n = 1; n <= 5; ++n) {
    CAPTURE(n);
    auto k = compute_constants(duffing_power(n), ev, 128);
    CHECK(k.ell == Rational(n));
    double want = std::pow(2.0, n / 2.0) * M_PI / std::tgamma(n);
    CHECK(std::abs(k.f0.re.to_double()) < 1e-25);
    CHECK(k.f0.im.to_double() == doctest::Approx(want).epsilon(1e-14));
    CHECK((abs(k.C_hat - k.C_hat_numeric) / abs(k.C_hat)).to_double() < 1e-6);
  }
}

TEST_CASE("constant b for the lambda model") {
  PrecisionGuard g(128);
  Duffing d;
  SeparatrixEvaluator ev(d.model.potential, d.info, 128);
  BigReal s2 = sqrt(BigReal(2.0, 128));
  for (const char* lam : {"-1.4142135623730950488016887242096980785696718753769", "0", "1"}) {
    CAPTURE(lam);
    BigReal l = BigReal::from_string(lam, 128);
    auto k = compute_constants(lambda_model(lam), ev, 128);
    REQUIRE(k.inner_available);
    BigComplex want(BigReal::zero(128), -(s2 * l * 4L));
    CHECK(abs(k.b - want).to_double() < 1e-30);
    // f0 = (πi/3)(2 + √2 λ)
    BigComplex f0(BigReal::zero(128), const_pi(128) / 3L * (BigReal(2.0, 128) + s2 * l));
    CHECK(abs(k.f0 - f0).to_double() < 1e-25);
  }
}

TEST_CASE("leading-order asymptotics of M^[1] for x^4 sin(tau)") {
  PrecisionGuard g(128);
  Duffing d;
  SeparatrixEvaluator ev(d.model.potential, d.info, 128);
  auto m = duffing_power(4);
  auto k = compute_constants(m, ev, 128);
  BigReal eps(0.1, 128);
  auto c = melnikov_coefficient(m, ev, 1, eps, 128);
  BigComplex lead = -(k.f0 * (pow(eps, -3L) * exp(-d.info.a / eps)));
  CHECK(abs(c.value / lead - BigComplex(1.0)).to_double() < 0.5);
}

TEST_CASE("homoclinic phases from the Melnikov potential are pi eps apart") {
  PrecisionGuard g(128);
  Duffing d;
  SeparatrixEvaluator ev(d.model.potential, d.info, 128);
  BigReal eps(0.25, 128);
  std::map<int, MelnikovCoefficient> co;
  co[1] = melnikov_coefficient(d.model, ev, 1, eps, 128);
  // Critical points of u ↦ L(u, 0): sign changes of a centered difference.
  std::vector<double> roots;
  double h = 1e-4, prev = 0;
  for (int i = 0; i <= 600; ++i) {
    double u = -1.5 + 3.0 * i / 600;
    double dl = (melnikov_potential(co, BigReal(u + h, 128), BigReal::zero(128), eps) -
                 melnikov_potential(co, BigReal(u - h, 128), BigReal::zero(128), eps))
                    .to_double();
    if (i > 0 && dl * prev < 0) roots.push_back(u);
    prev = dl;
  }
  REQUIRE(roots.size() >= 3);
  for (std::size_t i = 1; i < roots.size(); ++i) CHECK(roots[i] - roots[i - 1] == doctest::Approx(M_PI * 0.25).epsilon(0.02));
}

TEST_CASE("regular-regime prediction reproduces the explicit Duffing formula") {
  PrecisionGuard g(128);
  Duffing d;
  SeparatrixEvaluator ev(d.model.potential, d.info, 128);
  auto k = compute_constants(d.model, ev, 128);
  for (double e : {0.25, 0.1}) {
    auto p = predict_area(d.model, d.info, k, BigReal(e, 128), FSource::MelnikovF0);
    CHECK(p.formula_id == "regular_above_star");
    // 2^{n/2+2} π ε^η / ((n−1)! ε^{n−1}) e^{−π/(2ε)} with n = 1, η = 2, μ = 1
    double want = std::pow(2.0, 2.5) * M_PI * e * e * std::exp(-M_PI / (2 * e));
    CHECK(p.area.to_double() == doctest::Approx(want).epsilon(1e-12));
  }
  SystemModel zero = d.model;
  zero.mu = BigReal::zero(128);
  CHECK(predict_area(zero, d.info, k, BigReal(0.2, 128), FSource::MelnikovF0).area.is_zero());
}

TEST_CASE("singular prediction needs f(mu) for the inner source and flags the f0 substitute") {
  PrecisionGuard g(128);
  Duffing d;
  SeparatrixEvaluator ev(d.model.potential, d.info, 128);
  auto m = load_model(models_dir() + "duffing_x4.json");
  auto k = compute_constants(m, ev, 128);
  BigReal eps(0.1, 128);
  CHECK_THROWS_AS(predict_area(m, d.info, k, eps, FSource::InnerFMu), ValidationError);
  auto p = predict_area(m, d.info, k, eps, FSource::MelnikovF0);
  CHECK(p.formula_id == "singular_ell_eq_2r");
  CHECK(p.f0_substituted);
  BigComplex f(BigReal::zero(128), BigReal(3.0, 128));
  auto q = predict_area(m, d.info, k, eps, FSource::InnerFMu, f);
  CHECK((q.area / p.area).to_double() == doctest::Approx(3.0 / abs(k.f0).to_double()).epsilon(1e-12));
}

TEST_CASE("pendulum constants: symbolic and numeric limits agree") {
  PrecisionGuard g(128);
  auto m = load_model(models_dir() + "pendulum.json");
  auto info = analyze_separatrix(m.potential, 128);
  SeparatrixEvaluator ev(m.potential, info, 128);
  auto k = compute_constants(m, ev, 128);
  CHECK_FALSE(k.inner_available);
  CHECK((abs(k.C_hat - k.C_hat_numeric) / abs(k.C_hat)).to_double() < 1e-6);
  BigReal eps(0.2, 128);
  auto c = melnikov_coefficient(m, ev, 1, eps, 128);
  CHECK(c.value.is_finite());
}

TEST_CASE("batched Melnikov kernels agree with each other") {
  PrecisionGuard g(128);
  Duffing d;
  std::vector<MelnikovRequest> req;
  for (double e : {0.5, 0.3}) {
    req.push_back({1, BigReal(e, 128)});
    req.push_back({-1, BigReal(e, 128)});
  }
  auto a = melnikov_batch_serial(d.model, d.info, req, 128);
  auto b = melnikov_batch_parallel(d.model, d.info, req, 128);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value.re == b[i].value.re);
}
