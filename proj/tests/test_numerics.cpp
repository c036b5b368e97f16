#include <doctest.h>

#include <cmath>
#include <random>

#include "sepsplit/errors.hpp"
#include "sepsplit/lsq.hpp"
#include "sepsplit/model_io.hpp"
#include "sepsplit/power_series.hpp"
#include "sepsplit/quadrature.hpp"
#include "sepsplit/rational.hpp"
#include "sepsplit/taylor.hpp"

using namespace sepsplit;

namespace {

SystemModel duffing(const std::string& pert, double mu) {
  std::string j = R"({"name": "t", "potential": {"kind": "polynomial", "coefficients": {"2": -0.5, "4": 0.25}},
    "perturbation": {"kind": "polynomial", "terms": [)" + pert + R"(]}, "eta": 0, "mu": )" + std::to_string(mu) + "}";
  return parse_model_string(j);
}

BigReal energy(const BigReal& x, const BigReal& y) { return y * y / 2L - x * x / 2L + x * x * x * x / 4L; }

}  // namespace

TEST_CASE("multiprecision constants") {
  PrecisionGuard g(200);
  BigReal pi = const_pi(200);
  BigReal ref = BigReal::from_string("3.14159265358979323846264338327950288419716939937510582097494459", 200);
  CHECK(abs(pi - ref) < pow2(-195, 200));
  CHECK(abs(gamma(BigReal(5.0, 200)) - BigReal(24.0, 200)) < pow2(-190, 200));
  BigReal s, c;
  sin_cos(pi / 6L, s, c);
  CHECK(abs(s - BigReal(0.5, 200)) < pow2(-195, 200));
  CHECK(abs(c * c + s * s - BigReal(1.0, 200)) < pow2(-195, 200));
}

TEST_CASE("precision guard restores the default") {
  int before = default_bits();
  {
    PrecisionGuard g(321);
    CHECK(default_bits() == 321);
    CHECK(BigReal(1.0).bits() == 321);
  }
  CHECK(default_bits() == before);
}

TEST_CASE("rational arithmetic and snapping") {
  Rational a(3, 4), b(-1, 6);
  CHECK((a + b) == Rational(7, 12));
  CHECK((a * b) == Rational(-1, 8));
  CHECK((a / b) == Rational(-9, 2));
  CHECK(Rational::parse("6/8") == Rational(3, 4));
  CHECK(Rational(4, 2).to_string() == "2");
  auto s = Rational::snap(0.6666668, 12, 1e-5);
  REQUIRE(s);
  CHECK(*s == Rational(2, 3));
  CHECK_FALSE(Rational::snap(0.123456, 6, 1e-6));
}

TEST_CASE("power series product rule") {
  PrecisionGuard g(128);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-1, 1);
  std::vector<BigReal> fc, gc;
  for (int i = 0; i <= 12; ++i) {
    fc.push_back(BigReal(U(rng), 128));
    gc.push_back(BigReal(U(rng), 128));
  }
  PowerSeries<BigReal> f(fc), h(gc);
  auto lhs = (f * h).derive();
  auto rhs = f.derive() * h + f * h.derive();
  // Truncation: the top coefficient of each side sees different dropped terms.
  for (int n = 0; n < 11; ++n) CHECK(abs(lhs[n] - rhs[n]) < pow2(-120, 128));
}

TEST_CASE("Gauss-Legendre rule") {
  auto rule = gauss_legendre(24, 160);
  BigReal sum = BigReal::zero(160), m4 = BigReal::zero(160);
  for (std::size_t i = 0; i < rule->nodes.size(); ++i) {
    sum += rule->weights[i];
    m4 += rule->weights[i] * pow(rule->nodes[i], BigReal(4.0, 160));
  }
  CHECK(abs(sum - BigReal(2.0, 160)) < pow2(-150, 160));
  CHECK(abs(m4 - BigReal(0.4, 160)) < pow2(-50, 160));  // 0.4 is a double literal
}

TEST_CASE("adaptive quadrature: exp on [0, 1] at increasing precision") {
  for (int bits : {96, 128, 192}) {
    PrecisionGuard g(bits);
    auto r = quad_adaptive([](const BigComplex& z) { return exp(z); },
                           {BigComplex(BigReal::zero(bits)), BigComplex(BigReal(1.0, bits))},
                           pow2(-(bits - 20), bits), bits);
    BigReal exact = exp(BigReal(1.0, bits)) - BigReal(1.0, bits);
    double e = abs(r.value.re - exact).to_double();
    CHECK(e < std::ldexp(1.0, -(bits - 24)));
  }
}

TEST_CASE("polynomial extrapolation to zero") {
  PrecisionGuard g(128);
  std::vector<BigReal> x;
  std::vector<BigComplex> v;
  for (double h : {0.4, 0.2, 0.1, 0.05}) {
    BigReal hb(h, 128);
    x.push_back(hb);
    v.push_back(BigComplex(BigReal(3.0, 128) + hb * 2L - hb * hb + hb * hb * hb / 2L));
  }
  CHECK(abs(extrapolate_to_zero(x, v).re - BigReal(3.0, 128)) < pow2(-110, 128));
}

TEST_CASE("flow of the unperturbed system conserves energy") {
  PrecisionGuard g(160);
  SystemModel m = duffing("", 0.0);
  BigReal x0(0.3, 160), y0(0.2, 160);
  auto r = integrate_flow(m, BigReal(0.2, 160), x0, y0, BigReal::zero(160), BigReal(20.0, 160),
                          pow2(-144, 160), 160, false);
  CHECK(abs(energy(r.x, r.y) - energy(x0, y0)).to_double() < 1e-38);
}

TEST_CASE("flow Jacobian is symplectic and matches finite differences") {
  PrecisionGuard g(128);
  SystemModel m = duffing(R"({"x_power": 3, "y_power": 0, "fourier": {"sin": {"1": 1}}})", 0.3);
  BigReal eps(0.3, 128), t1 = const_pi(128) * 2L * eps;
  BigReal tol = pow2(-112, 128);
  BigReal x0(0.4, 128), y0(-0.1, 128);
  auto r = integrate_flow(m, eps, x0, y0, BigReal::zero(128), t1, tol, 128, true);
  BigReal det = r.j11 * r.j22 - r.j12 * r.j21;
  CHECK(abs(det - BigReal(1.0, 128)).to_double() < 1e3 * tol.to_double());
  BigReal h = pow2(-40, 128);
  auto rp = integrate_flow(m, eps, x0 + h, y0, BigReal::zero(128), t1, tol, 128, false);
  auto rm = integrate_flow(m, eps, x0 - h, y0, BigReal::zero(128), t1, tol, 128, false);
  CHECK(abs((rp.x - rm.x) / (h * 2L) - r.j11).to_double() < 1e-20);
  CHECK(abs((rp.y - rm.y) / (h * 2L) - r.j21).to_double() < 1e-20);
}

TEST_CASE("forward then backward flow returns to the start") {
  PrecisionGuard g(128);
  SystemModel m = duffing(R"({"x_power": 1, "y_power": 0, "fourier": {"sin": {"1": 1}}})", 1.0);
  BigReal eps(0.25, 128), t1(7.5, 128);
  BigReal tol = pow2(-112, 128);
  auto f = integrate_flow(m, eps, BigReal(0.5, 128), BigReal(0.1, 128), BigReal::zero(128), t1, tol, 128, false);
  auto b = integrate_flow(m, eps, f.x, f.y, t1, BigReal::zero(128), tol, 128, false);
  CHECK(abs(b.x - BigReal(0.5, 128)).to_double() < 1e-28);
  CHECK(abs(b.y - BigReal(0.1, 128)).to_double() < 1e-28);
}

TEST_CASE("least squares") {
  SUBCASE("exact line gives zero residuals") {
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (int i = 0; i < 6; ++i) {
      rows.push_back({1.0, double(i)});
      y.push_back(2.0 - 0.5 * i);
    }
    auto r = fit_linear_lsq(rows, y);
    CHECK(r.coeffs[0] == doctest::Approx(2.0));
    CHECK(r.coeffs[1] == doctest::Approx(-0.5));
    for (double e : r.residuals) CHECK(std::abs(e) < 1e-12);
  }
  SUBCASE("three parameters on three points interpolate") {
    std::vector<std::vector<double>> rows{{1, 1, 1}, {1, 2, 4}, {1, 3, 9}};
    auto r = fit_linear_lsq(rows, {1.0, 5.0, 2.0});
    for (double e : r.residuals) CHECK(std::abs(e) < 1e-10);
  }
  SUBCASE("noisy exponential law") {
    std::mt19937 rng(12345);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (int i = 0; i < 8; ++i) {
      double e = 0.3 * std::pow(0.08 / 0.3, i / 7.0);
      rows.push_back({1.0, std::log(e), 1.0 / e});
      y.push_back(std::log(std::exp(1 + 2 * std::log(e) - 3 / e) * (1 + noise(rng))));
    }
    auto r = fit_linear_lsq(rows, y);
    CHECK(r.coeffs[0] == doctest::Approx(1.0).epsilon(0.05));
    CHECK(r.coeffs[1] == doctest::Approx(2.0).epsilon(0.05));
    CHECK(r.coeffs[2] == doctest::Approx(-3.0).epsilon(0.05));
  }
  SUBCASE("rank deficiency names a column") {
    std::vector<std::vector<double>> rows{{1, 2}, {2, 4}, {3, 6}};
    try {
      fit_linear_lsq(rows, {1, 2, 3}, {"slope_a", "slope_b"});
      FAIL("expected an error");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("slope_") != std::string::npos);
    }
  }
}
