#include <doctest.h>

#include "sepsplit/errors.hpp"
#include "sepsplit/model_io.hpp"
#include "sepsplit/separatrix.hpp"

using namespace sepsplit;

namespace {

std::string models_dir() { return std::string(SEPSPLIT_SOURCE_DIR) + "/models/"; }

// q₀ = √2 sech u, p₀ = −√2 sinh u / cosh² u
SeparatrixPoint duffing_exact(const BigComplex& u) {
  BigReal s2 = sqrt(BigReal(2.0));
  BigComplex ch = cosh(u), sh = sinh(u);
  return {BigComplex(s2) / ch, -(BigComplex(s2) * sh / (ch * ch))};
}

}  // namespace

TEST_CASE("catalog Duffing separatrix") {
  PrecisionGuard g(128);
  auto m = load_model(models_dir() + "duffing_x1.json");
  auto info = analyze_separatrix(m.potential, 128);
  CHECK(info.source == SeparatrixSource::Catalog);
  CHECK(abs(info.a - const_pi(128) / 2L).to_double() < 1e-35);
  CHECK(info.r == Rational(2));
  CHECK(abs(info.C_plus - BigComplex(BigReal::zero(128), sqrt(BigReal(2.0, 128)))).to_double() < 1e-35);
  CHECK(abs(info.apex_x - sqrt(BigReal(2.0, 128))).to_double() < 1e-35);
}

TEST_CASE("numeric singularity pipeline agrees with the catalog") {
  PrecisionGuard g(128);
  auto m = load_model(models_dir() + "duffing_x1.json");
  AnalyzeOptions o;
  o.use_catalog = false;
  o.series_order = 200;
  auto info = analyze_separatrix(m.potential, 128, o);
  CHECK(info.source == SeparatrixSource::Numeric);
  CHECK(info.r == Rational(2));
  CHECK(std::abs(info.a.to_double() - M_PI / 2) < 1e-5);
  BigComplex cp(BigReal::zero(128), sqrt(BigReal(2.0, 128)));
  CHECK((abs(info.C_plus - cp) / abs(cp)).to_double() < 1e-6);
}

TEST_CASE("complex evaluation by continuation matches the closed form") {
  PrecisionGuard g(128);
  auto m = load_model(models_dir() + "duffing_x1.json");
  auto cat = analyze_separatrix(m.potential, 128);
  SeparatrixInfo numeric = cat;
  numeric.source = SeparatrixSource::Numeric;  // forces the flow continuation path
  SeparatrixEvaluator ev(m.potential, numeric, 128);
  for (auto [re, im] : {std::pair{0.5, 1.0}, {-1.2, 0.7}, {2.0, 1.4}, {0.0, 1.5}}) {
    CAPTURE(re);
    CAPTURE(im);
    BigComplex u(BigReal(re, 128), BigReal(im, 128));
    auto got = ev(u);
    auto want = duffing_exact(u);
    CHECK((abs(got.q - want.q) / abs(want.q)).to_double() < 1e-25);
    CHECK((abs(got.p - want.p) / abs(want.p)).to_double() < 1e-25);
  }
}

TEST_CASE("energy vanishes along the separatrix") {
  PrecisionGuard g(128);
  auto m = load_model(models_dir() + "duffing_x1.json");
  auto info = analyze_separatrix(m.potential, 128);
  SeparatrixEvaluator ev(m.potential, info, 128);
  for (double im : {0.0, 0.8, 1.3}) {
    auto pt = ev(BigComplex(BigReal(0.3, 128), BigReal(im, 128)));
    BigComplex h = pt.p * pt.p / BigReal(2.0, 128) + m.potential.value(pt.q);
    CHECK(abs(h).to_double() < 1e-30);
  }
}

TEST_CASE("local expansion near the singularity") {
  // |(iδ)^r p₀(i(a − δ)) − C₊(−1)^r| shrinks like δ^{1/q}
  PrecisionGuard g(128);
  auto m = load_model(models_dir() + "duffing_x1.json");
  auto info = analyze_separatrix(m.potential, 128);
  SeparatrixEvaluator ev(m.potential, info, 128);
  double prev = 1e9;
  for (double d : {1e-1, 3e-2, 1e-2}) {
    BigComplex id(BigReal::zero(128), BigReal(d, 128));
    auto pt = ev(BigComplex(BigReal::zero(128), info.a - BigReal(d, 128)));
    BigComplex v = id * id * pt.p;  // r = 2
    double e = abs(v - info.C_plus).to_double();
    CHECK(e < 2.0 * d);
    CHECK(e < prev);
    prev = e;
  }
}

TEST_CASE("pendulum catalog") {
  PrecisionGuard g(128);
  auto m = load_model(models_dir() + "pendulum.json");
  auto info = analyze_separatrix(m.potential, 128);
  CHECK(info.source == SeparatrixSource::Catalog);
  CHECK(info.r == Rational(1));
  CHECK(abs(info.a - const_pi(128) / 2L).to_double() < 1e-35);
}

TEST_CASE("potential without a homoclinic loop is rejected") {
  auto m = parse_model_string(R"({"name": "inline", "potential": {"kind": "polynomial", "coefficients": {"2": -0.5}},
    "perturbation": {"kind": "polynomial", "terms": []}, "eta": 0, "mu": 0})");
  CHECK_THROWS(analyze_separatrix(m.potential, 128));
}
