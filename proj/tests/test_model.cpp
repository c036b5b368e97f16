#include <doctest.h>

#include <string>

#include "sepsplit/errors.hpp"
#include "sepsplit/model_io.hpp"

using namespace sepsplit;

namespace {

std::string models_dir() { return std::string(SEPSPLIT_SOURCE_DIR) + "/models/"; }

SystemModel duffing_power(int n, const std::string& eta) {
  std::string j = R"({"name": "d", "potential": {"kind": "polynomial", "coefficients": {"2": -0.5, "4": 0.25}},
    "perturbation": {"kind": "polynomial", "terms": [{"x_power": )" +
                  std::to_string(n) + R"(, "y_power": 0, "fourier": {"sin": {"1": 1}}}]}, "eta": ")" + eta +
                  R"(", "mu": 1})";
  return parse_model_string(j);
}

const HypothesisFlag* flag(const std::vector<HypothesisFlag>& flags, const std::string& id) {
  for (const auto& f : flags)
    if (f.id == id) return &f;
  return nullptr;
}

}  // namespace

TEST_CASE("model files round-trip through JSON") {
  for (const char* name : {"duffing_x1.json", "duffing_x4.json", "duffing_lambda.json", "pendulum.json"}) {
    CAPTURE(name);
    SystemModel m = load_model(models_dir() + name);
    SystemModel back = parse_model(model_to_json(m));
    CHECK(back == m);
    CHECK(parse_model(model_to_json(back)) == back);
  }
}

TEST_CASE("decimal strings keep full precision") {
  PrecisionGuard g(256);
  auto m = parse_model_string(R"({"name": "inline", "potential": {"kind": "polynomial", "coefficients": {"2": -0.5, "4": 0.25}},
    "perturbation": {"kind": "polynomial", "terms": []}, "eta": 0,
    "mu": "0.1000000000000000000000000000000000000001"})");
  CHECK(m.mu != BigReal(0.1, 256));
  CHECK(parse_model(model_to_json(m)).mu == m.mu);
}

TEST_CASE("malformed model files are rejected") {
  CHECK_THROWS_AS(parse_model_string("{"), ValidationError);
  CHECK_THROWS_AS(parse_model_string(R"({"name": "inline", "potential": {"kind": "polynomial", "coefficients": {"2": -0.5, "4": 0.25}},
    "perturbation": {"kind": "polynomial", "terms": []}, "eta": 0, "mu": 1, "extra": 3})"),
                  ValidationError);
  CHECK_THROWS_AS(parse_model_string(R"({"name": "inline", "potential": {"kind": "cubic", "coefficients": {}},
    "perturbation": {"kind": "polynomial", "terms": []}, "eta": 0, "mu": 1})"),
                  ValidationError);
  CHECK_THROWS_AS(load_model(models_dir() + "does_not_exist.json"), ValidationError);
}

TEST_CASE("origin classification") {
  auto d = load_model(models_dir() + "duffing_x1.json");
  auto c = critical_class(d.potential);
  REQUIRE(c);
  CHECK(c->hyperbolic);
  CHECK(abs(c->lambda - BigReal(1.0)).to_double() < 1e-30);

  auto p = parse_model_string(R"({"name": "inline", "potential": {"kind": "polynomial", "coefficients": {"4": -0.25, "6": 0.1}},
    "perturbation": {"kind": "polynomial", "terms": []}, "eta": 0, "mu": 0})");
  auto pc = critical_class(p.potential);
  REQUIRE(pc);
  CHECK_FALSE(pc->hyperbolic);
  CHECK(pc->m == 4);

  auto center = parse_model_string(R"({"name": "inline", "potential": {"kind": "polynomial", "coefficients": {"2": 0.5, "4": 0.25}},
    "perturbation": {"kind": "polynomial", "terms": []}, "eta": 0, "mu": 0})");
  CHECK_FALSE(critical_class(center.potential));
}

TEST_CASE("perturbation order and regime for x^n sin(tau)") {
  Rational r(2);
  struct Row {
    int n;
    const char* eta;
    Rational eta_star;
    Regime regime;
  };
  const Row rows[] = {
      {1, "0", 0, Regime::RegularEtaZeroEllBelow2r}, {2, "0", 0, Regime::RegularEtaZeroEllBelow2r},
      {3, "0", 0, Regime::RegularEtaZeroEllBelow2r}, {4, "0", 0, Regime::SingularEllEquals2r},
      {5, "1", 1, Regime::SingularEllAbove2r},       {1, "2", 0, Regime::RegularAboveStar},
      {4, "1/2", 0, Regime::RegularAboveStar},       {5, "3/2", 1, Regime::RegularAboveStar},
  };
  for (const auto& row : rows) {
    CAPTURE(row.n);
    CAPTURE(row.eta);
    auto m = duffing_power(row.n, row.eta);
    auto rep = classify_regime(m, r);
    CHECK(rep.ell == Rational(row.n));
    CHECK(rep.eta_star == row.eta_star);
    CHECK(rep.regime == row.regime);
  }
  auto below = duffing_power(5, "0");
  CHECK(classify_regime(below, r).regime == Regime::BelowSingularOutOfScope);
}

TEST_CASE("hypothesis flags") {
  auto ok = validate_hypotheses(load_model(models_dir() + "duffing_x4.json"));
  for (const char* id : {"HP1", "HP2", "HP3", "HP4"}) {
    CAPTURE(id);
    REQUIRE(flag(ok, id));
    CHECK(flag(ok, id)->pass);
  }
  CHECK(flag(ok, "HP2")->message.find("catalog/derived") != std::string::npos);

  auto biased = parse_model_string(R"({"name": "inline", "potential": {"kind": "polynomial", "coefficients": {"2": -0.5, "4": 0.25}},
    "perturbation": {"kind": "polynomial", "terms": [{"x_power": 2, "y_power": 0,
                     "fourier": {"cos": {"0": 0.5, "1": 1}}}]}, "eta": 0, "mu": 1})");
  auto bf = validate_hypotheses(biased);
  REQUIRE(flag(bf, "HP3"));
  CHECK_FALSE(flag(bf, "HP3")->pass);
}

TEST_CASE("inner coupling mu_hat") {
  PrecisionGuard g(128);
  // mu_hat = mu eps^{eta - (ell - 2r)}
  BigReal mh = mu_hat(BigReal(0.5), BigReal(0.1), Rational(1), Rational(4), Rational(2));
  CHECK(abs(mh - BigReal(0.05)).to_double() < 1e-30);
  BigReal m0 = mu_hat(BigReal(0.5), BigReal(0.1), Rational(0), Rational(4), Rational(2));
  CHECK(abs(m0 - BigReal(0.5)).to_double() < 1e-30);
}

TEST_CASE("trigonometric model") {
  auto p = load_model(models_dir() + "pendulum.json");
  CHECK(p.potential.kind == Kind::Trigonometric);
  auto c = critical_class(p.potential);
  REQUIRE(c);
  CHECK(c->hyperbolic);
}
