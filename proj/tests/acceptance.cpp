// Acceptance runner: one PASS/FAIL line per criterion. Arguments select
// criteria by number (default: all).
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sepsplit/errors.hpp"
#include "sepsplit/inner.hpp"
#include "sepsplit/melnikov.hpp"
#include "sepsplit/model_io.hpp"
#include "sepsplit/splitting.hpp"
#include "sepsplit/taylor.hpp"

using namespace sepsplit;

namespace {

std::string models_dir() { return std::string(SEPSPLIT_SOURCE_DIR) + "/models/"; }

SystemModel duffing_power(int n, const std::string& eta, const std::string& mu = "1") {
  return parse_model_string(R"({"name": "inline", "potential": {"kind": "polynomial", "coefficients": {"2": -0.5, "4": 0.25}},
    "perturbation": {"kind": "polynomial", "terms": [{"x_power": )" +
                            std::to_string(n) + R"(, "y_power": 0, "fourier": {"sin": {"1": 1}}}]}, "eta": )" + eta +
                            R"(, "mu": )" + mu + "}");
}

SystemModel lambda_model(const std::string& lambda) {
  return parse_model_string(R"({"name": "inline", "potential": {"kind": "polynomial", "coefficients": {"2": -0.5, "4": 0.25}},
    "perturbation": {"kind": "polynomial", "terms": [
      {"x_power": 4, "y_power": 0, "fourier": {"sin": {"1": 1}}},
      {"x_power": 2, "y_power": 1, "fourier": {"cos": {"1": ")" +
                            lambda + R"("}}}]}, "eta": 0, "mu": 0.1})");
}

BigReal big(const Rational& q, int bits) { return BigReal(static_cast<double>(q.num()), bits) / static_cast<long>(q.den()); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// 1: regime table and b
Outcome regime_table() {
  PrecisionGuard g(128);
  std::ostringstream d;
  bool ok = true;
  auto base = duffing_power(1, "0");
  auto info = analyze_separatrix(base.potential, 128);
  SeparatrixEvaluator ev(base.potential, info, 128);
  struct Row {
    int n;
    const char* eta;
    Regime want;
  };
  const Row rows[] = {
      {1, "0", Regime::RegularEtaZeroEllBelow2r}, {2, "0", Regime::RegularEtaZeroEllBelow2r},
      {3, "0", Regime::RegularEtaZeroEllBelow2r}, {4, "0", Regime::SingularEllEquals2r},
      {5, "1", Regime::SingularEllAbove2r},       {5, "0", Regime::BelowSingularOutOfScope},
      {4, "1", Regime::RegularAboveStar},         {1, "2", Regime::RegularAboveStar},
  };
  for (const auto& row : rows) {
    auto m = duffing_power(row.n, row.eta);
    auto rep = classify_regime(m, info.r);
    bool good = rep.ell == Rational(row.n) && rep.eta_star == Rational(std::max(row.n - 4, 0)) && rep.regime == row.want;
    if (!good) d << " n=" << row.n << ":ell=" << rep.ell.to_string() << ",eta*=" << rep.eta_star.to_string() << ","
                 << to_string(rep.regime);
    ok = ok && good;
  }
  auto lm = lambda_model("1");
  auto lrep = classify_regime(lm, info.r);
  if (!(lrep.ell == Rational(4) && lrep.eta_star == Rational(0) && lrep.regime == Regime::SingularEllEquals2r)) {
    ok = false;
    d << " lambda-model regime " << to_string(lrep.regime);
  }
  BigReal s2 = sqrt(BigReal(2.0, 128));
  double worst = 0;
  for (const char* lam : {"-1.4142135623730950488016887242096980785696718753769480731766797", "0", "1"}) {
    BigReal l = BigReal::from_string(lam, 128);
    auto k = compute_constants(lambda_model(lam), ev, 128);
    BigComplex want(BigReal::zero(128), -(s2 * l * 4L));
    worst = std::max(worst, abs(k.b - want).to_double());
  }
  // b is a sum of rational multiples of √2: agreement to the last few bits.
  if (worst > 1e-35) ok = false;
  d << " max|b - (-4sqrt2 lambda i)|=" << fmt(worst);
  return {ok, d.str()};
}

// 2: numeric singularity analysis
Outcome singularity() {
  PrecisionGuard g(128);
  auto m = load_model(models_dir() + "duffing_x1.json");
  AnalyzeOptions o;
  o.use_catalog = false;
  o.series_order = 400;
  auto info = analyze_separatrix(m.potential, 128, o);
  double da = std::abs(info.a.to_double() - M_PI / 2);
  BigComplex cp(BigReal::zero(128), sqrt(BigReal(2.0, 128)));
  double dc = (abs(info.C_plus - cp) / abs(cp)).to_double();
  bool ok = info.source == SeparatrixSource::Numeric && da <= 1e-6 && info.r == Rational(2) && dc <= 1e-8 &&
            info.cplus_agreement <= 1e-8;
  return {ok, "|a-pi/2|=" + fmt(da) + " r=" + info.r.to_string() + " C+ rel=" + fmt(dc) +
                  " balance/continuation=" + fmt(info.cplus_agreement)};
}

// 3: Melnikov closed form
Outcome melnikov_oracle() {
  PrecisionGuard g(128);
  auto m = load_model(models_dir() + "duffing_x1.json");
  auto info = analyze_separatrix(m.potential, 128);
  SeparatrixEvaluator ev(m.potential, info, 128);
  BigReal pi = const_pi(128);
  double worst = 0;
  for (double e : {0.5, 0.25, 0.125}) {
    BigReal eps(e, 128);
    auto c = melnikov_coefficient(m, ev, 1, eps, 128);
    BigComplex exact(BigReal::zero(128), -(sqrt(BigReal(2.0, 128)) * pi / 2L) / cosh(pi / (eps * 2L)));
    worst = std::max(worst, (abs(c.value - exact) / abs(exact)).to_double());
  }
  return {worst <= 1e-6, "max rel err=" + fmt(worst)};
}

// 4: leading-order asymptotics of M^[1] for x⁴ sin τ
Outcome melnikov_asymptotics() {
  PrecisionGuard g(128);
  auto m = load_model(models_dir() + "duffing_x4.json");
  auto info = analyze_separatrix(m.potential, 128);
  SeparatrixEvaluator ev(m.potential, info, 128);
  auto k = compute_constants(m, ev, 128);
  std::vector<double> dev, second;
  std::ostringstream d;
  for (double e : {0.1, 0.07, 0.05}) {
    BigReal eps(e, 128);
    auto c1 = melnikov_coefficient(m, ev, 1, eps, 128);
    auto c2 = melnikov_coefficient(m, ev, 2, eps, 128);
    BigComplex lead = -(k.f0 * (pow(eps, BigReal(1.0, 128) - big(k.ell, 128)) * exp(-info.a / eps)));
    dev.push_back(abs(c1.value / lead - BigComplex(1.0)).to_double());
    second.push_back((abs(c2.value) * exp(info.a * 2L / eps) * pow(eps, big(k.ell, 128) - BigReal(1.0, 128)))
                         .to_double());
    d << " eps=" << e << ":dev=" << fmt(dev.back()) << ",M2scaled=" << fmt(second.back());
  }
  bool mono = dev[0] > dev[1] && dev[1] > dev[2];
  bool bounded = true;
  for (double s : second) bounded = bounded && std::isfinite(s) && s <= 10.0 * std::max(second[0], 1.0);
  return {dev[2] <= 0.25 && mono && bounded, d.str()};
}

// 5: regular regime lobe areas and the fitted law
Outcome regular_regime() {
  PrecisionGuard g(128);
  auto m = load_model(models_dir() + "duffing_x1.json");
  auto info = analyze_separatrix(m.potential, 128);
  SeparatrixEvaluator ev(m.potential, info, 128);
  auto k = compute_constants(m, ev, 128);
  std::ostringstream d;
  bool ok = true;
  BigReal tau0 = const_pi(128) / 2L;
  for (auto [e, tolr] : {std::pair{0.2, 0.25}, {0.1, 0.10}}) {
    int bits = schedule_bits(info.a.to_double(), e);
    PrecisionGuard gb(bits);
    auto r = measure_splitting(m, info, BigReal(e, bits), const_pi(bits) / 2L, bits);
    auto p = predict_area(m, info, k, BigReal(e, 128), FSource::MelnikovF0);
    double rel = (r.area / p.area).to_double() - 1.0;
    d << " eps=" << e << ":rel=" << fmt(rel);
    ok = ok && std::abs(rel) <= tolr;
  }
  SweepOptions so;
  so.tau0 = tau0;
  std::vector<SweepRow> rows;
  auto fit = sweep_and_fit(m, info, geometric_grid(0.3, 0.08, 6), so, &rows);
  double a = fit.a_fit.to_double(), beta = fit.beta.to_double();
  d << " fit a=" << fmt(a) << "+-" << fmt(fit.a_err) << " beta=" << fmt(beta) << "+-" << fmt(fit.beta_err);
  ok = ok && std::abs(a - M_PI / 2) <= 0.05 && std::abs(beta - 2.0) <= 0.3;
  return {ok, d.str()};
}

// 6: Stokes constant at small μ̂
Outcome stokes_small() {
  PrecisionGuard g(128);
  auto m = load_model(models_dir() + "duffing_x4.json");
  auto info = analyze_separatrix(m.potential, 128);
  SeparatrixEvaluator ev(m.potential, info, 128);
  auto k = compute_constants(m, ev, 128);
  auto pb = make_inner_problem(m, info, k, BigReal(1e-3, 128), 128);
  pb.kf = 8;
  auto sd = stokes_constant(pb, {10, 12, 14, 16}, info.C_plus, k.F.size() > 1 ? k.F[1] : HarmonicSeries(), k.b);
  BigComplex f0(BigReal::zero(128), const_pi(128) * 2L / 3L);
  double rel = (abs(sd.f_mu - f0) / abs(f0)).to_double();
  std::ostringstream d;
  d << "f=" << sd.f_mu.re.to_double() << (sd.f_mu.im < BigReal::zero(128) ? "" : "+") << sd.f_mu.im.to_double()
    << "i rel=" << fmt(rel) << " slope=" << fmt(sd.decay_slope) << " fit residual=" << fmt(sd.residual.to_double());
  return {rel <= 0.02, d.str()};
}

// 7: singular regime against 4με^{1−2r}e^{−a/ε}|f(μ̂)|
Outcome singular_regime() {
  const int bits = 256;
  PrecisionGuard g(bits);
  auto m = load_model(models_dir() + "duffing_x4.json");
  auto info = analyze_separatrix(m.potential, bits);
  SeparatrixEvaluator ev(m.potential, info, bits);
  auto k = compute_constants(m, ev, bits);
  // η = 0 and ℓ = 2r: μ̂ = μ, independent of ε.
  auto pb = make_inner_problem(m, info, k, m.mu, 128);
  auto sd = stokes_constant(pb, {10, 12, 14, 16}, info.C_plus, k.F.size() > 1 ? k.F[1] : HarmonicSeries(), k.b);
  double fabs_mu = abs(sd.f_mu).to_double();
  std::ostringstream d;
  d << "|f(" << m.mu.to_double() << ")|=" << fmt(fabs_mu) << " (depth correction " << fmt(sd.correction.to_double())
    << ")";
  std::vector<double> ratio;
  BigReal tau0 = const_pi(bits) / 2L;
  for (double e : {0.1, 0.07, 0.05}) {
    BigReal eps(e, bits);
    auto r = measure_splitting(m, info, eps, tau0, bits);
    BigReal one(1.0, bits);
    BigReal pred = m.mu * 4L * pow(eps, one - big(info.r, bits) * 2L) * exp(-info.a / eps) * BigReal(fabs_mu, bits);
    ratio.push_back((r.area / pred).to_double());
    d << " eps=" << e << ":ratio=" << fmt(ratio.back());
  }
  bool trend = std::abs(ratio[2] - 1) < std::abs(ratio[0] - 1);
  return {ratio[2] >= 0.6 && ratio[2] <= 1.4 && trend, d.str()};
}

// 8: invariants
Outcome invariants() {
  PrecisionGuard g(128);
  std::ostringstream d;
  bool ok = true;
  auto m = load_model(models_dir() + "duffing_x1.json");
  auto info = analyze_separatrix(m.potential, 128);
  BigReal eps(0.3, 128);

  // Symplecticity on every Jacobian of a map sample and the monodromy.
  auto spec = make_map_spec(m, eps, const_pi(128) / 2L, 128);
  double tol = spec.tol_int.to_double(), worst_det = 0;
  for (auto [x, y] : {std::pair{0.1, 0.05}, {1.0, -0.3}, {-0.4, 0.6}, {1.3, 0.2}, {0.5, 0.0}}) {
    auto img = poincare_map(spec, BigReal(x, 128), BigReal(y, 128));
    worst_det = std::max(worst_det, abs(img.jacobian->det() - BigReal(1.0, 128)).to_double());
  }
  auto po = find_periodic_orbit(spec);
  worst_det = std::max(worst_det, po.det_error.to_double());
  ok = ok && worst_det <= 1e3 * tol;
  d << "|detJ-1|=" << fmt(worst_det) << "/" << fmt(1e3 * tol);

  // Energy conservation of the unperturbed flow.
  SystemModel m0 = m;
  m0.mu = BigReal::zero(128);
  BigReal x0(0.3, 128), y0(0.2, 128);
  auto H = [](const BigReal& x, const BigReal& y) { return y * y / 2L - x * x / 2L + x * x * x * x / 4L; };
  auto fl = integrate_flow(m0, eps, x0, y0, BigReal::zero(128), BigReal(40.0, 128), spec.tol_int, 128, false);
  double dH = abs(H(fl.x, fl.y) - H(x0, y0)).to_double();
  ok = ok && dH <= 1e3 * tol;
  d << " |dH|=" << fmt(dH);

  // Area at two section phases; action sum against the boundary integral.
  auto r1 = measure_splitting(m, info, eps, const_pi(128) / 2L, 128);
  auto r2 = measure_splitting(m, info, eps, const_pi(128) / 2L + BigReal(0.7, 128), 128);
  double A = r1.area.to_double();
  double dtau = abs(r1.area - r2.area).to_double();
  double est = (r1.est_error + r2.est_error).to_double();
  ok = ok && dtau <= est;
  d << " tau0 gap=" << fmt(dtau / A) << " rel (est " << fmt(est / A) << ")";
  double ab = 0;
  for (const auto* r : {&r1, &r2})
    ab = std::max(ab, (abs(r->area_action - r->area_boundary) / r->area).to_double());
  ok = ok && ab <= 1e-4;
  d << " action/boundary=" << fmt(ab);

  auto rz = measure_splitting(m0, info, eps, BigReal::zero(128), 128);
  ok = ok && rz.area.is_zero() && rz.method == "below_resolution";
  d << " mu=0:" << rz.method;

  // M^[−k] = conj(M^[k]) for real H₁.
  SeparatrixEvaluator ev(m.potential, info, 128);
  double conj_gap = 0;
  for (int n : {1, 3, 4}) {
    auto mn = duffing_power(n, "0");
    auto p = melnikov_coefficient(mn, ev, 1, eps, 128);
    auto q = melnikov_coefficient(mn, ev, -1, eps, 128);
    conj_gap = std::max(conj_gap, (abs(q.value - conj(p.value)) / abs(p.value)).to_double());
  }
  ok = ok && conj_gap <= 1e-25;
  d << " conj=" << fmt(conj_gap);
  return {ok, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> all = {
      {1, "regime table and b", 1.0, regime_table},
      {2, "singularity analysis", 60.0, singularity},
      {3, "Melnikov closed form", 60.0, melnikov_oracle},
      {4, "M^[1] asymptotics", 300.0, melnikov_asymptotics},
      {5, "regular-regime lobe area", 1800.0, regular_regime},
      {6, "Stokes constant at small mu_hat", 1800.0, stokes_small},
      {7, "singular-regime consistency", 7200.0, singular_regime},
      {8, "invariant suite", 600.0, invariants},
  };
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : all) {
    if (!pick.empty() && !pick.count(c.id)) continue;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_budget = s <= c.budget_s;
    bool pass = o.pass && in_budget;
    std::printf("%s criterion %d (%s): %s [%.1f s / %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), s, c.budget_s, in_budget ? "" : ", over budget");
    std::fflush(stdout);
    if (!pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
