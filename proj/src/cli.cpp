#include "sepsplit/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "sepsplit/errors.hpp"
#include "sepsplit/inner.hpp"
#include "sepsplit/kernels.hpp"
#include "sepsplit/melnikov.hpp"
#include "sepsplit/model_io.hpp"
#include "sepsplit/report.hpp"
#include "sepsplit/splitting.hpp"

namespace sepsplit {

using nlohmann::json;

std::vector<double> parse_eps_grid(const std::string& spec) {
  std::vector<std::string> f;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ':')) f.push_back(part);
  if (f.size() < 3 || f.size() > 4) throw ValidationError("eps grid '" + spec + "': expected start:stop:count[:geom|lin]");
  double a, b;
  int n;
  try {
    a = std::stod(f[0]);
    b = std::stod(f[1]);
    n = std::stoi(f[2]);
  } catch (const std::exception&) {
    throw ValidationError("eps grid '" + spec + "': malformed number");
  }
  std::string kind = f.size() == 4 ? f[3] : "geom";
  if (n < 1) throw ValidationError("eps grid: count must be >= 1");
  if (a <= 0 || b <= 0) throw ValidationError("eps grid: eps must be > 0");
  if (kind == "geom") {
    auto g = geometric_grid(std::max(a, b), std::min(a, b), n);
    if (n > 1 && a == b) throw ValidationError("eps grid: geometric grid needs distinct endpoints");
    return g;
  }
  if (kind == "lin") {
    std::vector<double> g;
    for (int i = 0; i < n; ++i) g.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    return g;
  }
  throw ValidationError("eps grid: unknown spacing '" + kind + "' (geom or lin)");
}

namespace {

struct Common {
  std::string model;
  int bits = 0;
  std::string out;
};

std::string resolve_model(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::exists(path)) return path;
  if (const char* dir = std::getenv("SEPSPLIT_MODELS")) {
    for (const std::string& cand : {path, path + ".json"}) {
      fs::path p = fs::path(dir) / cand;
      if (fs::exists(p)) return p.string();
    }
  }
  throw ValidationError("model file '" + path + "' not found");
}

int precision(const Common& c) { return c.bits > 0 ? c.bits : bits_from_env(128); }

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback, bool append = false) : os_(&fallback) {
    if (!path.empty() && path != "-") {
      file_.open(path, append ? std::ios::app : std::ios::trunc);
      if (!file_) throw ValidationError("cannot open output file '" + path + "'");
      os_ = &file_;
    }
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

struct Context {
  SystemModel model;
  SeparatrixInfo sep;
  int bits;
};

Context load(const Common& c, bool catalog = true) {
  int bits = precision(c);
  set_default_bits(bits);
  Context ctx{load_model(resolve_model(c.model)), {}, bits};
  AnalyzeOptions o;
  o.use_catalog = catalog;
  ctx.sep = analyze_separatrix(ctx.model.potential, bits, o);
  return ctx;
}

std::vector<double> inner_depths(double ymax) {
  std::vector<double> d;
  for (double y = ymax - 6; y <= ymax + 1e-9; y += 2)
    if (y > 0) d.push_back(y);
  return d;
}

StokesData run_inner(const Context& ctx, const AsymptoticConstants& k, const BigReal& mu_hat, int kf, double depth) {
  if (!k.inner_available) throw ValidationError("trig inner constants unsupported");
  InnerProblem pb = make_inner_problem(ctx.model, ctx.sep, k, mu_hat, ctx.bits);
  pb.kf = kf;
  HarmonicSeries F1 = k.F.size() > 1 ? k.F[1] : HarmonicSeries();
  return stokes_constant(pb, inner_depths(depth), ctx.sep.C_plus, F1, k.b);
}

bool same_eps(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Separatrix splitting: predictions, Melnikov coefficients, inner Stokes constants and direct measurement"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  Common c;
  auto add_common = [&](CLI::App* sub, bool need_model = true) {
    auto* m = sub->add_option("--model", c.model, "model JSON file (or name under $SEPSPLIT_MODELS)");
    if (need_model) m->required();
    sub->add_option("--bits", c.bits, "working precision in bits (default $SEPSPLIT_BITS or 128)")
        ->check(CLI::Range(53, 4096));
    sub->add_option("--out", c.out, "output file (default stdout)");
  };

  bool no_catalog = false;
  auto* analyze = app.add_subcommand("analyze", "separatrix, hypotheses, regime and asymptotic constants");
  add_common(analyze);
  analyze->add_flag("--no-catalog", no_catalog, "force the numeric singularity pipeline");

  std::string grid, f_source = "melnikov";
  double eps = 0.0;
  std::vector<double> f_mu_in;
  auto* predict = app.add_subcommand("predict", "asymptotic lobe-area prediction");
  add_common(predict);
  auto* pg = predict->add_option("--eps-grid", grid, "start:stop:count[:geom|lin]");
  predict->add_option("--eps", eps, "single eps")->excludes(pg);
  predict->add_option("--f-source", f_source, "melnikov (f0) or inner (f(mu_hat))")
      ->check(CLI::IsMember({"melnikov", "inner"}));
  predict->add_option("--f-mu", f_mu_in, "f(mu_hat) as re im (skips the inner solve)")->expected(2);

  int k = 1;
  double shift_c = 1.0;
  auto* mel = app.add_subcommand("melnikov", "Melnikov coefficient M^[k](eps)");
  add_common(mel);
  mel->add_option("--eps", eps, "eps")->required();
  mel->add_option("--k", k, "harmonic");
  mel->add_option("--shift", shift_c, "contour shift c (Im u = a - c eps)");

  double mu_hat_in = 1e-3, depth = 14.0;
  int kf = 8;
  auto* inner = app.add_subcommand("inner", "inner-equation Stokes constant");
  add_common(inner);
  inner->add_option("--mu-hat", mu_hat_in, "inner coupling");
  inner->add_option("--kf", kf, "Fourier modes |k| <= kf")->check(CLI::Range(1, 64));
  inner->add_option("--depth", depth, "deepest line Y; lines at Y-6, Y-4, Y-2, Y");

  double tau0 = 0.0, span = 1.3;
  int guard = -1;
  auto* measure = app.add_subcommand("measure", "direct lobe-area measurement");
  add_common(measure);
  measure->add_option("--eps", eps, "eps")->required();
  measure->add_option("--tau0", tau0, "section phase");
  measure->add_option("--guard-bits", guard, "extra working bits (default bits/4 + 32)");
  measure->add_option("--span", span, "arc span in fundamental domains");

  int jobs = 1, min_bits = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "measurements over an eps grid (resumable CSV)");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--eps-grid", grid, "start:stop:count[:geom|lin]")->required();
  sweep_cmd->add_option("--tau0", tau0, "section phase");
  sweep_cmd->add_option("--jobs", jobs, "parallel grid points")->check(CLI::Range(1, 1024));
  sweep_cmd->add_option("--min-bits", min_bits, "lower bound on the precision schedule");

  std::string in, law = "free";
  double fix_a = 0.0, fix_beta = 0.0;
  auto* fit = app.add_subcommand("fit", "fit A = K eps^beta e^{-a/eps} to a sweep CSV");
  add_common(fit, false);
  fit->add_option("--in", in, "sweep CSV")->required();
  fit->add_option("--law", law, "free or fixed (a, beta given)")->check(CLI::IsMember({"free", "fixed"}));
  fit->add_option("--a", fix_a, "a for the fixed law");
  fit->add_option("--beta", fix_beta, "beta for the fixed law");

  auto* report = app.add_subcommand("report", "SVG plot of ln(A e^{a/eps}) vs ln eps");
  add_common(report);
  report->add_option("--in", in, "sweep CSV")->required();
  report->add_option("--f-source", f_source, "prediction f source")->check(CLI::IsMember({"melnikov", "inner"}));

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (analyze->parsed()) {
      Context ctx = load(c, !no_catalog);
      SeparatrixEvaluator ev(ctx.model.potential, ctx.sep, ctx.bits);
      json j{{"model", ctx.model.name},
             {"separatrix", separatrix_to_json(ctx.sep)},
             {"regime", regime_to_json(classify_regime(ctx.model, ctx.sep.r))}};
      try {
        j["constants"] = constants_to_json(compute_constants(ctx.model, ev, ctx.bits));
      } catch (const ValidationError& e) {
        j["constants"] = {{"error", e.what()}};
      }
      Output o(c.out, out);
      *o << j.dump(2) << "\n";
    } else if (predict->parsed()) {
      Context ctx = load(c);
      SeparatrixEvaluator ev(ctx.model.potential, ctx.sep, ctx.bits);
      std::vector<double> g = grid.empty() ? std::vector<double>{eps} : parse_eps_grid(grid);
      if (grid.empty() && eps <= 0) throw ValidationError("predict: give --eps or --eps-grid");
      bool zero = ctx.model.mu.is_zero() || ctx.model.perturbation.empty();
      AsymptoticConstants kc;
      if (!zero) kc = compute_constants(ctx.model, ev, ctx.bits);
      FSource fs = f_source == "inner" ? FSource::InnerFMu : FSource::MelnikovF0;
      RegimeReport rep = classify_regime(ctx.model, ctx.sep.r);
      std::map<std::string, BigComplex> f_cache;  // keyed by μ̂
      Output o(c.out, out);
      write_prediction_header(*o);
      for (double e : g) {
        LobeAreaPrediction p;
        if (zero) {
          p.eps = BigReal(e, ctx.bits);
          p.area = BigReal::zero(ctx.bits);
          p.formula_id = "zero_perturbation";
          write_prediction_row(*o, p);
          continue;
        }
        std::optional<BigComplex> fm;
        bool singular = rep.regime == Regime::SingularEllAbove2r || rep.regime == Regime::SingularEllEquals2r;
        if (fs == FSource::InnerFMu && singular) {
          if (f_mu_in.size() == 2) {
            fm = BigComplex(BigReal(f_mu_in[0], ctx.bits), BigReal(f_mu_in[1], ctx.bits));
          } else {
            BigReal mh = sepsplit::mu_hat(ctx.model.mu, BigReal(e, ctx.bits), ctx.model.eta, rep.ell, ctx.sep.r);
            std::string key = mh.to_string(20);
            if (!f_cache.count(key)) f_cache[key] = run_inner(ctx, kc, mh, kf, depth).f_mu;
            fm = f_cache[key];
          }
        }
        write_prediction_row(*o, predict_area(ctx.model, ctx.sep, kc, BigReal(e, ctx.bits), fs, fm));
      }
    } else if (mel->parsed()) {
      Context ctx = load(c);
      SeparatrixEvaluator ev(ctx.model.potential, ctx.sep, ctx.bits);
      MelnikovOptions mo;
      mo.shift_c = shift_c;
      auto m = melnikov_coefficient(ctx.model, ev, k, BigReal(eps, ctx.bits), ctx.bits, mo);
      Output o(c.out, out);
      *o << melnikov_to_json(m).dump(2) << "\n";
    } else if (inner->parsed()) {
      Context ctx = load(c);
      SeparatrixEvaluator ev(ctx.model.potential, ctx.sep, ctx.bits);
      auto kc = compute_constants(ctx.model, ev, ctx.bits);
      auto s = run_inner(ctx, kc, BigReal(mu_hat_in, ctx.bits), kf, depth);
      json j = stokes_to_json(s);
      j["mu_hat"] = mu_hat_in;
      j["kf"] = kf;
      j["f0"] = complex_to_json(kc.f0);
      Output o(c.out, out);
      *o << j.dump(2) << "\n";
    } else if (measure->parsed()) {
      Context ctx = load(c);
      int bits = c.bits > 0 ? c.bits : std::max(schedule_bits(ctx.sep.a.to_double(), eps), bits_from_env(0));
      set_default_bits(bits);
      MeasureOptions mo;
      mo.guard_bits = guard;
      mo.arc.span = span;
      auto m = measure_splitting(ctx.model, ctx.sep, BigReal(eps, bits), BigReal(tau0, bits), bits, mo);
      Output o(c.out, out);
      *o << measurement_to_json(m).dump(2) << "\n";
    } else if (sweep_cmd->parsed()) {
      Context ctx = load(c);
      std::vector<double> g = parse_eps_grid(grid);
      std::vector<SweepRow> done;
      bool have_file = !c.out.empty() && c.out != "-" && std::filesystem::exists(c.out);
      if (have_file) done = read_sweep_csv(c.out);
      std::vector<double> todo;
      for (double e : g) {
        bool seen = std::any_of(done.begin(), done.end(), [&](const SweepRow& r) { return same_eps(r.eps, e); });
        if (!seen) todo.push_back(e);
      }
      SweepOptions so;
      so.tau0 = BigReal(tau0, ctx.bits);
      so.jobs = jobs;
      so.min_bits = std::max(min_bits, c.bits);
      Output o(c.out, out, have_file);
      if (!have_file) write_sweep_header(*o);
      if (jobs > 1) {
        for (const auto& r : sweep(ctx.model, ctx.sep, todo, so)) write_sweep_row(*o, r);
      } else {
        for (double e : todo) {
          write_sweep_row(*o, sweep(ctx.model, ctx.sep, {e}, so).front());
          (*o).flush();
        }
      }
      err << "sweep: " << todo.size() << " computed, " << g.size() - todo.size() << " reused\n";
    } else if (fit->parsed()) {
      auto rows = read_sweep_csv(in);
      std::vector<double> e;
      std::vector<BigReal> a;
      for (const auto& r : rows) {
        e.push_back(r.eps);
        a.push_back(r.area);
      }
      FitResult f = law == "fixed" ? fit_law_fixed_a(e, a, fix_a, fix_beta) : fit_law(e, a);
      Output o(c.out, out);
      *o << fit_to_json(f).dump(2) << "\n";
    } else if (report->parsed()) {
      Context ctx = load(c);
      SeparatrixEvaluator ev(ctx.model.potential, ctx.sep, ctx.bits);
      auto kc = compute_constants(ctx.model, ev, ctx.bits);
      auto rows = read_sweep_csv(in);
      if (rows.empty()) throw ValidationError("report: sweep file has no rows");
      std::sort(rows.begin(), rows.end(), [](const SweepRow& x, const SweepRow& y) { return x.eps < y.eps; });
      double a = ctx.sep.a.to_double();
      PlotSeries meas{"measured", {}, {}, false, "#d62728"};
      PlotSeries pred{"prediction", {}, {}, true, "#1f77b4"};
      std::vector<double> e;
      std::vector<BigReal> ar;
      for (const auto& r : rows) {
        if (r.area.sign() <= 0) continue;
        BigReal eb(r.eps, ctx.bits);
        meas.x.push_back(std::log(r.eps));
        meas.y.push_back((log(r.area.with_bits(ctx.bits)) + ctx.sep.a / eb).to_double());
        e.push_back(r.eps);
        ar.push_back(r.area);
      }
      FSource fs = f_source == "inner" ? FSource::InnerFMu : FSource::MelnikovF0;
      std::optional<BigComplex> fm;
      RegimeReport rep = classify_regime(ctx.model, ctx.sep.r);
      bool singular = rep.regime == Regime::SingularEllAbove2r || rep.regime == Regime::SingularEllEquals2r;
      if (fs == FSource::InnerFMu && singular) {
        BigReal mh = sepsplit::mu_hat(ctx.model.mu, BigReal(rows.front().eps, ctx.bits), ctx.model.eta, rep.ell, ctx.sep.r);
        fm = run_inner(ctx, kc, mh, kf, depth).f_mu;
      }
      double lo = rows.front().eps, hi = rows.back().eps;
      for (int i = 0; i <= 60; ++i) {
        double ee = lo * std::pow(hi / lo, i / 60.0);
        auto p = predict_area(ctx.model, ctx.sep, kc, BigReal(ee, ctx.bits), fs, fm);
        if (p.area.sign() <= 0) continue;
        pred.x.push_back(std::log(ee));
        pred.y.push_back((log(p.area) + ctx.sep.a / BigReal(ee, ctx.bits)).to_double());
      }
      std::vector<PlotSeries> series{pred, meas};
      if (e.size() >= 4) {
        FitResult f = fit_law(e, ar);
        PlotSeries fl{"fit: beta=" + std::to_string(f.beta.to_double()).substr(0, 6) + " a=" +
                          std::to_string(f.a_fit.to_double()).substr(0, 6),
                      {}, {}, true, "#2ca02c"};
        for (int i = 0; i <= 60; ++i) {
          double ee = lo * std::pow(hi / lo, i / 60.0);
          fl.x.push_back(std::log(ee));
          fl.y.push_back(std::log(f.K.to_double()) + f.beta.to_double() * std::log(ee) + (a - f.a_fit.to_double()) / ee);
        }
        series.push_back(fl);
      }
      Output o(c.out, out);
      *o << svg_plot(series, ctx.model.name.empty() ? "lobe area" : ctx.model.name, "ln eps", "ln(A e^{a/eps})");
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace sepsplit
