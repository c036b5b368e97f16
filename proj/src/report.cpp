#include "sepsplit/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sepsplit/errors.hpp"

namespace sepsplit {

using nlohmann::json;

namespace {

std::string source_name(SeparatrixSource s) { return s == SeparatrixSource::Catalog ? "catalog" : "numeric"; }

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

// Round-number tick positions covering [lo, hi].
std::vector<double> ticks(double lo, double hi, int target = 6) {
  double span = hi - lo;
  if (!(span > 0)) return {lo};
  double raw = span / target;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (span / step <= target) break;
  }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return t;
}

}  // namespace

json complex_to_json(const BigComplex& z, int digits) {
  (void)digits;
  return json::array({z.re.to_double(), z.im.to_double()});
}

json separatrix_to_json(const SeparatrixInfo& info) {
  json j{{"a", info.a.to_double()},
         {"a_decimal", info.a.to_string(30)},
         {"r", info.r.to_string()},
         {"C_plus", complex_to_json(info.C_plus)},
         {"source", source_name(info.source)},
         {"apex", json::array({info.apex_x.to_double(), info.apex_p.to_double()})},
         {"lambda", info.lambda.to_double()},
         {"degree_M", info.degree_M},
         {"bits", info.a.bits()}};
  if (!info.catalog_name.empty()) j["catalog_name"] = info.catalog_name;
  if (info.source == SeparatrixSource::Numeric) j["cplus_agreement"] = info.cplus_agreement;
  return j;
}

json regime_to_json(const RegimeReport& r) {
  json flags = json::array();
  for (const auto& f : r.hypothesis_flags) flags.push_back({{"id", f.id}, {"pass", f.pass}, {"message", f.message}});
  return json{{"ell", r.ell.to_string()},
              {"r", r.r.to_string()},
              {"eta_star", r.eta_star.to_string()},
              {"mu_hat_exponent", r.mu_hat_exponent.to_string()},
              {"regime", to_string(r.regime)},
              {"hypotheses", flags}};
}

json constants_to_json(const AsymptoticConstants& c) {
  json j{{"ell", c.ell.to_string()},
         {"C_hat", complex_to_json(c.C_hat)},
         {"C_hat_numeric", complex_to_json(c.C_hat_numeric)},
         {"f0", complex_to_json(c.f0)},
         {"inner_available", c.inner_available}};
  if (c.inner_available) j["b"] = complex_to_json(c.b);
  return j;
}

json melnikov_to_json(const MelnikovCoefficient& m) {
  return json{{"k", m.k},
              {"eps", m.eps.to_double()},
              {"value", complex_to_json(m.value)},
              {"est_error", m.est_error.to_double()},
              {"method", m.method},
              {"evaluations", m.evaluations},
              {"bits", m.value.re.bits()}};
}

json stokes_to_json(const StokesData& s) {
  return json{{"chi_minus1", complex_to_json(s.chi_minus1)},
              {"chi_minus2", complex_to_json(s.chi_minus2)},
              {"f_mu", complex_to_json(s.f_mu)},
              {"residual", s.residual.to_double()},
              {"depth_correction", s.correction.to_double()},
              {"decay_slope", s.decay_slope},
              {"depths", s.depths},
              {"bits", s.f_mu.re.bits()}};
}

json measurement_to_json(const SplittingMeasurement& m) {
  auto point = [](const HomoclinicPoint& h) {
    return json{{"x", h.x.to_string(30)},
                {"y", h.y.to_string(30)},
                {"sigma_u", h.sigma_u.to_double()},
                {"sigma_s", h.sigma_s.to_double()},
                {"residual", h.residual.to_double()},
                {"sin_angle", h.sin_angle.to_double()}};
  };
  json j{{"eps", m.eps.to_double()},
         {"mu", m.mu.to_double()},
         {"tau0", m.tau0.to_double()},
         {"area", m.area.to_double()},
         {"area_decimal", m.area.to_string(30)},
         {"est_error", m.est_error.to_double()},
         {"method", m.method},
         {"bits", m.bits},
         {"work_bits", m.work_bits},
         {"seconds", m.seconds}};
  if (m.method != "below_resolution") {
    j["area_action"] = m.area_action.to_double();
    j["area_boundary"] = m.area_boundary.to_double();
    j["boundary_quad_error"] = m.boundary_quad_error.to_double();
    j["truncation_periods"] = m.truncation_periods;
    j["homoclinic"] = json::array({point(m.pair.z1), point(m.pair.z2)});
  }
  return j;
}

json fit_to_json(const FitResult& f) {
  json j{{"law", f.law},
         {"K", f.K.to_double()},
         {"beta", f.beta.to_double()},
         {"a", f.a_fit.to_double()},
         {"K_err", f.K_err},
         {"beta_err", f.beta_err},
         {"a_err", f.a_err},
         {"residuals", f.residuals},
         {"eps_range", json::array({f.eps_min, f.eps_max})}};
  if (f.log_coeff) {
    j["log_coeff"] = f.log_coeff->to_double();
    j["log_err"] = f.log_err;
  }
  return j;
}

void write_sweep_header(std::ostream& os) { os << "eps,area,est_error,bits,seconds\n"; }

void write_sweep_row(std::ostream& os, const SweepRow& row) {
  os << std::setprecision(17) << row.eps << ',' << row.area.to_string(30) << ',' << row.est_error.to_string(6) << ','
     << row.bits << ',' << std::setprecision(6) << row.seconds << '\n';
}

std::vector<SweepRow> read_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open sweep file '" + path + "'");
  std::vector<SweepRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("eps", 0) == 0) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 5) throw ValidationError(path + ":" + std::to_string(lineno) + ": expected 5 columns");
    try {
      SweepRow r;
      r.eps = std::stod(f[0]);
      r.bits = std::stoi(f[3]);
      r.area = BigReal::from_string(f[1], std::max(r.bits, 64));
      r.est_error = BigReal::from_string(f[2], 64);
      r.seconds = std::stod(f[4]);
      rows.push_back(r);
    } catch (const std::invalid_argument&) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return rows;
}

void write_prediction_header(std::ostream& os) { os << "eps,area_pred,formula_id,caveats\n"; }

void write_prediction_row(std::ostream& os, const LobeAreaPrediction& p) {
  std::string cav;
  for (const auto& c : p.caveats) {
    if (!cav.empty()) cav += "; ";
    cav += c;
  }
  std::replace(cav.begin(), cav.end(), '"', '\'');
  os << std::setprecision(17) << p.eps.to_double() << ',' << p.area.to_string(20) << ',' << p.formula_id << ",\""
     << cav << "\"\n";
}

std::string svg_plot(const std::vector<PlotSeries>& series, const std::string& title, const std::string& xlabel,
                     const std::string& ylabel, int width, int height) {
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  if (xlo > xhi) xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  if (xhi - xlo < 1e-12) xlo -= 0.5, xhi += 0.5;
  if (yhi - ylo < 1e-12) ylo -= 0.5, yhi += 0.5;
  double padx = 0.05 * (xhi - xlo), pady = 0.08 * (yhi - ylo);
  xlo -= padx, xhi += padx, ylo -= pady, yhi += pady;

  const double ml = 70, mr = 20, mt = 40, mb = 55;
  double pw = width - ml - mr, ph = height - mt - mb;
  auto X = [&](double x) { return ml + (x - xlo) / (xhi - xlo) * pw; };
  auto Y = [&](double y) { return mt + (yhi - y) / (yhi - ylo) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape_xml(title)
     << "</text>\n";
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ticks(xlo, xhi)) {
    os << "<line x1=\"" << X(t) << "\" y1=\"" << mt + ph << "\" x2=\"" << X(t) << "\" y2=\"" << mt + ph + 5
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << X(t) << "\" y=\"" << mt + ph + 18 << "\" text-anchor=\"middle\">" << fmt(t, 4) << "</text>\n";
  }
  for (double t : ticks(ylo, yhi)) {
    os << "<line x1=\"" << ml - 5 << "\" y1=\"" << Y(t) << "\" x2=\"" << ml << "\" y2=\"" << Y(t)
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << Y(t) + 4 << "\" text-anchor=\"end\">" << fmt(t, 4) << "</text>\n";
  }
  os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">" << escape_xml(xlabel)
     << "</text>\n";
  os << "<text transform=\"translate(16," << mt + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape_xml(ylabel) << "</text>\n";

  for (const auto& s : series) {
    if (s.line) {
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.8\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) os << X(s.x[i]) << ',' << Y(s.y[i]) << ' ';
      os << "\"/>\n";
    } else {
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
          os << "<circle cx=\"" << X(s.x[i]) << "\" cy=\"" << Y(s.y[i]) << "\" r=\"3.5\" fill=\"" << s.color
             << "\"/>\n";
    }
  }
  double ly = mt + 16;
  for (const auto& s : series) {
    double lx = ml + pw - 170;
    if (s.line)
      os << "<line x1=\"" << lx << "\" y1=\"" << ly - 4 << "\" x2=\"" << lx + 22 << "\" y2=\"" << ly - 4
         << "\" stroke=\"" << s.color << "\" stroke-width=\"1.8\"/>\n";
    else
      os << "<circle cx=\"" << lx + 11 << "\" cy=\"" << ly - 4 << "\" r=\"3.5\" fill=\"" << s.color << "\"/>\n";
    os << "<text x=\"" << lx + 28 << "\" y=\"" << ly << "\">" << escape_xml(s.label) << "</text>\n";
    ly += 18;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace sepsplit
