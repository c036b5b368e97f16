#include "sepsplit/model_io.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "sepsplit/errors.hpp"

namespace sepsplit {

using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, unused] : j.items()) {
    if (allowed.count(key) == 0) throw ValidationError(where + ": unknown field '" + key + "'");
  }
}

const json& field(const json& j, const std::string& key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(where + ": missing field '" + key + "'");
  return *it;
}

int parse_index(const std::string& key, const std::string& where) {
  char* end = nullptr;
  long v = std::strtol(key.c_str(), &end, 10);
  if (key.empty() || *end != '\0' || v < -1000 || v > 1000)
    throw ValidationError(where + ": key '" + key + "' is not a decimal integer");
  return static_cast<int>(v);
}

int parse_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ValidationError(where + ": expected an integer");
  return j.get<int>();
}

std::map<int, BigReal> parse_coeff_map(const json& j, const std::string& where) {
  require_object(j, where);
  std::map<int, BigReal> out;
  for (const auto& [key, val] : j.items()) {
    int idx = parse_index(key, where);
    if (out.count(idx)) throw ValidationError(where + ": duplicate key " + key);
    out.emplace(idx, real_from_json(val, where + "[" + key + "]"));
  }
  return out;
}

FourierSeries parse_fourier(const json& j, const std::string& where) {
  require_object(j, where);
  reject_unknown(j, {"cos", "sin"}, where);
  std::map<int, BigReal> c, s;
  if (j.contains("cos")) c = parse_coeff_map(j["cos"], where + ".cos");
  if (j.contains("sin")) s = parse_coeff_map(j["sin"], where + ".sin");
  FourierSeries f;
  std::set<int> keys;
  for (const auto& [k, v] : c) keys.insert(k);
  for (const auto& [k, v] : s) keys.insert(k);
  for (int k : keys) {
    BigReal cc = c.count(k) ? c.at(k) : BigReal(0.0);
    BigReal sc = s.count(k) ? s.at(k) : BigReal(0.0);
    if (k < 0) throw ValidationError(where + ": negative harmonic " + std::to_string(k));
    if (k == 0) {
      if (!sc.is_zero()) throw ValidationError(where + ": sin harmonic 0 is meaningless");
      f.set_mean(cc);
      continue;
    }
    if (k > 1000) throw ValidationError(where + ": harmonic too large");
    f.set(k, cc, sc);
  }
  return f;
}

json fourier_to_json(const FourierSeries& f) {
  json c = json::object(), s = json::object();
  if (!f.mean().is_zero()) c["0"] = real_to_json(f.mean());
  for (const auto& [k, h] : f.harmonics()) {
    if (!h.cos_coeff.is_zero()) c[std::to_string(k)] = real_to_json(h.cos_coeff);
    if (!h.sin_coeff.is_zero()) s[std::to_string(k)] = real_to_json(h.sin_coeff);
  }
  return json{{"cos", c}, {"sin", s}};
}

Kind parse_kind(const json& j, const std::string& where) {
  if (!j.is_string()) throw ValidationError(where + ": kind must be a string");
  auto s = j.get<std::string>();
  if (s == "polynomial") return Kind::Polynomial;
  if (s == "trigonometric") return Kind::Trigonometric;
  throw ValidationError(where + ": unknown kind '" + s + "'");
}

std::string kind_name(Kind k) { return k == Kind::Polynomial ? "polynomial" : "trigonometric"; }

json coeff_map_to_json(const std::map<int, BigReal>& m) {
  json o = json::object();
  for (const auto& [k, v] : m)
    if (!v.is_zero()) o[std::to_string(k)] = real_to_json(v);
  return o;
}

}  // namespace

json real_to_json(const BigReal& x) {
  double d = x.to_double();
  if (BigReal(d, x.bits()) == x) return d;
  return x.to_string();
}

BigReal real_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return BigReal(j.get<double>());
  if (j.is_string()) {
    try {
      return BigReal::from_string(j.get<std::string>());
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  throw ValidationError(where + ": expected a number or decimal string");
}

SystemModel parse_model(const json& j) {
  require_object(j, "model");
  reject_unknown(j, {"name", "potential", "perturbation", "eta", "mu"}, "model");
  SystemModel m;
  const json& name = field(j, "name", "model");
  if (!name.is_string()) throw ValidationError("model.name: expected a string");
  m.name = name.get<std::string>();

  const json& pj = field(j, "potential", "model");
  require_object(pj, "potential");
  reject_unknown(pj, {"kind", "coefficients", "sin_coefficients"}, "potential");
  m.potential.kind = parse_kind(field(pj, "kind", "potential"), "potential.kind");
  m.potential.coefficients = parse_coeff_map(field(pj, "coefficients", "potential"), "potential.coefficients");
  if (pj.contains("sin_coefficients")) {
    if (m.potential.kind != Kind::Trigonometric)
      throw ValidationError("potential.sin_coefficients: only allowed for trigonometric potentials");
    m.potential.sin_coefficients = parse_coeff_map(pj["sin_coefficients"], "potential.sin_coefficients");
  }
  for (const auto& [d, c] : m.potential.coefficients) {
    int lim = m.potential.kind == Kind::Polynomial ? kMaxPolynomialDegree : kMaxTrigHarmonic;
    if (d < 0 || d > lim) throw ValidationError("potential.coefficients: index " + std::to_string(d) + " out of range");
  }
  for (const auto& [d, c] : m.potential.sin_coefficients) {
    if (d < 1 || d > kMaxTrigHarmonic)
      throw ValidationError("potential.sin_coefficients: index " + std::to_string(d) + " out of range");
  }

  const json& hj = field(j, "perturbation", "model");
  require_object(hj, "perturbation");
  reject_unknown(hj, {"kind", "terms", "linear"}, "perturbation");
  m.perturbation.kind = parse_kind(field(hj, "kind", "perturbation"), "perturbation.kind");
  const json& terms = field(hj, "terms", "perturbation");
  if (!terms.is_array()) throw ValidationError("perturbation.terms: expected an array");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    std::string w = "perturbation.terms[" + std::to_string(i) + "]";
    const json& tj = terms[i];
    require_object(tj, w);
    reject_unknown(tj, {"x_power", "y_power", "fourier"}, w);
    PerturbationTerm t;
    t.x_power = parse_int(field(tj, "x_power", w), w + ".x_power");
    t.y_power = parse_int(field(tj, "y_power", w), w + ".y_power");
    t.series = parse_fourier(field(tj, "fourier", w), w + ".fourier");
    if (t.y_power < 0) throw ValidationError(w + ": y_power must be >= 0");
    if (m.perturbation.kind == Kind::Polynomial) {
      if (t.x_power < 0) throw ValidationError(w + ": x_power must be >= 0");
      if (t.x_power + t.y_power > kMaxPolynomialDegree)
        throw ValidationError(w + ": total degree exceeds " + std::to_string(kMaxPolynomialDegree));
    } else {
      if (std::abs(t.x_power) > kMaxTrigHarmonic)
        throw ValidationError(w + ": |x_power| exceeds " + std::to_string(kMaxTrigHarmonic));
      if (t.y_power > kMaxPolynomialDegree) throw ValidationError(w + ": y_power too large");
    }
    m.perturbation.terms.push_back(std::move(t));
  }
  if (hj.contains("linear")) {
    if (m.perturbation.kind != Kind::Trigonometric)
      throw ValidationError("perturbation.linear: only allowed for trigonometric perturbations");
    m.perturbation.linear = parse_fourier(hj["linear"], "perturbation.linear");
  }

  const json& ej = field(j, "eta", "model");
  if (ej.is_string()) {
    m.eta = Rational::parse(ej.get<std::string>());
  } else if (ej.is_number()) {
    m.eta = Rational::parse(ej.dump());
  } else {
    throw ValidationError("model.eta: expected a number or rational string");
  }
  if (m.eta < Rational(0)) throw ValidationError("model.eta: must be >= 0");
  m.mu = real_from_json(field(j, "mu", "model"), "model.mu");
  return m;
}

SystemModel parse_model_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("model file is not valid JSON: ") + e.what());
  }
  return parse_model(j);
}

SystemModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model_string(ss.str());
}

json model_to_json(const SystemModel& m) {
  json pot{{"kind", kind_name(m.potential.kind)}, {"coefficients", coeff_map_to_json(m.potential.coefficients)}};
  if (m.potential.kind == Kind::Trigonometric && !m.potential.sin_coefficients.empty())
    pot["sin_coefficients"] = coeff_map_to_json(m.potential.sin_coefficients);
  json terms = json::array();
  for (const auto& t : m.perturbation.terms) {
    terms.push_back({{"x_power", t.x_power}, {"y_power", t.y_power}, {"fourier", fourier_to_json(t.series)}});
  }
  json pert{{"kind", kind_name(m.perturbation.kind)}, {"terms", terms}};
  if (m.perturbation.linear) pert["linear"] = fourier_to_json(*m.perturbation.linear);
  json eta = m.eta.is_integer() ? json(m.eta.num()) : json(m.eta.to_string());
  return json{{"name", m.name}, {"potential", pot}, {"perturbation", pert}, {"eta", eta}, {"mu", real_to_json(m.mu)}};
}

}  // namespace sepsplit
