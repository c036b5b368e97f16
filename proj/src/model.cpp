#include "sepsplit/model.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>

#include "sepsplit/errors.hpp"

namespace sepsplit {

namespace {

long falling(int d, int n) {
  long r = 1;
  for (int i = 0; i < n; ++i) r *= (d - i);
  return r;
}

template <class T>
T poly_derivative(const std::map<int, BigReal>& c, const T& x, int n) {
  T acc = T(BigReal::zero(x.bits()));
  if (c.empty()) return acc;
  int deg = c.rbegin()->first;
  // Horner on the n-th derivative
  for (int d = deg; d >= n; --d) {
    acc = acc * x;
    auto it = c.find(d);
    if (it != c.end()) acc += T(it->second.with_bits(x.bits()) * falling(d, n));
  }
  return acc;
}

BigReal trig_cos(const BigReal& x) { return cos(x); }
BigReal trig_sin(const BigReal& x) { return sin(x); }
BigComplex trig_cos(const BigComplex& x) { return cos(x); }
BigComplex trig_sin(const BigComplex& x) { return sin(x); }

template <class T>
T trig_derivative(const Potential& v, const T& x, int n) {
  // d^n/dx^n cos(jx) = j^n cos(jx + nπ/2), likewise for sin
  T acc = T(BigReal::zero(x.bits()));
  auto add = [&](int j, const BigReal& cc, const BigReal& sc) {
    T arg = x * static_cast<long>(j);
    T c = trig_cos(arg), s = trig_sin(arg);
    // rotate by nπ/2: (cos, sin) -> (−sin, cos)
    for (int i = 0; i < n % 4; ++i) {
      T t = -s;
      s = c;
      c = t;
    }
    BigReal scale = pow(BigReal(static_cast<double>(j), x.bits()), static_cast<long>(n));
    acc += c * (cc.with_bits(x.bits()) * scale) + s * (sc.with_bits(x.bits()) * scale);
  };
  for (const auto& [j, cc] : v.coefficients) {
    if (j == 0) {
      if (n == 0) acc += T(cc.with_bits(x.bits()));
      continue;
    }
    add(j, cc, v.sin_coefficient(j));
  }
  for (const auto& [j, sc] : v.sin_coefficients) {
    if (j != 0 && v.coefficients.count(j) == 0) add(j, BigReal::zero(x.bits()), sc);
  }
  return acc;
}

bool maps_equal(const std::map<int, BigReal>& a, const std::map<int, BigReal>& b) {
  auto nz = [](const std::map<int, BigReal>& m) {
    std::map<int, BigReal> r;
    for (const auto& [k, v] : m)
      if (!v.is_zero()) r.emplace(k, v);
    return r;
  };
  auto na = nz(a), nb = nz(b);
  if (na.size() != nb.size()) return false;
  for (auto ia = na.begin(), ib = nb.begin(); ia != na.end(); ++ia, ++ib)
    if (ia->first != ib->first || ia->second != ib->second) return false;
  return true;
}

}  // namespace

int Potential::degree() const {
  int d = 0;
  for (const auto& [k, v] : coefficients)
    if (!v.is_zero()) d = std::max(d, k);
  for (const auto& [k, v] : sin_coefficients)
    if (!v.is_zero()) d = std::max(d, k);
  return d;
}

BigReal Potential::coefficient(int d) const {
  auto it = coefficients.find(d);
  return it == coefficients.end() ? BigReal(0.0) : it->second;
}

BigReal Potential::sin_coefficient(int j) const {
  auto it = sin_coefficients.find(j);
  return it == sin_coefficients.end() ? BigReal(0.0) : it->second;
}

BigReal Potential::value(const BigReal& x) const { return derivative(x, 0); }
BigComplex Potential::value(const BigComplex& x) const { return derivative(x, 0); }

BigReal Potential::derivative(const BigReal& x, int n) const {
  if (kind == Kind::Polynomial) {
    BigComplex r = poly_derivative(coefficients, BigComplex(x), n);
    return r.re;
  }
  return trig_derivative(*this, x, n);
}

BigComplex Potential::derivative(const BigComplex& x, int n) const {
  if (kind == Kind::Polynomial) return poly_derivative(coefficients, x, n);
  return trig_derivative(*this, x, n);
}

bool operator==(const Potential& a, const Potential& b) {
  return a.kind == b.kind && maps_equal(a.coefficients, b.coefficients) &&
         maps_equal(a.sin_coefficients, b.sin_coefficients);
}

std::optional<CriticalClass> critical_class(const Potential& v) {
  int bits = default_bits();
  BigReal zero = BigReal::zero(bits);
  BigReal v2 = v.derivative(zero, 2);
  CriticalClass cc;
  if (v2.sign() < 0) {
    cc.hyperbolic = true;
    cc.lambda = sqrt(-v2);
    return cc;
  }
  if (v2.sign() > 0) return std::nullopt;
  if (v.kind == Kind::Polynomial) {
    for (const auto& [d, c] : v.coefficients) {
      if (d >= 3 && !c.is_zero()) {
        cc.m = d;
        cc.v_m = c;
        return cc;
      }
    }
    return std::nullopt;
  }
  // trig: first nonvanishing derivative at 0 of order ≥ 3
  BigReal scale(1.0, bits);
  for (int m = 3; m <= 4 * kMaxTrigHarmonic; ++m) {
    scale *= static_cast<long>(m);
    BigReal dm(0.0, bits);
    // d^m cos(jx)|0 = j^m cos(mπ/2), d^m sin(jx)|0 = j^m sin(mπ/2)
    for (int j = 1; j <= v.degree(); ++j) {
      BigReal jm = pow(BigReal(static_cast<double>(j), bits), static_cast<long>(m));
      switch (m % 4) {
        case 0: dm += v.coefficient(j) * jm; break;
        case 1: dm += v.sin_coefficient(j) * jm; break;
        case 2: dm -= v.coefficient(j) * jm; break;
        default: dm -= v.sin_coefficient(j) * jm; break;
      }
    }
    if (abs(dm) > pow2(-bits + 16, bits)) {
      cc.m = m;
      cc.v_m = dm / scale;
      return cc;
    }
  }
  return std::nullopt;
}

BigReal v_infinity(const Potential& v) {
  if (v.kind != Kind::Polynomial) return BigReal(0.0);
  return v.coefficient(v.degree());
}

bool PerturbationModel::empty() const {
  for (const auto& t : terms)
    if (!t.series.is_zero()) return false;
  return !linear || linear->is_zero();
}

bool PerturbationModel::depends_on_y() const {
  for (const auto& t : terms)
    if (t.y_power > 0 && !t.series.is_zero()) return true;
  return false;
}

int PerturbationModel::order_n() const {
  int n = std::numeric_limits<int>::max();
  for (const auto& t : terms) {
    if (t.series.is_zero()) continue;
    int o = t.y_power;
    if (kind == Kind::Polynomial) {
      o += t.x_power;
    } else if (t.x_power < 0) {
      o += 1;  // sin(kx) vanishes to first order
    }
    n = std::min(n, o);
  }
  if (linear && !linear->is_zero()) n = std::min(n, 1);
  return n == std::numeric_limits<int>::max() ? 0 : n;
}

int PerturbationModel::max_degree_N() const {
  int n = 0;
  for (const auto& t : terms) {
    if (t.series.is_zero()) continue;
    n = std::max(n, kind == Kind::Polynomial ? t.x_power + t.y_power : t.y_power);
  }
  if (linear && !linear->is_zero()) n = std::max(n, 1);
  return n;
}

int PerturbationModel::max_harmonic() const {
  int m = 0;
  for (const auto& t : terms) m = std::max(m, t.series.max_harmonic());
  if (linear) m = std::max(m, linear->max_harmonic());
  return m;
}

bool operator==(const PerturbationModel& a, const PerturbationModel& b) {
  if (a.kind != b.kind || a.terms.size() != b.terms.size()) return false;
  for (std::size_t i = 0; i < a.terms.size(); ++i) {
    const auto& ta = a.terms[i];
    const auto& tb = b.terms[i];
    if (ta.x_power != tb.x_power || ta.y_power != tb.y_power || !(ta.series == tb.series)) return false;
  }
  if (a.linear.has_value() != b.linear.has_value()) return false;
  return !a.linear || *a.linear == *b.linear;
}

bool operator==(const SystemModel& a, const SystemModel& b) {
  return a.name == b.name && a.potential == b.potential && a.perturbation == b.perturbation &&
         a.eta == b.eta && a.mu == b.mu;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::RegularAboveStar: return "RegularAboveStar";
    case Regime::RegularEtaZeroEllBelow2r: return "RegularEtaZeroEllBelow2r";
    case Regime::SingularEllAbove2r: return "SingularEllAbove2r";
    case Regime::SingularEllEquals2r: return "SingularEllEquals2r";
    case Regime::BelowSingularOutOfScope: return "BelowSingularOutOfScope";
  }
  return "unknown";
}

Rational expected_order_r(const Potential& v) {
  if (v.kind == Kind::Trigonometric) return Rational(1);
  int m = v.degree();
  if (m <= 2) throw ValidationError("polynomial potential of degree " + std::to_string(m) +
                                    " has no homoclinic loop");
  return Rational(m, m - 2);
}

std::vector<HypothesisFlag> validate_hypotheses(const SystemModel& model) {
  std::vector<HypothesisFlag> flags;
  const Potential& v = model.potential;
  int bits = default_bits();
  BigReal zero = BigReal::zero(bits);

  // HP1: critical point at the origin, hyperbolic or parabolic
  {
    HypothesisFlag f{"HP1", false, ""};
    BigReal v0 = v.value(zero), v1 = v.derivative(zero, 1);
    auto cc = critical_class(v);
    if (!v0.is_zero() || !v1.is_zero()) {
      f.message = "origin is not a critical point with V(0) = 0 (V(0) = " + v0.to_string(8) +
                  ", V'(0) = " + v1.to_string(8) + ")";
    } else if (!cc) {
      f.message = "origin is neither a hyperbolic nor a parabolic critical point";
    } else if (cc->hyperbolic) {
      f.pass = true;
      f.message = "hyperbolic, lambda = " + cc->lambda.to_string(12);
    } else {
      f.pass = true;
      f.message = "parabolic, m = " + std::to_string(cc->m) + ", v_m = " + cc->v_m.to_string(12);
    }
    flags.push_back(f);
  }

  flags.push_back({"HP2", true, "catalog/derived: separatrix structure established by the separatrix module"});

  // HP3: zero-mean Fourier coefficients
  {
    HypothesisFlag f{"HP3", true, "all Fourier coefficients have zero mean"};
    for (const auto& t : model.perturbation.terms) {
      if (!t.series.mean().is_zero()) {
        f.pass = false;
        f.message = "term x^" + std::to_string(t.x_power) + " y^" + std::to_string(t.y_power) +
                    " has nonzero mean " + t.series.mean().to_string(12);
        break;
      }
    }
    if (f.pass && model.perturbation.linear && !model.perturbation.linear->mean().is_zero()) {
      f.pass = false;
      f.message = "linear term has nonzero mean";
    }
    flags.push_back(f);
  }

  // HP4: order of the perturbation at the origin
  {
    HypothesisFlag f{"HP4", false, ""};
    int n = model.perturbation.order_n();
    auto cc = critical_class(v);
    if (model.perturbation.empty()) {
      f.pass = true;
      f.message = "empty perturbation";
    } else if (!cc || cc->hyperbolic) {
      f.pass = n >= 1;
      f.message = "HP4.1: n = " + std::to_string(n) + (f.pass ? " >= 1" : " < 1");
    } else {
      f.pass = 2 * n - 2 >= cc->m;
      f.message = "HP4.2: 2n-2 = " + std::to_string(2 * n - 2) + (f.pass ? " >= " : " < ") +
                  "m = " + std::to_string(cc->m);
    }
    flags.push_back(f);
  }

  // HP5: eta ≥ eta*
  {
    HypothesisFlag f{"HP5", false, ""};
    try {
      Rational r = expected_order_r(v);
      Rational ell = perturbation_order_ell(model.perturbation, r, v.degree());
      Rational star = max(ell - Rational(2) * r, Rational(0));
      f.pass = model.eta >= star;
      f.message = "eta = " + model.eta.to_string() + (f.pass ? " >= " : " < ") + "eta* = " + star.to_string();
    } catch (const std::exception& e) {
      f.message = e.what();
    }
    flags.push_back(f);
  }
  return flags;
}

Rational perturbation_order_ell(const PerturbationModel& p, const Rational& r, int degree_M) {
  if (p.empty()) throw ValidationError("no perturbation terms");
  std::optional<Rational> ell;
  auto upd = [&](const Rational& v) { ell = ell ? max(*ell, v) : v; };
  if (p.kind == Kind::Polynomial) {
    for (const auto& t : p.terms) {
      if (t.series.is_zero()) continue;
      upd(Rational(t.x_power) * (r - Rational(1)) + Rational(t.y_power) * r);
    }
  } else {
    if (degree_M <= 0) throw ValidationError("trigonometric potential has no harmonics");
    for (const auto& t : p.terms) {
      if (t.series.is_zero()) continue;
      upd(Rational(2 * std::abs(t.x_power), degree_M) + Rational(t.y_power));
    }
    if (p.linear && !p.linear->is_zero()) upd(Rational(0));
  }
  return *ell;
}

RegimeReport classify_regime(const SystemModel& model, const Rational& r) {
  if (model.eta < Rational(0)) throw ValidationError("eta must be >= 0, got " + model.eta.to_string());
  RegimeReport rep;
  rep.r = r;
  rep.ell = perturbation_order_ell(model.perturbation, r, model.potential.degree());
  Rational gap = rep.ell - Rational(2) * r;
  rep.eta_star = max(gap, Rational(0));
  rep.mu_hat_exponent = model.eta - gap;
  rep.hypothesis_flags = validate_hypotheses(model);
  const Rational& eta = model.eta;
  if (eta > rep.eta_star) {
    rep.regime = Regime::RegularAboveStar;
  } else if (gap.sign() < 0) {
    // eta ≤ eta* = 0 and eta ≥ 0 force eta = 0
    rep.regime = Regime::RegularEtaZeroEllBelow2r;
  } else if (eta == gap) {
    rep.regime = gap.sign() > 0 ? Regime::SingularEllAbove2r : Regime::SingularEllEquals2r;
  } else {
    rep.regime = Regime::BelowSingularOutOfScope;
  }
  return rep;
}

BigReal mu_hat(const BigReal& mu, const BigReal& eps, const Rational& eta, const Rational& ell,
               const Rational& r) {
  if (eps.sign() <= 0) throw ValidationError("eps must be > 0");
  Rational e = eta - (ell - Rational(2) * r);
  if (e.sign() == 0) return mu;
  BigReal ex = BigReal(static_cast<double>(e.num()), eps.bits()) / BigReal(static_cast<double>(e.den()), eps.bits());
  return mu * pow(eps, ex);
}

}  // namespace sepsplit
