#include "sepsplit/separatrix.hpp"

#include <algorithm>
#include <cmath>

#include "sepsplit/errors.hpp"
#include "sepsplit/lsq.hpp"
#include "sepsplit/quadrature.hpp"

namespace sepsplit {

namespace {

bool only_coefficients(const std::map<int, BigReal>& m, const std::map<int, double>& want) {
  std::size_t nonzero = 0;
  for (const auto& [k, v] : m) {
    if (v.is_zero()) continue;
    ++nonzero;
    auto it = want.find(k);
    if (it == want.end() || v != BigReal(it->second, v.bits())) return false;
  }
  return nonzero == want.size();
}

bool is_zero_map(const std::map<int, BigReal>& m) {
  for (const auto& [k, v] : m)
    if (!v.is_zero()) return false;
  return true;
}

BigReal rational_real(const Rational& r, int bits) {
  return BigReal(static_cast<double>(r.num()), bits) / BigReal(static_cast<double>(r.den()), bits);
}

// (−iδ)^s for δ > 0, i.e. (u − ia)^s at u = i(a − δ) with arg(u − ia) = −π/2.
BigComplex below_power(const BigReal& delta, const BigReal& s) {
  return i_pow(-s) * pow(delta, s);
}

}  // namespace

std::optional<SeparatrixInfo> catalog_lookup(const Potential& v, int bits) {
  SeparatrixInfo info;
  info.source = SeparatrixSource::Catalog;
  info.a = const_pi(bits) / 2L;
  info.lambda = BigReal(1.0, bits);
  if (v.kind == Kind::Polynomial && only_coefficients(v.coefficients, {{2, -0.5}, {4, 0.25}})) {
    info.catalog_name = "duffing";
    info.r = Rational(2);
    info.C_plus = BigComplex(BigReal::zero(bits), sqrt(BigReal(2.0, bits)));
    info.apex_x = sqrt(BigReal(2.0, bits));
    info.apex_p = BigReal::zero(bits);
    info.degree_M = 4;
    return info;
  }
  if (v.kind == Kind::Trigonometric && is_zero_map(v.sin_coefficients) &&
      only_coefficients(v.coefficients, {{0, -1.0}, {1, 1.0}})) {
    info.catalog_name = "pendulum";
    info.r = Rational(1);
    info.C_plus = BigComplex(BigReal::zero(bits), BigReal(-2.0, bits));
    info.trig = TrigLocalConstants{BigComplex(BigReal(2.0, bits), BigReal::zero(bits)),
                                   BigComplex(BigReal::zero(bits), BigReal(2.0, bits)), 1};
    info.apex_x = const_pi(bits);
    info.apex_p = BigReal(2.0, bits);
    info.degree_M = 1;
    return info;
  }
  return std::nullopt;
}

std::optional<SeparatrixPoint> catalog_evaluate(const SeparatrixInfo& info, const BigComplex& u) {
  if (info.source != SeparatrixSource::Catalog) return std::nullopt;
  int bits = u.bits();
  if (info.catalog_name == "duffing") {
    BigReal s2 = sqrt(BigReal(2.0, bits));
    BigComplex ch = cosh(u), sh = sinh(u);
    BigComplex q = BigComplex(s2) / ch;
    return SeparatrixPoint{q, -(q * sh) / ch};
  }
  if (info.catalog_name == "pendulum") {
    return SeparatrixPoint{atan(exp(u)) * 4L, BigComplex(BigReal(2.0, bits)) / cosh(u)};
  }
  return std::nullopt;
}

void find_apex(const Potential& v, int bits, BigReal& x, BigReal& p) {
  PrecisionGuard guard(bits);
  if (v.kind == Kind::Polynomial) {
    // First sign change of V on either side of the origin.
    for (int side : {1, -1}) {
      double lo = 0.0, hi = 0.0;
      bool found = false;
      double prev = 1e-3;
      if (v.value(BigReal(side * prev, 64)).to_double() >= 0) continue;
      for (double t = prev * 1.01; t < 1e4; t *= 1.01) {
        if (v.value(BigReal(side * t, 64)).to_double() >= 0) {
          lo = prev;
          hi = t;
          found = true;
          break;
        }
        prev = t;
      }
      if (!found) continue;
      BigReal a(side * lo, bits), b(side * hi, bits);
      BigReal fa = v.value(a);
      for (int it = 0; it < bits + 8; ++it) {
        BigReal m = (a + b) / 2L;
        BigReal fm = v.value(m);
        if (fm.is_zero()) {
          a = b = m;
          break;
        }
        if ((fm.sign() < 0) == (fa.sign() < 0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      x = (a + b) / 2L;
      if (v.derivative(x, 1).is_zero()) throw NumericalError("apex is a degenerate zero of V");
      p = BigReal::zero(bits);
      return;
    }
    throw NumericalError("no real apex found: V has no homoclinic loop at energy 0");
  }
  // Trigonometric: point of maximal speed on (0, 2π), where V is smallest.
  const int n = 4096;
  double two_pi = 2 * M_PI;
  double best = 0.0, bestx = 0.0;
  for (int i = 1; i < n; ++i) {
    double t = two_pi * i / n;
    double val = v.value(BigReal(t, 64)).to_double();
    if (val >= 0) throw NumericalError("no homoclinic loop: V >= 0 inside (0, 2pi)");
    if (val < best) {
      best = val;
      bestx = t;
    }
  }
  x = BigReal(bestx, bits);
  for (int it = 0; it < 200; ++it) {
    BigReal dx = v.derivative(x, 1) / v.derivative(x, 2);
    x -= dx;
    if (dx.is_zero() || abs(dx) < pow2(-(bits - 4), bits)) break;
  }
  BigReal vx = v.value(x);
  if (vx.sign() >= 0) throw NumericalError("no homoclinic loop: V(x*) >= 0");
  p = sqrt(-2L * vx);
}

ApexSeries taylor_at_apex(const Potential& v, int order, int bits) {
  if (order < 2) throw ValidationError("taylor_at_apex: order must be >= 2");
  BigReal x, p;
  find_apex(v, bits, x, p);
  PrecisionGuard guard(bits);
  JetEngine<BigReal> engine(make_unperturbed_field(v), order, bits, 0, false);
  engine.compute({x, p}, BigReal::zero(bits));
  return {PowerSeries<BigReal>(engine.coeffs(0)), PowerSeries<BigReal>(engine.coeffs(1))};
}

SingularityFit locate_singularity(const PowerSeries<BigReal>& series, int derivative) {
  int mmax = series.order() / 2;
  if (mmax < 16) throw ValidationError("locate_singularity: series too short");
  int mlo = std::max(4, mmax / 2);
  std::vector<std::vector<double>> rows;
  std::vector<double> obs;
  int sign0 = 0;
  for (int m = mlo; m <= mmax; ++m) {
    const BigReal& c = series[2 * m];
    if (c.is_zero()) throw NumericalError("dominant singularity not purely imaginary (zero tail coefficient)");
    int s = c.sign() * ((m % 2) ? -1 : 1);
    if (sign0 == 0) sign0 = s;
    if (s != sign0) throw NumericalError("dominant singularity not purely imaginary");
    double mm = m;
    rows.push_back({1.0, std::log(mm), mm, 1.0 / mm});
    obs.push_back(log(abs(c)).to_double());
  }
  // Successive ratios must settle monotonically when ±ia dominate.
  double prev = 0.0;
  int turns = 0, dir = 0;
  for (std::size_t i = 1; i < obs.size(); ++i) {
    double d = obs[i] - obs[i - 1];
    if (i > 1) {
      // Changes at double roundoff level (an exactly geometric tail) carry no sign.
      double noise = 1e-10 * std::abs(d);
      int nd = d > prev + noise ? 1 : (d < prev - noise ? -1 : 0);
      if (nd != 0 && dir != 0 && nd != dir) ++turns;
      if (nd != 0) dir = nd;
    }
    prev = d;
  }
  if (turns > static_cast<int>(obs.size()) / 4) throw NumericalError("dominant singularity not purely imaginary");

  LsqResult fit = fit_linear_lsq(rows, obs, {"const", "log m", "m", "1/m"});
  SingularityFit out;
  int bits = series[0].bits();
  out.a = exp(BigReal(-fit.coeffs[2] / 2.0, bits));
  out.r_estimate = fit.coeffs[1] + 2.0 - derivative;
  out.rms_residual = std::sqrt(fit.rss / static_cast<double>(obs.size()));
  auto snapped = Rational::snap(out.r_estimate, 8, 1e-2);
  if (!snapped) throw NumericalError("singularity order r = " + std::to_string(out.r_estimate) +
                                     " is not close to a rational with denominator <= 8");
  out.r = *snapped;
  return out;
}

BigReal cplus_from_balance(const Potential& v, const Rational& r, int bits) {
  if (v.kind != Kind::Polynomial) return BigReal(2.0, bits) / static_cast<long>(v.degree());
  BigReal rr = rational_real(r, bits);
  BigReal one(1.0, bits);
  BigReal vinf = abs(v_infinity(v).with_bits(bits));
  if (vinf.is_zero()) throw ValidationError("potential has no leading coefficient");
  BigReal M = 2L * rr / (rr - one);
  BigReal e = (rr + one) / (rr - one);
  // |C|^{2/(r−1)} = r (r−1)^{(r+1)/(r−1)} / (|v∞| M)
  BigReal rhs = rr * pow(rr - one, e) / (vinf * M);
  return pow(rhs, (rr - one) / 2L);
}

BigComplex coefficient_Cplus(const Potential& v, const SeparatrixInfo& partial, int bits, double* agreement) {
  int work = bits + 32;
  PrecisionGuard guard(work);
  ComplexFlow flow(v, work, pow2(-(work - 8), work));
  BigReal a = partial.a.with_bits(work);
  BigReal rr = rational_real(partial.r, work);
  BigReal t_exp = BigReal(1.0, work) / static_cast<long>(partial.r.den());
  auto cap = [&](const BigComplex& u) { return (a - abs(u.im)) / 4L; };

  BigReal x0, p0;
  find_apex(v, work, x0, p0);
  BigComplex q(x0), p(p0);
  BigComplex u = BigComplex::zero(work);
  std::vector<BigReal> ts;
  std::vector<BigComplex> vals;
  BigReal delta(0.25, work);
  for (int k = 0; k < 10; ++k) {
    BigComplex target(BigReal::zero(work), a - delta);
    flow.integrate(q, p, u, target, cap);
    u = target;
    ts.push_back(pow(delta, t_exp));
    vals.push_back(below_power(delta, rr) * p);
    delta *= BigReal(0.6, work);
  }
  BigComplex cont = extrapolate_to_zero(ts, vals);
  BigReal mag = cplus_from_balance(v, partial.r, work);
  BigReal gap = abs(abs(cont) - mag) / mag;
  if (agreement) *agreement = gap.to_double();
  if (gap > BigReal(1e-6, work))
    throw NumericalError("C+ from continuation (|C+| = " + abs(cont).to_string(12) +
                         ") disagrees with the dominant balance (" + mag.to_string(12) + ")");
  return (cont * (mag / abs(cont))).with_bits(bits);
}

namespace {

TrigLocalConstants trig_constants(const Potential& v, const SeparatrixInfo& partial, int bits) {
  int work = bits + 32;
  PrecisionGuard guard(work);
  ComplexFlow flow(v, work, pow2(-(work - 8), work));
  BigReal a = partial.a.with_bits(work);
  int M = v.degree();
  BigReal s = BigReal(2.0, work) / static_cast<long>(M);
  auto cap = [&](const BigComplex& u) { return (a - abs(u.im)) / 4L; };
  BigReal x0, p0;
  find_apex(v, work, x0, p0);
  BigComplex q(x0), p(p0);
  BigComplex u = BigComplex::zero(work);
  std::vector<BigReal> ts;
  std::vector<BigComplex> c1, c2;
  BigReal delta(0.25, work);
  for (int k = 0; k < 10; ++k) {
    BigComplex target(BigReal::zero(work), a - delta);
    flow.integrate(q, p, u, target, cap);
    u = target;
    BigComplex w = below_power(delta, s);
    ts.push_back(pow(delta, s));
    c1.push_back(w * cos(q));
    c2.push_back(w * sin(q));
    delta *= BigReal(0.6, work);
  }
  return {extrapolate_to_zero(ts, c1).with_bits(bits), extrapolate_to_zero(ts, c2).with_bits(bits), M};
}

}  // namespace

SeparatrixInfo analyze_separatrix(const Potential& v, int bits, const AnalyzeOptions& opt) {
  if (opt.use_catalog) {
    if (auto c = catalog_lookup(v, bits)) return *c;
  }
  PrecisionGuard guard(bits);
  auto cc = critical_class(v);
  if (!cc || !cc->hyperbolic)
    throw ValidationError("numeric separatrix analysis needs a hyperbolic origin; parabolic systems are catalog-only");
  SeparatrixInfo info;
  info.source = SeparatrixSource::Numeric;
  info.lambda = cc->lambda.with_bits(bits);
  info.degree_M = v.degree();
  ApexSeries series = taylor_at_apex(v, opt.series_order, bits);
  info.apex_x = series.q[0];
  info.apex_p = series.p[0];
  bool trig = v.kind == Kind::Trigonometric;
  SingularityFit fit = trig ? locate_singularity(series.p, 1) : locate_singularity(series.q, 0);
  info.a = fit.a;
  info.r = fit.r;
  Rational expected = expected_order_r(v);
  if (info.r != expected)
    throw NumericalError("singularity order r = " + info.r.to_string() + " inconsistent with the degree relation (r = " +
                         expected.to_string() + ")");
  info.C_plus = coefficient_Cplus(v, info, bits, &info.cplus_agreement);
  if (trig) info.trig = trig_constants(v, info, bits);
  return info;
}

// ---------------------------------------------------------------------------

SeparatrixEvaluator::SeparatrixEvaluator(const Potential& v, SeparatrixInfo info, int bits, double delta_min)
    : v_(v), info_(std::move(info)), bits_(bits), delta_min_(delta_min) {
  if (v_.kind == Kind::Polynomial) {
    even_ = true;
  } else {
    even_ = is_zero_map(v_.sin_coefficients) && abs(info_.apex_x - const_pi(bits)) < pow2(-(bits - 8), bits);
  }
}

void SeparatrixEvaluator::base_point(int work, BigComplex& q, BigComplex& p) const {
  // The stored base point is only accurate to the info precision.
  BigReal x, y;
  find_apex(v_, work, x, y);
  q = BigComplex(x);
  p = BigComplex(y);
}

int SeparatrixEvaluator::guard_bits(const BigReal& extent) const {
  double lam = info_.lambda.is_zero() ? 1.0 : info_.lambda.to_double();
  return static_cast<int>(std::ceil(lam * extent.to_double() / std::log(2.0))) + 16;
}

const SeparatrixEvaluator::Track& SeparatrixEvaluator::real_track(int dir, const BigReal& extent) {
  for (const auto& t : tracks_)
    if (t.im.is_zero() && t.dir == dir && t.extent >= extent) return t;
  BigReal want = max(extent * BigReal(1.5), BigReal(4.0));
  int work = bits_ + guard_bits(want);
  ComplexFlow flow(v_, work, pow2(-(work - 8), work));
  Track t;
  t.im = BigReal::zero(bits_);
  t.dir = dir;
  t.extent = want;
  BigComplex q, p;
  base_point(work, q, p);
  BigComplex end(BigReal(static_cast<double>(dir), work) * want, BigReal::zero(work));
  auto cap = [](const BigComplex&) { return BigReal(1.0); };
  flow.integrate(q, p, BigComplex::zero(work), end, cap, &t.patches);
  tracks_.push_back(std::move(t));
  return tracks_.back();
}

bool SeparatrixEvaluator::eval_on_track(const Track& t, const BigComplex& u, SeparatrixPoint& out) const {
  if (t.patches.empty()) return false;
  BigReal s = u.re * static_cast<long>(t.dir);
  if (s.sign() < 0 || s > t.extent) return false;
  // last patch whose center is not beyond u along the track
  std::size_t lo = 0, hi = t.patches.size();
  while (hi - lo > 1) {
    std::size_t mid = (lo + hi) / 2;
    if (t.patches[mid].center.re * static_cast<long>(t.dir) <= s) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const TaylorPatch& patch = t.patches[lo];
  patch.evaluate(u, out.q, out.p);
  out.q.set_bits(bits_);
  out.p.set_bits(bits_);
  return true;
}

SeparatrixPoint SeparatrixEvaluator::continue_vertically(const BigComplex& u) {
  BigReal a = info_.a.with_bits(bits_);
  if (abs(u.im) > a - BigReal(delta_min_, bits_))
    throw NumericalError("evaluation point u = (" + u.re.to_string(10) + ", " + u.im.to_string(10) +
                         ") is too close to the singularity line");
  int dir = u.re.sign() < 0 ? -1 : 1;
  const Track& rt = real_track(dir, abs(u.re));
  SeparatrixPoint base;
  BigComplex ur(u.re, BigReal::zero(bits_));
  eval_on_track(rt, ur, base);
  if (u.im.is_zero()) return base;
  int work = bits_ + 16;
  ComplexFlow flow(v_, work, pow2(-(work - 8), work));
  auto cap = [&](const BigComplex& w) { return (a - abs(w.im)) / 4L; };
  BigComplex q = base.q.with_bits(work), p = base.p.with_bits(work);
  flow.integrate(q, p, ur, u, cap);
  return {q.with_bits(bits_), p.with_bits(bits_)};
}

SeparatrixPoint SeparatrixEvaluator::reflect(const SeparatrixPoint& w) const {
  // value at −conj(u) from the value at u
  if (v_.kind == Kind::Polynomial) return {conj(w.q), -conj(w.p)};
  BigComplex two_x(info_.apex_x.with_bits(bits_) * 2L);
  return {two_x - conj(w.q), conj(w.p)};
}

SeparatrixPoint SeparatrixEvaluator::operator()(const BigComplex& u0) {
  BigComplex u = u0.with_bits(bits_);
  if (closed_form()) return *catalog_evaluate(info_, u);
  if (u.im.sign() < 0) {
    SeparatrixPoint w = (*this)(conj(u));
    return {conj(w.q), conj(w.p)};
  }
  if (even_ && u.re.sign() < 0) return reflect((*this)(BigComplex(-u.re, u.im)));
  int dir = u.re.sign() < 0 ? -1 : 1;
  SeparatrixPoint out;
  for (const auto& t : tracks_) {
    if (t.dir != dir || t.im != u.im) continue;
    if (eval_on_track(t, u, out)) return out;
  }
  return continue_vertically(u);
}

void SeparatrixEvaluator::prepare_line(const BigReal& v0, const BigReal& extent) {
  if (closed_form()) return;
  BigReal v = abs(v0.with_bits(bits_));
  int work = bits_ + guard_bits(extent);
  BigReal a = info_.a.with_bits(work);
  if (v > a - BigReal(delta_min_, work)) throw NumericalError("prepare_line: line too close to the singularity");
  ComplexFlow vflow(v_, work, pow2(-(work - 8), work));
  BigComplex q, p;
  base_point(work, q, p);
  BigComplex start(BigReal::zero(work), v.with_bits(work));
  auto vcap = [&](const BigComplex& w) { return (a - abs(w.im)) / 4L; };
  vflow.integrate(q, p, BigComplex::zero(work), start, vcap);
  std::vector<int> dirs = even_ ? std::vector<int>{1} : std::vector<int>{1, -1};
  for (int dir : dirs) {
    Track t;
    t.im = v;
    t.dir = dir;
    t.extent = extent.with_bits(bits_);
    BigComplex qq = q, pp = p;
    BigComplex end(BigReal(static_cast<double>(dir), work) * extent.with_bits(work), v.with_bits(work));
    auto hcap = [&](const BigComplex&) { return BigReal(1.0); };
    vflow.integrate(qq, pp, start, end, hcap, &t.patches);
    tracks_.erase(std::remove_if(tracks_.begin(), tracks_.end(),
                                 [&](const Track& o) { return o.dir == dir && o.im == v; }),
                  tracks_.end());
    tracks_.push_back(std::move(t));
  }
}

SeparatrixPoint evaluate_complex(const Potential& v, const SeparatrixInfo& info, const BigComplex& u, int bits) {
  SeparatrixEvaluator ev(v, info, bits);
  return ev(u);
}

}  // namespace sepsplit
