#include "sepsplit/melnikov.hpp"

#include <cmath>

#include "sepsplit/errors.hpp"
#include "sepsplit/quadrature.hpp"

namespace sepsplit {

namespace {

BigReal rational_real(const Rational& r, int bits) {
  return BigReal(static_cast<double>(r.num()), bits) / BigReal(static_cast<double>(r.den()), bits);
}

// (−iδ)^s, the value of (u − ia)^s at u = i(a − δ).
BigComplex below_power(const BigReal& delta, const BigReal& s) { return i_pow(-s) * pow(delta, s); }

BigComplex x_factor(Kind kind, int k, const BigComplex& q) {
  int bits = q.bits();
  if (kind == Kind::Polynomial) return k == 0 ? BigComplex(BigReal(1.0, bits)) : pow(q, static_cast<long>(k));
  if (k > 0) return cos(q * static_cast<long>(k));
  if (k < 0) return sin(q * static_cast<long>(-k));
  return BigComplex(BigReal(1.0, bits));
}

// H₁^[k] without the linear a(τ)x term.
BigComplex h1_terms(const PerturbationModel& pm, int k, const BigComplex& q, const BigComplex& p) {
  int bits = q.bits();
  BigComplex acc = BigComplex::zero(bits);
  for (const auto& t : pm.terms) {
    BigComplex a = t.series.exp_coeff(k, bits);
    if (a.is_zero()) continue;
    BigComplex term = a * x_factor(pm.kind, t.x_power, q);
    if (t.y_power > 0) term *= pow(p, static_cast<long>(t.y_power));
    acc += term;
  }
  return acc;
}

BigComplex linear_coeff(const PerturbationModel& pm, int k, int bits) {
  if (!pm.linear) return BigComplex::zero(bits);
  return pm.linear->exp_coeff(k, bits);
}

}  // namespace

BigComplex h1_harmonic(const PerturbationModel& p, int k, const BigComplex& q, const BigComplex& pv) {
  BigComplex v = h1_terms(p, k, q, pv);
  BigComplex lin = linear_coeff(p, k, q.bits());
  if (!lin.is_zero()) v += lin * q;
  return v;
}

BigComplex h1_on_separatrix(const SystemModel& model, SeparatrixEvaluator& sep, int k, const BigComplex& u) {
  SeparatrixPoint pt = sep(u);
  return h1_harmonic(model.perturbation, k, pt.q, pt.p);
}

MelnikovCoefficient melnikov_coefficient(const SystemModel& model, SeparatrixEvaluator& sep, int k,
                                         const BigReal& eps_in, int bits, const MelnikovOptions& opt) {
  if (k == 0) throw ValidationError("melnikov_coefficient: k must be nonzero");
  if (eps_in.sign() <= 0) throw ValidationError("melnikov_coefficient: eps must be > 0");
  PrecisionGuard guard(bits);
  BigReal eps = eps_in.with_bits(bits);
  MelnikovCoefficient out;
  out.k = k;
  out.eps = eps;
  out.method = "contour_quadrature";
  out.value = BigComplex::zero(bits);
  out.est_error = BigReal::zero(bits);
  const PerturbationModel& pm = model.perturbation;
  bool any = !linear_coeff(pm, k, bits).is_zero();
  for (const auto& t : pm.terms) any = any || !t.series.exp_coeff(k, bits).is_zero();
  if (!any) {
    out.method = "closed_form";
    return out;
  }

  const SeparatrixInfo& info = sep.info();
  BigReal a = info.a.with_bits(bits);
  long ak = std::labs(k);
  BigReal ln2 = const_ln2(bits);
  // e^{−|k|a/ε} must be representable well above the working precision.
  BigReal decay = a * ak / eps;
  if (decay > ln2 * static_cast<long>(bits - 16))
    throw NumericalError("insufficient precision: e^{-|k|a/eps} = 2^-" + std::to_string(static_cast<long>((decay / ln2).to_double())) +
                         " is below 2^-(bits-16); rerun with more bits (at least " +
                         std::to_string(static_cast<long>((decay / ln2).to_double()) + 48) + ")");

  BigReal v = a - BigReal(opt.shift_c, bits) * eps;
  if (v.sign() < 0) v = BigReal::zero(bits);
  int sg = k > 0 ? 1 : -1;
  BigReal vim = v * static_cast<long>(sg);
  BigReal kr(static_cast<double>(k), bits);
  BigComplex lin = linear_coeff(pm, k, bits);
  // ∫ a^[k] q₀ e^{ikr/ε} dr = −(ε/(ik)) ∫ a^[k] p₀ e^{ikr/ε} dr
  BigComplex lin_p = lin.is_zero() ? lin : lin * BigComplex(BigReal::zero(bits), eps / kr);
  auto integrand = [&](const BigComplex& s) {
    BigComplex r(s.re, s.im + vim);
    SeparatrixPoint pt = sep(r);
    BigComplex h = h1_terms(pm, k, pt.q, pt.p);
    if (!lin_p.is_zero()) h += lin_p * pt.p;
    // e^{iks/ε}; the factor e^{−|k|v/ε} is applied at the end
    BigReal ph = kr * s.re / eps;
    BigReal sn, cs;
    sin_cos(ph, sn, cs);
    BigReal damp = exp(-(kr * s.im / eps));
    return h * BigComplex(cs * damp, sn * damp);
  };

  BigReal lam = info.lambda.is_zero() ? BigReal(1.0, bits) : info.lambda.with_bits(bits);
  BigReal window = max(a * 4L, BigReal(40.0, bits) * eps * (ln2 * static_cast<long>(bits)) / (a * 2L));
  int n = std::max(1, pm.order_n());
  BigReal tail = (ln2 * static_cast<long>(bits + 8)) / (lam * static_cast<long>(n)) + BigReal(2.0, bits);
  BigReal extent = max(window, tail);
  sep.prepare_line(v, extent + BigReal(1.0, bits));

  BigReal peak = BigReal::zero(bits);
  for (int i = -40; i <= 40; ++i) {
    BigReal s = window * BigReal(i / 40.0, bits);
    peak = max(peak, abs(integrand(BigComplex(s, BigReal::zero(bits)))));
  }
  BigReal cutoff = peak * pow2(-bits, bits);
  // Tail end: the integrand stays below 2^{−bits}·peak beyond S.
  BigReal S = extent;
  BigReal step(0.5, bits);
  auto below = [&](const BigReal& s) {
    return abs(integrand(BigComplex(s, BigReal::zero(bits)))) < cutoff &&
           abs(integrand(BigComplex(-s, BigReal::zero(bits)))) < cutoff;
  };
  if (!below(S)) throw NumericalError("Melnikov integrand does not decay along the contour (check HP4)");
  while (S - step > BigReal(0.0) && below(S - step)) S -= step;

  std::vector<BigComplex> path{BigComplex(-S, BigReal::zero(bits)), BigComplex(S, BigReal::zero(bits))};
  QuadOptions qo;
  qo.max_panels = opt.max_panels;
  qo.max_panel_length = const_pi(bits) * eps / ak;
  BigReal tol = opt.tol.is_zero() ? pow2(-(bits - 20), bits) : opt.tol.with_bits(bits);
  QuadResult q = quad_adaptive(integrand, path, tol, bits, qo);
  BigReal scale = exp(-(v * ak / eps));
  out.value = q.value * scale;
  BigReal trunc = cutoff * BigReal(2.0, bits) / (lam * static_cast<long>(n));
  out.est_error = (q.est_error + trunc) * scale;
  out.evaluations = q.evaluations;
  return out;
}

BigReal melnikov_potential(const std::map<int, MelnikovCoefficient>& coeffs, const BigReal& u, const BigReal& tau,
                           const BigReal& eps) {
  int bits = std::max(u.bits(), eps.bits());
  BigComplex acc = BigComplex::zero(bits);
  for (const auto& [k, c] : coeffs) {
    if (k == 0) continue;
    BigReal ph = BigReal(static_cast<double>(k), bits) * (tau - u / eps);
    BigComplex term = c.value * polar(BigReal(1.0, bits), ph);
    if (k > 0 && coeffs.count(-k) == 0) term = term * 2L;
    if (k < 0 && coeffs.count(-k) == 0) term = term * 2L;
    acc += term;
  }
  return acc.re;
}

BigComplex chat_symbolic(const SystemModel& model, const SeparatrixInfo& sep, const Rational& ell, int bits) {
  PrecisionGuard guard(bits);
  const PerturbationModel& pm = model.perturbation;
  BigComplex cp = sep.C_plus.with_bits(bits);
  BigComplex acc = BigComplex::zero(bits);
  if (pm.kind == Kind::Polynomial) {
    Rational r = sep.r;
    BigReal rm1 = rational_real(r - Rational(1), bits);
    BigComplex qlead = -(cp / rm1);
    for (const auto& t : pm.terms) {
      if (Rational(t.x_power) * (r - Rational(1)) + Rational(t.y_power) * r != ell) continue;
      BigComplex a = t.series.exp_coeff(1, bits);
      if (a.is_zero()) continue;
      acc += a * pow(qlead, static_cast<long>(t.x_power)) * pow(cp, static_cast<long>(t.y_power));
    }
    return acc;
  }
  if (ell == Rational(0)) return linear_coeff(pm, 1, bits) * cp;
  if (!sep.trig) throw ValidationError("trigonometric separatrix constants missing");
  int M = sep.trig->M;
  BigComplex iu = BigComplex::i_unit(bits);
  BigComplex ep = sep.trig->C1.with_bits(bits) + iu * sep.trig->C2.with_bits(bits);
  BigComplex em = sep.trig->C1.with_bits(bits) - iu * sep.trig->C2.with_bits(bits);
  for (const auto& t : pm.terms) {
    if (Rational(2 * std::abs(t.x_power), M) + Rational(t.y_power) != ell) continue;
    BigComplex a = t.series.exp_coeff(1, bits);
    if (a.is_zero()) continue;
    long kk = std::abs(t.x_power);
    BigComplex lead(BigReal(1.0, bits));
    if (t.x_power > 0) lead = (pow(ep, kk) + pow(em, kk)) / 2L;
    if (t.x_power < 0) lead = (pow(ep, kk) - pow(em, kk)) / (iu * 2L);
    acc += a * lead * pow(cp, static_cast<long>(t.y_power));
  }
  return acc;
}

BigComplex chat_numeric(const SystemModel& model, SeparatrixEvaluator& sep, const Rational& ell, int bits) {
  PrecisionGuard guard(bits);
  const SeparatrixInfo& info = sep.info();
  BigReal a = info.a.with_bits(bits);
  BigReal l = rational_real(ell, bits);
  const PerturbationModel& pm = model.perturbation;
  bool log_case = ell == Rational(0);
  // corrections behave like δ^{1/q} (polynomial) or δ^{2/M} (trigonometric)
  BigReal texp = pm.kind == Kind::Polynomial
                     ? BigReal(1.0, bits) / static_cast<long>(info.r.den())
                     : BigReal(2.0, bits) / static_cast<long>(std::max(1, info.degree_M));
  std::vector<BigReal> ts;
  std::vector<BigComplex> vals;
  BigReal delta(0.2, bits);
  for (int j = 0; j < 10; ++j) {
    BigComplex u(BigReal::zero(bits), a - delta);
    SeparatrixPoint pt = sep(u);
    BigComplex h = log_case ? linear_coeff(pm, 1, bits) * pt.p * below_power(delta, BigReal(1.0, bits))
                            : h1_terms(pm, 1, pt.q, pt.p) * below_power(delta, l);
    ts.push_back(pow(delta, texp));
    vals.push_back(h);
    delta *= BigReal(0.6, bits);
  }
  return extrapolate_to_zero(ts, vals);
}

BigComplex f0_from_chat(const BigComplex& chat, const Rational& ell) {
  int bits = chat.bits();
  BigReal two_pi = const_pi(bits) * 2L;
  if (ell == Rational(0)) return chat * two_pi;
  BigReal l = rational_real(ell, bits);
  return -(i_pow(l) * chat * (two_pi / gamma(l)));
}

void constant_Chat_and_f0(const SystemModel& model, SeparatrixEvaluator& sep, int bits, AsymptoticConstants& out) {
  const SeparatrixInfo& info = sep.info();
  out.ell = perturbation_order_ell(model.perturbation, info.r, model.potential.degree());
  out.C_hat = chat_symbolic(model, info, out.ell, bits);
  out.C_hat_numeric = chat_numeric(model, sep, out.ell, bits);
  // Compare against the size of the individual contributions so that a
  // cancelling (degenerate) Ĉ is not held to a relative test.
  BigReal scale = max(abs(out.C_hat), BigReal(1e-30, bits));
  for (const auto& t : model.perturbation.terms) {
    BigComplex a = t.series.exp_coeff(1, bits);
    if (!a.is_zero()) scale = max(scale, abs(a) * abs(pow(info.C_plus.with_bits(bits), 2L)) * BigReal(1e-3, bits));
  }
  BigReal gap = abs(out.C_hat - out.C_hat_numeric) / scale;
  if (gap > BigReal(1e-6, bits))
    throw NumericalError("symbolic and numeric C-hat disagree (relative gap " + gap.to_string(3) + ")");
  out.f0 = f0_from_chat(out.C_hat, out.ell);
}

namespace {

BigReal binomial(int n, int k, int bits) {
  BigReal r(1.0, bits);
  for (int i = 1; i <= k; ++i) r = r * static_cast<long>(n - k + i) / static_cast<long>(i);
  return r;
}

}  // namespace

InnerFunctions functions_AQF(const SystemModel& model, const SeparatrixInfo& sep, const Rational& ell, int bits) {
  if (model.perturbation.kind != Kind::Polynomial || model.potential.kind != Kind::Polynomial)
    throw ValidationError("trig inner constants unsupported");
  PrecisionGuard guard(bits);
  const Rational& r = sep.r;
  int N = std::max(0, model.perturbation.max_degree_N());
  InnerFunctions f;
  f.A.assign(N + 1, HarmonicSeries());
  BigComplex cp = sep.C_plus.with_bits(bits);
  BigReal one_minus_r = rational_real(Rational(1) - r, bits);
  for (const auto& t : model.perturbation.terms) {
    if (t.series.is_zero()) continue;
    if (Rational(t.x_power) * (r - Rational(1)) + Rational(t.y_power) * r != ell) continue;
    // C₊^{k+l−2} / (1 − r)^k
    long e = t.x_power + t.y_power - 2;
    BigComplex coef = e >= 0 ? pow(cp, e) : BigComplex(BigReal(1.0, bits)) / pow(cp, -e);
    coef = coef / pow(one_minus_r, static_cast<long>(t.x_power));
    f.A[t.y_power] = f.A[t.y_power] + HarmonicSeries::from_real(t.series, bits) * coef;
  }
  f.Q.assign(N + 1, HarmonicSeries());
  f.F.assign(N + 1, HarmonicSeries());
  for (int j = 0; j <= N; ++j) {
    for (int k = j; k <= N; ++k) f.Q[j] = f.Q[j] + f.A[k] * BigComplex(binomial(k, j, bits));
    f.F[j] = f.Q[j].antiderivative();
  }
  return f;
}

BigComplex constant_b(const InnerFunctions& f, const Rational& r, int bits) {
  auto get = [&](const std::vector<HarmonicSeries>& v, std::size_t j) {
    return j < v.size() ? v[j] : HarmonicSeries();
  };
  BigComplex avg = average_product(get(f.Q, 0), get(f.F, 1), bits) +
                   average_product(get(f.F, 0), get(f.Q, 2), bits) * 2L;
  return avg * (rational_real(r, bits) * 2L);
}

AsymptoticConstants compute_constants(const SystemModel& model, SeparatrixEvaluator& sep, int bits) {
  AsymptoticConstants c;
  constant_Chat_and_f0(model, sep, bits, c);
  c.b = BigComplex::zero(bits);
  if (model.perturbation.kind == Kind::Polynomial && model.potential.kind == Kind::Polynomial) {
    InnerFunctions f = functions_AQF(model, sep.info(), c.ell, bits);
    c.A = f.A;
    c.Q = f.Q;
    c.F = f.F;
    c.b = constant_b(f, sep.info().r, bits);
    c.inner_available = true;
  }
  return c;
}

LobeAreaPrediction predict_area(const SystemModel& model, const SeparatrixInfo& sep, const AsymptoticConstants& c,
                                const BigReal& eps_in, FSource f_source, const std::optional<BigComplex>& f_mu) {
  int bits = std::max(eps_in.bits(), c.f0.bits());
  PrecisionGuard guard(bits);
  BigReal eps = eps_in.with_bits(bits);
  if (eps.sign() <= 0) throw ValidationError("predict_area: eps must be > 0");
  RegimeReport rep = classify_regime(model, sep.r);
  LobeAreaPrediction out;
  out.eps = eps;
  out.regime = rep.regime;
  out.f_source = f_source;
  Rational gap = rep.ell - Rational(2) * sep.r;
  BigReal a = sep.a.with_bits(bits);
  BigReal mu = abs(model.mu.with_bits(bits));
  bool y_dep = model.perturbation.depends_on_y();
  BigReal power;
  BigReal fabs = abs(c.f0);
  BigReal extra = BigReal::zero(bits);
  switch (rep.regime) {
    case Regime::RegularAboveStar:
      out.formula_id = "regular_above_star";
      power = rational_real(model.eta + Rational(1) - rep.ell, bits);
      out.nu = gap.sign() <= 0 ? Rational(1) : gap;
      break;
    case Regime::RegularEtaZeroEllBelow2r:
      out.formula_id = "regular_eta0";
      power = rational_real(Rational(1) - rep.ell, bits);
      out.nu = Rational(1);
      out.unknown_phase_C = y_dep;
      break;
    case Regime::SingularEllAbove2r:
    case Regime::SingularEllEquals2r: {
      bool eq = rep.regime == Regime::SingularEllEquals2r;
      out.formula_id = eq ? "singular_ell_eq_2r" : "singular_ell_gt_2r";
      power = rational_real(Rational(1) - Rational(2) * sep.r, bits);
      out.nu = eq ? Rational(1) : gap;
      if (f_source == FSource::InnerFMu) {
        if (!f_mu) throw ValidationError("predict_area: f(mu) required for the inner f source");
        fabs = abs(f_mu->with_bits(bits));
      } else {
        out.f0_substituted = true;
        out.caveats.push_back("f0 used in place of f(mu) (valid as mu -> 0)");
      }
      if (eq) {
        if (y_dep && !c.inner_available) throw ValidationError("trig inner constants unsupported");
        out.unknown_phase_C = y_dep;
        extra = model.mu.with_bits(bits) * model.mu.with_bits(bits) * c.b.im * log(BigReal(1.0, bits) / eps);
      }
      break;
    }
    case Regime::BelowSingularOutOfScope:
      throw ValidationError("regime below the singular case (eta < ell - 2r) is out of scope");
  }
  out.error_form = "1/|ln eps|^nu";
  if (out.unknown_phase_C) out.caveats.push_back("unknown phase C(mu) taken as |e^{iC}| = 1");
  out.area = BigReal(4.0, bits) * mu * pow(eps, power) * exp(extra - a / eps) * fabs;
  return out;
}

}  // namespace sepsplit
