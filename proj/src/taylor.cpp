#include "sepsplit/taylor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>
#include <type_traits>

#include "sepsplit/errors.hpp"

namespace sepsplit {

namespace {

constexpr mpfr_rnd_t R = MPFR_RNDN;

Field simplify(const Field& f) {
  std::map<std::tuple<int, int, int, int>, BigReal> acc;
  for (const auto& t : f) {
    auto key = std::make_tuple(t.series, static_cast<int>(t.xf), t.k, t.l);
    auto it = acc.find(key);
    if (it == acc.end()) {
      acc.emplace(key, t.coeff);
    } else {
      it->second += t.coeff;
    }
  }
  Field out;
  for (const auto& [key, c] : acc) {
    if (c.is_zero()) continue;
    FieldTerm t;
    t.coeff = c;
    t.series = std::get<0>(key);
    t.xf = static_cast<XFactor>(std::get<1>(key));
    t.k = std::get<2>(key);
    t.l = std::get<3>(key);
    out.push_back(t);
  }
  return out;
}

Field d_dx(const Field& f) {
  Field out;
  for (const auto& t : f) {
    FieldTerm d = t;
    switch (t.xf) {
      case XFactor::Power:
        if (t.k == 0) continue;
        d.coeff = t.coeff * static_cast<long>(t.k);
        d.k = t.k - 1;
        break;
      case XFactor::Cos:
        d.coeff = -(t.coeff * static_cast<long>(t.k));
        d.xf = XFactor::Sin;
        break;
      case XFactor::Sin:
        d.coeff = t.coeff * static_cast<long>(t.k);
        d.xf = XFactor::Cos;
        break;
    }
    out.push_back(d);
  }
  return simplify(out);
}

Field d_dy(const Field& f) {
  Field out;
  for (const auto& t : f) {
    if (t.l == 0) continue;
    FieldTerm d = t;
    d.coeff = t.coeff * static_cast<long>(t.l);
    d.l = t.l - 1;
    out.push_back(d);
  }
  return simplify(out);
}

void finish_spec(VectorFieldSpec& s) {
  s.H = simplify(s.H);
  s.Hx = d_dx(s.H);
  s.Hy = d_dy(s.H);
  s.Hxx = d_dx(s.Hx);
  s.Hxy = d_dy(s.Hx);
  s.Hyy = d_dy(s.Hy);
}

void add_potential(Field& h, const Potential& v) {
  for (const auto& [d, c] : v.coefficients) {
    if (c.is_zero()) continue;
    FieldTerm t;
    t.coeff = c;
    if (v.kind == Kind::Polynomial || d == 0) {
      t.xf = XFactor::Power;
      t.k = v.kind == Kind::Polynomial ? d : 0;
    } else {
      t.xf = XFactor::Cos;
      t.k = d;
    }
    h.push_back(t);
  }
  for (const auto& [j, c] : v.sin_coefficients) {
    if (c.is_zero()) continue;
    FieldTerm t;
    t.coeff = c;
    t.xf = XFactor::Sin;
    t.k = j;
    h.push_back(t);
  }
  FieldTerm kin;
  kin.coeff = BigReal(0.5);
  kin.l = 2;
  h.push_back(kin);
}

double log2_abs(const BigReal& x) {
  if (x.is_zero()) return -std::numeric_limits<double>::infinity();
  long e = 0;
  double d = mpfr_get_d_2exp(&e, x.raw(), R);
  return static_cast<double>(e) + std::log2(std::fabs(d));
}

double log2_abs(const BigComplex& z) { return std::max(log2_abs(z.re), log2_abs(z.im)); }

// out = Σ_{j=0}^{n} a[j] b[n−j]
void conv(BigReal& out, const std::vector<BigReal>& a, const std::vector<BigReal>& b, int n, BigReal& t) {
  mpfr_mul(out.raw(), a[0].raw(), b[n].raw(), R);
  for (int j = 1; j <= n; ++j) {
    mpfr_mul(t.raw(), a[j].raw(), b[n - j].raw(), R);
    mpfr_add(out.raw(), out.raw(), t.raw(), R);
  }
}

void conv(BigComplex& out, const std::vector<BigComplex>& a, const std::vector<BigComplex>& b, int n,
          BigReal& t) {
  mul_into(out, a[0], b[n], t);
  for (int j = 1; j <= n; ++j) mul_add(out, a[j], b[n - j], t);
}

// acc += c · v
void axpy(BigReal& acc, const BigReal& c, const BigReal& v, BigReal& t) { mul_add(acc, c, v, t); }

void axpy(BigComplex& acc, const BigReal& c, const BigComplex& v, BigReal& t) {
  mpfr_mul(t.raw(), c.raw(), v.re.raw(), R);
  mpfr_add(acc.re.raw(), acc.re.raw(), t.raw(), R);
  mpfr_mul(t.raw(), c.raw(), v.im.raw(), R);
  mpfr_add(acc.im.raw(), acc.im.raw(), t.raw(), R);
}

void set_zero(BigReal& x) { mpfr_set_zero(x.raw(), 1); }
void set_zero(BigComplex& z) {
  mpfr_set_zero(z.re.raw(), 1);
  mpfr_set_zero(z.im.raw(), 1);
}

void scale_si(BigReal& x, long num, long den) {
  if (num != 1) mpfr_mul_si(x.raw(), x.raw(), num, R);
  if (den != 1) mpfr_div_si(x.raw(), x.raw(), den, R);
}
void scale_si(BigComplex& z, long num, long den) {
  scale_si(z.re, num, den);
  scale_si(z.im, num, den);
}

void set_cos_sin(BigReal& c, BigReal& s, const BigReal& x) { mpfr_sin_cos(s.raw(), c.raw(), x.raw(), R); }
void set_cos_sin(BigComplex& c, BigComplex& s, const BigComplex& x) {
  c = cos(x);
  s = sin(x);
}

template <class T>
T make_zero(int bits) {
  if constexpr (std::is_same_v<T, BigReal>) {
    return BigReal::zero(bits);
  } else {
    return BigComplex::zero(bits);
  }
}

}  // namespace

VectorFieldSpec make_unperturbed_field(const Potential& v) {
  VectorFieldSpec s;
  s.omega = BigReal(0.0);
  add_potential(s.H, v);
  finish_spec(s);
  return s;
}

VectorFieldSpec make_field(const SystemModel& m, const BigReal& eps) {
  if (eps.sign() <= 0) throw ValidationError("eps must be > 0");
  VectorFieldSpec s;
  s.omega = BigReal(1.0, eps.bits()) / eps;
  add_potential(s.H, m.potential);
  BigReal scale = m.mu;
  if (m.eta.num() != 0) {
    BigReal ex = BigReal(static_cast<double>(m.eta.num()), eps.bits()) /
                 BigReal(static_cast<double>(m.eta.den()), eps.bits());
    scale = m.mu * pow(eps, ex);
  }
  if (!scale.is_zero()) {
    const auto& p = m.perturbation;
    for (const auto& term : p.terms) {
      if (term.series.is_zero()) continue;
      FieldTerm t;
      t.coeff = scale;
      t.series = static_cast<int>(s.time_series.size());
      t.l = term.y_power;
      if (p.kind == Kind::Polynomial) {
        t.xf = XFactor::Power;
        t.k = term.x_power;
      } else if (term.x_power > 0) {
        t.xf = XFactor::Cos;
        t.k = term.x_power;
      } else if (term.x_power < 0) {
        t.xf = XFactor::Sin;
        t.k = -term.x_power;
      } else {
        t.xf = XFactor::Power;
        t.k = 0;
      }
      s.time_series.push_back(term.series);
      s.H.push_back(t);
    }
    if (p.linear && !p.linear->is_zero()) {
      FieldTerm t;
      t.coeff = scale;
      t.series = static_cast<int>(s.time_series.size());
      t.xf = XFactor::Power;
      t.k = 1;
      s.time_series.push_back(*p.linear);
      s.H.push_back(t);
    }
  }
  finish_spec(s);
  return s;
}

BigReal evaluate_field(const Field& f, const VectorFieldSpec& spec, const BigReal& x, const BigReal& y,
                       const BigReal& t) {
  BigReal acc = BigReal::zero(x.bits());
  for (const auto& term : f) {
    BigReal g;
    switch (term.xf) {
      case XFactor::Power: g = pow(x, static_cast<long>(term.k)); break;
      case XFactor::Cos: g = cos(x * static_cast<long>(term.k)); break;
      case XFactor::Sin: g = sin(x * static_cast<long>(term.k)); break;
    }
    BigReal v = term.coeff * g * pow(y, static_cast<long>(term.l));
    if (term.series >= 0) v *= spec.time_series[term.series].evaluate(t * spec.omega);
    acc += v;
  }
  return acc;
}

int taylor_order_for(const BigReal& tol) {
  double l = -log2_abs(tol) * 0.6931471805599453;
  int k = static_cast<int>(std::ceil(0.5 * l)) + 10;
  return std::clamp(k, 12, 400);
}

// ---------------------------------------------------------------------------

template <class T>
struct JetEngine<T>::Impl {
  using Series = std::vector<T>;

  struct Mono {
    XFactor xf;
    int k, l;
    const Series* ptr = nullptr;
    Series own;
    const Series* g = nullptr;
    const Series* yl = nullptr;
  };
  struct Product {
    int series;
    int mono;
    Series data;
  };
  struct CompiledTerm {
    BigReal coeff;
    int code;  // > 0: monomial code−1, < 0: product −code−1
    const Series* ptr = nullptr;
  };
  struct CompiledField {
    std::vector<CompiledTerm> terms;
    bool constant = true;  // only n = 0 coefficient can be nonzero
    Series value;
  };

  int K, bits, ntan;
  bool action;
  BigReal omega;
  std::vector<FourierSeries> time_series;
  std::vector<Series> comp;
  Series one, jx;
  std::map<int, Series> xpow, ypow, cosx, sinx;
  std::vector<Series> ts;
  std::vector<Mono> monos;
  std::vector<Product> prods;
  CompiledField H, Hx, Hy, Hxx, Hxy, Hyy;
  BigReal t, t2;
  T acc, acc2;

  Series new_series() const { return Series(K + 1, make_zero<T>(bits)); }

  const Series* x_factor(XFactor xf, int k) {
    switch (xf) {
      case XFactor::Power:
        if (k == 0) return &one;
        if (k == 1) return &comp[0];
        if (!xpow.count(k)) xpow.emplace(k, new_series());
        return &xpow.at(k);
      case XFactor::Cos:
        if (!cosx.count(k)) {
          cosx.emplace(k, new_series());
          sinx.emplace(k, new_series());
        }
        return &cosx.at(k);
      case XFactor::Sin:
        if (!sinx.count(k)) {
          cosx.emplace(k, new_series());
          sinx.emplace(k, new_series());
        }
        return &sinx.at(k);
    }
    return nullptr;
  }

  const Series* y_factor(int l) {
    if (l == 0) return &one;
    if (l == 1) return &comp[1];
    if (!ypow.count(l)) ypow.emplace(l, new_series());
    return &ypow.at(l);
  }

  int mono_index(XFactor xf, int k, int l) {
    for (std::size_t i = 0; i < monos.size(); ++i)
      if (monos[i].xf == xf && monos[i].k == k && monos[i].l == l) return static_cast<int>(i);
    Mono m{xf, k, l};
    monos.push_back(std::move(m));
    return static_cast<int>(monos.size()) - 1;
  }

  void compile(CompiledField& cf, const Field& f, std::vector<std::pair<int, int>>& pending) {
    for (const auto& term : f) {
      int mi = mono_index(term.xf, term.k, term.l);
      int slot = -1;
      if (term.series >= 0) {
        for (std::size_t i = 0; i < pending.size(); ++i)
          if (pending[i] == std::make_pair(term.series, mi)) slot = static_cast<int>(i);
        if (slot < 0) {
          pending.emplace_back(term.series, mi);
          slot = static_cast<int>(pending.size()) - 1;
        }
      }
      // pointer fixed up after all containers are final
      cf.terms.push_back({term.coeff.with_bits(bits), slot >= 0 ? -(slot + 1) : mi + 1});
      bool const_term = term.series < 0 && term.l == 0 && term.xf == XFactor::Power && term.k == 0;
      if (!const_term) cf.constant = false;
    }
    cf.value = new_series();
  }

  void link(CompiledField& cf) {
    for (auto& ct : cf.terms) {
      ct.ptr = ct.code < 0 ? &prods[static_cast<std::size_t>(-ct.code - 1)].data
                           : monos[static_cast<std::size_t>(ct.code - 1)].ptr;
    }
  }

  Impl(const VectorFieldSpec& spec, int order, int bits_, int ntangent, bool with_action)
      : K(order), bits(bits_), ntan(ntangent), action(with_action) {
    if constexpr (!std::is_same_v<T, BigReal>) {
      if (!spec.autonomous()) throw ValidationError("complex-time flows must be autonomous");
    }
    omega = spec.omega.with_bits(bits);
    time_series = spec.time_series;
    int nc = 2 + 2 * ntan + (action ? 1 : 0);
    comp.assign(nc, new_series());
    one = new_series();
    if constexpr (std::is_same_v<T, BigReal>) {
      mpfr_set_ui(one[0].raw(), 1, R);
    } else {
      mpfr_set_ui(one[0].re.raw(), 1, R);
    }
    jx = new_series();
    t = BigReal::zero(bits);
    t2 = BigReal::zero(bits);
    acc = make_zero<T>(bits);
    acc2 = make_zero<T>(bits);
    ts.assign(time_series.size(), new_series());

    std::vector<std::pair<int, int>> pending;
    compile(Hx, spec.Hx, pending);
    compile(Hy, spec.Hy, pending);
    if (ntan > 0) {
      compile(Hxx, spec.Hxx, pending);
      compile(Hxy, spec.Hxy, pending);
      compile(Hyy, spec.Hyy, pending);
    }
    if (action) compile(H, spec.H, pending);
    // basis containers are std::map nodes, so pointers stay valid
    for (auto& m : monos) {
      m.g = x_factor(m.xf, m.k);
      m.yl = y_factor(m.l);
    }
    // make sure all powers below the highest requested exist
    int kx = xpow.empty() ? 1 : xpow.rbegin()->first;
    for (int k = 2; k <= kx; ++k) x_factor(XFactor::Power, k);
    int ly = ypow.empty() ? 1 : ypow.rbegin()->first;
    for (int l = 2; l <= ly; ++l) y_factor(l);
    for (auto& m : monos) {
      if (m.l == 0) {
        m.ptr = m.g;
      } else if (m.xf == XFactor::Power && m.k == 0) {
        m.ptr = m.yl;
      } else {
        m.own = new_series();
        m.ptr = &m.own;
      }
    }
    for (const auto& [s, mi] : pending) prods.push_back({s, mi, new_series()});
    link(Hx);
    link(Hy);
    if (ntan > 0) {
      link(Hxx);
      link(Hxy);
      link(Hyy);
    }
    if (action) link(H);
  }

  void time_coefficients(const BigReal& t0) {
    if constexpr (std::is_same_v<T, BigReal>) {
      BigReal theta = BigReal::zero(bits), c = BigReal::zero(bits), s = BigReal::zero(bits);
      BigReal p = BigReal::zero(bits), jw = BigReal::zero(bits), v = BigReal::zero(bits);
      for (std::size_t si = 0; si < time_series.size(); ++si) {
        Series& out = ts[si];
        for (auto& x : out) set_zero(x);
        const FourierSeries& f = time_series[si];
        if (!f.mean().is_zero()) mpfr_set(out[0].raw(), f.mean().raw(), R);
        for (const auto& [j, h] : f.harmonics()) {
          mpfr_mul_si(jw.raw(), omega.raw(), j, R);
          mpfr_mul(theta.raw(), jw.raw(), t0.raw(), R);
          mpfr_sin_cos(s.raw(), c.raw(), theta.raw(), R);
          BigReal cc = h.cos_coeff.with_bits(bits), sc = h.sin_coeff.with_bits(bits);
          // derivative cycle of cc·cos θ + sc·sin θ
          BigReal d0 = cc * c + sc * s, d1 = sc * c - cc * s;
          mpfr_set_ui(p.raw(), 1, R);
          for (int n = 0; n <= K; ++n) {
            switch (n % 4) {
              case 0: mpfr_mul(v.raw(), p.raw(), d0.raw(), R); break;
              case 1: mpfr_mul(v.raw(), p.raw(), d1.raw(), R); break;
              case 2: mpfr_mul(v.raw(), p.raw(), d0.raw(), R); mpfr_neg(v.raw(), v.raw(), R); break;
              default: mpfr_mul(v.raw(), p.raw(), d1.raw(), R); mpfr_neg(v.raw(), v.raw(), R); break;
            }
            mpfr_add(out[n].raw(), out[n].raw(), v.raw(), R);
            mpfr_mul(p.raw(), p.raw(), jw.raw(), R);
            mpfr_div_si(p.raw(), p.raw(), n + 1, R);
          }
        }
      }
    }
  }

  void eval_field(CompiledField& f, int n) {
    T& out = f.value[n];
    set_zero(out);
    if (f.constant && n > 0) return;
    for (const auto& ct : f.terms) axpy(out, ct.coeff, (*ct.ptr)[n], t);
  }

  // Σ_j f[j] v[n−j], shortcut for constant fields
  void field_times(T& out, const CompiledField& f, const Series& v, int n) {
    if (f.constant) {
      if constexpr (std::is_same_v<T, BigReal>) {
        mpfr_mul(out.raw(), f.value[0].raw(), v[n].raw(), R);
      } else {
        mul_into(out, f.value[0], v[n], t);
      }
      return;
    }
    conv(out, f.value, v, n, t);
  }

  void compute(const std::vector<T>& state, const BigReal& t0) {
    for (std::size_t c = 0; c < comp.size(); ++c) comp[c][0] = state[c];
    time_coefficients(t0);
    for (int n = 0; n < K; ++n) {
      // basis at order n
      jx[n] = comp[0][n];
      scale_si(jx[n], n, 1);
      for (auto& [k, s] : xpow) {
        const Series& prev = k == 2 ? comp[0] : xpow.at(k - 1);
        conv(s[n], prev, comp[0], n, t);
      }
      for (auto& [l, s] : ypow) {
        const Series& prev = l == 2 ? comp[1] : ypow.at(l - 1);
        conv(s[n], prev, comp[1], n, t);
      }
      for (auto& [k, cs] : cosx) {
        Series& sn = sinx.at(k);
        if (n == 0) {
          T arg = comp[0][0];
          scale_si(arg, k, 1);
          set_cos_sin(cs[0], sn[0], arg);
        } else {
          // n s_n = k Σ j x_j c_{n−j},  n c_n = −k Σ j x_j s_{n−j}
          set_zero(acc);
          set_zero(acc2);
          for (int j = 1; j <= n; ++j) {
            mul_add(acc, jx[j], cs[n - j], t);
            mul_add(acc2, jx[j], sn[n - j], t);
          }
          sn[n] = acc;
          scale_si(sn[n], k, n);
          cs[n] = acc2;
          scale_si(cs[n], -k, n);
        }
      }
      for (auto& m : monos)
        if (m.ptr == &m.own) conv(m.own[n], *m.g, *m.yl, n, t);
      for (auto& p : prods) conv(p.data[n], ts[p.series], *monos[p.mono].ptr, n, t);
      eval_field(Hx, n);
      eval_field(Hy, n);
      if (ntan > 0) {
        eval_field(Hxx, n);
        eval_field(Hxy, n);
        eval_field(Hyy, n);
      }
      if (action) eval_field(H, n);

      // next coefficients
      long d = n + 1;
      comp[0][n + 1] = Hy.value[n];
      scale_si(comp[0][n + 1], 1, d);
      comp[1][n + 1] = Hx.value[n];
      scale_si(comp[1][n + 1], -1, d);
      for (int tv = 0; tv < ntan; ++tv) {
        Series& vx = comp[2 + 2 * tv];
        Series& vy = comp[3 + 2 * tv];
        // vx' = Hxy vx + Hyy vy ; vy' = −Hxx vx − Hxy vy
        field_times(acc, Hxy, vx, n);
        field_times(acc2, Hyy, vy, n);
        vx[n + 1] = acc;
        vx[n + 1] += acc2;
        scale_si(vx[n + 1], 1, d);
        field_times(acc, Hxx, vx, n);
        field_times(acc2, Hxy, vy, n);
        vy[n + 1] = acc;
        vy[n + 1] += acc2;
        scale_si(vy[n + 1], -1, d);
      }
      if (action) {
        Series& a = comp[2 + 2 * ntan];
        conv(acc, comp[1], Hy.value, n, t);
        acc -= H.value[n];
        a[n + 1] = acc;
        scale_si(a[n + 1], 1, d);
      }
    }
  }
};

template <class T>
JetEngine<T>::JetEngine(const VectorFieldSpec& spec, int order, int bits, int ntangent, bool action)
    : impl_(new Impl(spec, order, bits, ntangent, action)), order_(order), ncomp_(2 + 2 * ntangent + (action ? 1 : 0)) {}

template <class T>
JetEngine<T>::~JetEngine() {
  delete impl_;
}

template <class T>
void JetEngine<T>::compute(const std::vector<T>& state, const BigReal& t0) {
  impl_->compute(state, t0);
}

template <class T>
const std::vector<T>& JetEngine<T>::coeffs(int comp) const {
  return impl_->comp[comp];
}

template class JetEngine<BigReal>;
template class JetEngine<BigComplex>;

// ---------------------------------------------------------------------------

namespace {

// log2 of the largest admissible step from the two highest coefficients.
template <class T>
double log2_step(const JetEngine<T>& e, double log2_tol) {
  int K = e.order();
  double best = std::numeric_limits<double>::infinity();
  for (int n : {K - 1, K}) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < e.ncomp(); ++c) {
      const auto& s = e.coeffs(c);
      double scale = std::max(0.0, log2_abs(s[0]));
      worst = std::max(worst, log2_abs(s[n]) - scale);
    }
    if (std::isinf(worst)) continue;
    best = std::min(best, (log2_tol - worst) / static_cast<double>(n - 1));
  }
  return best;
}

std::string describe_state(const std::vector<BigReal>& s, const BigReal& t) {
  std::ostringstream os;
  os << "t = " << t.to_string(12) << ", x = " << s[0].to_string(12) << ", y = " << s[1].to_string(12);
  return os.str();
}

}  // namespace

TaylorIntegrator::TaylorIntegrator(VectorFieldSpec spec, IntegratorOptions opt)
    : spec_(std::move(spec)), opt_(std::move(opt)) {
  if (opt_.bits < 53 || opt_.bits > 4096) throw ValidationError("bits out of range");
  if (opt_.tol.is_zero()) opt_.tol = pow2(-(opt_.bits - 16), opt_.bits);
  if (opt_.tol.sign() <= 0) throw ValidationError("integration tolerance must be > 0");
  if (opt_.order <= 0) opt_.order = taylor_order_for(opt_.tol);
  if (opt_.ntangent < 0 || opt_.ntangent > 2) throw ValidationError("ntangent must be 0, 1 or 2");
  engine_ = new JetEngine<BigReal>(spec_, opt_.order, opt_.bits, opt_.ntangent, opt_.action);
}

TaylorIntegrator::~TaylorIntegrator() { delete engine_; }

int TaylorIntegrator::ncomp() const { return engine_->ncomp(); }

void TaylorIntegrator::integrate(std::vector<BigReal>& state, const BigReal& t0, const BigReal& t1) {
  if (static_cast<int>(state.size()) != ncomp()) throw ValidationError("state size mismatch");
  int bits = opt_.bits;
  for (auto& s : state) s.set_bits(bits);
  BigReal t = t0.with_bits(bits);
  BigReal end = t1.with_bits(bits);
  int dir = end > t ? 1 : -1;
  double log2_tol = log2_abs(opt_.tol);
  BigReal span = abs(end - t);
  double min_log2_h = std::min(-0.5 * bits, log2_abs(span) - 0.5 * bits);
  BigReal h = BigReal::zero(bits), acc = BigReal::zero(bits), tmp = BigReal::zero(bits);
  long local_steps = 0;
  while (t != end) {
    BigReal remaining = abs(end - t);
    engine_->compute(state, t);
    double lh = log2_step(*engine_, log2_tol);
    bool last = false;
    if (std::isinf(lh) || lh >= log2_abs(remaining)) {
      h = remaining;
      last = true;
    } else {
      if (lh < min_log2_h) {
        throw NumericalError("step size underflow (singularity hit?) at " + describe_state(state, t));
      }
      mpfr_set_d(tmp.raw(), std::exp2(lh - std::floor(lh)), R);
      mpfr_mul_2si(h.raw(), tmp.raw(), static_cast<long>(std::floor(lh)), R);
    }
    if (dir < 0) mpfr_neg(h.raw(), h.raw(), R);
    int K = engine_->order();
    for (int c = 0; c < ncomp(); ++c) {
      const auto& s = engine_->coeffs(c);
      mpfr_set(acc.raw(), s[K].raw(), R);
      for (int n = K - 1; n >= 0; --n) {
        mpfr_mul(acc.raw(), acc.raw(), h.raw(), R);
        mpfr_add(acc.raw(), acc.raw(), s[n].raw(), R);
      }
      if (!acc.is_finite()) throw NumericalError("non-finite state at " + describe_state(state, t));
      mpfr_set(state[c].raw(), acc.raw(), R);
    }
    if (last) {
      t = end;
    } else {
      t += h;
    }
    ++steps_;
    if (++local_steps > opt_.max_steps)
      throw NumericalError("step budget exhausted at " + describe_state(state, t));
  }
}

FlowResult integrate_flow(const SystemModel& model, const BigReal& eps, const BigReal& x0, const BigReal& y0,
                          const BigReal& t0, const BigReal& t1, const BigReal& tol, int bits,
                          bool with_variational) {
  PrecisionGuard guard(bits);
  IntegratorOptions opt;
  opt.bits = bits;
  opt.tol = tol.with_bits(bits);
  opt.ntangent = with_variational ? 2 : 0;
  TaylorIntegrator integ(make_field(model, eps.with_bits(bits)), opt);
  std::vector<BigReal> s(integ.ncomp(), BigReal::zero(bits));
  s[0] = x0.with_bits(bits);
  s[1] = y0.with_bits(bits);
  if (with_variational) {
    s[2] = BigReal(1.0, bits);
    s[5] = BigReal(1.0, bits);
  }
  integ.integrate(s, t0, t1);
  FlowResult r;
  r.x = s[0];
  r.y = s[1];
  if (with_variational) {
    r.has_jacobian = true;
    r.j11 = s[2];
    r.j21 = s[3];
    r.j12 = s[4];
    r.j22 = s[5];
  }
  return r;
}

// ---------------------------------------------------------------------------

void TaylorPatch::evaluate(const BigComplex& u, BigComplex& qv, BigComplex& pv) const {
  int bits = q[0].bits();
  BigComplex d = u.with_bits(bits) - center;
  BigReal t = BigReal::zero(bits);
  int K = static_cast<int>(q.size()) - 1;
  BigComplex aq = q[K], ap = p[K], tmp = BigComplex::zero(bits);
  for (int n = K - 1; n >= 0; --n) {
    mul_into(tmp, aq, d, t);
    aq = tmp;
    aq += q[n];
    mul_into(tmp, ap, d, t);
    ap = tmp;
    ap += p[n];
  }
  qv = aq;
  pv = ap;
}

ComplexFlow::ComplexFlow(const Potential& v, int bits, BigReal tol) : bits_(bits), tol_(std::move(tol)) {
  if (tol_.is_zero()) tol_ = pow2(-(bits - 16), bits);
  spec_ = make_unperturbed_field(v);
  engine_ = new JetEngine<BigComplex>(spec_, taylor_order_for(tol_), bits, 0, false);
}

ComplexFlow::~ComplexFlow() { delete engine_; }

int ComplexFlow::order() const { return engine_->order(); }

void ComplexFlow::integrate(BigComplex& q, BigComplex& p, const BigComplex& u0, const BigComplex& u1,
                            const std::function<BigReal(const BigComplex&)>& max_step,
                            std::vector<TaylorPatch>* track) {
  PrecisionGuard guard(bits_);
  BigComplex a = u0.with_bits(bits_), b = u1.with_bits(bits_);
  BigComplex delta = b - a;
  BigReal len = abs(delta);
  if (len.is_zero()) return;
  BigComplex dir = delta / len;
  BigReal done = BigReal::zero(bits_);
  std::vector<BigComplex> state{q.with_bits(bits_), p.with_bits(bits_)};
  double log2_tol = log2_abs(tol_);
  double min_log2_h = log2_abs(len) - 0.5 * bits_;
  BigReal t0 = BigReal::zero(bits_);
  long steps = 0;
  while (done < len) {
    BigComplex u = a + dir * done;
    engine_->compute(state, t0);
    double lh = log2_step(*engine_, log2_tol);
    BigReal remaining = len - done;
    BigReal h = std::isinf(lh) ? remaining : pow2(static_cast<long>(std::floor(lh)), bits_) * BigReal(std::exp2(lh - std::floor(lh)), bits_);
    if (max_step) {
      BigReal cap = max_step(u);
      if (cap.is_finite() && cap.sign() > 0 && cap < h) h = cap;
    }
    bool last = h >= remaining;
    if (last) h = remaining;
    if (!last && log2_abs(h) < min_log2_h)
      throw NumericalError("complex continuation step underflow near u = (" + u.re.to_string(10) + ", " +
                           u.im.to_string(10) + ")");
    BigComplex dt = dir * h;
    TaylorPatch patch;
    patch.center = u;
    patch.radius = h;
    patch.q = engine_->coeffs(0);
    patch.p = engine_->coeffs(1);
    patch.evaluate(u + dt, state[0], state[1]);
    if (!state[0].is_finite() || !state[1].is_finite())
      throw NumericalError("non-finite value in complex continuation near u = (" + u.re.to_string(10) + ", " +
                           u.im.to_string(10) + ")");
    if (track) track->push_back(std::move(patch));
    if (last) {
      done = len;
    } else {
      done += h;
    }
    if (++steps > 10000000) throw NumericalError("complex continuation step budget exhausted");
  }
  q = state[0];
  p = state[1];
}

}  // namespace sepsplit
