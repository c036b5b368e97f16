#include "sepsplit/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <queue>

namespace sepsplit {

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
void legendre(int n, const BigReal& x, BigReal& p, BigReal& dp) {
  BigReal p0(1.0, x.bits()), p1 = x;
  for (int k = 2; k <= n; ++k) {
    BigReal p2 = ((2 * k - 1) * (x * p1) - (k - 1) * p0) / static_cast<long>(k);
    p0 = std::move(p1);
    p1 = std::move(p2);
  }
  p = p1;
  dp = (n * (x * p1 - p0)) / (x * x - BigReal(1.0, x.bits()));
}

std::shared_ptr<GaussRule> build_rule(int n, int bits) {
  auto rule = std::make_shared<GaussRule>();
  rule->bits = bits;
  rule->nodes.resize(n);
  rule->weights.resize(n);
  int work = bits + 32;
  BigReal eps = pow2(-(bits + 8), work);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    BigReal x(std::cos(M_PI * (i + 0.75) / (n + 0.5)), work);
    BigReal p, dp;
    for (int it = 0; it < 100; ++it) {
      legendre(n, x, p, dp);
      BigReal dx = p / dp;
      x -= dx;
      if (abs(dx) < eps) break;
    }
    legendre(n, x, p, dp);
    BigReal w = BigReal(2.0, work) / ((BigReal(1.0, work) - x * x) * dp * dp);
    rule->nodes[i] = (-x).with_bits(bits);
    rule->nodes[n - 1 - i] = x.with_bits(bits);
    rule->weights[i] = w.with_bits(bits);
    rule->weights[n - 1 - i] = w.with_bits(bits);
  }
  if (n % 2 == 1) rule->nodes[n / 2] = BigReal::zero(bits);
  return rule;
}

struct Panel {
  BigComplex a, b;
  BigComplex left, right;  // rule applied to each half
  BigComplex value;        // left + right
  BigReal err;
  bool operator<(const Panel& o) const { return err < o.err; }
};

}  // namespace

int default_rule_size(int bits) { return std::max(12, bits / 6); }

std::shared_ptr<const GaussRule> gauss_legendre(int n, int bits) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const GaussRule>> cache;
  if (n < 1) throw ValidationError("gauss_legendre: rule size must be positive");
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(n, bits);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto rule = build_rule(n, bits);
  cache.emplace(key, rule);
  return rule;
}

BigComplex quad_fixed(const ComplexFn& f, const BigComplex& a, const BigComplex& b, const GaussRule& rule) {
  BigComplex half = (b - a) / 2L;
  BigComplex mid = (a + b) / 2L;
  BigComplex acc = BigComplex::zero(rule.bits);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += f(mid + half * rule.nodes[i]) * rule.weights[i];
  return acc * half;
}

QuadResult quad_adaptive(const ComplexFn& f, const std::vector<BigComplex>& path, const BigReal& tol, int bits,
                         const QuadOptions& opt) {
  if (path.size() < 2) throw ValidationError("quad_adaptive: path needs at least two waypoints");
  if (!(tol > BigReal(0.0))) throw ValidationError("quad_adaptive: tol must be positive");
  int n = opt.rule > 0 ? opt.rule : default_rule_size(bits);
  auto rule = gauss_legendre(n, bits);
  long evals = 0;

  auto make_panel = [&](const BigComplex& a, const BigComplex& b, const BigComplex& whole) {
    Panel p{a, b, {}, {}, {}, {}};
    BigComplex m = (a + b) / 2L;
    p.left = quad_fixed(f, a, m, *rule);
    p.right = quad_fixed(f, m, b, *rule);
    evals += 2L * n;
    p.value = p.left + p.right;
    p.err = abs(p.value - whole);
    return p;
  };

  std::priority_queue<Panel> queue;
  for (std::size_t s = 0; s + 1 < path.size(); ++s) {
    const BigComplex& a = path[s];
    const BigComplex& b = path[s + 1];
    long pieces = 1;
    if (!opt.max_panel_length.is_zero() && opt.max_panel_length > BigReal(0.0)) {
      double len = abs(b - a).to_double() / opt.max_panel_length.to_double();
      pieces = std::max(1L, static_cast<long>(std::ceil(len)));
    }
    for (long i = 0; i < pieces; ++i) {
      BigComplex pa = a + (b - a) * BigReal(static_cast<double>(i) / pieces, bits);
      BigComplex pb = i + 1 == pieces ? b : a + (b - a) * BigReal(static_cast<double>(i + 1) / pieces, bits);
      BigComplex whole = quad_fixed(f, pa, pb, *rule);
      evals += n;
      queue.push(make_panel(pa, pb, whole));
    }
  }

  auto totals = [&](BigComplex& value, BigReal& err) {
    value = BigComplex::zero(bits);
    err = BigReal::zero(bits);
    auto copy = queue;
    while (!copy.empty()) {
      value += copy.top().value;
      err += copy.top().err;
      copy.pop();
    }
  };

  // Sums are kept incrementally; they are recomputed exactly at the end.
  BigComplex value;
  BigReal err;
  totals(value, err);
  while (true) {
    BigReal bound = tol * (BigReal(1.0, bits) + abs(value));
    if (err <= bound) break;
    if (static_cast<int>(queue.size()) >= opt.max_panels) {
      totals(value, err);
      QuadResult best{value, err, evals, static_cast<int>(queue.size())};
      throw QuadratureError("quad_adaptive: no convergence after " + std::to_string(queue.size()) +
                                " panels (estimated error " + err.to_string(3) + ")",
                            best);
    }
    Panel worst = queue.top();
    queue.pop();
    BigComplex m = (worst.a + worst.b) / 2L;
    Panel l = make_panel(worst.a, m, worst.left);
    Panel r = make_panel(m, worst.b, worst.right);
    value += l.value + r.value - worst.value;
    err += l.err + r.err - worst.err;
    queue.push(std::move(l));
    queue.push(std::move(r));
    if (queue.size() % 256 == 0) totals(value, err);
  }
  totals(value, err);
  return {value, err, evals, static_cast<int>(queue.size())};
}

BigComplex extrapolate_to_zero(const std::vector<BigReal>& x, const std::vector<BigComplex>& v) {
  if (x.size() != v.size() || x.empty()) throw ValidationError("extrapolate_to_zero: size mismatch");
  std::vector<BigComplex> p = v;
  std::size_t n = x.size();
  for (std::size_t k = 1; k < n; ++k) {
    for (std::size_t i = 0; i + k < n; ++i) {
      // p_i ← (x_{i+k} p_i − x_i p_{i+1}) / (x_{i+k} − x_i), evaluated at 0
      p[i] = (p[i] * x[i + k] - p[i + 1] * x[i]) / (x[i + k] - x[i]);
    }
  }
  return p[0];
}

}  // namespace sepsplit
