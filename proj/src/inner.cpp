#include "sepsplit/inner.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "sepsplit/errors.hpp"

namespace sepsplit {

namespace {

BigReal rational_real(const Rational& r, int bits) {
  return BigReal(static_cast<double>(r.num()), bits) / BigReal(static_cast<double>(r.den()), bits);
}

using Matrix = std::vector<std::vector<BigComplex>>;

Matrix invert(Matrix a) {
  std::size_t n = a.size();
  int bits = a[0][0].bits();
  Matrix inv(n, std::vector<BigComplex>(n, BigComplex::zero(bits)));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = BigComplex(BigReal(1.0, bits));
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t i = col + 1; i < n; ++i)
      if (norm(a[i][col]) > norm(a[piv][col])) piv = i;
    if (a[piv][col].is_zero()) throw NumericalError("inner solver: singular collocation matrix");
    std::swap(a[piv], a[col]);
    std::swap(inv[piv], inv[col]);
    BigComplex d = BigComplex(BigReal(1.0, bits)) / a[col][col];
    for (std::size_t j = 0; j < n; ++j) {
      a[col][j] *= d;
      inv[col][j] *= d;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i == col || a[i][col].is_zero()) continue;
      BigComplex f = a[i][col];
      for (std::size_t j = 0; j < n; ++j) {
        a[i][j] -= f * a[col][j];
        inv[i][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

// Chebyshev–Lobatto nodes on [−1, 1] (ascending) and the differentiation matrix.
void chebyshev(int n, int bits, std::vector<BigReal>& x, std::vector<std::vector<BigReal>>& d) {
  int N = n - 1;
  BigReal pi = const_pi(bits);
  x.resize(n);
  for (int j = 0; j < n; ++j) x[j] = -cos(pi * static_cast<long>(j) / static_cast<long>(N));
  d.assign(n, std::vector<BigReal>(n, BigReal::zero(bits)));
  for (int i = 0; i < n; ++i) {
    BigReal diag = BigReal::zero(bits);
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double ci = (i == 0 || i == N) ? 2.0 : 1.0;
      double cj = (j == 0 || j == N) ? 2.0 : 1.0;
      double s = ((i + j) % 2 == 0 ? 1.0 : -1.0) * ci / cj;
      d[i][j] = BigReal(s, bits) / (x[i] - x[j]);
      diag -= d[i][j];
    }
    d[i][i] = diag;
  }
}

struct Discretization {
  int n = 0;
  int kf = 0;
  int ntau = 0;
  std::vector<BigReal> xi;                 // reference nodes
  std::vector<std::vector<BigReal>> D;     // d/dz on a panel
  std::vector<Matrix> minv;                // per mode, boundary row at bc
  std::vector<std::vector<BigReal>> bc_derivs;  // rows of D^j at the boundary node, j = 1..J
  std::vector<std::vector<BigComplex>> E;  // e^{ikτ_m}, [m][k + kf]
};

Discretization discretize(const InnerProblem& pb, int bc, int ntau) {
  int bits = pb.bits;
  Discretization s;
  s.n = pb.nodes;
  s.kf = pb.kf;
  s.ntau = ntau;
  std::vector<std::vector<BigReal>> d0;
  chebyshev(s.n, bits, s.xi, d0);
  BigReal scale = BigReal(2.0, bits) / BigReal(pb.panel, bits);
  s.D = d0;
  for (auto& row : s.D)
    for (auto& v : row) v *= scale;
  for (int k = -s.kf; k <= s.kf; ++k) {
    Matrix m(s.n, std::vector<BigComplex>(s.n, BigComplex::zero(bits)));
    for (int i = 0; i < s.n; ++i) {
      if (i == bc) {
        m[i][i] = BigComplex(BigReal(1.0, bits));
        continue;
      }
      for (int j = 0; j < s.n; ++j) m[i][j] = BigComplex(s.D[i][j]);
      m[i][i] += BigComplex(BigReal::zero(bits), BigReal(static_cast<double>(k), bits));
    }
    s.minv.push_back(invert(std::move(m)));
  }
  std::vector<BigReal> row(s.n, BigReal::zero(bits));
  row[bc] = BigReal(1.0, bits);
  for (int j = 1; j <= 10; ++j) {
    std::vector<BigReal> next(s.n, BigReal::zero(bits));
    for (int c = 0; c < s.n; ++c)
      for (int i = 0; i < s.n; ++i) next[c] += row[i] * s.D[i][c];
    row = next;
    s.bc_derivs.push_back(row);
  }
  BigReal two_pi = const_pi(bits) * 2L;
  s.E.resize(ntau);
  for (int m = 0; m < ntau; ++m) {
    BigReal tau = two_pi * static_cast<long>(m) / static_cast<long>(ntau);
    for (int k = -s.kf; k <= s.kf; ++k) s.E[m].push_back(polar(BigReal(1.0, bits), tau * static_cast<long>(k)));
  }
  return s;
}

// Right-hand side of (∂τ + ∂z)ψ̄ = −½μ̂z^{2r}(∂zψ̄)² − z^{−ℓ}Σ A_l(τ)(1 + μ̂z^{2r}∂zψ̄)^l by mode.
struct Rhs {
  const InnerProblem& pb;
  const Discretization& disc;
  std::vector<std::vector<BigComplex>> A_grid;  // [l][m]

  Rhs(const InnerProblem& p, const Discretization& d) : pb(p), disc(d) {
    int bits = pb.bits;
    BigReal two_pi = const_pi(bits) * 2L;
    for (const auto& a : pb.A) {
      std::vector<BigComplex> g;
      for (int m = 0; m < disc.ntau; ++m)
        g.push_back(a.evaluate(two_pi * static_cast<long>(m) / static_cast<long>(disc.ntau)));
      A_grid.push_back(std::move(g));
    }
  }

  void operator()(const BigComplex& z2r, const BigComplex& zml, const std::vector<BigComplex>& dpsi,
                  std::vector<BigComplex>& out) const {
    int bits = pb.bits;
    int nk = 2 * disc.kf + 1;
    BigReal t(0.0, bits);
    BigComplex half_mu_z2r = z2r * (pb.mu_hat / 2L);
    BigComplex mu_z2r = z2r * pb.mu_hat;
    std::vector<BigComplex> grid(disc.ntau, BigComplex::zero(bits));
    for (int m = 0; m < disc.ntau; ++m) {
      BigComplex wv = BigComplex::zero(bits);
      for (int k = 0; k < nk; ++k) mul_add(wv, dpsi[k], disc.E[m][k], t);
      BigComplex u = mu_z2r * wv;
      BigComplex one_u = u + BigComplex(BigReal(1.0, bits));
      BigComplex pw(BigReal(1.0, bits));
      BigComplex sum = BigComplex::zero(bits);
      for (std::size_t l = 0; l < A_grid.size(); ++l) {
        if (l > 0) pw *= one_u;
        mul_add(sum, A_grid[l][m], pw, t);
      }
      grid[m] = -(half_mu_z2r * (wv * wv)) - zml * sum;
    }
    for (int k = 0; k < nk; ++k) {
      BigComplex acc = BigComplex::zero(bits);
      for (int m = 0; m < disc.ntau; ++m) mul_add(acc, grid[m], conj(disc.E[m][k]), t);
      out[k] = acc / static_cast<long>(disc.ntau);
    }
  }
};

}  // namespace

InnerProblem make_inner_problem(const SystemModel& model, const SeparatrixInfo& sep, const AsymptoticConstants& c,
                                const BigReal& mu_hat, int bits) {
  if (!c.inner_available) throw ValidationError("trig inner constants unsupported");
  if (c.ell < Rational(2) * sep.r)
    throw ValidationError("inner problem requires ell >= 2r (ell = " + c.ell.to_string() + ", r = " +
                          sep.r.to_string() + ")");
  (void)model;
  // ψ̄ is the O(μ̂) correction; at μ̂ = 0 the difference vanishes identically and
  // f(0) = f₀ comes from chi_first_order instead.
  if (mu_hat.is_zero()) throw ValidationError("inner problem needs mu_hat != 0 (f(0) = f0)");
  InnerProblem pb;
  pb.r = sep.r;
  pb.ell = c.ell;
  pb.mu_hat = mu_hat.with_bits(bits);
  pb.A = c.A;
  pb.bits = bits;
  pb.gauge = BigComplex::zero(bits);
  // Plain Picard sweeps pick up a slowly growing mode once μ̂ is O(1) (seen at
  // μ̂ = 0.5, Y = 10); damping keeps it inside the unit circle.
  if (abs(pb.mu_hat) > BigReal(0.05, bits)) pb.relaxation = 0.6;
  return pb;
}

BigComplex InnerSolution::w(std::size_t node, const BigReal& tau, const Rational& r) const {
  int bits = z[node].bits();
  BigComplex acc = BigComplex::zero(bits);
  for (int k = -kf; k <= kf; ++k) acc += dpsi[node][k + kf] * polar(BigReal(1.0, bits), tau * static_cast<long>(k));
  BigReal two_r = rational_real(r, bits) * 2L;
  return BigComplex(BigReal(1.0, bits)) / pow(z[node], two_r) + acc * mu_hat;
}

InnerSolution solve_inner_branch(const InnerProblem& pb, Branch branch, const BigReal& tol) {
  if (pb.ell < Rational(2) * pb.r) throw ValidationError("inner problem requires ell >= 2r");
  if (pb.kf < 1) throw ValidationError("inner problem: fourier truncation must be >= 1");
  if (pb.nodes < 8) throw ValidationError("inner problem: at least 8 nodes per panel");
  if (pb.depth <= pb.kappa + pb.theta * pb.half_window)
    throw ValidationError("inner problem: depth " + std::to_string(pb.depth) +
                          " leaves the overlap sector; need depth > kappa + theta*half_window");
  int bits = pb.bits;
  PrecisionGuard guard(bits);
  int N = static_cast<int>(pb.A.size()) - 1;
  int ha = 0;
  for (const auto& a : pb.A)
    for (const auto& [k, v] : a.coeffs()) ha = std::max(ha, std::abs(k));
  int ntau = (std::max(2, N) + 1) * (pb.kf + ha) + 1;
  bool unstable = branch == Branch::Unstable;
  int bc = unstable ? 0 : pb.nodes - 1;
  Discretization disc = discretize(pb, bc, ntau);
  Rhs rhs(pb, disc);
  int nk = 2 * pb.kf + 1;
  int n = pb.nodes;

  // Panels on [−T, hw] (unstable) or [−hw, T] (stable), edges at hw + panel·j.
  long np = std::max(1L, std::lround((pb.length + pb.half_window) / pb.panel));
  std::vector<double> left;
  for (long j = 0; j < np; ++j) {
    double a = unstable ? pb.half_window - pb.panel * static_cast<double>(np - j)
                        : -pb.half_window + pb.panel * static_cast<double>(j);
    left.push_back(a);
  }
  // Sweep order: from the far end toward the overlap panel.
  std::vector<long> order;
  for (long j = 0; j < np; ++j) order.push_back(unstable ? j : np - 1 - j);

  BigReal half(pb.panel / 2.0, bits);
  BigReal Y(pb.depth, bits);
  InnerSolution sol;
  sol.branch = branch;
  sol.depth = pb.depth;
  sol.kf = pb.kf;
  sol.mu_hat = pb.mu_hat.with_bits(bits);
  sol.gauge = pb.gauge.bits() > 0 ? pb.gauge.with_bits(bits) : BigComplex::zero(bits);
  std::vector<BigComplex> z2r, zml;
  BigReal two_r = rational_real(pb.r, bits) * 2L;
  BigReal ell = rational_real(pb.ell, bits);
  for (long j = 0; j < np; ++j) {
    BigReal mid = BigReal(left[j], bits) + half;
    for (int i = 0; i < n; ++i) {
      if (j > 0 && i == 0) continue;  // shared endpoint
      BigComplex z(mid + half * disc.xi[i], -Y);
      sol.z.push_back(z);
      z2r.push_back(pow(z, two_r));
      zml.push_back(BigComplex(BigReal(1.0, bits)) / pow(z, ell));
    }
  }
  std::size_t total = sol.z.size();
  auto index = [&](long panel, int i) { return static_cast<std::size_t>(panel * (n - 1) + i); };
  std::vector<BigComplex> zero_modes(nk, BigComplex::zero(bits));
  sol.psi.assign(total, zero_modes);
  sol.dpsi.assign(total, zero_modes);
  std::vector<std::vector<BigComplex>> R(total, zero_modes);

  BigReal t(0.0, bits);
  BigReal last_inc;
  int growth = 0;
  BigReal first_inc;
  std::vector<BigReal> history;
  const bool relax = pb.relaxation < 1.0;
  BigReal omega(pb.relaxation, bits);
  std::vector<std::vector<BigComplex>> old_psi, old_dpsi;
  for (int it = 1; it <= pb.max_iterations; ++it) {
    if (relax && it > 1) {
      old_psi = sol.psi;
      old_dpsi = sol.dpsi;
    }
    for (std::size_t p = 0; p < total; ++p) rhs(z2r[p], zml[p], sol.dpsi[p], R[p]);
    BigReal inc = BigReal::zero(bits);
    BigReal scale = BigReal::zero(bits);
    std::vector<BigComplex> carried(nk);
    bool first = true;
    for (long j : order) {
      for (int kk = 0; kk < nk; ++kk) {
        int k = kk - pb.kf;
        BigComplex c0;
        if (first) {
          // Non-oscillating particular solution at the far end:
          // c ≈ Σ_j (−1)^j R^{(j)}/(ik)^{j+1}; for k = 0, c ≈ zR²/(R + zR′).
          std::size_t pbnd = index(j, bc);
          const BigComplex& r0 = R[pbnd][kk];
          if (k == 0) {
            BigComplex r1 = BigComplex::zero(bits);
            for (int i = 0; i < n; ++i) r1 += R[index(j, i)][kk] * disc.bc_derivs[0][i];
            BigComplex den = r0 + sol.z[pbnd] * r1;
            c0 = den.is_zero() ? BigComplex::zero(bits) : sol.z[pbnd] * r0 * r0 / den;
          } else {
            BigComplex ik(BigReal::zero(bits), BigReal(static_cast<double>(k), bits));
            BigComplex inv_ik = BigComplex(BigReal(1.0, bits)) / ik;
            BigComplex term = r0 * inv_ik;
            c0 = term;
            BigReal prev = abs(term);
            BigComplex fac = inv_ik;
            for (std::size_t d = 0; d < disc.bc_derivs.size(); ++d) {
              BigComplex rd = BigComplex::zero(bits);
              for (int i = 0; i < n; ++i) rd += R[index(j, i)][kk] * disc.bc_derivs[d][i];
              fac = -(fac * inv_ik);
              BigComplex next = rd * fac;
              BigReal mag = abs(next);
              if (mag >= prev) break;
              c0 += next;
              prev = mag;
            }
          }
        } else {
          c0 = carried[kk];
        }
        const Matrix& mi = disc.minv[kk];
        std::vector<BigComplex> cnew(n, BigComplex::zero(bits));
        for (int i = 0; i < n; ++i) {
          BigComplex acc = mi[i][bc] * c0;
          for (int q = 0; q < n; ++q) {
            if (q == bc) continue;
            mul_add(acc, mi[i][q], R[index(j, q)][kk], t);
          }
          cnew[i] = acc;
        }
        for (int i = 0; i < n; ++i) {
          std::size_t p = index(j, i);
          if (!first && i == bc) continue;
          BigReal diff = abs(cnew[i] - sol.psi[p][kk]);
          if (diff > inc) inc = diff;
          BigReal mag = abs(cnew[i]);
          if (mag > scale) scale = mag;
          sol.psi[p][kk] = cnew[i];
        }
        for (int i = 0; i < n; ++i) {
          BigComplex acc = BigComplex::zero(bits);
          for (int q = 0; q < n; ++q) mul_add(acc, cnew[q], BigComplex(disc.D[i][q]), t);
          sol.dpsi[index(j, i)][kk] = acc;
        }
        carried[kk] = cnew[unstable ? n - 1 : 0];
      }
      first = false;
    }
    if (relax && it > 1) {
      // ψ ← ψ + ω(T(ψ) − ψ); ∂zψ̄ is linear in ψ̄, so it blends the same way.
      for (std::size_t p = 0; p < total; ++p)
        for (int kk = 0; kk < nk; ++kk) {
          sol.psi[p][kk] = old_psi[p][kk] + (sol.psi[p][kk] - old_psi[p][kk]) * omega;
          sol.dpsi[p][kk] = old_dpsi[p][kk] + (sol.dpsi[p][kk] - old_dpsi[p][kk]) * omega;
        }
    }
    sol.iterations = it;
    sol.increment = inc;
    if (it == 1) first_inc = inc;
    history.push_back(inc);
    if (inc <= tol * max(scale, BigReal(1e-300, bits))) break;
    // Roundoff floor: the increment stopped shrinking far below the first step.
    if (it > 2 && inc > last_inc / 2L && inc < max(scale, first_inc) * pow2(-(bits - 32), bits)) break;
    // Stall: no halving over the last 8 sweeps while already well below the
    // solution scale. Cancellation in the boundary sums sets this floor.
    BigReal stall_level = scale * pow2(-(bits / 3), bits);
    if (history.size() > 8) {
      BigReal lo = inc;
      for (std::size_t h = history.size() - 8; h < history.size(); ++h) lo = min(lo, history[h]);
      if (lo < stall_level && history[history.size() - 9] < lo * 2L) break;
    }
    if (it > 2 && inc > last_inc) ++growth;
    else growth = 0;
    if ((growth >= 3 && inc > stall_level) || (it > 2 && inc > first_inc * 1000L))
      throw NumericalError("inner fixed-point iteration diverges (|mu_hat| = " + sol.mu_hat.to_string(3) +
                           "); increase kappa or the depth, or reduce mu_hat");
    if (it == pb.max_iterations)
      throw NumericalError("inner fixed-point iteration did not converge in " + std::to_string(it) +
                           " iterations (increment " + inc.to_string(3) + ")");
    last_inc = inc;
  }

  // A-posteriori residual at panel midpoints between collocation nodes.
  sol.residual = BigReal::zero(bits);
  sol.decay = BigReal::zero(bits);
  for (std::size_t p = 0; p < total; ++p) {
    BigReal m = BigReal::zero(bits);
    for (int kk = 0; kk < nk; ++kk) m += abs(sol.psi[p][kk]);
    BigReal d = m * abs(pow(sol.z[p], ell));
    if (d > sol.decay) sol.decay = d;
  }
  // Barycentric interpolation to the midpoint between nodes 0 and 1 of each panel
  // and between the two central nodes.
  std::vector<BigReal> wts(n);
  for (int i = 0; i < n; ++i) wts[i] = BigReal(((i % 2) ? -1.0 : 1.0) * ((i == 0 || i == n - 1) ? 0.5 : 1.0), bits);
  for (long j = 0; j < np; ++j) {
    for (int probe : {0, n / 2}) {
      BigReal xm = (disc.xi[probe] + disc.xi[probe + 1]) / 2L;
      std::vector<BigReal> lag(n);
      BigReal den = BigReal::zero(bits);
      for (int i = 0; i < n; ++i) {
        lag[i] = wts[i] / (xm - disc.xi[i]);
        den += lag[i];
      }
      for (auto& v : lag) v /= den;
      BigReal mid = BigReal(left[j], bits) + half;
      BigComplex z(mid + half * xm, -Y);
      std::vector<BigComplex> c(nk, BigComplex::zero(bits)), dc(nk, BigComplex::zero(bits)), rr(nk);
      for (int kk = 0; kk < nk; ++kk)
        for (int i = 0; i < n; ++i) {
          c[kk] += sol.psi[index(j, i)][kk] * lag[i];
          dc[kk] += sol.dpsi[index(j, i)][kk] * lag[i];
        }
      rhs(pow(z, two_r), BigComplex(BigReal(1.0, bits)) / pow(z, ell), dc, rr);
      for (int kk = 0; kk < nk; ++kk) {
        BigComplex ik(BigReal::zero(bits), BigReal(static_cast<double>(kk - pb.kf), bits));
        BigReal e = abs(dc[kk] + ik * c[kk] - rr[kk]);
        if (e > sol.residual) sol.residual = e;
      }
    }
  }
  return sol;
}

std::vector<InnerDiffSample> inner_difference(const InnerSolution& u, const InnerSolution& s, double half_window) {
  if (u.branch != Branch::Unstable || s.branch != Branch::Stable)
    throw ValidationError("inner_difference expects (unstable, stable) solutions");
  if (u.depth != s.depth || u.kf != s.kf) throw ValidationError("inner_difference: solutions on different lines");
  int bits = u.z.empty() ? 128 : u.z[0].bits();
  std::vector<InnerDiffSample> out;
  BigReal hw(half_window + 1e-9, bits);
  BigReal tol = pow2(-(bits - 8), bits);
  std::size_t j0 = 0;
  for (std::size_t i = 0; i < u.z.size(); ++i) {
    if (abs(u.z[i].re) > hw) continue;
    while (j0 < s.z.size() && s.z[j0].re < u.z[i].re - tol) ++j0;
    if (j0 >= s.z.size() || abs(s.z[j0].re - u.z[i].re) > tol) continue;
    InnerDiffSample smp;
    smp.z = u.z[i];
    for (int kk = 0; kk <= 2 * u.kf; ++kk) {
      BigComplex d = u.psi[i][kk] - s.psi[j0][kk];
      smp.modes.push_back(d);
      BigComplex dp = d * u.mu_hat;
      if (kk == u.kf) dp += u.gauge - s.gauge;
      smp.psi_modes.push_back(dp);
    }
    out.push_back(std::move(smp));
  }
  if (out.empty()) throw ValidationError("inner_difference: no shared nodes in the overlap window");
  return out;
}

namespace {

// Least squares v_j ≈ χ + β s_j over complex data.
void fit_affine(const std::vector<BigComplex>& s, const std::vector<BigComplex>& v, BigComplex& chi, BigComplex& beta) {
  int bits = v[0].bits();
  std::size_t n = v.size();
  BigComplex S = BigComplex::zero(bits), V = BigComplex::zero(bits), SV = BigComplex::zero(bits);
  BigReal SS = BigReal::zero(bits);
  for (std::size_t j = 0; j < n; ++j) {
    S += s[j];
    V += v[j];
    SV += conj(s[j]) * v[j];
    SS += norm(s[j]);
  }
  // normal equations [n, S; S̄, SS] [χ; β] = [V; SV]
  BigComplex det = BigComplex(SS * static_cast<long>(n)) - conj(S) * S;
  if (abs(det) < pow2(-(bits - 16), bits) * SS * static_cast<long>(n)) {
    chi = V / static_cast<long>(n);
    beta = BigComplex::zero(bits);
    return;
  }
  chi = (V * SS - S * SV) / det;
  beta = (SV * static_cast<long>(n) - conj(S) * V) / det;
}

}  // namespace

StokesData extract_chi(const std::vector<std::vector<InnerDiffSample>>& samples, const InnerProblem& pb,
                       const HarmonicSeries& F1, const BigComplex& b, const BigComplex& C_plus) {
  if (samples.empty() || samples[0].empty()) throw ValidationError("extract_chi: no samples");
  int bits = pb.bits;
  PrecisionGuard guard(bits);
  int kf = pb.kf;
  bool log_case = pb.ell == Rational(2) * pb.r;
  BigReal mu = pb.mu_hat.with_bits(bits);
  int ntau = 4 * kf + 4;
  BigReal two_pi = const_pi(bits) * 2L;
  StokesData out;
  out.F1 = F1;
  out.b = b;
  BigReal gap_exp = rational_real(pb.ell - Rational(2) * pb.r, bits);
  std::vector<BigComplex> s, est, est2;
  std::vector<double> depth_y, depth_mag;
  for (const auto& line : samples) {
    BigReal peak = BigReal::zero(bits);
    for (const auto& smp : line) {
      BigReal m = abs(smp.modes[kf + 1]);
      if (m > peak) peak = m;
      BigComplex acc = BigComplex::zero(bits), acc2 = BigComplex::zero(bits);
      for (int m2 = 0; m2 < ntau; ++m2) {
        BigReal tau = two_pi * static_cast<long>(m2) / static_cast<long>(ntau);
        BigComplex val = BigComplex::zero(bits);
        for (int kk = 0; kk <= 2 * kf; ++kk)
          val += smp.modes[kk] * polar(BigReal(1.0, bits), tau * static_cast<long>(kk - kf));
        BigComplex g = BigComplex::zero(bits);
        if (log_case) g = -F1.evaluate(tau) - b * log(smp.z) * mu;
        BigComplex phase = smp.z - BigComplex(tau) + g * mu;
        acc += val * exp(BigComplex(BigReal::zero(bits), BigReal(1.0, bits)) * phase);
        acc2 += val * exp(BigComplex(BigReal::zero(bits), BigReal(2.0, bits)) * phase);
      }
      est.push_back(acc / static_cast<long>(ntau));
      est2.push_back(acc2 / static_cast<long>(ntau));
      BigComplex zi = BigComplex(BigReal(1.0, bits)) / smp.z;
      s.push_back(log_case ? zi : pow(zi, gap_exp));
    }
    depth_y.push_back(-line[0].z.im.to_double());
    depth_mag.push_back(std::log(std::max(peak.to_double(), 1e-300)));
    out.depths.push_back(depth_y.back());
  }
  // Exponential trend: ln|Δψ̄| against Im z should have unit slope.
  if (depth_y.size() >= 2) {
    double n = static_cast<double>(depth_y.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < depth_y.size(); ++i) {
      double x = -depth_y[i];
      sx += x;
      sy += depth_mag[i];
      sxx += x * x;
      sxy += x * depth_mag[i];
    }
    out.decay_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    if (std::abs(out.decay_slope - 1.0) > 0.25)
      throw NumericalError("asymptotic regime not reached, increase Y (ln|dpsi| slope " +
                           std::to_string(out.decay_slope) + ", expected 1)");
  }
  BigComplex beta;
  fit_affine(s, est, out.chi_minus1, beta);
  out.chi_minus2 = BigComplex::zero(bits);
  for (const auto& e : est2) out.chi_minus2 += e;
  out.chi_minus2 = out.chi_minus2 / static_cast<long>(est2.size());
  // Residual against the fitted model χ + βs; the βs part itself is the
  // finite-depth correction and is reported separately.
  out.residual = BigReal::zero(bits);
  out.correction = BigReal::zero(bits);
  BigReal cm = abs(out.chi_minus1);
  BigReal den = max(cm, BigReal(1e-300, bits));
  for (std::size_t i = 0; i < est.size(); ++i) {
    out.residual = max(out.residual, abs(est[i] - out.chi_minus1 - beta * s[i]) / den);
    out.correction = max(out.correction, abs(beta * s[i]) / den);
  }
  if (cm.is_zero() || out.residual > BigReal(0.1, bits))
    throw NumericalError("asymptotic regime not reached, increase Y (fit residual " + out.residual.to_string(3) +
                         " of |chi|)");
  out.f_mu = C_plus.with_bits(bits) * C_plus.with_bits(bits) * out.chi_minus1;
  return out;
}

StokesData stokes_constant(const InnerProblem& pb, const std::vector<double>& depths, const BigComplex& C_plus,
                           const HarmonicSeries& F1, const BigComplex& b) {
  if (depths.empty()) throw ValidationError("stokes_constant: no depths");
  std::size_t nd = depths.size();
  std::vector<InnerSolution> sols(2 * nd);
  std::vector<std::string> errors(2 * nd);
  std::vector<int> kinds(2 * nd, 0);
  // The difference is O(e^{−Y}) of the solution scale: resolving it to 2^{−40}
  // relative is enough, and cheaper than iterating to the working precision.
  double ymax = *std::max_element(depths.begin(), depths.end());
  BigReal tol = max(pow2(-(pb.bits - 24), pb.bits), exp(BigReal(-ymax, pb.bits)) * pow2(-40, pb.bits));
#pragma omp parallel for schedule(dynamic)
  for (long j = 0; j < static_cast<long>(2 * nd); ++j) {
    try {
      InnerProblem p = pb;
      p.depth = depths[j / 2];
      sols[j] = solve_inner_branch(p, j % 2 == 0 ? Branch::Unstable : Branch::Stable, tol);
    } catch (const ValidationError& e) {
      errors[j] = e.what();
      kinds[j] = 2;
    } catch (const std::exception& e) {
      errors[j] = e.what();
      kinds[j] = 3;
    }
  }
  for (std::size_t j = 0; j < 2 * nd; ++j) {
    if (kinds[j] == 2) throw ValidationError(errors[j]);
    if (kinds[j] == 3) throw NumericalError(errors[j]);
  }
  std::vector<std::vector<InnerDiffSample>> samples;
  for (std::size_t d = 0; d < nd; ++d) {
    auto diff = inner_difference(sols[2 * d], sols[2 * d + 1], pb.half_window);
    BigReal scale = BigReal::zero(pb.bits);
    for (const auto& row : sols[2 * d].psi)
      for (const auto& v : row) scale = max(scale, abs(v));
    BigReal peak = BigReal::zero(pb.bits);
    for (const auto& smp : diff) peak = max(peak, abs(smp.modes[pb.kf + 1]));
    if (peak < scale * pow2(-(pb.bits - 16), pb.bits))
      throw NumericalError("insufficient precision: inner difference at depth " + std::to_string(depths[d]) +
                           " is below 2^-(bits-16) of the solution scale; increase bits or reduce the depth");
    samples.push_back(std::move(diff));
  }
  return extract_chi(samples, pb, F1, b, C_plus);
}

BigComplex chi_first_order(const InnerProblem& pb) {
  if (!pb.ell.is_integer()) throw ValidationError("chi_first_order: integer ell required");
  int bits = pb.bits;
  long l = static_cast<long>(pb.ell.num());
  BigComplex a1 = BigComplex::zero(bits);
  for (const auto& a : pb.A) a1 += a.coeff(1, bits);
  BigReal fact(1.0, bits);
  for (long j = 2; j < l; ++j) fact *= j;
  BigComplex two_pi_i(BigReal::zero(bits), const_pi(bits) * 2L);
  // χ = −2πi Ā₁ i^{ℓ−1}/(ℓ−1)!
  return -(two_pi_i * a1 * i_pow(BigReal(static_cast<double>(l - 1), bits))) / fact;
}

}  // namespace sepsplit
