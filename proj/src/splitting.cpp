#include "sepsplit/splitting.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "sepsplit/errors.hpp"
#include "sepsplit/kernels.hpp"
#include "sepsplit/lsq.hpp"
#include "sepsplit/quadrature.hpp"
#include "sepsplit/taylor.hpp"

namespace sepsplit {

namespace {

BigReal period(const PoincareMapSpec& spec) { return const_pi(spec.bits) * 2L * spec.eps.with_bits(spec.bits); }
BigReal start_time(const PoincareMapSpec& spec) { return spec.eps.with_bits(spec.bits) * spec.tau0.with_bits(spec.bits); }

BigReal tol_of(const PoincareMapSpec& spec) {
  return spec.tol_int.is_zero() ? pow2(-(spec.bits - 16), spec.bits) : spec.tol_int.with_bits(spec.bits);
}

BigReal hypot2(const BigReal& a, const BigReal& b) { return sqrt(a * a + b * b); }

// Unit eigenvector of m for the real eigenvalue lam.
void eigenvector(const Mat2& m, const BigReal& lam, BigReal& vx, BigReal& vy) {
  BigReal ax = m.b, ay = lam - m.a;
  BigReal bx = lam - m.d, by = m.c;
  if (hypot2(ax, ay) >= hypot2(bx, by)) {
    vx = ax;
    vy = ay;
  } else {
    vx = bx;
    vy = by;
  }
  BigReal n = hypot2(vx, vy);
  if (n.is_zero()) {
    // m is a multiple of the identity along this eigenvalue; any direction works.
    vx = BigReal(1.0, lam.bits());
    vy = BigReal::zero(lam.bits());
    return;
  }
  vx /= n;
  vy /= n;
}

bool trig(const PoincareMapSpec& spec) { return spec.model.potential.kind == Kind::Trigonometric; }

// Positive once an orbit leaving the base point has passed the apex of the loop.
BigReal progress(const PoincareMapSpec& spec, const ManifoldArc& arc, const BigReal& apex_x, const BigReal& x,
                 const BigReal& y) {
  int s = (apex_x - arc.base_x).sign() >= 0 ? 1 : -1;
  bool unstable = arc.branch == ManifoldBranch::Unstable;
  if (trig(spec)) return (x - apex_x) * static_cast<long>(s);
  return unstable ? -(y * static_cast<long>(s)) : y * static_cast<long>(s);
}

ArcPoint seed_image(const PoincareMapSpec& spec, const ManifoldArc& arc, const BigReal& sigma, int n, bool tangent) {
  int bits = spec.bits;
  PrecisionGuard guard(bits);
  BigReal lnL = log(arc.Lambda);
  BigReal s = arc.delta0 * exp(sigma * lnL);
  IntegratorOptions io;
  io.bits = bits;
  io.tol = tol_of(spec);
  io.ntangent = tangent ? 1 : 0;
  TaylorIntegrator integ(make_field(spec.model, spec.eps.with_bits(bits)), io);
  std::vector<BigReal> st(integ.ncomp(), BigReal::zero(bits));
  st[0] = arc.base_x + s * arc.dir_x;
  st[1] = arc.base_y + s * arc.dir_y;
  if (tangent) {
    st[2] = arc.dir_x * s * lnL;
    st[3] = arc.dir_y * s * lnL;
  }
  BigReal t0 = start_time(spec);
  BigReal span = period(spec) * static_cast<long>(n);
  BigReal t1 = arc.branch == ManifoldBranch::Unstable ? t0 + span : t0 - span;
  if (n > 0) integ.integrate(st, t0, t1);
  ArcPoint p;
  p.sigma = sigma;
  p.x = st[0];
  p.y = st[1];
  if (tangent) {
    p.tx = st[2];
    p.ty = st[3];
  } else {
    p.tx = BigReal::zero(bits);
    p.ty = BigReal::zero(bits);
  }
  return p;
}

BigReal cross(const BigReal& ax, const BigReal& ay, const BigReal& bx, const BigReal& by) { return ax * by - ay * bx; }

}  // namespace

PoincareMapSpec make_map_spec(const SystemModel& model, const BigReal& eps, const BigReal& tau0, int bits) {
  if (eps.sign() <= 0) throw ValidationError("Poincare map: eps must be > 0");
  if (bits < 53 || bits > 4096) throw ValidationError("Poincare map: bits must be in [53, 4096]");
  PoincareMapSpec s;
  s.model = model;
  s.eps = eps.with_bits(bits);
  s.tau0 = tau0.with_bits(bits);
  s.bits = bits;
  s.tol_int = pow2(-(bits - 16), bits);
  return s;
}

int schedule_bits(double a, double eps) {
  return std::max(128, static_cast<int>(std::ceil(2.0 * (a / eps) / std::log(2.0))) + 64);
}

MapImage poincare_map(const PoincareMapSpec& spec, const BigReal& x, const BigReal& y, bool jacobian, int n) {
  int bits = spec.bits;
  BigReal t0 = start_time(spec);
  BigReal t1 = t0 + period(spec) * static_cast<long>(n);
  FlowResult f = integrate_flow(spec.model, spec.eps, x, y, t0, t1, tol_of(spec), bits, jacobian);
  MapImage out;
  out.x = f.x;
  out.y = f.y;
  if (jacobian) out.jacobian = Mat2{f.j11, f.j12, f.j21, f.j22};
  return out;
}

PeriodicOrbit find_periodic_orbit(const PoincareMapSpec& spec) {
  int bits = spec.bits;
  PrecisionGuard guard(bits);
  PeriodicOrbit po;
  po.x = BigReal::zero(bits);
  po.y = BigReal::zero(bits);
  auto cc = critical_class(spec.model.potential);
  if (!cc) throw ValidationError("the origin is not a saddle or parabolic point of the unperturbed system");
  BigReal target = pow2(-(bits - 24), bits);
  MapImage img = poincare_map(spec, po.x, po.y, true);
  if (!cc->hyperbolic) {
    po.parabolic = true;
    po.monodromy = *img.jacobian;
    po.Lambda = BigReal(1.0, bits);
    po.residual = hypot2(img.x, img.y);
    po.det_error = abs(po.monodromy.det() - BigReal(1.0, bits));
    return po;
  }
  for (int it = 0;; ++it) {
    BigReal fx = img.x - po.x, fy = img.y - po.y;
    po.residual = hypot2(fx, fy);
    po.newton_iterations = it;
    if (po.residual <= target) break;
    if (it >= 50) throw NumericalError("periodic orbit: Newton did not converge in 50 steps (residual " +
                                       po.residual.to_string(3) + ")");
    const Mat2& J = *img.jacobian;
    BigReal a = J.a - BigReal(1.0, bits), d = J.d - BigReal(1.0, bits);
    BigReal det = a * d - J.b * J.c;
    if (det.is_zero()) throw NumericalError("periodic orbit: singular Newton matrix");
    po.x -= (d * fx - J.b * fy) / det;
    po.y -= (a * fy - J.c * fx) / det;
    img = poincare_map(spec, po.x, po.y, true);
  }
  po.monodromy = *img.jacobian;
  const Mat2& M = po.monodromy;
  BigReal tr = M.a + M.d;
  BigReal det = M.det();
  po.det_error = abs(det - BigReal(1.0, bits));
  BigReal disc = tr * tr - det * 4L;
  if (disc.sign() <= 0 || tr.sign() <= 0)
    throw NumericalError("hyperbolicity lost: monodromy trace " + tr.to_string(6));
  po.Lambda = (tr + sqrt(disc)) / 2L;
  eigenvector(M, po.Lambda, po.ux, po.uy);
  eigenvector(M, det / po.Lambda, po.sx, po.sy);
  return po;
}

ArcPoint ManifoldArc::interpolate(const BigReal& sigma) const {
  if (points.size() < 2) throw ValidationError("arc interpolation needs two points");
  auto it = std::upper_bound(points.begin(), points.end(), sigma,
                             [](const BigReal& s, const ArcPoint& p) { return s < p.sigma; });
  std::size_t i = it == points.begin() ? 0 : static_cast<std::size_t>(it - points.begin()) - 1;
  if (i + 1 >= points.size()) i = points.size() - 2;
  const ArcPoint& p0 = points[i];
  const ArcPoint& p1 = points[i + 1];
  BigReal h = p1.sigma - p0.sigma;
  BigReal t = (sigma - p0.sigma) / h;
  BigReal t2 = t * t, t3 = t2 * t;
  BigReal h00 = t3 * 2L - t2 * 3L + BigReal(1.0, t.bits());
  BigReal h10 = t3 - t2 * 2L + t;
  BigReal h01 = t2 * 3L - t3 * 2L;
  BigReal h11 = t3 - t2;
  BigReal d00 = (t2 - t) * 6L;
  BigReal d10 = t2 * 3L - t * 4L + BigReal(1.0, t.bits());
  BigReal d01 = (t - t2) * 6L;
  BigReal d11 = t2 * 3L - t * 2L;
  ArcPoint out;
  out.sigma = sigma;
  out.x = h00 * p0.x + h10 * h * p0.tx + h01 * p1.x + h11 * h * p1.tx;
  out.y = h00 * p0.y + h10 * h * p0.ty + h01 * p1.y + h11 * h * p1.ty;
  out.tx = (d00 * p0.x + d01 * p1.x) / h + d10 * p0.tx + d11 * p1.tx;
  out.ty = (d00 * p0.y + d01 * p1.y) / h + d10 * p0.ty + d11 * p1.ty;
  return out;
}

ArcPoint evaluate_arc(const PoincareMapSpec& spec, const ManifoldArc& arc, const BigReal& sigma, bool tangent) {
  return seed_image(spec, arc, sigma.with_bits(spec.bits), arc.iterations, tangent);
}

BigReal seed_distance(const PoincareMapSpec& spec, const PeriodicOrbit& orbit, ManifoldBranch branch,
                      const BigReal& tol_manifold, BigReal* departure) {
  int bits = spec.bits;
  PrecisionGuard guard(bits);
  bool unstable = branch == ManifoldBranch::Unstable;
  const BigReal& vx = unstable ? orbit.ux : orbit.sx;
  const BigReal& vy = unstable ? orbit.uy : orbit.sy;
  BigReal delta(1e-4, bits);
  BigReal floor = pow2(-(bits / 2), bits);
  while (true) {
    MapImage img = poincare_map(spec, orbit.x + delta * vx, orbit.y + delta * vy, false, unstable ? 1 : -1);
    BigReal e = abs(cross(vx, vy, img.x - orbit.x, img.y - orbit.y));
    if (e <= tol_manifold) {
      if (departure) *departure = e;
      return delta;
    }
    delta /= 2L;
    if (delta < floor)
      throw NumericalError("seed halving test failed down to delta0 = " + delta.to_string(3) +
                           " (departure " + e.to_string(3) + "); increase bits");
  }
}

ManifoldArc grow_manifold(const PoincareMapSpec& spec, const PeriodicOrbit& orbit, const SeparatrixInfo& sep,
                          ManifoldBranch branch, const ArcOptions& opt) {
  if (orbit.parabolic) throw ValidationError("manifold growth requires a hyperbolic periodic orbit (parabolic case is out of scope)");
  int bits = spec.bits;
  PrecisionGuard guard(bits);
  bool unstable = branch == ManifoldBranch::Unstable;
  ManifoldArc arc;
  arc.branch = branch;
  arc.work_bits = bits;
  arc.Lambda = orbit.Lambda;
  arc.base_x = orbit.x;
  arc.base_y = orbit.y;
  if (!unstable && trig(spec)) arc.base_x += const_pi(bits) * 2L;
  BigReal apex_x = sep.apex_x.with_bits(bits);
  arc.dir_x = unstable ? orbit.ux : orbit.sx;
  arc.dir_y = unstable ? orbit.uy : orbit.sy;
  if ((arc.dir_x * (apex_x - arc.base_x)).sign() < 0) {
    arc.dir_x = -arc.dir_x;
    arc.dir_y = -arc.dir_y;
  }
  BigReal tol_manifold = pow2(-(bits / 2), bits);
  arc.delta0 = seed_distance(spec, orbit, branch, tol_manifold, &arc.seed_error);

  // Iterates needed for the middle seed to pass the apex.
  BigReal mid(0.5, bits);
  {
    ArcPoint p = seed_image(spec, arc, mid, 0, false);
    MapImage img{p.x, p.y, std::nullopt};
    int n = 0;
    BigReal far = abs(apex_x - arc.base_x) / 2L;
    while (hypot2(img.x - arc.base_x, img.y - arc.base_y) < far ||
           progress(spec, arc, apex_x, img.x, img.y).sign() <= 0) {
      img = poincare_map(spec, img.x, img.y, false, unstable ? 1 : -1);
      ++n;
      if (n > 100000) throw NumericalError("manifold never reaches the apex section");
      if (abs(img.x) + abs(img.y) > BigReal(1e6, bits)) throw NumericalError("manifold escapes before the apex");
    }
    arc.iterations = n;
  }
  // σ at which the images cross the apex section.
  double lo = -0.5, hi = 0.5;
  auto prog = [&](double s) {
    ArcPoint p = seed_image(spec, arc, BigReal(s, bits), arc.iterations, false);
    return progress(spec, arc, apex_x, p.x, p.y).sign();
  };
  if (prog(lo) <= 0 && prog(hi) > 0) {
    for (int i = 0; i < 24; ++i) {
      double m = 0.5 * (lo + hi);
      if (prog(m) > 0) hi = m;
      else lo = m;
    }
  }
  double sa = 0.5 * (lo + hi);
  arc.sigma_apex = BigReal(sa, bits);

  std::vector<BigReal> sig;
  int m = std::max(4, opt.initial_points);
  for (int i = 0; i < m; ++i) sig.push_back(BigReal(sa + opt.span * (static_cast<double>(i) / (m - 1) - 0.5), bits));
  auto eval = [&](const std::vector<BigReal>& s) {
    return opt.parallel ? arc_points_parallel(spec, arc, s, true) : arc_points_serial(spec, arc, s, true);
  };
  arc.points = eval(sig);
  // Refinement: split intervals violating the gap or turning-angle contract.
  while (static_cast<int>(arc.points.size()) < opt.max_points) {
    std::vector<BigReal> add;
    for (std::size_t i = 0; i + 1 < arc.points.size(); ++i) {
      const ArcPoint& a = arc.points[i];
      const ArcPoint& b = arc.points[i + 1];
      double gap = hypot2(b.x - a.x, b.y - a.y).to_double();
      double ang = std::abs(std::atan2(cross(a.tx, a.ty, b.tx, b.ty).to_double(),
                                       (a.tx * b.tx + a.ty * b.ty).to_double()));
      if (gap > opt.gap_max || ang > opt.angle_max) add.push_back((a.sigma + b.sigma) / 2L);
    }
    if (add.empty()) break;
    auto extra = eval(add);
    arc.points.insert(arc.points.end(), extra.begin(), extra.end());
    std::sort(arc.points.begin(), arc.points.end(), [](const ArcPoint& a, const ArcPoint& b) { return a.sigma < b.sigma; });
  }
  return arc;
}

namespace {

struct Projection {
  bool valid = false;
  BigReal sigma_s;
  BigReal distance;  // signed, positive to the left of the stable tangent
};

Projection project(const PoincareMapSpec& spec, const ManifoldArc& arc_s, const ArcPoint& p) {
  Projection pr;
  std::size_t best = 0;
  BigReal bd = hypot2(arc_s.points[0].x - p.x, arc_s.points[0].y - p.y);
  for (std::size_t i = 1; i < arc_s.points.size(); ++i) {
    BigReal d = hypot2(arc_s.points[i].x - p.x, arc_s.points[i].y - p.y);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  BigReal s = arc_s.points[best].sigma;
  auto step = [&](const ArcPoint& q) {
    BigReal dx = p.x - q.x, dy = p.y - q.y;
    return (dx * q.tx + dy * q.ty) / (q.tx * q.tx + q.ty * q.ty);
  };
  for (int i = 0; i < 4; ++i) s += step(arc_s.interpolate(s));
  if (s < arc_s.sigma_min() || s > arc_s.sigma_max()) return pr;
  ArcPoint q;
  for (int i = 0; i < 2; ++i) {
    q = evaluate_arc(spec, arc_s, s, true);
    s += step(q);
    if (s < arc_s.sigma_min() || s > arc_s.sigma_max()) return pr;
  }
  q = evaluate_arc(spec, arc_s, s, true);
  pr.valid = s >= arc_s.sigma_min() && s <= arc_s.sigma_max();
  pr.sigma_s = s;
  pr.distance = cross(q.tx, q.ty, p.x - q.x, p.y - q.y) / hypot2(q.tx, q.ty);
  return pr;
}

HomoclinicPoint refine_homoclinic(const PoincareMapSpec& spec, const ManifoldArc& arc_u, const ManifoldArc& arc_s,
                                  BigReal su, BigReal ss) {
  int bits = spec.bits;
  BigReal target = pow2(-(bits * 3 / 4) + 16, bits);
  HomoclinicPoint h;
  BigReal last;
  for (int it = 0; it < 40; ++it) {
    ArcPoint pu = evaluate_arc(spec, arc_u, su, true);
    ArcPoint ps = evaluate_arc(spec, arc_s, ss, true);
    BigReal gx = pu.x - ps.x, gy = pu.y - ps.y;
    BigReal res = hypot2(gx, gy);
    BigReal det = cross(pu.tx, pu.ty, ps.tx, ps.ty);  // det [Tu, −Ts] = −cross(Tu, Ts)
    h.sigma_u = su;
    h.sigma_s = ss;
    h.x = pu.x;
    h.y = pu.y;
    h.residual = res;
    h.sin_angle = det / (hypot2(pu.tx, pu.ty) * hypot2(ps.tx, ps.ty));
    if (abs(h.sin_angle) < pow2(-(bits / 4), bits))
      throw NumericalError("transversality lost: manifolds are tangent at the homoclinic point (sin angle " +
                           h.sin_angle.to_string(3) + ")");
    if (res <= target) return h;
    if (it > 6 && res > last / 2L && res < pow2(-(bits / 2), bits)) return h;  // roundoff floor
    last = res;
    // [Tu, −Ts] (dσu, dσs) = −G
    BigReal dsu = -(cross(gx, gy, ps.tx, ps.ty)) / det;
    BigReal dss = cross(pu.tx, pu.ty, gx, gy) / det;
    su += dsu;
    ss += dss;
    if (su < arc_u.sigma_min() || su > arc_u.sigma_max() || ss < arc_s.sigma_min() || ss > arc_s.sigma_max())
      throw NumericalError("homoclinic point: Newton left the computed arcs");
  }
  throw NumericalError("homoclinic point: Newton did not converge (residual " + h.residual.to_string(3) + ")");
}

}  // namespace

HomoclinicPair find_homoclinics(const PoincareMapSpec& spec, const ManifoldArc& arc_u, const ManifoldArc& arc_s) {
  int bits = spec.bits;
  PrecisionGuard guard(bits);
  std::size_t n = arc_u.points.size();
  std::vector<Projection> pr(n);
  std::vector<std::exception_ptr> errs(n);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(n); ++i) {
    try {
      PrecisionGuard g(bits);
      pr[i] = project(spec, arc_s, arc_u.points[i]);
    } catch (...) {
      errs[i] = std::current_exception();
    }
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  HomoclinicPair pair;
  pair.max_distance = BigReal::zero(bits);
  struct Zero {
    BigReal su, ss;
  };
  std::vector<Zero> zeros;
  for (std::size_t i = 0; i < n; ++i) {
    if (pr[i].valid) pair.max_distance = max(pair.max_distance, abs(pr[i].distance));
    if (i + 1 >= n || !pr[i].valid || !pr[i + 1].valid) continue;
    const BigReal& d0 = pr[i].distance;
    const BigReal& d1 = pr[i + 1].distance;
    if (d0.sign() * d1.sign() > 0 || (d0.is_zero() && d1.is_zero())) continue;
    if (d1.is_zero()) continue;  // counted at the next interval
    BigReal w = d0 / (d0 - d1);
    Zero z;
    z.su = arc_u.points[i].sigma + (arc_u.points[i + 1].sigma - arc_u.points[i].sigma) * w;
    z.ss = pr[i].sigma_s + (pr[i + 1].sigma_s - pr[i].sigma_s) * w;
    zeros.push_back(z);
  }
  if (zeros.size() < 2)
    throw NumericalError("no transverse homoclinic pair found: signed distance between the arcs never changes sign "
                         "twice (max |distance| = " + pair.max_distance.to_string(3) +
                         "); the splitting may be below resolution");
  std::size_t best = 0;
  double bestd = 1e300;
  for (std::size_t i = 0; i + 1 < zeros.size(); ++i) {
    double mid = ((zeros[i].su + zeros[i + 1].su) / 2L - arc_u.sigma_apex).to_double();
    if (std::abs(mid) < bestd) {
      bestd = std::abs(mid);
      best = i;
    }
  }
  HomoclinicPoint h[2];
#pragma omp parallel for
  for (int j = 0; j < 2; ++j) {
    try {
      PrecisionGuard g(bits);
      h[j] = refine_homoclinic(spec, arc_u, arc_s, zeros[best + j].su, zeros[best + j].ss);
    } catch (...) {
      errs[j] = std::current_exception();
    }
  }
  for (int j = 0; j < 2; ++j)
    if (errs[j]) std::rethrow_exception(errs[j]);
  if (abs(h[0].sigma_u - h[1].sigma_u) < pow2(-20, bits))
    throw NumericalError("homoclinic refinement collapsed both candidates onto one point");
  pair.z1 = h[0];
  pair.z2 = h[1];
  return pair;
}

namespace {

struct OrbitEnds {
  BigReal action;
  BigReal x, y;
};

// Action ∫(y dx − H dt) along the orbit of (x, y) at t0 over n periods
// (negative n: backward, returned as ∫ over [t0 − |n|T, t0]).
struct ActionOrbit {
  const PoincareMapSpec& spec;
  TaylorIntegrator integ;
  std::vector<BigReal> st;
  BigReal t;
  int dir;
  ActionOrbit(const PoincareMapSpec& s, const BigReal& x, const BigReal& y, int direction)
      : spec(s), integ(make_field(s.model, s.eps.with_bits(s.bits)), [&] {
          IntegratorOptions io;
          io.bits = s.bits;
          io.tol = tol_of(s);
          io.action = true;
          return io;
        }()),
        dir(direction) {
    st.assign(integ.ncomp(), BigReal::zero(s.bits));
    st[0] = x;
    st[1] = y;
    t = start_time(s);
  }
  void step() {
    BigReal t1 = dir > 0 ? t + period(spec) : t - period(spec);
    integ.integrate(st, t, t1);
    t = t1;
  }
  BigReal action() const { return dir > 0 ? st.back() : -st.back(); }
};

}  // namespace

SplittingMeasurement lobe_area(const PoincareMapSpec& spec, const PeriodicOrbit& orbit, const ManifoldArc& arc_u,
                               const ManifoldArc& arc_s, const HomoclinicPair& pair) {
  (void)orbit;
  int bits = spec.bits;
  PrecisionGuard guard(bits);
  SplittingMeasurement m;
  m.eps = spec.eps;
  m.mu = spec.model.mu;
  m.tau0 = spec.tau0;
  m.pair = pair;
  m.work_bits = bits;
  m.method = "action_sum";

  // Action sum with tail corrections along the local manifolds:
  // forward tails differ by −∫ y dx along W^s between the endpoints, backward
  // tails by +∫ y dx along W^u.
  BigReal t_target = pow2(-(bits / 3), bits);
  BigReal tail_f, tail_b;
  BigReal S[2];
  int periods = 0;
  for (int dir : {1, -1}) {
    const BigReal& bx = dir > 0 ? arc_s.base_x : arc_u.base_x;
    const BigReal& by = dir > 0 ? arc_s.base_y : arc_u.base_y;
    ActionOrbit o1(spec, pair.z1.x, pair.z1.y, dir);
    ActionOrbit o2(spec, pair.z2.x, pair.z2.y, dir);
    int n = 0;
    while (true) {
      BigReal d1 = hypot2(o1.st[0] - bx, o1.st[1] - by);
      BigReal d2 = hypot2(o2.st[0] - bx, o2.st[1] - by);
      if (d1 <= t_target && d2 <= t_target) break;
      if (n > 200000 || d1 > BigReal(1e6, bits)) throw NumericalError("homoclinic orbit does not approach the periodic orbit");
      o1.step();
      o2.step();
      ++n;
    }
    periods = std::max(periods, n);
    BigReal ymean = (o1.st[1] + o2.st[1]) / 2L;
    BigReal dx = o1.st[0] - o2.st[0];
    if (dir > 0) tail_f = -(ymean * dx);
    else tail_b = ymean * dx;
    S[dir > 0 ? 0 : 1] = o1.action() - o2.action();
  }
  m.truncation_periods = periods;
  BigReal dw = S[0] + S[1] + tail_f + tail_b;
  m.area_action = abs(dw);

  // Boundary cross-check: ∮ y dx along W^u from z1 to z2 and back along W^s.
  int nq = std::max(20, bits / 8);
  auto line_integral = [&](const ManifoldArc& arc, const BigReal& s0, const BigReal& s1, int nodes) {
    auto rule = gauss_legendre(nodes, bits);
    BigReal half = (s1 - s0) / 2L, mid = (s0 + s1) / 2L;
    std::vector<BigReal> sig;
    for (const auto& x : rule->nodes) sig.push_back(mid + half * x);
    auto pts = arc_points_parallel(spec, arc, sig, true);
    BigReal acc = BigReal::zero(bits);
    for (std::size_t i = 0; i < pts.size(); ++i) acc += rule->weights[i] * pts[i].y * pts[i].tx;
    return acc * half;
  };
  BigReal iu = line_integral(arc_u, pair.z1.sigma_u, pair.z2.sigma_u, nq);
  BigReal is = line_integral(arc_s, pair.z1.sigma_s, pair.z2.sigma_s, nq);
  BigReal iu2 = line_integral(arc_u, pair.z1.sigma_u, pair.z2.sigma_u, nq * 2 / 3);
  BigReal is2 = line_integral(arc_s, pair.z1.sigma_s, pair.z2.sigma_s, nq * 2 / 3);
  m.area_boundary = abs(iu - is);
  m.boundary_quad_error = abs((iu - is) - (iu2 - is2));

  BigReal disc = abs(m.area_action - m.area_boundary);
  BigReal floor = pow2(-(bits * 3 / 4) + 24, bits);
  BigReal est_action = t_target * t_target * t_target * 4L + floor;
  m.area = m.area_action;
  m.est_error = max(m.boundary_quad_error, disc);
  if (disc > (est_action + m.boundary_quad_error + floor) * 10L && disc > m.area * BigReal(1e-3, bits))
    throw NumericalError("lobe area: action sum " + m.area_action.to_string(8) + " and boundary integral " +
                         m.area_boundary.to_string(8) + " disagree");
  return m;
}

SplittingMeasurement measure_splitting(const SystemModel& model, const SeparatrixInfo& sep, const BigReal& eps,
                                       const BigReal& tau0, int bits, const MeasureOptions& opt) {
  auto t0 = std::chrono::steady_clock::now();
  int guard_bits = opt.guard_bits >= 0 ? opt.guard_bits : bits / 4 + 32;
  int wb = bits + guard_bits;
  PrecisionGuard guard(wb);
  if (model.potential.kind == Kind::Polynomial) {
    auto cc = critical_class(model.potential);
    if (cc && !cc->hyperbolic) throw ValidationError("direct measurement of the parabolic case is out of scope");
  }
  PoincareMapSpec spec = make_map_spec(model, eps, tau0, wb);
  SplittingMeasurement m;
  if (model.mu.is_zero() || model.perturbation.empty()) {
    m.eps = eps;
    m.mu = model.mu;
    m.tau0 = tau0;
    m.area = BigReal::zero(bits);
    m.est_error = BigReal::zero(bits);
    m.area_action = m.area;
    m.area_boundary = m.area;
    m.boundary_quad_error = m.area;
    m.method = "below_resolution";
  } else {
    PeriodicOrbit po = find_periodic_orbit(spec);
    ManifoldArc au = grow_manifold(spec, po, sep, ManifoldBranch::Unstable, opt.arc);
    ManifoldArc as = grow_manifold(spec, po, sep, ManifoldBranch::Stable, opt.arc);
    HomoclinicPair pair = find_homoclinics(spec, au, as);
    m = lobe_area(spec, po, au, as, pair);
  }
  m.bits = bits;
  m.area = m.area.with_bits(bits);
  m.est_error = m.est_error.with_bits(bits);
  m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return m;
}

namespace {

double jackknife(const std::vector<double>& vals) {
  double n = static_cast<double>(vals.size());
  double mean = 0;
  for (double v : vals) mean += v;
  mean /= n;
  double s = 0;
  for (double v : vals) s += (v - mean) * (v - mean);
  return std::sqrt((n - 1) / n * s);
}

LsqResult fit_rows(const std::vector<double>& eps, const std::vector<double>& obs, bool free_law,
                   const std::vector<std::size_t>& use) {
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (std::size_t i : use) {
    if (free_law) rows.push_back({1.0, std::log(eps[i]), 1.0 / eps[i]});
    else rows.push_back({1.0, std::log(1.0 / eps[i])});
    y.push_back(obs[i]);
  }
  return fit_linear_lsq(rows, y, free_law ? std::vector<std::string>{"1", "ln eps", "1/eps"}
                                          : std::vector<std::string>{"1", "ln(1/eps)"});
}

}  // namespace

FitResult fit_law(const std::vector<double>& eps, const std::vector<BigReal>& area) {
  if (eps.size() != area.size()) throw ValidationError("fit: size mismatch");
  if (eps.size() < 4) throw ValidationError("fit: at least 4 measurements are required");
  std::vector<double> obs;
  for (const auto& a : area) {
    if (a.sign() <= 0) throw ValidationError("fit: areas must be positive");
    obs.push_back(log(a).to_double());
  }
  std::vector<std::size_t> all(eps.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  LsqResult r = fit_rows(eps, obs, true, all);
  FitResult f;
  f.law = "free";
  f.K = exp(BigReal(r.coeffs[0]));
  f.beta = BigReal(r.coeffs[1]);
  f.a_fit = BigReal(-r.coeffs[2]);
  f.residuals = r.residuals;
  f.eps_min = *std::min_element(eps.begin(), eps.end());
  f.eps_max = *std::max_element(eps.begin(), eps.end());
  std::vector<double> ks, bs, as;
  for (std::size_t drop = 0; drop < eps.size(); ++drop) {
    std::vector<std::size_t> use;
    for (std::size_t i = 0; i < eps.size(); ++i)
      if (i != drop) use.push_back(i);
    LsqResult q = fit_rows(eps, obs, true, use);
    ks.push_back(std::exp(q.coeffs[0]));
    bs.push_back(q.coeffs[1]);
    as.push_back(-q.coeffs[2]);
  }
  f.K_err = jackknife(ks);
  f.beta_err = jackknife(bs);
  f.a_err = jackknife(as);
  return f;
}

FitResult fit_law_fixed_a(const std::vector<double>& eps, const std::vector<BigReal>& area, double a, double beta) {
  if (eps.size() != area.size()) throw ValidationError("fit: size mismatch");
  if (eps.size() < 3) throw ValidationError("fit: at least 3 measurements are required for the fixed-a law");
  std::vector<double> obs;
  for (std::size_t i = 0; i < area.size(); ++i) {
    if (area[i].sign() <= 0) throw ValidationError("fit: areas must be positive");
    obs.push_back(log(area[i]).to_double() + a / eps[i] - beta * std::log(eps[i]));
  }
  std::vector<std::size_t> all(eps.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  LsqResult r = fit_rows(eps, obs, false, all);
  FitResult f;
  f.law = "fixed_a_log";
  f.K = exp(BigReal(r.coeffs[0]));
  f.beta = BigReal(beta);
  f.a_fit = BigReal(a);
  f.log_coeff = BigReal(r.coeffs[1]);
  f.residuals = r.residuals;
  f.eps_min = *std::min_element(eps.begin(), eps.end());
  f.eps_max = *std::max_element(eps.begin(), eps.end());
  std::vector<double> ks, ls;
  for (std::size_t drop = 0; drop < eps.size(); ++drop) {
    std::vector<std::size_t> use;
    for (std::size_t i = 0; i < eps.size(); ++i)
      if (i != drop) use.push_back(i);
    LsqResult q = fit_rows(eps, obs, false, use);
    ks.push_back(std::exp(q.coeffs[0]));
    ls.push_back(q.coeffs[1]);
  }
  f.K_err = jackknife(ks);
  f.log_err = jackknife(ls);
  return f;
}

std::vector<double> geometric_grid(double start, double stop, int count) {
  if (count < 1) throw ValidationError("grid: count must be >= 1");
  if (start <= 0 || stop <= 0) throw ValidationError("grid: geometric grid needs positive endpoints");
  std::vector<double> g;
  if (count == 1) return {start};
  for (int i = 0; i < count; ++i) g.push_back(start * std::pow(stop / start, static_cast<double>(i) / (count - 1)));
  return g;
}

std::vector<SweepRow> sweep(const SystemModel& model, const SeparatrixInfo& sep, const std::vector<double>& eps_grid,
                            const SweepOptions& opt) {
  return opt.jobs > 1 ? sweep_parallel(model, sep, eps_grid, opt) : sweep_serial(model, sep, eps_grid, opt);
}

FitResult sweep_and_fit(const SystemModel& model, const SeparatrixInfo& sep, const std::vector<double>& eps_grid,
                        const SweepOptions& opt, std::vector<SweepRow>* rows_out) {
  if (eps_grid.size() < 4) throw ValidationError("sweep_and_fit: at least 4 grid points are required");
  std::vector<SweepRow> rows = sweep(model, sep, eps_grid, opt);
  std::vector<double> e;
  std::vector<BigReal> a;
  for (const auto& r : rows) {
    e.push_back(r.eps);
    a.push_back(r.area);
  }
  if (rows_out) *rows_out = rows;
  return fit_law(e, a);
}

}  // namespace sepsplit
