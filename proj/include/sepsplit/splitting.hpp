#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sepsplit/model.hpp"
#include "sepsplit/separatrix.hpp"

namespace sepsplit {

// Stroboscopic map over one forcing period 2πε, starting at t = ε τ₀.
struct PoincareMapSpec {
  SystemModel model;
  BigReal eps;
  BigReal tau0;
  int bits = 128;
  BigReal tol_int;  // zero → 2^{−(bits−16)}
};

PoincareMapSpec make_map_spec(const SystemModel& model, const BigReal& eps, const BigReal& tau0, int bits);

// bits = max(128, ⌈2(a/ε)/ln 2⌉ + 64)
int schedule_bits(double a, double eps);

struct Mat2 {
  BigReal a, b, c, d;  // [[a, b], [c, d]]
  BigReal det() const { return a * d - b * c; }
};

struct MapImage {
  BigReal x, y;
  std::optional<Mat2> jacobian;
};

// P^n(x, y); negative n iterates the inverse map.
MapImage poincare_map(const PoincareMapSpec& spec, const BigReal& x, const BigReal& y, bool jacobian = true,
                      int n = 1);

struct PeriodicOrbit {
  BigReal x, y;
  Mat2 monodromy;
  BigReal Lambda;            // unstable multiplier (> 1); 1/Λ is the stable one
  BigReal ux, uy, sx, sy;    // unit eigenvectors
  BigReal residual;
  BigReal det_error;         // |det M − 1|
  int newton_iterations = 0;
  bool parabolic = false;
};

PeriodicOrbit find_periodic_orbit(const PoincareMapSpec& spec);

enum class ManifoldBranch { Unstable, Stable };

struct ArcPoint {
  BigReal sigma;
  BigReal x, y;
  BigReal tx, ty;  // d(x, y)/dσ
};

// Points of W^u (W^s) as images of the linear seed z_b + δ₀Λ^σ v under n
// forward (backward) iterates. One unit of σ is one fundamental domain.
struct ManifoldArc {
  ManifoldBranch branch = ManifoldBranch::Unstable;
  BigReal base_x, base_y;  // the fixed point, or its 2π translate for the stable pendulum branch
  BigReal dir_x, dir_y;
  BigReal delta0;
  BigReal Lambda;
  BigReal seed_error;      // normal departure of P(seed) at δ₀ from the seed line
  int iterations = 0;
  int work_bits = 0;
  BigReal sigma_apex;      // seed parameter landing on the apex section
  std::vector<ArcPoint> points;

  // Cubic Hermite interpolation in σ.
  ArcPoint interpolate(const BigReal& sigma) const;
  BigReal sigma_min() const { return points.front().sigma; }
  BigReal sigma_max() const { return points.back().sigma; }
};

// Exact arc point (one trajectory of `iterations` periods).
ArcPoint evaluate_arc(const PoincareMapSpec& spec, const ManifoldArc& arc, const BigReal& sigma, bool tangent);

struct ArcOptions {
  double span = 1.3;        // fundamental domains covered, centered at the apex
  int initial_points = 24;
  double gap_max = 0.05;    // max distance between consecutive points
  double angle_max = 0.15;  // max turning angle between consecutive tangents
  int max_points = 400;
  bool parallel = true;
};

// Halving test: seed distance δ₀ from 10⁻⁴ down until the quadratic departure
// of the mapped seed is ≤ tol_manifold.
BigReal seed_distance(const PoincareMapSpec& spec, const PeriodicOrbit& orbit, ManifoldBranch branch,
                      const BigReal& tol_manifold, BigReal* departure = nullptr);

ManifoldArc grow_manifold(const PoincareMapSpec& spec, const PeriodicOrbit& orbit, const SeparatrixInfo& sep,
                          ManifoldBranch branch, const ArcOptions& opt = {});

struct HomoclinicPoint {
  BigReal sigma_u, sigma_s;
  BigReal x, y;
  BigReal residual;
  BigReal sin_angle;  // transversality
};

struct HomoclinicPair {
  HomoclinicPoint z1, z2;
  BigReal max_distance;  // largest |signed distance| sampled along the arcs
};

HomoclinicPair find_homoclinics(const PoincareMapSpec& spec, const ManifoldArc& arc_u, const ManifoldArc& arc_s);

struct SplittingMeasurement {
  BigReal eps, mu, tau0;
  BigReal area;
  BigReal est_error;
  BigReal area_action, area_boundary;
  BigReal boundary_quad_error;
  int truncation_periods = 0;
  HomoclinicPair pair;
  std::string method;  // "action_sum" | "below_resolution"
  int bits = 0;
  int work_bits = 0;
  double seconds = 0.0;
};

SplittingMeasurement lobe_area(const PoincareMapSpec& spec, const PeriodicOrbit& orbit, const ManifoldArc& arc_u,
                               const ManifoldArc& arc_s, const HomoclinicPair& pair);

struct MeasureOptions {
  ArcOptions arc;
  int guard_bits = -1;  // < 0 → bits/4 + 32
};

// Full pipeline: periodic orbit, arcs, homoclinic pair, area.
SplittingMeasurement measure_splitting(const SystemModel& model, const SeparatrixInfo& sep, const BigReal& eps,
                                       const BigReal& tau0, int bits, const MeasureOptions& opt = {});

struct FitResult {
  BigReal K, beta, a_fit;
  std::optional<BigReal> log_coeff;  // coefficient of ln(1/ε) in the exponent
  double K_err = 0.0, beta_err = 0.0, a_err = 0.0, log_err = 0.0;  // jackknife
  std::vector<double> residuals;
  double eps_min = 0.0, eps_max = 0.0;
  std::string law;  // "free" | "fixed_a_log"
};

// ln A = c₀ + c₁ ln ε + c₂/ε: K = e^{c₀}, β = c₁, a = −c₂.
FitResult fit_law(const std::vector<double>& eps, const std::vector<BigReal>& area);
// a and β fixed: ln A + a/ε − β ln ε = c₀ + c ln(1/ε).
FitResult fit_law_fixed_a(const std::vector<double>& eps, const std::vector<BigReal>& area, double a, double beta);

struct SweepRow {
  double eps = 0.0;
  BigReal area;
  BigReal est_error;
  int bits = 0;
  double seconds = 0.0;
};

// Geometric grid from start to stop (count points, strictly decreasing when start > stop).
std::vector<double> geometric_grid(double start, double stop, int count);

struct SweepOptions {
  BigReal tau0;
  int jobs = 1;
  int min_bits = 0;  // bits = max(schedule_bits, min_bits)
  MeasureOptions measure;
};

std::vector<SweepRow> sweep(const SystemModel& model, const SeparatrixInfo& sep, const std::vector<double>& eps_grid,
                            const SweepOptions& opt);
FitResult sweep_and_fit(const SystemModel& model, const SeparatrixInfo& sep, const std::vector<double>& eps_grid,
                        const SweepOptions& opt, std::vector<SweepRow>* rows = nullptr);

}  // namespace sepsplit
