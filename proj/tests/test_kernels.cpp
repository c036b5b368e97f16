#include <doctest.h>

#include "sepsplit/kernels.hpp"
#include "sepsplit/model_io.hpp"

using namespace sepsplit;

namespace {

std::string models_dir() { return std::string(SEPSPLIT_SOURCE_DIR) + "/models/"; }

}  // namespace

TEST_CASE("worker count") {
  CHECK(worker_count(3) >= 1);
  CHECK(worker_count(0) >= 1);
}

TEST_CASE("arc point kernels: serial and parallel agree bit for bit") {
  PrecisionGuard g(128);
  auto m = load_model(models_dir() + "duffing_x1.json");
  auto spec = make_map_spec(m, BigReal(0.3, 128), BigReal::zero(128), 128);
  auto po = find_periodic_orbit(spec);
  ManifoldArc arc;
  arc.base_x = po.x;
  arc.base_y = po.y;
  arc.dir_x = po.ux;
  arc.dir_y = po.uy;
  arc.Lambda = po.Lambda;
  arc.delta0 = BigReal(1e-6, 128);
  arc.iterations = 3;
  std::vector<BigReal> sig;
  for (int i = 0; i < 6; ++i) sig.push_back(BigReal(-0.5 + 0.2 * i, 128));
  auto a = arc_points_serial(spec, arc, sig, true);
  auto b = arc_points_parallel(spec, arc, sig, true, 2);
  REQUIRE(a.size() == sig.size());
  REQUIRE(b.size() == sig.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].y == b[i].y);
    CHECK(a[i].tx == b[i].tx);
  }
  // Tangent = d(point)/dσ
  BigReal h = pow2(-30, 128);
  auto p = evaluate_arc(spec, arc, sig[2] + h, false);
  auto q = evaluate_arc(spec, arc, sig[2] - h, false);
  CHECK(abs((p.x - q.x) / (h * 2L) - a[2].tx).to_double() < 1e-12);
}

TEST_CASE("sweep kernels agree on an unperturbed model") {
  PrecisionGuard g(128);
  auto m = load_model(models_dir() + "duffing_x1.json");
  m.mu = BigReal::zero(128);
  auto info = analyze_separatrix(m.potential, 128);
  SweepOptions o;
  o.tau0 = BigReal::zero(128);
  o.jobs = 2;
  auto grid = geometric_grid(0.3, 0.1, 3);
  auto a = sweep_serial(m, info, grid, o);
  auto b = sweep_parallel(m, info, grid, o);
  REQUIRE(a.size() == 3);
  REQUIRE(b.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a[i].eps == b[i].eps);
    CHECK(a[i].area.is_zero());
    CHECK(a[i].bits == schedule_bits(info.a.to_double(), grid[i]));
  }
}
