// Serial reference kernels against their OpenMP versions.
//   bench_kernels --benchmark_filter=Arc
#include <benchmark/benchmark.h>

#include <memory>

#include "sepsplit/kernels.hpp"
#include "sepsplit/model_io.hpp"

using namespace sepsplit;

namespace {

struct Fixture {
  SystemModel model;
  SeparatrixInfo info;
  PoincareMapSpec spec;
  ManifoldArc arc;
  std::vector<BigReal> sigmas;
};

// Built once: an unstable arc of the forced Duffing map at ε = 0.3.
const Fixture& fixture() {
  static std::unique_ptr<Fixture> f = [] {
    set_default_bits(128);
    auto fx = std::make_unique<Fixture>();
    fx->model = load_model(std::string(SEPSPLIT_SOURCE_DIR) + "/models/duffing_x1.json");
    fx->info = analyze_separatrix(fx->model.potential, 128);
    fx->spec = make_map_spec(fx->model, BigReal(0.3, 128), const_pi(128) / 2L, 128);
    auto po = find_periodic_orbit(fx->spec);
    ArcOptions o;
    o.initial_points = 8;
    o.max_points = 8;
    fx->arc = grow_manifold(fx->spec, po, fx->info, ManifoldBranch::Unstable, o);
    BigReal lo = fx->arc.sigma_min(), hi = fx->arc.sigma_max();
    for (int i = 0; i < 16; ++i) fx->sigmas.push_back(lo + (hi - lo) * static_cast<long>(i) / 15L);
    return fx;
  }();
  return *f;
}

void BM_ArcPointsSerial(benchmark::State& st) {
  const auto& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(arc_points_serial(f.spec, f.arc, f.sigmas, true));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(f.sigmas.size()));
}

void BM_ArcPointsParallel(benchmark::State& st) {
  const auto& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(arc_points_parallel(f.spec, f.arc, f.sigmas, true, st.range(0)));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(f.sigmas.size()));
}

std::vector<MelnikovRequest> melnikov_requests() {
  std::vector<MelnikovRequest> req;
  for (double e : {0.5, 0.4, 0.3, 0.25}) {
    req.push_back({1, BigReal(e, 128)});
    req.push_back({-1, BigReal(e, 128)});
  }
  return req;
}

void BM_MelnikovSerial(benchmark::State& st) {
  const auto& f = fixture();
  auto req = melnikov_requests();
  for (auto _ : st) benchmark::DoNotOptimize(melnikov_batch_serial(f.model, f.info, req, 128));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(req.size()));
}

void BM_MelnikovParallel(benchmark::State& st) {
  const auto& f = fixture();
  auto req = melnikov_requests();
  for (auto _ : st) benchmark::DoNotOptimize(melnikov_batch_parallel(f.model, f.info, req, 128, {}, st.range(0)));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(req.size()));
}

// Whole measurements; one iteration each since a point takes seconds.
void BM_SweepSerial(benchmark::State& st) {
  const auto& f = fixture();
  SweepOptions o;
  o.tau0 = const_pi(128) / 2L;
  for (auto _ : st) benchmark::DoNotOptimize(sweep_serial(f.model, f.info, {0.5, 0.45}, o));
}

void BM_SweepParallel(benchmark::State& st) {
  const auto& f = fixture();
  SweepOptions o;
  o.tau0 = const_pi(128) / 2L;
  o.jobs = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(sweep_parallel(f.model, f.info, {0.5, 0.45}, o));
}

}  // namespace

BENCHMARK(BM_ArcPointsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ArcPointsParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MelnikovSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MelnikovParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepSerial)->Iterations(1)->Unit(benchmark::kSecond);
BENCHMARK(BM_SweepParallel)->Arg(2)->Iterations(1)->Unit(benchmark::kSecond);

BENCHMARK_MAIN();
