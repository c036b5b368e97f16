#pragma once

#include <vector>

#include "sepsplit/melnikov.hpp"
#include "sepsplit/splitting.hpp"

namespace sepsplit {

// Batched kernels with a serial reference and an OpenMP version. Results are
// identical (each item is computed independently at fixed precision).

std::vector<ArcPoint> arc_points_serial(const PoincareMapSpec& spec, const ManifoldArc& arc,
                                        const std::vector<BigReal>& sigmas, bool tangent);
std::vector<ArcPoint> arc_points_parallel(const PoincareMapSpec& spec, const ManifoldArc& arc,
                                          const std::vector<BigReal>& sigmas, bool tangent, int threads = 0);

struct MelnikovRequest {
  int k = 1;
  BigReal eps;
};

// One separatrix evaluator per worker.
std::vector<MelnikovCoefficient> melnikov_batch_serial(const SystemModel& model, const SeparatrixInfo& sep,
                                                       const std::vector<MelnikovRequest>& req, int bits,
                                                       const MelnikovOptions& opt = {});
std::vector<MelnikovCoefficient> melnikov_batch_parallel(const SystemModel& model, const SeparatrixInfo& sep,
                                                         const std::vector<MelnikovRequest>& req, int bits,
                                                         const MelnikovOptions& opt = {}, int threads = 0);

std::vector<SweepRow> sweep_serial(const SystemModel& model, const SeparatrixInfo& sep,
                                   const std::vector<double>& eps_grid, const SweepOptions& opt);
std::vector<SweepRow> sweep_parallel(const SystemModel& model, const SeparatrixInfo& sep,
                                     const std::vector<double>& eps_grid, const SweepOptions& opt);

// Number of worker threads OpenMP would use for `requested` (0 → default).
int worker_count(int requested);

}  // namespace sepsplit
