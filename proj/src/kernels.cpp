#include "sepsplit/kernels.hpp"

#include <chrono>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sepsplit/errors.hpp"

namespace sepsplit {

namespace {

// Re-raises the first captured exception from a parallel region.
class ErrorSlot {
 public:
  void capture() {
#pragma omp critical(sepsplit_error_slot)
    if (!err_) err_ = std::current_exception();
  }
  void rethrow() const {
    if (err_) std::rethrow_exception(err_);
  }

 private:
  std::exception_ptr err_;
};

SweepRow sweep_row(const SystemModel& model, const SeparatrixInfo& sep, double eps, const SweepOptions& opt) {
  int bits = std::max(schedule_bits(sep.a.to_double(), eps), opt.min_bits);
  PrecisionGuard guard(bits);
  auto t0 = std::chrono::steady_clock::now();
  BigReal tau0 = opt.tau0.bits() > 0 ? opt.tau0.with_bits(bits) : BigReal::zero(bits);
  SplittingMeasurement m = measure_splitting(model, sep, BigReal(eps, bits), tau0, bits, opt.measure);
  SweepRow row;
  row.eps = eps;
  row.area = m.area;
  row.est_error = m.est_error;
  row.bits = bits;
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

}  // namespace

int worker_count(int requested) {
#ifdef _OPENMP
  return requested > 0 ? requested : omp_get_max_threads();
#else
  (void)requested;
  return 1;
#endif
}

std::vector<ArcPoint> arc_points_serial(const PoincareMapSpec& spec, const ManifoldArc& arc,
                                        const std::vector<BigReal>& sigmas, bool tangent) {
  std::vector<ArcPoint> out;
  out.reserve(sigmas.size());
  for (const auto& s : sigmas) out.push_back(evaluate_arc(spec, arc, s, tangent));
  return out;
}

std::vector<ArcPoint> arc_points_parallel(const PoincareMapSpec& spec, const ManifoldArc& arc,
                                          const std::vector<BigReal>& sigmas, bool tangent, int threads) {
  std::vector<ArcPoint> out(sigmas.size());
  ErrorSlot err;
  long n = static_cast<long>(sigmas.size());
#pragma omp parallel for schedule(dynamic) num_threads(worker_count(threads))
  for (long i = 0; i < n; ++i) {
    try {
      PrecisionGuard guard(spec.bits);
      out[i] = evaluate_arc(spec, arc, sigmas[i], tangent);
    } catch (...) {
      err.capture();
    }
  }
  err.rethrow();
  return out;
}

std::vector<MelnikovCoefficient> melnikov_batch_serial(const SystemModel& model, const SeparatrixInfo& sep,
                                                       const std::vector<MelnikovRequest>& req, int bits,
                                                       const MelnikovOptions& opt) {
  SeparatrixEvaluator ev(model.potential, sep, bits);
  std::vector<MelnikovCoefficient> out;
  out.reserve(req.size());
  for (const auto& r : req) out.push_back(melnikov_coefficient(model, ev, r.k, r.eps, bits, opt));
  return out;
}

std::vector<MelnikovCoefficient> melnikov_batch_parallel(const SystemModel& model, const SeparatrixInfo& sep,
                                                         const std::vector<MelnikovRequest>& req, int bits,
                                                         const MelnikovOptions& opt, int threads) {
  std::vector<MelnikovCoefficient> out(req.size());
  ErrorSlot err;
  long n = static_cast<long>(req.size());
#pragma omp parallel num_threads(worker_count(threads))
  {
    PrecisionGuard guard(bits);
    SeparatrixEvaluator ev(model.potential, sep, bits);
#pragma omp for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
      try {
        out[i] = melnikov_coefficient(model, ev, req[i].k, req[i].eps, bits, opt);
      } catch (...) {
        err.capture();
      }
    }
  }
  err.rethrow();
  return out;
}

std::vector<SweepRow> sweep_serial(const SystemModel& model, const SeparatrixInfo& sep,
                                   const std::vector<double>& eps_grid, const SweepOptions& opt) {
  std::vector<SweepRow> rows;
  for (double e : eps_grid) rows.push_back(sweep_row(model, sep, e, opt));
  return rows;
}

std::vector<SweepRow> sweep_parallel(const SystemModel& model, const SeparatrixInfo& sep,
                                     const std::vector<double>& eps_grid, const SweepOptions& opt) {
  std::vector<SweepRow> rows(eps_grid.size());
  ErrorSlot err;
  long n = static_cast<long>(eps_grid.size());
  SweepOptions inner = opt;
  inner.measure.arc.parallel = false;  // parallelism is across grid points here
#pragma omp parallel for schedule(dynamic) num_threads(worker_count(opt.jobs))
  for (long i = 0; i < n; ++i) {
    try {
      rows[i] = sweep_row(model, sep, eps_grid[i], inner);
    } catch (...) {
      err.capture();
    }
  }
  err.rethrow();
  return rows;
}

}  // namespace sepsplit
