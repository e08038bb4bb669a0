#pragma once

#include <cmath>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <vector>

#include "compactnet/constraints.hpp"
#include "compactnet/model.hpp"

namespace compactnet {

/// Which data each step sees. `single`: the whole dataset every step.
/// `fresh(K)`: the data is split into K equal consecutive batches and step i
/// (1-based) uses batch min(i, K).
struct BatchSchedule {
  Eigen::Index batches = 1;
  bool fresh = false;

  static BatchSchedule single() { return {1, false}; }
  static BatchSchedule fresh_batches(Eigen::Index k) { return {k, true}; }

  /// 0-based batch index used by the step leaving iterate `iterate`.
  Eigen::Index batch_for(long iterate) const {
    if (!fresh) return 0;
    return std::min<Eigen::Index>(iterate, batches - 1);
  }
};

struct PgdConfig {
  double mu = 1.0;
  long max_iters = 2000;
  ConstraintSpec constraint = ConstraintSpec::none();
  /// Early exit once the gradient norm drops to this value; <= 0 disables it.
  double stop_tol = 0.0;
  BatchSchedule schedule = BatchSchedule::single();
  /// Keep every iterate in the trace (memory heavy, meant for tests/diagnostics).
  bool store_iterates = false;
  /// Abort with DivergenceError once the loss exceeds this.
  double divergence_loss = 1e12;

  void validate() const {
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw DomainError("pgd: learning rate must be >= 0");
    if (max_iters < 1) throw DomainError("pgd: max_iters must be >= 1");
    if (schedule.batches < 1) throw DomainError("pgd: need at least one batch");
  }
};

struct PgdRecord {
  long iter = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  std::optional<double> dist_to_truth;  // ||W_iter - W*||_F
  Eigen::Index batch = 0;
};

struct PgdTrace {
  std::vector<PgdRecord> records;
  std::vector<Matrix> iterates;  // filled only with PgdConfig::store_iterates
  Matrix final_weights;

  long iterations() const { return records.empty() ? 0 : records.back().iter; }
};

/// P_C(W - mu * grad).
inline Matrix pgd_step(const Matrix& w, const Matrix& grad, double mu, const ConstraintSpec& spec,
                       long iteration = 0) {
  require_same_shape(w, grad, "pgd_step");
  if (!grad.allFinite()) throw NumericError("pgd_step: non-finite gradient", iteration);
  return project(spec, w - mu * grad);
}

/// Loss/gradient oracle: evaluates at W using batch `batch`.
using LossGradientFn = std::function<LossGradient(const Matrix& w, Eigen::Index batch)>;

/// Generic projected gradient loop shared by every model in the library.
/// Records iterates 0..T where T <= max_iters.
inline PgdTrace run_projected_descent(const PgdConfig& cfg, const Matrix& w0,
                                      const LossGradientFn& oracle,
                                      const std::optional<Matrix>& truth = std::nullopt) {
  cfg.validate();
  if (truth) require_same_shape(w0, *truth, "pgd truth");
  PgdTrace trace;
  trace.records.reserve(static_cast<std::size_t>(cfg.max_iters) + 1);
  Matrix w = w0;
  for (long it = 0;; ++it) {
    const Eigen::Index batch = cfg.schedule.batch_for(it);
    LossGradient lg = oracle(w, batch);
    if (!std::isfinite(lg.loss) || lg.loss > cfg.divergence_loss) {
      throw DivergenceError(lg.loss, it);
    }
    PgdRecord rec;
    rec.iter = it;
    rec.loss = lg.loss;
    rec.grad_norm = lg.gradient.norm();
    rec.batch = batch;
    if (truth) rec.dist_to_truth = (w - *truth).norm();
    trace.records.push_back(rec);
    if (cfg.store_iterates) trace.iterates.push_back(w);
    if (it == cfg.max_iters || (cfg.stop_tol > 0.0 && rec.grad_norm <= cfg.stop_tol)) break;
    w = pgd_step(w, lg.gradient, cfg.mu, cfg.constraint, it);
  }
  trace.final_weights = std::move(w);
  return trace;
}

/// PGD on a fixed dataset for the one-hidden-layer model.
inline PgdTrace pgd_run(const PgdConfig& cfg, const Vector& o, const Matrix& w0,
                        const Dataset& data, ActivationKind kind,
                        const std::optional<Matrix>& truth = std::nullopt) {
  if (cfg.schedule.fresh && cfg.schedule.batches != 1) {
    throw DomainError("pgd_run: use pgd_run_batched for a fresh-batch schedule");
  }
  return run_projected_descent(
      cfg, w0, [&](const Matrix& w, Eigen::Index) { return loss_and_gradient(o, w, data, kind); },
      truth);
}

/// PGD where the data (K * n samples) is split into K consecutive batches and
/// step i uses batch min(i, K).
inline PgdTrace pgd_run_batched(const PgdConfig& cfg, const Vector& o, const Matrix& w0,
                                const Dataset& data, ActivationKind kind,
                                const std::optional<Matrix>& truth = std::nullopt) {
  cfg.validate();
  const Eigen::Index k = cfg.schedule.batches;
  if (data.size() % k != 0) {
    throw DomainError("pgd_run_batched: dataset size " + std::to_string(data.size()) +
                      " is not divisible by " + std::to_string(k) + " batches");
  }
  const Eigen::Index per = data.size() / k;
  std::vector<Dataset> batches;
  for (Eigen::Index b = 0; b < k; ++b) batches.push_back(data.slice(b * per, per));
  PgdConfig c = cfg;
  c.schedule = BatchSchedule::fresh_batches(k);
  return run_projected_descent(
      c, w0,
      [&](const Matrix& w, Eigen::Index b) { return loss_and_gradient(o, w, batches[b], kind); },
      truth);
}

/// CSV with header iter,loss,grad_norm,dist_to_truth (dist empty when unknown).
inline void write_trace_csv(std::ostream& os, const PgdTrace& trace) {
  os << "iter,loss,grad_norm,dist_to_truth\n";
  os << std::setprecision(17);
  for (const auto& r : trace.records) {
    os << r.iter << ',' << r.loss << ',' << r.grad_norm << ',';
    if (r.dist_to_truth) os << *r.dist_to_truth;
    os << '\n';
  }
}

/// Least-squares slope of log(dist^2) against iteration over records
/// [first, last), skipping distances at or below `floor` (the round-off
/// plateau). The per-step contraction factor of dist^2 is exp(slope).
inline double log_linear_dist_slope(const PgdTrace& trace, std::size_t first = 0,
                                    std::size_t last = static_cast<std::size_t>(-1),
                                    double floor = 0.0) {
  last = std::min(last, trace.records.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double m = 0;
  for (std::size_t i = first; i < last; ++i) {
    const auto& r = trace.records[i];
    if (!r.dist_to_truth || !(*r.dist_to_truth > floor)) continue;
    const double x = static_cast<double>(r.iter);
    const double y = 2.0 * std::log(*r.dist_to_truth);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    m += 1;
  }
  if (m < 2) throw DomainError("log_linear_dist_slope: need two positive distances");
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace compactnet
