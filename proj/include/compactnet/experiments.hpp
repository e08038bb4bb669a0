#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "compactnet/cnn.hpp"
#include "compactnet/constraints.hpp"
#include "compactnet/pgd.hpp"
#include "compactnet/rng.hpp"

namespace compactnet {

enum class Family { sparse, cnn };
enum class InitMode { good, random };

inline std::string to_string(Family f) { return f == Family::sparse ? "sparse" : "cnn"; }
inline std::string to_string(InitMode m) { return m == InitMode::good ? "good" : "random"; }

// ---------------------------------------------------------------------------
// Teachers, data and initialisation

/// h x p teacher with exactly s nonzeros per row at uniformly random
/// positions, values N(0, p / (h s)) so that E||W* x||^2 = ||x||^2.
inline Matrix gen_sparse_teacher(Eigen::Index h, Eigen::Index p, Eigen::Index s, Rng& rng) {
  if (h < 1 || p < 1) throw DomainError("gen_sparse_teacher: h and p must be positive");
  if (s < 1 || s > p) throw DomainError("gen_sparse_teacher: need 1 <= s <= p");
  std::normal_distribution<double> normal(0.0, std::sqrt(static_cast<double>(p) / (h * s)));
  std::vector<Eigen::Index> cols(static_cast<std::size_t>(p));
  std::iota(cols.begin(), cols.end(), Eigen::Index{0});
  Matrix w = Matrix::Zero(h, p);
  for (Eigen::Index i = 0; i < h; ++i) {
    std::vector<Eigen::Index> support;
    std::sample(cols.begin(), cols.end(), std::back_inserter(support), s, rng);
    for (auto j : support) w(i, j) = normal(rng);
  }
  return w;
}

/// Kernel entries i.i.d. N(0, p / (h b)) with h = k r.
inline KernelBank gen_cnn_teacher(const ConvGeometry& g, Rng& rng) {
  g.validate();
  const double var = static_cast<double>(g.input) / static_cast<double>(g.hidden() * g.width);
  return KernelBank{gaussian_matrix(g.kernels, g.width, std::sqrt(var), rng), g};
}

/// x_i ~ N(0, I_p), noiseless labels y_i = o^T sigma(W* x_i).
inline Dataset gen_dataset(const Matrix& teacher, const Vector& o, Eigen::Index n,
                           ActivationKind kind, Rng& rng) {
  if (n < 1) throw DomainError("gen_dataset: n must be positive");
  Dataset d;
  d.inputs = gaussian_inputs(n, teacher.cols(), rng);
  d.labels = predict(o, teacher, d.inputs, kind);
  return d;
}

/// good: W* + Z, random: Z, with Z i.i.d. N(0, noise_std^2). When `project_noise`
/// is given, Z is replaced by its projection (used for conv-constrained runs).
inline Matrix init_weights(InitMode mode, const Matrix& teacher, double noise_std, Rng& rng,
                           const ConstraintSpec* project_noise = nullptr) {
  Matrix z = gaussian_matrix(teacher.rows(), teacher.cols(), noise_std, rng);
  if (project_noise) z = project(*project_noise, z);
  return mode == InitMode::good ? Matrix(teacher + z) : z;
}

// ---------------------------------------------------------------------------
// Metrics

/// var(y - y_hat) / var(y) with unbiased sample variances.
inline double normalized_loss(const Vector& predictions, const Vector& labels) {
  if (predictions.size() != labels.size()) throw ShapeError("normalized_loss: length mismatch");
  if (labels.size() < 2) throw DomainError("normalized_loss: need at least two samples");
  auto var = [](const Vector& v) {
    return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1);
  };
  const double vy = var(labels);
  if (!(vy > 0.0)) throw DomainError("normalized_loss: labels have zero variance");
  return var(labels - predictions) / vy;
}

/// (1/h) sum_i max_j cos(w*_i, w_hat_j), signed cosines, independent max per row.
inline double correlation(const Matrix& w_star, const Matrix& w_hat) {
  if (w_star.cols() != w_hat.cols()) throw ShapeError("correlation: column count mismatch");
  const Vector star_norms = w_star.rowwise().norm();
  if ((star_norms.array() == 0.0).any()) throw DomainError("correlation: W* has a zero row");
  const Vector hat_norms = w_hat.rowwise().norm();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < w_star.rows(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < w_hat.rows(); ++j) {
      const double c = hat_norms(j) > 0.0
                           ? w_star.row(i).dot(w_hat.row(j)) / (star_norms(i) * hat_norms(j))
                           : 0.0;
      best = std::max(best, c);
    }
    acc += best;
  }
  return acc / static_cast<double>(w_star.rows());
}

// ---------------------------------------------------------------------------
// Experiment orchestration

struct ExperimentSpec {
  Family family = Family::sparse;
  Eigen::Index p = 80;
  Eigen::Index h = 20;
  Eigen::Index s = 8;  // nonzeros per teacher row (sparse family)
  ConvGeometry conv = ConvGeometry::make(4, 15, 6, 81);
  std::vector<Eigen::Index> n_grid = {100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
  Eigen::Index n_test = 1000;
  int trials = 20;
  InitMode init = InitMode::good;
  /// Tags from {none, l1, l0} (sparse) or {none, conv} (cnn).
  std::vector<std::string> constraints = {"none", "l1", "l0"};
  ActivationKind activation = ActivationKind::relu;
  /// Learning rate quoted for inputs of unit expected norm. The step applied to
  /// the N(0, I_p) data is mu / p when `mu_per_input_dim` is set.
  double mu = 5.0;
  bool mu_per_input_dim = true;
  long iters = 2000;
  std::uint64_t master_seed = 1;

  Eigen::Index input_dim() const { return family == Family::sparse ? p : conv.input; }
  Eigen::Index hidden() const { return family == Family::sparse ? h : conv.hidden(); }
  double effective_mu() const {
    return mu_per_input_dim ? mu / static_cast<double>(input_dim()) : mu;
  }
  /// Standard deviation of the initialisation noise Z.
  double init_noise_std() const {
    if (family == Family::sparse) return std::sqrt(1.0 / static_cast<double>(h));
    return std::sqrt(static_cast<double>(conv.input) /
                     static_cast<double>(conv.width * conv.kernels));
  }

  void validate() const {
    if (n_test < 2) throw DomainError("experiment: n_test must be at least 2");
    if (trials < 1) throw DomainError("experiment: trials must be >= 1");
    if (n_grid.empty()) throw DomainError("experiment: n grid is empty");
    for (auto n : n_grid) {
      if (n < 2) throw DomainError("experiment: every n must be at least 2");
    }
    if (!(mu > 0.0)) throw DomainError("experiment: mu must be positive");
    if (iters < 1) throw DomainError("experiment: iters must be >= 1");
    if (constraints.empty()) throw DomainError("experiment: no constraints selected");
    for (const auto& c : constraints) {
      const bool ok = family == Family::sparse ? (c == "none" || c == "l1" || c == "l0")
                                               : (c == "none" || c == "conv");
      if (!ok) throw DomainError("experiment: constraint '" + c + "' not valid for family " + to_string(family));
    }
    if (family == Family::sparse) {
      if (h < 1 || p < 1 || s < 1 || s > p) throw DomainError("experiment: need h, p >= 1 and 1 <= s <= p");
    } else {
      conv.validate();
    }
  }
};

/// Sparse presets: good init sweeps n = 100..1000, random init n = 200..2000.
inline ExperimentSpec sparse_paper_preset(InitMode init) {
  ExperimentSpec spec;
  spec.family = Family::sparse;
  spec.init = init;
  spec.n_grid.clear();
  const Eigen::Index step = init == InitMode::good ? 100 : 200;
  for (Eigen::Index n = step; n <= 10 * step; n += step) spec.n_grid.push_back(n);
  return spec;
}

/// CNN preset: p = 81, b = 15, stride 6, k = 4 (r = 12, h = 48), mu = 1.
inline ExperimentSpec cnn_paper_preset(InitMode init) {
  ExperimentSpec spec;
  spec.family = Family::cnn;
  spec.conv = ConvGeometry::make(4, 15, 6, 81);
  spec.init = init;
  spec.mu = 1.0;
  spec.constraints = {"none", "conv"};
  return spec;
}

struct ExperimentRecord {
  int trial = 0;
  Eigen::Index n = 0;
  std::string constraint;
  std::string init;
  double train_loss = std::numeric_limits<double>::quiet_NaN();
  double test_loss = std::numeric_limits<double>::quiet_NaN();
  double corr = std::numeric_limits<double>::quiet_NaN();
  double recovery_err = std::numeric_limits<double>::quiet_NaN();
  long iters = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";

  bool operator==(const ExperimentRecord&) const = default;
};

/// Everything that is shared by all (n, constraint) runs of one trial.
struct TrialSetup {
  std::uint64_t seed;
  Matrix teacher;
  Vector o;
  Dataset test;
  Dataset train_pool;  // first n rows form the training set for sample size n
  std::optional<ConvGeometry> conv;
};

inline std::uint64_t trial_seed(const ExperimentSpec& spec, int trial) {
  return derive_seed(spec.master_seed, {static_cast<std::uint64_t>(trial)});
}

inline TrialSetup make_trial(const ExperimentSpec& spec, int trial) {
  TrialSetup t;
  t.seed = trial_seed(spec, trial);
  Rng teacher_rng(derive_seed(t.seed, {1}));
  if (spec.family == Family::sparse) {
    t.teacher = gen_sparse_teacher(spec.h, spec.p, spec.s, teacher_rng);
  } else {
    t.teacher = fc_from_kernels(gen_cnn_teacher(spec.conv, teacher_rng));
    t.conv = spec.conv;
  }
  t.o = Vector::Ones(t.teacher.rows());
  Rng test_rng(derive_seed(t.seed, {2}));
  t.test = gen_dataset(t.teacher, t.o, spec.n_test, spec.activation, test_rng);
  Rng train_rng(derive_seed(t.seed, {3}));
  const Eigen::Index n_max = *std::max_element(spec.n_grid.begin(), spec.n_grid.end());
  t.train_pool = gen_dataset(t.teacher, t.o, n_max, spec.activation, train_rng);
  return t;
}

inline ConstraintSpec instantiate_constraint(const std::string& tag, const TrialSetup& t) {
  if (tag == "none") return ConstraintSpec::none();
  if (tag == "l1") {
    const auto nnz = static_cast<Eigen::Index>((t.teacher.array() != 0.0).count());
    return ConstraintSpec::l1_ball(t.teacher.cwiseAbs().sum(), nnz);
  }
  if (tag == "l0") return ConstraintSpec::sparsity((t.teacher.array() != 0.0).count());
  if (tag == "conv" && t.conv) return ConstraintSpec::conv(*t.conv);
  throw DomainError("unknown constraint tag '" + tag + "'");
}

/// PGD for one (trial, n, constraint) cell. The init noise stream is shared by
/// every cell of a trial. `truth` adds distances to the teacher to the trace.
inline PgdTrace train_cell(const ExperimentSpec& spec, const TrialSetup& t, Eigen::Index n,
                           const ConstraintSpec& cs, bool truth = false) {
  Rng init_rng(derive_seed(t.seed, {4}));
  const bool project_noise = spec.family == Family::cnn && cs.name() == "conv";
  const Matrix w0 =
      init_weights(spec.init, t.teacher, spec.init_noise_std(), init_rng, project_noise ? &cs : nullptr);
  if (n < 1 || n > t.train_pool.size()) throw DomainError("train_cell: n outside the training pool");
  PgdConfig cfg;
  cfg.mu = spec.effective_mu();
  cfg.max_iters = spec.iters;
  cfg.constraint = cs;
  return pgd_run(cfg, t.o, w0, t.train_pool.slice(0, n), spec.activation,
                 truth ? std::optional<Matrix>(t.teacher) : std::nullopt);
}

/// One PGD run: trial setup, training size n and constraint tag. Numerical
/// failures are reported in `status` instead of thrown.
inline ExperimentRecord run_single(const ExperimentSpec& spec, const TrialSetup& t, int trial,
                                   Eigen::Index n, const std::string& tag) {
  ExperimentRecord rec;
  rec.trial = trial;
  rec.n = n;
  rec.constraint = tag;
  rec.init = to_string(spec.init);
  rec.seed = t.seed;
  try {
    const PgdTrace trace = train_cell(spec, t, n, instantiate_constraint(tag, t));
    const Matrix& w = trace.final_weights;
    const Dataset train = t.train_pool.slice(0, n);
    rec.iters = trace.iterations();
    rec.train_loss = normalized_loss(predict(t.o, w, train.inputs, spec.activation), train.labels);
    rec.test_loss = normalized_loss(predict(t.o, w, t.test.inputs, spec.activation), t.test.labels);
    rec.corr = correlation(t.teacher, w);
    rec.recovery_err = (w - t.teacher).norm() / t.teacher.norm();
  } catch (const Error& e) {
    rec.status = e.category();
  }
  return rec;
}

/// Runs every (trial, n, constraint) combination. Output order is
/// trial-major, then n (grid order), then constraint (spec order), regardless
/// of `jobs`; record contents do not depend on `jobs` either.
inline std::vector<ExperimentRecord> run_experiment(const ExperimentSpec& spec, int jobs = 1) {
  spec.validate();
  const std::size_t per_trial = spec.n_grid.size() * spec.constraints.size();
  std::vector<ExperimentRecord> out(per_trial * static_cast<std::size_t>(spec.trials));
  std::atomic<int> next_trial{0};
  auto worker = [&] {
    for (int trial = next_trial++; trial < spec.trials; trial = next_trial++) {
      const TrialSetup t = make_trial(spec, trial);
      std::size_t k = per_trial * static_cast<std::size_t>(trial);
      for (auto n : spec.n_grid) {
        for (const auto& tag : spec.constraints) out[k++] = run_single(spec, t, trial, n, tag);
      }
    }
  };
  jobs = std::max(1, std::min(jobs, spec.trials));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  return out;
}

inline constexpr const char* kRecordCsvHeader =
    "trial,n,constraint,init,train_loss,test_loss,corr,recovery_err,iters,seed,status";

inline void write_records_csv(std::ostream& os, const std::vector<ExperimentRecord>& records) {
  os << kRecordCsvHeader << '\n' << std::setprecision(17);
  for (const auto& r : records) {
    os << r.trial << ',' << r.n << ',' << r.constraint << ',' << r.init << ',' << r.train_loss << ','
       << r.test_loss << ',' << r.corr << ',' << r.recovery_err << ',' << r.iters << ',' << r.seed
       << ',' << r.status << '\n';
  }
}

/// Parses the output of write_records_csv. Throws DomainError on a schema mismatch.
inline std::vector<ExperimentRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kRecordCsvHeader) {
    throw DomainError("records csv: unexpected header");
  }
  std::vector<ExperimentRecord> out;
  long row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 11) throw DomainError("records csv: row " + std::to_string(row) + " has " + std::to_string(f.size()) + " fields");
    try {
      ExperimentRecord r;
      r.trial = std::stoi(f[0]);
      r.n = std::stol(f[1]);
      r.constraint = f[2];
      r.init = f[3];
      r.train_loss = std::stod(f[4]);
      r.test_loss = std::stod(f[5]);
      r.corr = std::stod(f[6]);
      r.recovery_err = std::stod(f[7]);
      r.iters = std::stol(f[8]);
      r.seed = std::stoull(f[9]);
      r.status = f[10];
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw DomainError("records csv: malformed value on row " + std::to_string(row));
    }
  }
  return out;
}

/// Mean of a metric over trials for one (n, constraint); NaN when no ok records.
struct MetricMeans {
  double train_loss = 0, test_loss = 0, corr = 0, recovery_err = 0;
  int count = 0;
};

inline MetricMeans mean_over_trials(const std::vector<ExperimentRecord>& records, Eigen::Index n,
                                    const std::string& constraint) {
  MetricMeans m;
  for (const auto& r : records) {
    if (r.n != n || r.constraint != constraint || r.status != "ok") continue;
    m.train_loss += r.train_loss;
    m.test_loss += r.test_loss;
    m.corr += r.corr;
    m.recovery_err += r.recovery_err;
    ++m.count;
  }
  if (m.count == 0) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan, nan, 0};
  }
  const double c = m.count;
  return {m.train_loss / c, m.test_loss / c, m.corr / c, m.recovery_err / c, m.count};
}

}  // namespace compactnet
