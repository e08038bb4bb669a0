#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <set>

#include <CLI11.hpp>

#include "cli_config.hpp"
#include "compactnet.hpp"

#ifndef COMPACTNET_VERSION
#define COMPACTNET_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace compactnet;
using compactnet::cli::json;
using compactnet::cli::UsageError;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Started-at / wall-clock bookkeeping for run manifests.
struct RunClock {
  std::chrono::system_clock::time_point wall = std::chrono::system_clock::now();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void write_manifest(const fs::path& path, const std::string& command, const json& config,
                    std::uint64_t seed, const RunClock& clock, json extra = json::object()) {
  json m;
  m["command"] = command;
  m["config"] = config;
  m["seed"] = seed;
  m["version"] = COMPACTNET_VERSION;
  m["started_at"] = utc_timestamp(clock.wall);
  m["duration_s"] = clock.seconds();
  for (auto& [k, v] : extra.items()) m[k] = v;
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path.string());
  out << m.dump(2) << '\n';
}

fs::path prepare_out_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw UsageError("cannot create output directory '" + dir + "'");
  return p;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path.string());
  return out;
}

/// Experiment flags shared by the experiment and train subcommands. Each flag
/// overrides the preset and config file only when given on the command line.
struct SpecFlags {
  std::string preset = "none";
  std::string config;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int jobs = 1;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* init_opt = nullptr;
  std::string init;
  std::vector<std::function<void(ExperimentSpec&)>> overrides;

  template <class T, class F>
  void add(CLI::App* app, const std::string& name, const std::string& help, F setter) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *value, help);
    overrides.push_back([opt, value, setter](ExperimentSpec& s) {
      if (opt->count() > 0) setter(s, *value);
    });
  }

  void attach(CLI::App* app, bool sparse_dims, bool conv_dims, bool with_init) {
    app->add_option("--preset", preset, "Parameter preset: paper, quick or none")
        ->check(CLI::IsMember({"paper", "quick", "none"}));
    app->add_option("--config", config, "JSON config file (keys as the long flags); a run manifest also works");
    app->add_option("--out-dir", out_dir, "Directory for CSV and manifest output")->capture_default_str();
    seed_opt = app->add_option("--seed", seed, "Master seed (fallbacks: config, $COMPACTNET_SEED, then 1)");
    app->add_option("--jobs", jobs, "Worker threads over trials")->check(CLI::PositiveNumber)->capture_default_str();
    if (with_init) {
      init_opt = app->add_option("--init", init, "Initialization: good (W* + Z) or random (Z)")
                     ->check(CLI::IsMember({"good", "random"}));
    }
    add<Eigen::Index>(app, "--p", "Input dimension", [](ExperimentSpec& s, Eigen::Index v) {
      s.p = v;
      s.conv.input = v;
    });
    if (sparse_dims) {
      add<Eigen::Index>(app, "--h", "Hidden units", [](ExperimentSpec& s, Eigen::Index v) { s.h = v; });
      add<Eigen::Index>(app, "--s", "Nonzeros per teacher row", [](ExperimentSpec& s, Eigen::Index v) { s.s = v; });
    }
    if (conv_dims) {
      add<Eigen::Index>(app, "--k", "Number of kernels", [](ExperimentSpec& s, Eigen::Index v) { s.conv.kernels = v; });
      add<Eigen::Index>(app, "--b", "Kernel width", [](ExperimentSpec& s, Eigen::Index v) { s.conv.width = v; });
      add<Eigen::Index>(app, "--stride", "Convolution stride",
                        [](ExperimentSpec& s, Eigen::Index v) { s.conv.stride = v; });
    }
    add<std::vector<Eigen::Index>>(app, "--n-grid", "Training sizes, e.g. --n-grid 100 200 300",
                                   [](ExperimentSpec& s, const std::vector<Eigen::Index>& v) { s.n_grid = v; });
    add<Eigen::Index>(app, "--n-test", "Test samples per trial", [](ExperimentSpec& s, Eigen::Index v) { s.n_test = v; });
    add<int>(app, "--trials", "Trials per grid point", [](ExperimentSpec& s, int v) { s.trials = v; });
    add<std::vector<std::string>>(app, "--constraints", "Constraint tags (sparse: none l1 l0, cnn: none conv)",
                                  [](ExperimentSpec& s, const std::vector<std::string>& v) { s.constraints = v; });
    add<std::string>(app, "--activation", "Activation name", [](ExperimentSpec& s, const std::string& v) {
      s.activation = cli::parse_activation_flag(v);
    });
    add<double>(app, "--mu", "Learning rate (divided by the input dimension unless --no-mu-scaling)",
                [](ExperimentSpec& s, double v) { s.mu = v; });
    auto scaling = std::make_shared<bool>(false);
    CLI::Option* no_scale = app->add_flag("--no-mu-scaling", *scaling, "Use --mu as the raw step size");
    overrides.push_back([no_scale](ExperimentSpec& s) {
      if (no_scale->count() > 0) s.mu_per_input_dim = false;
    });
    add<long>(app, "--iters", "PGD iterations", [](ExperimentSpec& s, long v) { s.iters = v; });
  }

  /// defaults < preset < config file < flags. COMPACTNET_SEED supplies the
  /// seed only when neither --seed nor the config file sets one.
  ExperimentSpec build(Family family) const {
    json file = json::object();
    if (!config.empty()) file = cli::load_config_file(config);
    InitMode mode = InitMode::good;
    if (file.contains("init")) mode = cli::parse_init(file["init"].get<std::string>());
    if (init_opt && init_opt->count() > 0) mode = cli::parse_init(init);

    ExperimentSpec spec;
    if (preset == "paper" || preset == "quick") {
      spec = family == Family::sparse ? sparse_paper_preset(mode) : cnn_paper_preset(mode);
    } else {
      spec.family = family;
      spec.init = mode;
      if (family == Family::cnn) spec.constraints = {"none", "conv"};
    }
    if (preset == "quick") {
      spec.trials = 2;
      spec.iters = 300;
      const auto& g = spec.n_grid;
      spec.n_grid = {g.front(), g[g.size() / 2], g.back()};
    }
    if (file.contains("family") && cli::parse_family(file["family"].get<std::string>()) != family) {
      throw UsageError("config family does not match the subcommand");
    }
    cli::apply_json(spec, file);
    spec.init = mode;
    for (const auto& f : overrides) f(spec);
    if (family == Family::cnn) {
      try {
        spec.conv = ConvGeometry::make(spec.conv.kernels, spec.conv.width, spec.conv.stride, spec.conv.input);
      } catch (const GeometryError& e) {
        throw UsageError(e.what());
      }
    }
    if (seed_opt->count() > 0) {
      spec.master_seed = seed;
    } else if (!file.contains("seed")) {
      if (auto env = cli::env_seed()) spec.master_seed = *env;
    }
    try {
      spec.validate();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    return spec;
  }
};

void print_summary(std::ostream& os, const std::vector<ExperimentRecord>& records) {
  std::vector<std::tuple<std::string, std::string, Eigen::Index>> keys;
  std::set<std::tuple<std::string, std::string, Eigen::Index>> seen;
  for (const auto& r : records) {
    auto k = std::make_tuple(r.init, r.constraint, r.n);
    if (seen.insert(k).second) keys.push_back(k);
  }
  os << std::left << std::setw(8) << "init" << std::setw(12) << "constraint" << std::right << std::setw(7) << "n"
     << std::setw(13) << "train_loss" << std::setw(13) << "test_loss" << std::setw(10) << "corr"
     << std::setw(14) << "recovery_err" << std::setw(5) << "ok" << '\n';
  for (const auto& [init, constraint, n] : keys) {
    MetricMeans m;
    std::vector<ExperimentRecord> subset;
    for (const auto& r : records) {
      if (r.init == init) subset.push_back(r);
    }
    m = mean_over_trials(subset, n, constraint);
    os << std::left << std::setw(8) << init << std::setw(12) << constraint << std::right << std::setw(7) << n
       << std::setprecision(4) << std::setw(13) << m.train_loss << std::setw(13) << m.test_loss
       << std::setw(10) << m.corr << std::setw(14) << m.recovery_err << std::setw(5) << m.count << '\n';
  }
}

/// Writes records plus manifest; returns the exit status for failed records.
int finish_experiment(const fs::path& dir, const std::string& stem, const std::string& command,
                      const json& config, std::uint64_t seed, const RunClock& clock,
                      const std::vector<ExperimentRecord>& records) {
  {
    auto out = open_output(dir / (stem + ".csv"));
    write_records_csv(out, records);
  }
  std::size_t failed = 0;
  bool numeric = false;
  for (const auto& r : records) {
    if (r.status == "ok") continue;
    ++failed;
    numeric |= r.status == "numeric";
    std::cerr << "failed record: trial=" << r.trial << " n=" << r.n << " constraint=" << r.constraint
              << " init=" << r.init << " status=" << r.status << '\n';
  }
  write_manifest(dir / (stem + ".manifest.json"), command, config, seed, clock,
                 {{"records", records.size()}, {"failed_records", failed}});
  print_summary(std::cout, records);
  std::cout << "wrote " << (dir / (stem + ".csv")).string() << '\n';
  if (failed == 0) return 0;
  return numeric ? kExitNumeric : 1;
}

int run_experiment_sparse(const SpecFlags& flags) {
  const RunClock clock;
  const ExperimentSpec spec = flags.build(Family::sparse);
  const fs::path dir = prepare_out_dir(flags.out_dir);
  const auto records = run_experiment(spec, flags.jobs);
  return finish_experiment(dir, "sparse_" + to_string(spec.init), "experiment-sparse",
                           cli::spec_to_json(spec), spec.master_seed, clock, records);
}

/// Unconstrained and conv-constrained runs from W0 = Z, plus conv-constrained
/// from W0 = W* + Z. All three share teachers and data through the seed.
int run_experiment_cnn(const SpecFlags& flags, bool skip_good) {
  const RunClock clock;
  ExperimentSpec spec = flags.build(Family::cnn);
  spec.init = InitMode::random;
  const fs::path dir = prepare_out_dir(flags.out_dir);
  auto records = run_experiment(spec, flags.jobs);
  json config = cli::spec_to_json(spec);
  config.erase("init");
  if (!skip_good && std::find(spec.constraints.begin(), spec.constraints.end(), "conv") != spec.constraints.end()) {
    ExperimentSpec good = spec;
    good.init = InitMode::good;
    good.constraints = {"conv"};
    const auto extra = run_experiment(good, flags.jobs);
    records.insert(records.end(), extra.begin(), extra.end());
  }
  return finish_experiment(dir, "cnn", "experiment-cnn", config, spec.master_seed, clock, records);
}

int run_train(const SpecFlags& flags, const std::string& family_name, Eigen::Index n,
              const std::string& constraint, int trial) {
  const RunClock clock;
  const Family family = cli::parse_family(family_name);
  ExperimentSpec spec = flags.build(family);
  if (n > 0) spec.n_grid = {n};
  if (!constraint.empty()) spec.constraints = {constraint};
  spec.trials = std::max(spec.trials, trial + 1);
  try {
    spec.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  n = spec.n_grid.back();
  const std::string tag = spec.constraints.back();
  const fs::path dir = prepare_out_dir(flags.out_dir);
  const TrialSetup t = make_trial(spec, trial);
  const ConstraintSpec cs = instantiate_constraint(tag, t);
  const PgdTrace trace = train_cell(spec, t, n, cs, true);
  {
    auto out = open_output(dir / "trace.csv");
    write_trace_csv(out, trace);
  }
  ExperimentRecord rec;
  const Matrix& w = trace.final_weights;
  const Dataset train_set = t.train_pool.slice(0, n);
  rec.train_loss = normalized_loss(predict(t.o, w, train_set.inputs, spec.activation), train_set.labels);
  rec.test_loss = normalized_loss(predict(t.o, w, t.test.inputs, spec.activation), t.test.labels);
  rec.corr = correlation(t.teacher, w);
  rec.recovery_err = (w - t.teacher).norm() / t.teacher.norm();
  json config = cli::spec_to_json(spec);
  config["n-grid"] = std::vector<Eigen::Index>{n};
  config["constraints"] = std::vector<std::string>{tag};
  write_manifest(dir / "trace.manifest.json", "train", config, spec.master_seed, clock,
                 {{"trial", trial},
                  {"iterations", trace.iterations()},
                  {"final_loss", trace.records.back().loss},
                  {"test_loss", rec.test_loss},
                  {"corr", rec.corr},
                  {"recovery_err", rec.recovery_err}});
  std::cout << std::setprecision(6) << "iterations " << trace.iterations() << "\nfinal_loss "
            << trace.records.back().loss << "\ntrain_loss " << rec.train_loss << "\ntest_loss "
            << rec.test_loss << "\ncorr " << rec.corr << "\nrecovery_err " << rec.recovery_err << '\n';
  std::cout << "wrote " << (dir / "trace.csv").string() << '\n';
  return 0;
}

struct HessianFlags {
  Eigen::Index h = 3, p = 8, n = 200, d = 6, cone_s = 2;
  std::string activation = "squared_relu";
  std::string teacher = "orthonormal";
  std::string directions = "subspace";
  double offset = 0.5;
  std::uint64_t seed = 1;
  CLI::Option* seed_opt = nullptr;
  std::string out_dir = ".";
};

int run_analyze_hessian(const HessianFlags& f) {
  const RunClock clock;
  std::uint64_t seed = f.seed;
  if (f.seed_opt->count() == 0) {
    if (auto env = cli::env_seed()) seed = *env;
  }
  if (f.h < 1 || f.p < 1 || f.n < 1) throw UsageError("h, p and n must be positive");
  if (f.h * f.p > kMaxHessianDim) {
    throw UsageError("h*p = " + std::to_string(f.h * f.p) + " exceeds the Hessian size guard " +
                     std::to_string(kMaxHessianDim));
  }
  const ActivationKind kind = cli::parse_activation_flag(f.activation);
  Rng rng(seed);
  Matrix w_star;
  if (f.teacher == "orthonormal") {
    if (f.h > f.p) throw UsageError("orthonormal teacher needs h <= p");
    w_star = random_orthonormal_basis(f.p, f.h, rng).transpose();
  } else {
    w_star = gaussian_matrix(f.h, f.p, 1.0 / std::sqrt(static_cast<double>(f.p)), rng);
  }
  const Vector o = Vector::Ones(f.h);
  const Dataset data = gen_dataset(w_star, o, f.n, kind, rng);
  const Matrix h1 = hessian_ground_truth(o, w_star, data, kind);

  std::vector<std::pair<std::string, double>> report;
  report.emplace_back("lambda_min_full", restricted_eigenvalue(h1, directions::Full{}).value);
  if (f.directions == "subspace") {
    if (f.d < 1 || f.d > f.h * f.p) throw UsageError("need 1 <= d <= h*p");
    const Matrix basis = random_orthonormal_basis(f.h * f.p, f.d, rng);
    report.emplace_back("lambda_restricted", restricted_eigenvalue(h1, directions::Subspace{basis}).value);
  } else if (f.directions == "sparse") {
    if (f.cone_s < 1 || f.cone_s > f.h * f.p) throw UsageError("need 1 <= cone-s <= h*p");
    directions::SparseCone cone{f.cone_s};
    cone.seed = derive_seed(seed, {7});
    const auto r = restricted_eigenvalue(h1, cone);
    report.emplace_back("lambda_restricted", r.value);
    report.emplace_back("supports_checked", static_cast<double>(r.supports_checked));
    report.emplace_back("supports_exhaustive", r.exhaustive ? 1.0 : 0.0);
  }

  const Matrix z = gaussian_matrix(f.h, f.p, 1.0, rng);
  const Matrix u = w_star + f.offset * z / z.norm();
  const auto dec = hessian_decomposition(o, w_star, u, data, kind);
  const Vector g = vec(gradient(o, u, data, kind));
  const Vector via_h = dec.total() * vec(Matrix(u - w_star));
  report.emplace_back("h2_norm", dec.h2.norm());
  report.emplace_back("h3_norm", dec.h3.norm());
  report.emplace_back("gradient_identity_residual", (g - via_h).norm() / (1.0 + g.norm()));

  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    const auto cq = critical_quantities(o, w_star, kind, f.n, f.p);
    for (const auto& [name, v] : std::initializer_list<std::pair<const char*, double>>{
             {"theta", cq.theta}, {"omega", cq.omega}, {"q", cq.q}, {"upsilon", cq.upsilon},
             {"mu_theory", cq.mu_theory}, {"rho_theory", cq.rho_theory}, {"s_min", cq.s_min},
             {"s_max", cq.s_max}, {"kappa_w", cq.kappa_w}, {"zeta_s_min", cq.zeta_s_min},
             {"L", cq.L}, {"L0", cq.L0}, {"singular_ratio_product", cq.singular_ratio_product}}) {
      report.emplace_back(name, v);
    }
  } catch (const Error& e) {
    std::cerr << "critical quantities unavailable: " << e.what() << '\n';
    report.emplace_back("theta", nan);
  }

  const fs::path dir = prepare_out_dir(f.out_dir);
  {
    auto out = open_output(dir / "hessian_report.csv");
    out << "quantity,value\n" << std::setprecision(17);
    for (const auto& [k, v] : report) out << k << ',' << v << '\n';
  }
  json inputs = {{"h", f.h}, {"p", f.p}, {"n", f.n}, {"activation", f.activation}, {"teacher", f.teacher},
                 {"directions", f.directions}, {"d", f.d}, {"cone-s", f.cone_s}, {"offset", f.offset}};
  json values = json::object();
  for (const auto& [k, v] : report) values[k] = std::isfinite(v) ? json(v) : json(nullptr);
  write_manifest(dir / "hessian_report.manifest.json", "analyze-hessian", inputs, seed, clock,
                 {{"report", values}});
  std::cout << std::setprecision(8);
  for (const auto& [k, v] : report) std::cout << k << ' ' << v << '\n';
  return 0;
}

struct CovdimFlags {
  std::string constraint;
  Eigen::Index h = 1, p = 0, s = 0, r = 0, d = 0, k = 0, b = 0, stride = 1;
  bool verbose = false;
};

int run_covdim(const CovdimFlags& f) {
  ConstraintSpec spec;
  Eigen::Index h = f.h, p = f.p;
  const std::string& c = f.constraint;
  auto need = [](bool ok, const char* what) {
    if (!ok) throw UsageError(what);
  };
  if (c == "conv") {
    need(f.k >= 1 && f.b >= 1, "conv needs --k and --b");
    if (p == 0) p = f.b;
    ConvGeometry g;
    try {
      g = ConvGeometry::make(f.k, f.b, f.stride, p);
    } catch (const GeometryError& e) {
      throw UsageError(e.what());
    }
    spec = ConstraintSpec::conv(g);
    h = g.hidden();
  } else {
    need(h >= 1 && p >= 1, "need --h and --p");
    if (c == "none") {
      spec = ConstraintSpec::none();
    } else if (c == "l0") {
      need(f.s >= 1, "l0 needs --s (total nonzeros)");
      spec = ConstraintSpec::sparsity(f.s);
    } else if (c == "l1") {
      spec = f.s >= 1 ? ConstraintSpec::l1_ball(1.0, f.s) : ConstraintSpec::l1_ball(1.0);
    } else if (c == "rank") {
      need(f.r >= 1, "rank needs --r");
      spec = ConstraintSpec::rank(f.r);
    } else if (c == "nuclear") {
      spec = f.r >= 1 ? ConstraintSpec::nuclear_ball(1.0, f.r) : ConstraintSpec::nuclear_ball(1.0);
    } else if (c == "subspace") {
      need(f.d >= 1 && f.d <= h * p, "subspace needs 1 <= --d <= h*p");
      spec = ConstraintSpec::subspace(Matrix::Identity(h * p, f.d));
    }
  }
  const auto res = covering_dimension(spec, h, p);
  std::cout << std::setprecision(10) << res.value << '\n';
  if (f.verbose) std::cerr << res.formula_tag << '\n';
  return 0;
}

struct ZetaFlags {
  std::string activation;
  double theta = 1.0, alpha = 0.0, beta = 0.0;
  int nodes = kZetaNodesPerPanel;
  CLI::Option* alpha_opt = nullptr;
};

int run_zeta(const ZetaFlags& f) {
  const ActivationKind kind = cli::parse_activation_flag(f.activation);
  double value = 0.0;
  try {
    if (f.alpha_opt->count() > 0) {
      value = zeta_interval(kind, f.alpha, f.beta, 65, f.nodes);
    } else {
      value = zeta(kind, f.theta, f.nodes);
    }
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  std::cout << std::setprecision(12) << value << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projected gradient descent for compact one-hidden-layer networks"};
  // -h is left free for the hidden-width flag --h
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", std::string(COMPACTNET_VERSION));
  app.require_subcommand(1);

  SpecFlags sparse_flags, cnn_flags, train_flags;
  auto* sparse = app.add_subcommand("experiment-sparse", "Sparse teacher sweep over n and constraints");
  sparse_flags.attach(sparse, true, false, true);

  auto* cnn = app.add_subcommand("experiment-cnn", "Convolutional teacher sweep (three models)");
  cnn_flags.attach(cnn, false, true, false);
  bool skip_good = false;
  cnn->add_flag("--skip-good-init", skip_good, "Skip the conv-constrained run from W* + Z");

  auto* train = app.add_subcommand("train", "One PGD run with a per-iteration trace");
  std::string family = "sparse", constraint;
  Eigen::Index n = 0;
  int trial = 0;
  train->add_option("--family", family, "sparse or cnn")->check(CLI::IsMember({"sparse", "cnn"}))->capture_default_str();
  train->add_option("--n", n, "Training samples (default: largest grid value)");
  train->add_option("--constraint", constraint, "Constraint tag (default: last in the list)");
  train->add_option("--trial", trial, "Trial index for seeding")->check(CLI::NonNegativeNumber);
  train_flags.attach(train, true, true, true);

  HessianFlags hf;
  auto* hess = app.add_subcommand("analyze-hessian", "Ground-truth Hessian diagnostics");
  hess->add_option("--h", hf.h, "Hidden units")->capture_default_str();
  hess->add_option("--p", hf.p, "Input dimension")->capture_default_str();
  hess->add_option("--n", hf.n, "Samples")->capture_default_str();
  hess->add_option("--activation", hf.activation, "Activation name")->capture_default_str();
  hess->add_option("--teacher", hf.teacher, "orthonormal or gaussian")
      ->check(CLI::IsMember({"orthonormal", "gaussian"}))->capture_default_str();
  hess->add_option("--directions", hf.directions, "full, subspace or sparse")
      ->check(CLI::IsMember({"full", "subspace", "sparse"}))->capture_default_str();
  hess->add_option("--d", hf.d, "Subspace dimension")->capture_default_str();
  hess->add_option("--cone-s", hf.cone_s, "Sparse cone support size")->capture_default_str();
  hess->add_option("--offset", hf.offset, "||U - W*||_F for the decomposition check")->capture_default_str();
  hf.seed_opt = hess->add_option("--seed", hf.seed, "Seed (default: $COMPACTNET_SEED, then 1)");
  hess->add_option("--out-dir", hf.out_dir, "Output directory")->capture_default_str();

  CovdimFlags cf;
  auto* cov = app.add_subcommand("covdim", "Covering dimension of a constraint set");
  cov->add_option("--constraint", cf.constraint, "none, l0, l1, rank, nuclear, subspace or conv")
      ->required()
      ->check(CLI::IsMember({"none", "l0", "l1", "rank", "nuclear", "subspace", "conv"}));
  cov->add_option("--h", cf.h, "Hidden units");
  cov->add_option("--p", cf.p, "Input dimension");
  cov->add_option("--s", cf.s, "Total nonzeros (l0, l1)");
  cov->add_option("--r", cf.r, "Rank (rank, nuclear)");
  cov->add_option("--d", cf.d, "Subspace dimension");
  cov->add_option("--k", cf.k, "Kernels (conv)");
  cov->add_option("--b", cf.b, "Kernel width (conv)");
  cov->add_option("--stride", cf.stride, "Stride (conv)");
  cov->add_flag("--verbose", cf.verbose, "Print the formula tag to stderr");

  ZetaFlags zf;
  auto* zeta_cmd = app.add_subcommand("zeta", "Activation nonlinearity measure zeta");
  zeta_cmd->add_option("--activation", zf.activation, "Activation name")->required();
  zeta_cmd->add_option("--theta", zf.theta, "Scale theta > 0")->capture_default_str();
  zf.alpha_opt = zeta_cmd->add_option("--alpha", zf.alpha, "Interval lower end (with --beta)");
  zeta_cmd->add_option("--beta", zf.beta, "Interval upper end")->needs(zf.alpha_opt);
  zf.alpha_opt->needs("--beta");
  zeta_cmd->add_option("--nodes", zf.nodes, "Quadrature nodes per panel")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*sparse) return run_experiment_sparse(sparse_flags);
    if (*cnn) return run_experiment_cnn(cnn_flags, skip_good);
    if (*train) return run_train(train_flags, family, n, constraint, trial);
    if (*hess) return run_analyze_hessian(hf);
    if (*cov) return run_covdim(cf);
    if (*zeta_cmd) return run_zeta(zf);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << e.category() << " error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
