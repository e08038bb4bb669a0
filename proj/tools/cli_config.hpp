#pragma once

#include <cstdlib>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "compactnet/experiments.hpp"

namespace compactnet::cli {

using json = nlohmann::json;

/// Bad flags, bad config files or invalid combinations. Exit code 2.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error("usage", what) {}
};

inline InitMode parse_init(const std::string& s) {
  if (s == "good") return InitMode::good;
  if (s == "random") return InitMode::random;
  throw UsageError("unknown init mode '" + s + "' (expected good or random)");
}

inline ActivationKind parse_activation_flag(const std::string& s) {
  if (auto k = parse_activation(s)) return *k;
  throw UsageError("unknown activation '" + s + "'");
}

inline Family parse_family(const std::string& s) {
  if (s == "sparse") return Family::sparse;
  if (s == "cnn") return Family::cnn;
  throw UsageError("unknown family '" + s + "' (expected sparse or cnn)");
}

/// Config echo written into run manifests. Keys match the kebab-case flags,
/// so a manifest's "config" object can be fed back through --config.
inline json spec_to_json(const ExperimentSpec& spec) {
  json j;
  j["family"] = to_string(spec.family);
  j["p"] = spec.family == Family::sparse ? spec.p : spec.conv.input;
  j["h"] = spec.h;
  j["s"] = spec.s;
  j["k"] = spec.conv.kernels;
  j["b"] = spec.conv.width;
  j["stride"] = spec.conv.stride;
  j["n-grid"] = spec.n_grid;
  j["n-test"] = spec.n_test;
  j["trials"] = spec.trials;
  j["init"] = to_string(spec.init);
  j["constraints"] = spec.constraints;
  j["activation"] = std::string(to_string(spec.activation));
  j["mu"] = spec.mu;
  j["mu-per-input-dim"] = spec.mu_per_input_dim;
  j["iters"] = spec.iters;
  j["seed"] = spec.master_seed;
  return j;
}

/// Overlays the keys present in `j` onto `spec`. Unknown keys are rejected.
inline void apply_json(ExperimentSpec& spec, const json& j) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  Eigen::Index p = spec.family == Family::sparse ? spec.p : spec.conv.input;
  Eigen::Index k = spec.conv.kernels, b = spec.conv.width, stride = spec.conv.stride;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "family") spec.family = parse_family(v.get<std::string>());
      else if (key == "p") p = v.get<Eigen::Index>();
      else if (key == "h") spec.h = v.get<Eigen::Index>();
      else if (key == "s") spec.s = v.get<Eigen::Index>();
      else if (key == "k") k = v.get<Eigen::Index>();
      else if (key == "b") b = v.get<Eigen::Index>();
      else if (key == "stride") stride = v.get<Eigen::Index>();
      else if (key == "n-grid") spec.n_grid = v.get<std::vector<Eigen::Index>>();
      else if (key == "n-test") spec.n_test = v.get<Eigen::Index>();
      else if (key == "trials") spec.trials = v.get<int>();
      else if (key == "init") spec.init = parse_init(v.get<std::string>());
      else if (key == "constraints") spec.constraints = v.get<std::vector<std::string>>();
      else if (key == "activation") spec.activation = parse_activation_flag(v.get<std::string>());
      else if (key == "mu") spec.mu = v.get<double>();
      else if (key == "mu-per-input-dim") spec.mu_per_input_dim = v.get<bool>();
      else if (key == "iters") spec.iters = v.get<long>();
      else if (key == "seed") spec.master_seed = v.get<std::uint64_t>();
      else throw UsageError("config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  if (spec.family == Family::sparse) {
    spec.p = p;
  } else {
    try {
      spec.conv = ConvGeometry::make(k, b, stride, p);
    } catch (const GeometryError& e) {
      throw UsageError(e.what());
    }
  }
}

inline json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError("config file '" + path + "': " + e.what());
  }
  // a run manifest carries its config under "config"
  if (j.is_object() && j.contains("config") && j["config"].is_object()) return j["config"];
  return j;
}

/// Seed from the environment when no flag is given.
inline std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("COMPACTNET_SEED");
  if (!v || !*v) return std::nullopt;
  try {
    std::size_t used = 0;
    const std::string s(v);
    const auto seed = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return seed;
  } catch (const std::logic_error&) {
    throw UsageError(std::string("COMPACTNET_SEED is not an unsigned integer: ") + v);
  }
}

}  // namespace compactnet::cli
