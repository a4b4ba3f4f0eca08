#pragma once

/**
 * JSON experiment configuration. Parsing is strict: unknown keys, wrong
 * types and out-of-range values are rejected with a message naming the
 * offending field (e.g. `graph.edges[3]`).
 *
 * {
 *   "graph":   {"n": 4, "edges": [[1,2], [2,3], ...]},
 *   "signals": [{"kind": "gated_squared_sine", "freq": 1, "duty": 0.1, "period": 6.28...}, ...],
 *   "control_gain": 1,
 *   "x0": [0.1, 0.1, 0.77, 0.8],
 *   "time":    {"t0": 0, "t_final": 30, "dt": 0.001, "record_stride": 10},
 *   "pe":      {"window": 6.28..., "horizon": 30, "stride": 0.314..., "quad_step": 0.001},
 *   "outputs": {"directory": "out", "prefix": "consensus_"},
 *   "consensus_tol": 0.001,
 *   "sweep":   {"k_list": [0.1, 1, 10, 100]}
 * }
 *
 * Profile kinds: constant {value}, squared_sine {freq},
 * gated_squared_sine {freq, duty, period}, piecewise_constant {breakpoints:
 * [[t, value], ...]}; every kind accepts an optional "scale".
 */

#include <cmath>
#include <cstddef>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pecons/error.hpp"
#include "pecons/experiment.hpp"
#include "pecons/graph.hpp"
#include "pecons/weights.hpp"

namespace pecons {

using Json = nlohmann::ordered_json;

struct OutputSettings {
  std::string directory = ".";
  std::string prefix;
};

struct ExperimentConfig {
  int n = 1;
  std::vector<Edge> edges;
  std::vector<WeightProfile> signals;
  double control_gain = 1.0;
  std::vector<double> x0;
  SimConfig time;
  PeSettings pe;
  OutputSettings outputs;
  double consensus_tol = 1e-3;
  std::vector<double> k_list;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(ErrorCode::Config, field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

namespace detail {

inline void reject_unknown(const Json& obj, const std::string& path,
                           std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || item.key() == a;
    if (!ok) {
      throw ConfigError(path.empty() ? item.key() : path + "." + item.key(), "unknown key");
    }
  }
}

inline const Json& require(const Json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) throw ConfigError(path + "." + key, "missing required field");
  return obj.at(key);
}

inline double number(const Json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "expected a finite number");
  return x;
}

inline double number_or(const Json& obj, const std::string& path, const char* key,
                        double fallback) {
  return obj.contains(key) ? number(obj.at(key), path + "." + key) : fallback;
}

inline long long integer(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<long long>();
}

inline std::string at_index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

inline WeightProfile parse_profile(const Json& v, const std::string& path) {
  if (!v.is_object()) throw ConfigError(path, "expected a profile object");
  const Json& kind_json = require(v, path, "kind");
  if (!kind_json.is_string()) throw ConfigError(path + ".kind", "expected a string");
  const auto kind = kind_json.get<std::string>();
  const double scale = number_or(v, path, "scale", 1.0);
  if (scale < 0.0) throw ConfigError(path + ".scale", "must be >= 0");
  try {
    if (kind == "constant") {
      reject_unknown(v, path, {"kind", "value", "scale"});
      const double c = number(require(v, path, "value"), path + ".value");
      if (c < 0.0) throw ConfigError(path + ".value", "must be >= 0");
      return WeightProfile(profile::Constant{c}, scale);
    }
    if (kind == "squared_sine") {
      reject_unknown(v, path, {"kind", "freq", "scale"});
      return WeightProfile(profile::SquaredSine{number(require(v, path, "freq"), path + ".freq")},
                           scale);
    }
    if (kind == "gated_squared_sine") {
      reject_unknown(v, path, {"kind", "freq", "duty", "period", "scale"});
      profile::GatedSquaredSine g;
      g.freq = number(require(v, path, "freq"), path + ".freq");
      g.duty = number(require(v, path, "duty"), path + ".duty");
      if (g.duty < 0.0 || g.duty > 1.0) throw ConfigError(path + ".duty", "must lie in [0,1]");
      g.period = number_or(v, path, "period", 2.0 * std::numbers::pi);
      if (!(g.period > 0.0)) throw ConfigError(path + ".period", "must be > 0");
      return WeightProfile(g, scale);
    }
    if (kind == "piecewise_constant") {
      reject_unknown(v, path, {"kind", "breakpoints", "scale"});
      const Json& bps = require(v, path, "breakpoints");
      if (!bps.is_array() || bps.empty()) {
        throw ConfigError(path + ".breakpoints", "expected a non-empty array of [t, value]");
      }
      profile::PiecewiseConstant pw;
      for (std::size_t i = 0; i < bps.size(); ++i) {
        const auto bp_path = at_index(path + ".breakpoints", i);
        if (!bps[i].is_array() || bps[i].size() != 2) {
          throw ConfigError(bp_path, "expected [t, value]");
        }
        const double t = number(bps[i][0], bp_path + "[0]");
        const double w = number(bps[i][1], bp_path + "[1]");
        if (i == 0 && t != 0.0) throw ConfigError(bp_path, "first breakpoint must start at t = 0");
        if (i > 0 && !(t > pw.breakpoints.back().first)) {
          throw ConfigError(bp_path, "breakpoint times must be strictly increasing");
        }
        if (w < 0.0) throw ConfigError(bp_path, "weight must be >= 0");
        pw.breakpoints.emplace_back(t, w);
      }
      return WeightProfile(std::move(pw), scale);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(path + ".kind", "unknown profile kind '" + kind + "'");
}

inline Json profile_to_json(const WeightProfile& p) {
  Json out = std::visit(
      [](const auto& k) -> Json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, profile::Constant>) {
          return {{"kind", "constant"}, {"value", k.value}};
        } else if constexpr (std::is_same_v<K, profile::SquaredSine>) {
          return {{"kind", "squared_sine"}, {"freq", k.freq}};
        } else if constexpr (std::is_same_v<K, profile::GatedSquaredSine>) {
          return {{"kind", "gated_squared_sine"},
                  {"freq", k.freq},
                  {"duty", k.duty},
                  {"period", k.period}};
        } else {
          Json bps = Json::array();
          for (const auto& [t, w] : k.breakpoints) bps.push_back({t, w});
          return {{"kind", "piecewise_constant"}, {"breakpoints", bps}};
        }
      },
      p.kind());
  if (p.scale() != 1.0) out["scale"] = p.scale();
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(const Json& root) {
  using namespace detail;
  reject_unknown(root, "", {"graph", "signals", "control_gain", "x0", "time", "pe", "outputs",
                            "consensus_tol", "sweep"});
  ExperimentConfig cfg;

  const Json& graph = require(root, "", "graph");
  reject_unknown(graph, "graph", {"n", "edges"});
  const long long n = integer(require(graph, "graph", "n"), "graph.n");
  if (n < 1 || n > 100000) throw ConfigError("graph.n", "must be >= 1");
  cfg.n = static_cast<int>(n);
  const Json& edges = require(graph, "graph", "edges");
  if (!edges.is_array()) throw ConfigError("graph.edges", "expected an array");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto path = at_index("graph.edges", i);
    if (!edges[i].is_array() || edges[i].size() != 2) throw ConfigError(path, "expected [u, v]");
    const auto u = integer(edges[i][0], path + "[0]");
    const auto v = integer(edges[i][1], path + "[1]");
    if (u < 1 || u > n || v < 1 || v > n) {
      throw ConfigError(path, "vertex outside [1, " + std::to_string(n) + "]");
    }
    cfg.edges.push_back({static_cast<int>(u), static_cast<int>(v)});
  }
  try {
    (void)build_graph(cfg.n, cfg.edges);
  } catch (const Error& e) {
    throw ConfigError(e.index() ? at_index("graph.edges", *e.index()) : "graph", e.what());
  }

  const Json& signals = require(root, "", "signals");
  if (!signals.is_array()) throw ConfigError("signals", "expected an array");
  if (signals.size() != cfg.edges.size()) {
    throw ConfigError("signals", "expected " + std::to_string(cfg.edges.size()) +
                                     " profiles (one per edge), got " +
                                     std::to_string(signals.size()));
  }
  for (std::size_t i = 0; i < signals.size(); ++i) {
    cfg.signals.push_back(parse_profile(signals[i], at_index("signals", i)));
  }

  cfg.control_gain = number(require(root, "", "control_gain"), "control_gain");
  if (!(cfg.control_gain > 0.0)) throw ConfigError("control_gain", "must be > 0");

  const Json& x0 = require(root, "", "x0");
  if (!x0.is_array()) throw ConfigError("x0", "expected an array");
  if (x0.size() != static_cast<std::size_t>(cfg.n)) {
    throw ConfigError("x0", "expected " + std::to_string(cfg.n) + " entries, got " +
                                std::to_string(x0.size()));
  }
  for (std::size_t i = 0; i < x0.size(); ++i) cfg.x0.push_back(number(x0[i], at_index("x0", i)));

  const Json& time = require(root, "", "time");
  reject_unknown(time, "time", {"t0", "t_final", "dt", "record_stride"});
  cfg.time.k = cfg.control_gain;
  cfg.time.t0 = number_or(time, "time", "t0", 0.0);
  cfg.time.t_final = number(require(time, "time", "t_final"), "time.t_final");
  cfg.time.dt = number_or(time, "time", "dt", 1e-3);
  if (time.contains("record_stride")) {
    const auto stride = integer(time.at("record_stride"), "time.record_stride");
    if (stride < 1) throw ConfigError("time.record_stride", "must be >= 1");
    cfg.time.record_stride = static_cast<std::size_t>(stride);
  }
  if (!(cfg.time.t_final > cfg.time.t0)) throw ConfigError("time.t_final", "must exceed time.t0");
  if (!(cfg.time.dt > 0.0) || cfg.time.dt > cfg.time.t_final - cfg.time.t0) {
    throw ConfigError("time.dt", "must lie in (0, t_final - t0]");
  }

  const double span = cfg.time.t_final - cfg.time.t0;
  cfg.pe.horizon = span;
  if (root.contains("pe")) {
    const Json& pe = root.at("pe");
    reject_unknown(pe, "pe", {"window", "horizon", "stride", "quad_step"});
    cfg.pe.window = number_or(pe, "pe", "window", cfg.pe.window);
    cfg.pe.horizon = number_or(pe, "pe", "horizon", span);
    cfg.pe.stride = number_or(pe, "pe", "stride", 0.05 * cfg.pe.window);
    cfg.pe.quad_step = number_or(pe, "pe", "quad_step", 1e-3);
  } else {
    cfg.pe.stride = 0.05 * cfg.pe.window;
  }
  if (!(cfg.pe.window > 0.0)) throw ConfigError("pe.window", "must be > 0");
  if (!(cfg.pe.stride > 0.0)) throw ConfigError("pe.stride", "must be > 0");
  if (!(cfg.pe.quad_step > 0.0)) throw ConfigError("pe.quad_step", "must be > 0");
  if (!(cfg.pe.horizon > 0.0)) throw ConfigError("pe.horizon", "must be > 0");

  if (root.contains("outputs")) {
    const Json& out = root.at("outputs");
    reject_unknown(out, "outputs", {"directory", "prefix"});
    if (out.contains("directory")) {
      if (!out.at("directory").is_string()) throw ConfigError("outputs.directory", "expected a string");
      cfg.outputs.directory = out.at("directory").get<std::string>();
    }
    if (out.contains("prefix")) {
      if (!out.at("prefix").is_string()) throw ConfigError("outputs.prefix", "expected a string");
      cfg.outputs.prefix = out.at("prefix").get<std::string>();
    }
  }

  cfg.consensus_tol = number_or(root, "", "consensus_tol", 1e-3);
  if (!(cfg.consensus_tol > 0.0)) throw ConfigError("consensus_tol", "must be > 0");

  if (root.contains("sweep")) {
    const Json& sweep = root.at("sweep");
    reject_unknown(sweep, "sweep", {"k_list"});
    const Json& ks = require(sweep, "sweep", "k_list");
    if (!ks.is_array() || ks.empty()) throw ConfigError("sweep.k_list", "expected a non-empty array");
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const double k = number(ks[i], at_index("sweep.k_list", i));
      if (!(k > 0.0)) throw ConfigError(at_index("sweep.k_list", i), "must be > 0");
      cfg.k_list.push_back(k);
    }
  }
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(root);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

/// Resolved configuration with every default filled in; parsing it again
/// yields the same configuration.
inline Json to_json(const ExperimentConfig& cfg) {
  Json edges = Json::array();
  for (const auto& e : cfg.edges) edges.push_back({e.u, e.v});
  Json signals = Json::array();
  for (const auto& s : cfg.signals) signals.push_back(detail::profile_to_json(s));
  Json root;
  root["graph"] = {{"n", cfg.n}, {"edges", edges}};
  root["signals"] = signals;
  root["control_gain"] = cfg.control_gain;
  root["x0"] = cfg.x0;
  root["time"] = {{"t0", cfg.time.t0},
                  {"t_final", cfg.time.t_final},
                  {"dt", cfg.time.dt},
                  {"record_stride", cfg.time.record_stride}};
  root["pe"] = {{"window", cfg.pe.window},
                {"horizon", cfg.pe.horizon},
                {"stride", cfg.pe.stride},
                {"quad_step", cfg.pe.quad_step}};
  root["outputs"] = {{"directory", cfg.outputs.directory}, {"prefix", cfg.outputs.prefix}};
  root["consensus_tol"] = cfg.consensus_tol;
  if (!cfg.k_list.empty()) root["sweep"] = {{"k_list", cfg.k_list}};
  return root;
}

inline Experiment to_experiment(const ExperimentConfig& cfg) {
  Eigen::VectorXd x0(static_cast<Eigen::Index>(cfg.x0.size()));
  for (std::size_t i = 0; i < cfg.x0.size(); ++i) x0[static_cast<Eigen::Index>(i)] = cfg.x0[i];
  return make_experiment(build_graph(cfg.n, cfg.edges), SignalBank(cfg.signals), cfg.time,
                         std::move(x0), cfg.pe, cfg.consensus_tol);
}

}  // namespace pecons
