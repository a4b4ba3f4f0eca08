#pragma once

/**
 * Subcommands of the `pecons` tool. Each one loads a configuration, runs a
 * pipeline from experiment.hpp, writes its files atomically and returns the
 * process exit code.
 */

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pecons/config.hpp"
#include "pecons/error.hpp"
#include "pecons/experiment.hpp"

namespace pecons::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInvalidConfig = 2,
  kDiverged = 3,
  kHorizonTooShort = 4,
  kDegenerateBound = 5,
  kEnvelopeViolation = 6,
};

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteState: return kDiverged;
    case ErrorCode::HorizonTooShort: return kHorizonTooShort;
    case ErrorCode::DegenerateBound: return kDegenerateBound;
    case ErrorCode::Io:
    case ErrorCode::NumericalFailure:
    case ErrorCode::UnderflowInWindow: return kFailure;
    default: return kInvalidConfig;
  }
}

struct Options {
  std::string config_path;
  std::optional<std::string> output_dir;
  std::optional<std::string> k_list;
  Block block = Block::Tree;
};

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Writes to `<path>.tmp` and renames over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw Error(ErrorCode::Io, "write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot rename onto '" + path.string() + "': " + ec.message());
}

inline Json nullable(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline std::vector<double> parse_k_list(const std::string& text) {
  std::vector<double> ks;
  std::stringstream ss(text);
  std::string item;
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double k = 0.0;
    try {
      k = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (item.empty() || used != item.size() || !(k > 0.0) || !std::isfinite(k)) {
      throw ConfigError("--k-list[" + std::to_string(i) + "]",
                        "expected a positive number, got '" + item + "'");
    }
    ks.push_back(k);
    ++i;
  }
  if (ks.empty()) throw ConfigError("--k-list", "expected at least one gain");
  return ks;
}

struct Context {
  ExperimentConfig config;
  Experiment experiment;
  std::filesystem::path out_dir;

  std::filesystem::path file(const std::string& name) const {
    return out_dir / (config.outputs.prefix + name);
  }
};

inline Context load_context(const Options& opts) {
  Context ctx;
  ctx.config = load_config(opts.config_path);
  try {
    ctx.experiment = to_experiment(ctx.config);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("<config>", e.what());
  }
  ctx.out_dir = opts.output_dir ? *opts.output_dir : ctx.config.outputs.directory;
  return ctx;
}

inline Json certificate_json(const PECertificate& c, Block block) {
  return {{"block", std::string(to_string(block))},
          {"mu1", c.mu1},
          {"mu2", c.mu2},
          {"window", c.window},
          {"horizon", c.horizon},
          {"grid_stride", c.grid_stride},
          {"is_pe", c.is_pe}};
}

inline Json bound_json(const RateBound& b) {
  return {{"inputs",
           {{"k", b.inputs.k},
            {"p", b.inputs.p},
            {"lambda_min", b.inputs.lambda_min},
            {"norm_Lambda", b.inputs.norm_Lambda},
            {"mu1", b.inputs.mu1},
            {"mu2", b.inputs.mu2},
            {"window", b.inputs.window}}},
          {"ratio", b.ratio},
          {"m_v", b.m_v},
          {"alpha_v", b.alpha_v},
          {"rate", b.rate},
          {"prefactor", b.prefactor},
          {"zero_excitation", b.zero_excitation}};
}

inline int cmd_simulate(const Options& opts, std::ostream& out) {
  const Context ctx = load_context(opts);
  const SimulationResult sim = run_simulation(ctx.experiment);

  std::ostringstream nodes;
  write_trajectory_csv(nodes, sim.nodes);
  std::ostringstream tree;
  tree << "t,norm_xT\n";
  const auto norms = sim.tree.norms();
  for (std::size_t i = 0; i < sim.tree.samples(); ++i) {
    tree << format_double(sim.tree.times[i]) << ',' << format_double(norms[i]) << '\n';
  }
  Json summary;
  summary["consensus"] = {{"reached", sim.consensus.reached},
                          {"value", nullable(sim.consensus.value)},
                          {"t_reach", nullable(sim.consensus.t_reach)},
                          {"final_spread", consensus_spread(sim.nodes.final_state())},
                          {"tolerance", ctx.experiment.consensus_tol}};
  summary["mean_x0"] = ctx.experiment.x0.size() > 0 ? ctx.experiment.x0.mean() : 0.0;
  summary["samples"] = sim.nodes.samples();
  summary["config"] = to_json(ctx.config);

  write_file_atomic(ctx.file("nodes.csv"), nodes.str());
  write_file_atomic(ctx.file("tree_norm.csv"), tree.str());
  write_file_atomic(ctx.file("summary.json"), summary.dump(2) + "\n");
  out << "consensus " << (sim.consensus.reached ? "reached" : "not reached") << ", value "
      << format_double(sim.consensus.value) << '\n';
  return kOk;
}

inline int cmd_pe_cert(const Options& opts, std::ostream& out) {
  const Context ctx = load_context(opts);
  const auto& part = ctx.experiment.require_partition();
  if (opts.block == Block::Cycle && part.cycle_count() == 0) {
    throw ConfigError("--block", "graph has no cycle edges");
  }
  if (ctx.experiment.bank.size() == 0) throw ConfigError("graph.edges", "graph has no edges");
  const PECertificate cert = certify(ctx.experiment, opts.block);
  Json doc = certificate_json(cert, opts.block);
  const std::string name = "pe_cert_" + std::string(to_string(opts.block)) + ".json";
  write_file_atomic(ctx.file(name), doc.dump(2) + "\n");
  out << "mu1 " << format_double(cert.mu1) << ", mu2 " << format_double(cert.mu2)
      << (cert.is_pe ? ", PE" : ", not PE") << '\n';
  return kOk;
}

inline int cmd_bound(const Options& opts, std::ostream& out) {
  const Context ctx = load_context(opts);
  const PECertificate cert = certify(ctx.experiment, Block::Tree);
  const RateBound bound = rate_bound(ctx.experiment, ctx.experiment.sim.k, cert);
  Json doc = bound_json(bound);
  doc["certificate"] = certificate_json(cert, Block::Tree);
  write_file_atomic(ctx.file("bound.json"), doc.dump(2) + "\n");
  out << "rate " << format_double(bound.rate) << ", prefactor " << format_double(bound.prefactor)
      << (bound.zero_excitation ? " (zero excitation)" : "") << '\n';
  return kOk;
}

inline int cmd_check(const Options& opts, std::ostream& out) {
  const Context ctx = load_context(opts);
  const EnvelopeResult r = check_envelope(ctx.experiment);
  std::ostringstream csv;
  csv << "t,norm_xT,envelope,margin\n";
  for (const auto& s : r.report.margins) {
    csv << format_double(s.t) << ',' << format_double(s.norm) << ',' << format_double(s.envelope)
        << ',' << format_double(s.margin) << '\n';
  }
  Json doc;
  doc["contained"] = r.report.contained;
  doc["first_violation"] =
      r.report.first_violation ? Json(*r.report.first_violation) : Json(nullptr);
  double min_margin = std::numeric_limits<double>::infinity();
  for (const auto& s : r.report.margins) min_margin = std::min(min_margin, s.margin);
  doc["min_margin"] = nullable(min_margin);
  doc["bound"] = bound_json(r.bound);
  doc["certificate"] = certificate_json(r.certificate, Block::Tree);
  write_file_atomic(ctx.file("envelope.csv"), csv.str());
  write_file_atomic(ctx.file("check.json"), doc.dump(2) + "\n");
  if (!r.report.contained) {
    out << "envelope violated at t = " << format_double(*r.report.first_violation) << '\n';
    return kEnvelopeViolation;
  }
  out << "contained, rate " << format_double(r.bound.rate) << '\n';
  return kOk;
}

inline int cmd_sweep(const Options& opts, std::ostream& out) {
  const Context ctx = load_context(opts);
  std::vector<double> ks = opts.k_list ? parse_k_list(*opts.k_list) : ctx.config.k_list;
  if (ks.empty()) throw ConfigError("--k-list", "no gains given (flag or sweep.k_list)");
  const auto rows = gain_sweep(ctx.experiment, ks);
  std::ostringstream csv;
  csv << "k,bound_rate,empirical_rate,status\n";
  for (const auto& row : rows) {
    csv << format_double(row.k) << ',' << format_double(row.bound_rate) << ','
        << format_double(row.empirical_rate) << ',' << row.status << '\n';
  }
  write_file_atomic(ctx.file("sweep.csv"), csv.str());
  out << rows.size() << " sweep rows written\n";
  return kOk;
}

/// Runs a subcommand, mapping library errors to exit codes and printing a
/// message that names the failing field or stage.
template <class Command>
int run_guarded(Command&& cmd, const Options& opts, std::ostream& out, std::ostream& err) {
  try {
    return cmd(opts, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidConfig;
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace pecons::cli
