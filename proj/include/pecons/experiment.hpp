#pragma once

/**
 * A fully resolved experiment (graph, weights, gain, initial state, time and
 * PE settings) and the pipelines that the command-line tool runs on it.
 */

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pecons/analysis.hpp"
#include "pecons/dynamics.hpp"
#include "pecons/error.hpp"
#include "pecons/graph.hpp"
#include "pecons/weights.hpp"

namespace pecons {

enum class Block { Tree, Cycle, All };

inline std::string_view to_string(Block b) {
  switch (b) {
    case Block::Tree: return "tree";
    case Block::Cycle: return "cycle";
    case Block::All: return "all";
  }
  return "tree";
}

struct Experiment {
  OrientedIncidence incidence;
  std::optional<TreeCyclePartition> partition;  ///< empty for disconnected graphs
  SignalBank bank;
  SimConfig sim;
  Eigen::VectorXd x0;
  PeSettings pe;
  double consensus_tol = 1e-3;

  const Graph& graph() const noexcept { return incidence.graph; }

  const TreeCyclePartition& require_partition() const {
    if (!partition) {
      throw Error(ErrorCode::DisconnectedGraph, "graph is disconnected; no spanning tree exists");
    }
    return *partition;
  }
};

inline Experiment make_experiment(const Graph& g, SignalBank bank, SimConfig sim,
                                  Eigen::VectorXd x0, PeSettings pe,
                                  double consensus_tol = 1e-3) {
  Experiment e;
  e.incidence = orient_and_incidence(g);
  if (bank.size() != g.edge_count()) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(g.edge_count()) + " weight profiles, got " +
                    std::to_string(bank.size()));
  }
  if (x0.size() != g.vertex_count()) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(g.vertex_count()) + " initial states, got " +
                    std::to_string(x0.size()));
  }
  sim.validate();
  if (is_connected(g)) e.partition = partition_spanning_tree(e.incidence);
  e.bank = std::move(bank);
  e.sim = sim;
  e.x0 = std::move(x0);
  e.pe = pe;
  e.consensus_tol = consensus_tol;
  return e;
}

struct SimulationResult {
  Trajectory nodes;
  Trajectory tree;  ///< D_T^T x; zero-width when there is no spanning tree
  ConsensusResult consensus;
};

inline SimulationResult run_simulation(const Experiment& e) {
  SimulationResult r;
  r.nodes = simulate_nodes(e.incidence, e.bank, e.sim, e.x0);
  if (e.partition) {
    r.tree = r.nodes.mapped(e.partition->D_T, DimensionKind::TreeEdge);
  } else {
    r.tree = r.nodes.mapped(Eigen::MatrixXd::Zero(e.x0.size(), 0), DimensionKind::TreeEdge);
  }
  r.consensus = consensus_check(r.nodes, e.consensus_tol);
  return r;
}

inline PECertificate certify(const Experiment& e, Block block) {
  const auto& part = e.require_partition();
  switch (block) {
    case Block::Tree: return pe_certificate(e.bank.tree_block(part), e.pe);
    case Block::Cycle: return pe_certificate(e.bank.cycle_block(part), e.pe);
    case Block::All: return pe_certificate(e.bank, e.pe);
  }
  return pe_certificate(e.bank.tree_block(part), e.pe);
}

/// Rate bound using the tree-block certificate, i.e. PE of W_T(t).
inline RateBound rate_bound(const Experiment& e, double k, const PECertificate& tree_cert) {
  const auto& part = e.require_partition();
  return convergence_rate_bound(k, tree_spectrum(part), part.p, tree_cert);
}

struct EnvelopeResult {
  PECertificate certificate;
  RateBound bound;
  SimulationResult simulation;
  EnvelopeReport report;
};

inline EnvelopeResult check_envelope(const Experiment& e) {
  EnvelopeResult r;
  r.certificate = certify(e, Block::Tree);
  r.bound = rate_bound(e, e.sim.k, r.certificate);
  r.simulation = run_simulation(e);
  r.report = envelope_check(r.simulation.tree, r.bound, e.sim.t0);
  return r;
}

struct SweepRow {
  double k = 0.0;
  double bound_rate = std::numeric_limits<double>::quiet_NaN();
  double empirical_rate = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
};

/// One reduced simulation and one bound evaluation per gain, rows in the
/// order of `k_list`. Failures are recorded in the row's status.
inline std::vector<SweepRow> gain_sweep(const Experiment& e, const std::vector<double>& k_list) {
  const auto& part = e.require_partition();
  const PECertificate cert = certify(e, Block::Tree);
  const TreeSpectrum spec = tree_spectrum(part);
  const Eigen::VectorXd xT0 = tree_edge_initial_state(part, e.x0);
  std::vector<SweepRow> rows;
  rows.reserve(k_list.size());
  for (double k : k_list) {
    SweepRow row;
    row.k = k;
    try {
      if (!(k > 0.0)) throw Error(ErrorCode::InvalidArgument, "gain must be > 0");
      row.bound_rate = convergence_rate_bound(k, spec, part.p, cert).rate;
      SimConfig cfg = e.sim;
      cfg.k = k;
      row.empirical_rate = empirical_rate(simulate_tree_edges(part, e.bank, cfg, xT0));
    } catch (const Error& err) {
      row.status = std::string(to_string(err.code()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace pecons
