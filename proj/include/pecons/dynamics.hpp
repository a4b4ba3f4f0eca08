#pragma once

/**
 * Closed-loop consensus simulation x' = -k D W(t) D^T x, the reduced
 * spanning-tree edge dynamics x_T' = -k L_e(T) R W(t) R^T x_T, and the
 * conversions node -> edge -> spectral coordinates.
 */

#include <cmath>
#include <cstdio>
#include <cstddef>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pecons/error.hpp"
#include "pecons/graph.hpp"
#include "pecons/rk4.hpp"
#include "pecons/weights.hpp"

namespace pecons {

/// States above this magnitude abort a simulation.
inline constexpr double kDivergenceLimit = 1e9;

struct SimConfig {
  double k = 1.0;
  double t0 = 0.0;
  double t_final = 30.0;
  double dt = 1e-3;
  std::size_t record_stride = 10;

  void validate() const {
    if (!(k >= 0.0) || !std::isfinite(k)) {
      throw Error(ErrorCode::InvalidArgument, "control gain must be finite and >= 0");
    }
    if (!(t_final > t0)) throw Error(ErrorCode::InvalidArgument, "t_final must exceed t0");
    if (!(dt > 0.0) || dt > t_final - t0) {
      throw Error(ErrorCode::InvalidArgument, "dt must lie in (0, t_final - t0]");
    }
    if (record_stride < 1) throw Error(ErrorCode::InvalidArgument, "record_stride must be >= 1");
  }
};

enum class DimensionKind { Node, Edge, TreeEdge, CycleEdge, Spectral };

/// Time-stamped samples; row i of `states` is the state at `times[i]`.
struct Trajectory {
  std::vector<double> times;
  Eigen::MatrixXd states;
  DimensionKind kind = DimensionKind::Node;

  std::size_t samples() const noexcept { return times.size(); }
  Eigen::Index dimension() const noexcept { return states.cols(); }
  Eigen::VectorXd state(std::size_t i) const {
    return states.row(static_cast<Eigen::Index>(i)).transpose();
  }
  Eigen::VectorXd final_state() const { return state(samples() - 1); }

  /// Euclidean norm of every sample.
  std::vector<double> norms() const {
    std::vector<double> out(samples());
    for (std::size_t i = 0; i < samples(); ++i) {
      out[i] = states.row(static_cast<Eigen::Index>(i)).norm();
    }
    return out;
  }

  /// Same times, states multiplied on the right: new row = old row * M.
  Trajectory mapped(const Eigen::MatrixXd& M, DimensionKind new_kind) const {
    return {times, states * M, new_kind};
  }
};

namespace detail {

inline void check_finite(const Eigen::VectorXd& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || std::abs(x[i]) > kDivergenceLimit) {
      throw Error(ErrorCode::NonFiniteState,
                  "state component " + std::to_string(i) + " diverged", static_cast<std::size_t>(i));
    }
  }
}

template <class System>
Trajectory run_rk4(System&& f, const Eigen::VectorXd& x0, const SimConfig& cfg,
                   DimensionKind kind) {
  cfg.validate();
  detail::check_finite(x0);
  const StepPlan plan = plan_steps(cfg.t0, cfg.t_final, cfg.dt, cfg.record_stride);
  const std::size_t records = plan.steps / cfg.record_stride + 1;
  Trajectory traj;
  traj.kind = kind;
  traj.times.reserve(records);
  traj.states.resize(static_cast<Eigen::Index>(records), x0.size());
  integrate_fixed(
      f, x0, cfg.t0, cfg.t_final, cfg.dt, cfg.record_stride,
      [&](std::size_t, double t, const Eigen::VectorXd& x) {
        traj.states.row(static_cast<Eigen::Index>(traj.times.size())) = x.transpose();
        traj.times.push_back(t);
      },
      check_finite);
  return traj;
}

}  // namespace detail

/// RK4 integration of the node-level closed loop x' = -k D W(t) D^T x.
inline Trajectory simulate_nodes(const OrientedIncidence& inc, const SignalBank& bank,
                                 const SimConfig& cfg, const Eigen::VectorXd& x0) {
  if (static_cast<Eigen::Index>(bank.size()) != inc.D.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                "signal bank has " + std::to_string(bank.size()) + " profiles for " +
                    std::to_string(inc.D.cols()) + " edges");
  }
  if (x0.size() != inc.D.rows()) {
    throw Error(ErrorCode::DimensionMismatch,
                "x0 has " + std::to_string(x0.size()) + " entries for " +
                    std::to_string(inc.D.rows()) + " vertices");
  }
  const Eigen::MatrixXd& D = inc.D;
  const Eigen::MatrixXd Dt = D.transpose();
  const double k = cfg.k;
  auto f = [&](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const Eigen::VectorXd edge_flow = bank.values(t).cwiseProduct(Dt * x);
    return -k * (D * edge_flow);
  };
  return detail::run_rk4(f, x0, cfg, DimensionKind::Node);
}

/// RK4 integration of x_T' = -k L_e(T) R W(t) R^T x_T. `bank` is in original
/// edge order; it is permuted to the partition's order internally.
inline Trajectory simulate_tree_edges(const TreeCyclePartition& part, const SignalBank& bank,
                                      const SimConfig& cfg, const Eigen::VectorXd& xT0) {
  if (bank.size() != part.edge_count()) {
    throw Error(ErrorCode::DimensionMismatch, "signal bank does not match the partition");
  }
  if (xT0.size() != static_cast<Eigen::Index>(part.p)) {
    throw Error(ErrorCode::DimensionMismatch,
                "initial tree-edge state has " + std::to_string(xT0.size()) + " entries, expected " +
                    std::to_string(part.p));
  }
  const SignalBank permuted = bank.permuted(part);
  const Eigen::MatrixXd LR = part.D_T.transpose() * part.D_T * part.R;
  const Eigen::MatrixXd Rt = part.R.transpose();
  const double k = cfg.k;
  auto f = [&](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const Eigen::VectorXd edge_flow = permuted.values(t).cwiseProduct(Rt * x);
    return -k * (LR * edge_flow);
  };
  return detail::run_rk4(f, xT0, cfg, DimensionKind::TreeEdge);
}

/// Tree-edge block of D^T x0, the default start for the reduced simulation.
inline Eigen::VectorXd tree_edge_initial_state(const TreeCyclePartition& part,
                                               const Eigen::VectorXd& x0) {
  return part.D_T.transpose() * x0;
}

struct EdgeStates {
  Trajectory edge;                 ///< D^T x, original edge order
  Trajectory tree;                 ///< x_T
  Trajectory cycle;                ///< x_C, cycle edges in partition order
  Trajectory cycle_reconstructed;  ///< T^T x_T

  /// Largest |x_C - T^T x_T| over every sample.
  double cycle_residual() const {
    if (cycle.dimension() == 0 || cycle.samples() == 0) return 0.0;
    return (cycle.states - cycle_reconstructed.states).cwiseAbs().maxCoeff();
  }
};

inline EdgeStates node_to_edge_states(const Trajectory& nodes, const OrientedIncidence& inc,
                                      const TreeCyclePartition& part) {
  if (nodes.dimension() != inc.D.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "node trajectory dimension does not match graph");
  }
  if (part.edge_count() != static_cast<std::size_t>(inc.D.cols())) {
    throw Error(ErrorCode::DimensionMismatch, "partition does not match incidence matrix");
  }
  EdgeStates out;
  out.edge = nodes.mapped(inc.D, DimensionKind::Edge);
  out.tree = nodes.mapped(part.D_T, DimensionKind::TreeEdge);
  out.cycle = nodes.mapped(part.D_C, DimensionKind::CycleEdge);
  out.cycle_reconstructed = out.tree.mapped(part.T, DimensionKind::CycleEdge);
  return out;
}

/// y = Gamma^T x_T per sample.
inline Trajectory spectral_transform(const Trajectory& tree, const TreeSpectrum& spec) {
  if (tree.dimension() != spec.Gamma.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "tree trajectory dimension does not match spectrum");
  }
  return tree.mapped(spec.Gamma, DimensionKind::Spectral);
}

/// V(y) = y^T Lambda^{-1} y per sample.
inline std::vector<double> lyapunov_series(const Trajectory& spectral, const TreeSpectrum& spec) {
  if (spectral.dimension() != spec.Lambda.size()) {
    throw Error(ErrorCode::DimensionMismatch, "spectral trajectory dimension mismatch");
  }
  const Eigen::VectorXd inv = spec.Lambda.cwiseInverse();
  std::vector<double> out(spectral.samples());
  for (std::size_t i = 0; i < spectral.samples(); ++i) {
    const auto row = spectral.states.row(static_cast<Eigen::Index>(i));
    out[i] = row.cwiseAbs2().dot(inv.transpose());
  }
  return out;
}

struct ConsensusResult {
  bool reached = false;
  double value = std::numeric_limits<double>::quiet_NaN();  ///< mean of the final state
  double t_reach = std::numeric_limits<double>::quiet_NaN();
};

/// Spread max_i |x_i - mean(x)| of one sample.
inline double consensus_spread(const Eigen::VectorXd& x) {
  if (x.size() == 0) return 0.0;
  return (x.array() - x.mean()).abs().maxCoeff();
}

inline ConsensusResult consensus_check(const Trajectory& nodes, double tol) {
  ConsensusResult r;
  if (nodes.samples() == 0) return r;
  const Eigen::VectorXd last = nodes.final_state();
  r.value = last.size() > 0 ? last.mean() : 0.0;
  if (!(consensus_spread(last) < tol)) return r;
  r.reached = true;
  std::size_t first = nodes.samples() - 1;
  while (first > 0 && consensus_spread(nodes.state(first - 1)) < tol) --first;
  r.t_reach = nodes.times[first];
  return r;
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << 't';
  for (Eigen::Index j = 0; j < traj.dimension(); ++j) os << ",s" << (j + 1);
  os << '\n';
  char buf[32];
  for (std::size_t i = 0; i < traj.samples(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", traj.times[i]);
    os << buf;
    for (Eigen::Index j = 0; j < traj.dimension(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", traj.states(static_cast<Eigen::Index>(i), j));
      os << ',' << buf;
    }
    os << '\n';
  }
}

}  // namespace pecons
