#pragma once

/**
 * Exponential convergence-rate bound for the spanning-tree edge states,
 * scaled observability constants, numerical observability Gramian, envelope
 * verification and empirical decay-rate fitting.
 *
 * With a = k sqrt(p) |Lambda| mu2, the windowed Lyapunov decrement gives
 *
 *   ratio   = 2 k lambda_min mu1 / (1 + a)^2
 *   m_v     = 1 / (1 - ratio)
 *   alpha_v = ln(1 / (1 - ratio)) / T
 *   |y(t)| <= sqrt(lambda_max m_v / lambda_min) exp(-alpha_v/2 (t - t0)) |y(t0)|
 *
 * and |x_T| = |y| because Gamma is orthogonal.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pecons/dynamics.hpp"
#include "pecons/error.hpp"
#include "pecons/graph.hpp"
#include "pecons/rk4.hpp"
#include "pecons/weights.hpp"

namespace pecons {

/// Slack allowed when comparing a trajectory with its envelope.
inline constexpr double kEnvelopeSlack = 1e-9;

struct RateBoundInputs {
  double k = 1.0;
  std::size_t p = 1;
  double lambda_min = 1.0;
  double norm_Lambda = 1.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double window = 1.0;
};

struct RateBound {
  RateBoundInputs inputs;
  double ratio = 0.0;  ///< alpha_3 / alpha_2
  double m_v = 1.0;
  double alpha_v = 0.0;
  double rate = 0.0;  ///< alpha_v / 2
  double prefactor = 1.0;
  bool zero_excitation = false;

  double envelope(double t, double t0, double initial_norm) const {
    return prefactor * std::exp(-rate * (t - t0)) * initial_norm;
  }
};

inline RateBound convergence_rate_bound(const RateBoundInputs& in) {
  if (!(in.k > 0.0) || !std::isfinite(in.k)) {
    throw Error(ErrorCode::InvalidArgument, "control gain must be > 0");
  }
  if (!(in.mu1 >= 0.0) || !(in.mu2 >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "PE constants must be >= 0");
  }
  if (!(in.window > 0.0)) throw Error(ErrorCode::InvalidWindow, "PE window must be > 0");
  if (!(in.lambda_min > 0.0) || !(in.norm_Lambda >= in.lambda_min)) {
    throw Error(ErrorCode::InvalidArgument, "tree spectrum bounds are inconsistent");
  }
  RateBound b;
  b.inputs = in;
  const double a = in.k * std::sqrt(static_cast<double>(in.p)) * in.norm_Lambda * in.mu2;
  b.ratio = 2.0 * in.k * in.lambda_min * in.mu1 / ((1.0 + a) * (1.0 + a));
  if (!(b.ratio < 1.0)) {
    throw Error(ErrorCode::DegenerateBound,
                "decrement ratio " + std::to_string(b.ratio) + " >= 1; the bound is vacuous");
  }
  b.zero_excitation = !(in.mu1 > kPeThreshold);
  b.m_v = 1.0 / (1.0 - b.ratio);
  b.alpha_v = -std::log1p(-b.ratio) / in.window;
  b.rate = 0.5 * b.alpha_v;
  b.prefactor = std::sqrt(in.norm_Lambda * b.m_v / in.lambda_min);
  return b;
}

inline RateBound convergence_rate_bound(double k, const TreeSpectrum& spec, std::size_t p,
                                        const PECertificate& cert) {
  return convergence_rate_bound(
      {k, p, spec.lambda_min, spec.norm_Lambda(), cert.mu1, cert.mu2, cert.window});
}

/// Golden-section search for the gain maximising the bound rate on
/// [k_lo, k_hi], carried out in log k.
inline double maximize_rate_gain(RateBoundInputs in, double k_lo, double k_hi,
                                 double tol = 1e-6) {
  if (!(k_lo > 0.0) || !(k_hi > k_lo)) {
    throw Error(ErrorCode::InvalidArgument, "gain bracket must satisfy 0 < k_lo < k_hi");
  }
  auto rate = [&in](double log_k) {
    in.k = std::exp(log_k);
    return convergence_rate_bound(in).rate;
  };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(k_lo);
  double b = std::log(k_hi);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = rate(c);
  double fd = rate(d);
  while (std::exp(b) - std::exp(a) > tol * std::max(1.0, std::exp(a))) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = rate(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = rate(d);
    }
  }
  return std::exp(0.5 * (a + b));
}

/// Analytic and numeric two-sided bounds on the observability Gramian of
/// [A(t), C(t)] with A = -k Lambda Gamma^T R W R^T Gamma, C = W^{1/2} R^T Gamma.
struct GramianEstimate {
  double beta_tilde_1 = std::numeric_limits<double>::quiet_NaN();
  double beta_tilde_2 = std::numeric_limits<double>::quiet_NaN();
  double numeric_gramian_min = std::numeric_limits<double>::quiet_NaN();
  double numeric_gramian_max = std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd gramian;
  Eigen::MatrixXd transition;  ///< Phi(t0 + T, t0)

  /// Numeric eigen-bounds lie inside [beta_tilde_1 - slack, beta_tilde_2 + slack].
  bool within(const GramianEstimate& analytic, double slack) const {
    return numeric_gramian_min >= analytic.beta_tilde_1 - slack &&
           numeric_gramian_max <= analytic.beta_tilde_2 + slack;
  }
};

/// Output-injection scaling of the PE constants:
///   beta~1 = mu1 / (1 + k sqrt(p) |Lambda| mu2)^2,  beta~2 = mu2 exp(k p |Lambda|^2 mu2^2).
inline GramianEstimate uco_scaled_bounds(double k, double norm_Lambda, std::size_t p, double mu1,
                                         double mu2) {
  if (!(k >= 0.0)) throw Error(ErrorCode::InvalidArgument, "control gain must be >= 0");
  const double a = k * std::sqrt(static_cast<double>(p)) * norm_Lambda * mu2;
  GramianEstimate g;
  g.beta_tilde_1 = mu1 / ((1.0 + a) * (1.0 + a));
  g.beta_tilde_2 =
      mu2 * std::exp(k * static_cast<double>(p) * norm_Lambda * norm_Lambda * mu2 * mu2);
  return g;
}

inline GramianEstimate uco_scaled_bounds(double k, const TreeSpectrum& spec, std::size_t p,
                                         const PECertificate& cert) {
  return uco_scaled_bounds(k, spec.norm_Lambda(), p, cert.mu1, cert.mu2);
}

/// Integrates Phi' = A(t) Phi, Phi(t0) = I together with
/// G' = Phi^T C^T C Phi over [t0, t0 + window] by RK4.
inline GramianEstimate observability_gramian_estimate(const TreeCyclePartition& part,
                                                      const TreeSpectrum& spec,
                                                      const SignalBank& bank, double k,
                                                      double window, double t0,
                                                      double dt = 1e-3) {
  if (!(window > 0.0)) throw Error(ErrorCode::InvalidWindow, "Gramian window must be > 0");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be > 0");
  if (bank.size() != part.edge_count()) {
    throw Error(ErrorCode::DimensionMismatch, "signal bank does not match the partition");
  }
  const auto p = static_cast<Eigen::Index>(part.p);
  const SignalBank permuted = bank.permuted(part);
  const Eigen::MatrixXd B = part.R.transpose() * spec.Gamma;  // m x p, C = W^{1/2} B
  const Eigen::MatrixXd LambdaM = spec.Lambda.asDiagonal();

  // Augmented state [Phi | G], p x 2p.
  auto f = [&](double t, const Eigen::MatrixXd& s) -> Eigen::MatrixXd {
    const Eigen::MatrixXd CtC = B.transpose() * permuted.values(t).asDiagonal() * B;
    const auto Phi = s.leftCols(p);
    Eigen::MatrixXd ds(p, 2 * p);
    ds.leftCols(p) = -k * LambdaM * CtC * Phi;
    ds.rightCols(p) = Phi.transpose() * CtC * Phi;
    return ds;
  };
  Eigen::MatrixXd s(p, 2 * p);
  s.leftCols(p).setIdentity();
  s.rightCols(p).setZero();
  const StepPlan plan = plan_steps(t0, t0 + window, std::min(dt, window), 1);
  for (std::size_t i = 0; i < plan.steps; ++i) {
    s = rk4_step(f, t0 + static_cast<double>(i) * plan.dt, s, plan.dt);
    if (!s.allFinite()) {
      throw Error(ErrorCode::NumericalFailure, "state transition matrix became non-finite");
    }
  }
  GramianEstimate g;
  g.transition = s.leftCols(p);
  g.gramian = 0.5 * (s.rightCols(p) + s.rightCols(p).transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.gramian, Eigen::EigenvaluesOnly);
  g.numeric_gramian_min = es.eigenvalues().minCoeff();
  g.numeric_gramian_max = es.eigenvalues().maxCoeff();
  return g;
}

struct EnvelopeSample {
  double t = 0.0;
  double norm = 0.0;
  double envelope = 0.0;
  double margin = 0.0;  ///< envelope - norm
};

struct EnvelopeReport {
  bool contained = true;
  std::optional<double> first_violation;
  std::vector<EnvelopeSample> margins;
};

/// Compares |x_T(t)| with prefactor exp(-rate (t - t0)) |x_T(t0)| for every
/// sample at or after t0.
inline EnvelopeReport envelope_check(const Trajectory& tree, const RateBound& bound,
                                     double t0) {
  EnvelopeReport report;
  const auto norms = tree.norms();
  std::size_t start = 0;
  while (start < tree.samples() && tree.times[start] < t0 - 1e-12) ++start;
  if (start == tree.samples()) return report;
  const double initial = norms[start];
  const double t_ref = tree.times[start];
  report.margins.reserve(tree.samples() - start);
  for (std::size_t i = start; i < tree.samples(); ++i) {
    EnvelopeSample s;
    s.t = tree.times[i];
    s.norm = norms[i];
    s.envelope = bound.envelope(s.t, t_ref, initial);
    s.margin = s.envelope - s.norm;
    if (s.norm > s.envelope + kEnvelopeSlack && report.contained) {
      report.contained = false;
      report.first_violation = s.t;
    }
    report.margins.push_back(s);
  }
  return report;
}

/// Negated least-squares slope of ln|x_T(t)| over samples with t in [t_a, t_b].
inline double empirical_rate(const Trajectory& tree, double t_a, double t_b) {
  const auto norms = tree.norms();
  double sum_t = 0.0, sum_y = 0.0, sum_tt = 0.0, sum_ty = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < tree.samples(); ++i) {
    const double t = tree.times[i];
    if (t < t_a - 1e-12 || t > t_b + 1e-12) continue;
    if (!(norms[i] > 1e-12)) {
      throw Error(ErrorCode::UnderflowInWindow,
                  "|x_T| fell below 1e-12 at t = " + std::to_string(t) + " inside the fit window");
    }
    const double y = std::log(norms[i]);
    sum_t += t;
    sum_y += y;
    sum_tt += t * t;
    sum_ty += t * y;
    ++count;
  }
  if (count < 2) {
    throw Error(ErrorCode::InvalidArgument, "fit window holds fewer than two samples");
  }
  const double n = static_cast<double>(count);
  const double slope = (n * sum_ty - sum_t * sum_y) / (n * sum_tt - sum_t * sum_t);
  return -slope;
}

/// Default fit window: the middle 60% of the run.
inline double empirical_rate(const Trajectory& tree) {
  const double t0 = tree.times.front();
  const double span = tree.times.back() - t0;
  return empirical_rate(tree, t0 + 0.2 * span, t0 + 0.8 * span);
}

}  // namespace pecons
