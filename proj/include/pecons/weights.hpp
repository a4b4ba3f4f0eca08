#pragma once

/**
 * Time-varying edge weights g_i^2(t), the diagonal weight matrix W(t), and a
 * numerical persistence-of-excitation certificate for blocks of it.
 *
 * A certificate is computed over a finite horizon only, so it is an estimate
 * of the PE constants rather than a proof that they hold for all t.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "pecons/error.hpp"
#include "pecons/graph.hpp"

namespace pecons {

inline constexpr double kPeThreshold = 1e-9;

namespace profile {

struct Constant {
  double value = 1.0;
};

/// sin^2(freq * t)
struct SquaredSine {
  double freq = 1.0;
};

/// (square(t) + 1)^2 sin^2(freq * t), where square(t) is +1 while the phase
/// (t mod period) / period is below `duty` and -1 otherwise. The gate factor
/// is therefore 4 in the on-phase and 0 in the off-phase.
struct GatedSquaredSine {
  double freq = 1.0;
  double duty = 0.5;
  double period = 2.0 * std::numbers::pi;
};

/// Value of the last breakpoint whose start time is <= t.
struct PiecewiseConstant {
  std::vector<std::pair<double, double>> breakpoints;  ///< (t_start, value)
};

}  // namespace profile

class WeightProfile {
 public:
  using Kind = std::variant<profile::Constant, profile::SquaredSine, profile::GatedSquaredSine,
                            profile::PiecewiseConstant>;

  WeightProfile() : WeightProfile(profile::Constant{}) {}
  /// `scale` multiplies every value of the profile.
  explicit WeightProfile(Kind kind, double scale = 1.0) : kind_(std::move(kind)), scale_(scale) {
    validate();
  }

  static WeightProfile constant(double c) { return WeightProfile(profile::Constant{c}); }
  static WeightProfile squared_sine(double f) { return WeightProfile(profile::SquaredSine{f}); }
  static WeightProfile gated_squared_sine(double f, double duty,
                                          double period = 2.0 * std::numbers::pi) {
    return WeightProfile(profile::GatedSquaredSine{f, duty, period});
  }
  static WeightProfile piecewise_constant(std::vector<std::pair<double, double>> breakpoints) {
    return WeightProfile(profile::PiecewiseConstant{std::move(breakpoints)});
  }

  const Kind& kind() const noexcept { return kind_; }
  double scale() const noexcept { return scale_; }
  WeightProfile scaled(double c) const { return WeightProfile(kind_, scale_ * c); }

  double operator()(double t) const { return branch_value(t, t); }

  /// Value at `t` of the smooth branch that is active at `probe`. Between two
  /// consecutive discontinuities every probe selects the same branch, which
  /// gives one-sided limits at the segment ends.
  double branch_value(double t, double probe) const {
    return scale_ * std::visit([t, probe](const auto& k) { return eval(k, t, probe); }, kind_);
  }

  /// Points in the open interval (a, b) where the profile may jump.
  std::vector<double> discontinuities(double a, double b) const {
    std::vector<double> out;
    if (const auto* g = std::get_if<profile::GatedSquaredSine>(&kind_)) {
      if (g->duty > 0.0 && g->duty < 1.0) {
        const double P = g->period;
        for (double cycle = std::floor(a / P); cycle * P < b; cycle += 1.0) {
          for (double edge : {cycle * P, (cycle + g->duty) * P}) {
            if (edge > a && edge < b) out.push_back(edge);
          }
        }
      }
    } else if (const auto* pw = std::get_if<profile::PiecewiseConstant>(&kind_)) {
      for (const auto& bp : pw->breakpoints) {
        if (bp.first > a && bp.first < b) out.push_back(bp.first);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  static double eval(const profile::Constant& k, double, double) { return k.value; }
  static double eval(const profile::SquaredSine& k, double t, double) {
    const double s = std::sin(k.freq * t);
    return s * s;
  }
  static double eval(const profile::GatedSquaredSine& k, double t, double probe) {
    const double phase = (probe - k.period * std::floor(probe / k.period)) / k.period;
    if (!(phase < k.duty)) return 0.0;
    const double s = std::sin(k.freq * t);
    return 4.0 * s * s;
  }
  static double eval(const profile::PiecewiseConstant& k, double, double probe) {
    const auto it = std::upper_bound(k.breakpoints.begin(), k.breakpoints.end(), probe,
                                     [](double x, const auto& bp) { return x < bp.first; });
    if (it == k.breakpoints.begin()) return k.breakpoints.front().second;
    return std::prev(it)->second;
  }

  void validate() const {
    if (!(scale_ >= 0.0) || !std::isfinite(scale_)) {
      throw Error(ErrorCode::NegativeWeight, "profile scale must be finite and >= 0");
    }
    std::visit(
        [](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, profile::Constant>) {
            if (!(k.value >= 0.0) || !std::isfinite(k.value))
              throw Error(ErrorCode::NegativeWeight, "constant weight must be finite and >= 0");
          } else if constexpr (std::is_same_v<K, profile::SquaredSine>) {
            if (!std::isfinite(k.freq))
              throw Error(ErrorCode::InvalidArgument, "squared_sine frequency must be finite");
          } else if constexpr (std::is_same_v<K, profile::GatedSquaredSine>) {
            if (!std::isfinite(k.freq))
              throw Error(ErrorCode::InvalidArgument, "gated frequency must be finite");
            if (!(k.duty >= 0.0 && k.duty <= 1.0))
              throw Error(ErrorCode::InvalidArgument, "duty must lie in [0,1]");
            if (!(k.period > 0.0) || !std::isfinite(k.period))
              throw Error(ErrorCode::InvalidArgument, "gate period must be > 0");
          } else {
            if (k.breakpoints.empty())
              throw Error(ErrorCode::InvalidArgument, "piecewise profile needs breakpoints");
            if (k.breakpoints.front().first != 0.0)
              throw Error(ErrorCode::InvalidArgument, "piecewise breakpoints must start at t = 0");
            for (std::size_t i = 0; i < k.breakpoints.size(); ++i) {
              if (!(k.breakpoints[i].second >= 0.0) || !std::isfinite(k.breakpoints[i].second))
                throw Error(ErrorCode::NegativeWeight, "piecewise value must be finite and >= 0");
              if (i > 0 && !(k.breakpoints[i].first > k.breakpoints[i - 1].first))
                throw Error(ErrorCode::InvalidArgument,
                            "piecewise breakpoints must be strictly increasing");
            }
          }
        },
        kind_);
  }

  Kind kind_;
  double scale_ = 1.0;
};

/// Per-edge weight profiles, index-aligned with an edge list. With
/// `sqrt_view` set, evaluation returns g_i(t) instead of g_i^2(t).
class SignalBank {
 public:
  SignalBank() = default;
  explicit SignalBank(std::vector<WeightProfile> profiles, bool sqrt_view = false)
      : profiles_(std::move(profiles)), sqrt_view_(sqrt_view) {}

  std::size_t size() const noexcept { return profiles_.size(); }
  bool sqrt_view() const noexcept { return sqrt_view_; }
  const std::vector<WeightProfile>& profiles() const noexcept { return profiles_; }
  const WeightProfile& profile(std::size_t i) const { return profiles_.at(i); }

  double value(std::size_t i, double t) const { return branch_value(i, t, t); }

  double branch_value(std::size_t i, double t, double probe) const {
    const double w = profiles_[i].branch_value(t, probe);
    return sqrt_view_ ? std::sqrt(w) : w;
  }

  Eigen::VectorXd values(double t) const {
    Eigen::VectorXd w(static_cast<Eigen::Index>(profiles_.size()));
    for (std::size_t i = 0; i < profiles_.size(); ++i) w[static_cast<Eigen::Index>(i)] = value(i, t);
    return w;
  }

  SignalBank square_root_view() const { return SignalBank(profiles_, true); }

  SignalBank select(const std::vector<std::size_t>& indices) const {
    std::vector<WeightProfile> out;
    out.reserve(indices.size());
    for (auto i : indices) {
      if (i >= profiles_.size()) {
        throw Error(ErrorCode::EdgeIndexOutOfRange,
                    "edge index " + std::to_string(i) + " out of range", i);
      }
      out.push_back(profiles_[i]);
    }
    return SignalBank(std::move(out), sqrt_view_);
  }

  /// Bank reordered so that tree edges come first, matching `part.perm`.
  SignalBank permuted(const TreeCyclePartition& part) const { return select(part.perm); }
  SignalBank tree_block(const TreeCyclePartition& part) const { return select(part.tree_edges()); }
  SignalBank cycle_block(const TreeCyclePartition& part) const {
    return select(part.cycle_edges());
  }

  SignalBank scaled(double c) const {
    std::vector<WeightProfile> out;
    out.reserve(profiles_.size());
    for (const auto& p : profiles_) out.push_back(p.scaled(c));
    return SignalBank(std::move(out), sqrt_view_);
  }

 private:
  std::vector<WeightProfile> profiles_;
  bool sqrt_view_ = false;
};

inline Eigen::DiagonalMatrix<double, Eigen::Dynamic> eval_weight_matrix(const SignalBank& bank,
                                                                        double t) {
  return Eigen::DiagonalMatrix<double, Eigen::Dynamic>(bank.values(t));
}

/// Composite Simpson rule on [a, b] with step at most `h` (interval count
/// rounded up to even).
template <class F>
double simpson(F&& f, double a, double b, double h) {
  if (!(b > a)) return 0.0;
  auto n = static_cast<long>(std::ceil((b - a) / h - 1e-12));
  n = std::max<long>(2, n + (n % 2));
  const double step = (b - a) / static_cast<double>(n);
  double odd = 0.0;
  double even = 0.0;
  for (long i = 1; i < n; ++i) {
    const double v = f(a + static_cast<double>(i) * step);
    if (i % 2 == 1) {
      odd += v;
    } else {
      even += v;
    }
  }
  return step / 3.0 * (f(a) + 4.0 * odd + 2.0 * even + f(b));
}

/// Integral of edge `i` of the bank over [a, b], split at the profile's jumps.
inline double integrate_edge(const SignalBank& bank, std::size_t i, double a, double b,
                             double quad_step) {
  double total = 0.0;
  auto segment = [&](double lo, double hi) {
    const double probe = 0.5 * (lo + hi);
    total += simpson([&](double t) { return bank.branch_value(i, t, probe); }, lo, hi, quad_step);
  };
  double lo = a;
  for (double cut : bank.profile(i).discontinuities(a, b)) {
    segment(lo, cut);
    lo = cut;
  }
  segment(lo, b);
  return total;
}

/// Diagonal of the windowed integral of W over [a, b].
inline Eigen::VectorXd integrate_bank(const SignalBank& bank, double a, double b,
                                      double quad_step) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(bank.size()));
  for (std::size_t i = 0; i < bank.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = integrate_edge(bank, i, a, b, quad_step);
  }
  return out;
}

struct PeSettings {
  double window = 2.0 * std::numbers::pi;
  double horizon = 30.0;
  double stride = 0.05 * 2.0 * std::numbers::pi;
  double quad_step = 1e-3;
};

struct PECertificate {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double window = 0.0;
  double horizon = 0.0;
  double grid_stride = 0.0;
  bool is_pe = false;
};

namespace detail {

inline void check_pe_settings(const PeSettings& s) {
  if (!(s.window > 0.0) || !std::isfinite(s.window)) {
    throw Error(ErrorCode::InvalidWindow, "PE window must be > 0");
  }
  if (!(s.stride > 0.0) || !(s.quad_step > 0.0)) {
    throw Error(ErrorCode::InvalidWindow, "grid stride and quadrature step must be > 0");
  }
  if (!(s.horizon >= s.window + s.stride - 1e-12)) {
    throw Error(ErrorCode::HorizonTooShort,
                "horizon " + std::to_string(s.horizon) + " is shorter than window + stride");
  }
}

/// Window start times 0, stride, ..., <= horizon - window.
inline std::vector<double> window_starts(const PeSettings& s) {
  const auto count =
      static_cast<std::size_t>(std::floor((s.horizon - s.window) / s.stride + 1e-9)) + 1;
  std::vector<double> starts(count);
  for (std::size_t j = 0; j < count; ++j) starts[j] = static_cast<double>(j) * s.stride;
  return starts;
}

}  // namespace detail

/// Sliding-window PE estimate for a diagonal block: mu1 is the smallest and
/// mu2 the largest windowed integral seen on the grid.
inline PECertificate pe_certificate(const SignalBank& block, const PeSettings& s) {
  detail::check_pe_settings(s);
  if (block.size() == 0) {
    throw Error(ErrorCode::InvalidArgument, "cannot certify an empty signal block");
  }
  PECertificate cert;
  cert.window = s.window;
  cert.horizon = s.horizon;
  cert.grid_stride = s.stride;
  cert.mu1 = std::numeric_limits<double>::infinity();
  cert.mu2 = 0.0;
  for (double t : detail::window_starts(s)) {
    const Eigen::VectorXd G = integrate_bank(block, t, t + s.window, s.quad_step);
    cert.mu1 = std::min(cert.mu1, G.minCoeff());
    cert.mu2 = std::max(cert.mu2, G.maxCoeff());
  }
  cert.mu1 = std::max(cert.mu1, 0.0);
  cert.is_pe = cert.mu1 > kPeThreshold;
  return cert;
}

/// Repeats the certificate with the grid stride halved until mu1 moves by
/// less than `tol` (or `max_halvings` is reached).
inline PECertificate refine_pe_certificate(const SignalBank& block, PeSettings s,
                                           double tol = 1e-6, int max_halvings = 6) {
  PECertificate cert = pe_certificate(block, s);
  for (int i = 0; i < max_halvings; ++i) {
    s.stride *= 0.5;
    const PECertificate finer = pe_certificate(block, s);
    const double change = std::abs(finer.mu1 - cert.mu1);
    cert = finer;
    if (change < tol) break;
  }
  return cert;
}

/// PE estimate for the projected signal R W(t) R^T (permuted bank order). The
/// window integral is no longer diagonal, so eigenvalues are used.
inline PECertificate projected_pe_certificate(const SignalBank& permuted_bank,
                                              const Eigen::MatrixXd& R, const PeSettings& s) {
  detail::check_pe_settings(s);
  if (static_cast<Eigen::Index>(permuted_bank.size()) != R.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "projection width does not match bank size");
  }
  PECertificate cert;
  cert.window = s.window;
  cert.horizon = s.horizon;
  cert.grid_stride = s.stride;
  cert.mu1 = std::numeric_limits<double>::infinity();
  for (double t : detail::window_starts(s)) {
    const Eigen::VectorXd G = integrate_bank(permuted_bank, t, t + s.window, s.quad_step);
    const Eigen::MatrixXd M = R * G.asDiagonal() * R.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    cert.mu1 = std::min(cert.mu1, es.eigenvalues().minCoeff());
    cert.mu2 = std::max(cert.mu2, es.eigenvalues().maxCoeff());
  }
  cert.mu1 = std::max(cert.mu1, 0.0);
  cert.is_pe = cert.mu1 > kPeThreshold;
  return cert;
}

struct SwitchingInterval {
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<std::size_t> active;  ///< 0-based edge indices
};

struct SwitchingSchedule {
  std::vector<SwitchingInterval> intervals;
  double t_max = 0.0;
};

inline void validate_schedule(const SwitchingSchedule& sched, std::size_t m) {
  if (sched.intervals.empty()) {
    throw Error(ErrorCode::InvalidArgument, "switching schedule has no intervals");
  }
  if (sched.intervals.front().t_start < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "switching schedule must start at t >= 0");
  }
  for (std::size_t i = 0; i < sched.intervals.size(); ++i) {
    const auto& iv = sched.intervals[i];
    const double len = iv.t_end - iv.t_start;
    if (!(len > 0.0)) {
      throw Error(ErrorCode::InvalidArgument,
                  "interval " + std::to_string(i) + " is empty", i);
    }
    if (len > sched.t_max * (1.0 + 1e-12)) {
      throw Error(ErrorCode::InvalidArgument,
                  "interval " + std::to_string(i) + " is longer than t_max", i);
    }
    if (i > 0 && std::abs(iv.t_start - sched.intervals[i - 1].t_end) > 1e-12) {
      throw Error(ErrorCode::InvalidArgument,
                  "interval " + std::to_string(i) + " is not contiguous with its predecessor", i);
    }
    for (auto e : iv.active) {
      if (e >= m) {
        throw Error(ErrorCode::EdgeIndexOutOfRange,
                    "interval " + std::to_string(i) + " activates edge " + std::to_string(e) +
                        " but the graph has " + std::to_string(m) + " edges",
                    e);
      }
    }
  }
}

/// Weight 1 while an edge is active, 0 otherwise (including before the first
/// and after the last interval).
inline SignalBank schedule_to_signals(const SwitchingSchedule& sched, std::size_t m) {
  validate_schedule(sched, m);
  std::vector<WeightProfile> profiles;
  profiles.reserve(m);
  for (std::size_t e = 0; e < m; ++e) {
    std::vector<std::pair<double, double>> raw;
    if (sched.intervals.front().t_start > 0.0) raw.emplace_back(0.0, 0.0);
    for (const auto& iv : sched.intervals) {
      const bool on = std::find(iv.active.begin(), iv.active.end(), e) != iv.active.end();
      raw.emplace_back(iv.t_start, on ? 1.0 : 0.0);
    }
    raw.emplace_back(sched.intervals.back().t_end, 0.0);
    std::vector<std::pair<double, double>> bps;
    for (const auto& bp : raw) {
      if (bps.empty() || bps.back().second != bp.second) bps.push_back(bp);
    }
    profiles.push_back(WeightProfile::piecewise_constant(std::move(bps)));
  }
  return SignalBank(std::move(profiles));
}

/// True iff every run of `window_count` consecutive intervals has an edge
/// union that contains one spanning tree common to all runs. A common tree
/// exists exactly when the intersection of all run unions is connected and
/// spanning.
inline bool joint_connectivity_check(const SwitchingSchedule& sched, const Graph& g,
                                     std::size_t window_count) {
  const std::size_t m = g.edge_count();
  validate_schedule(sched, m);
  if (window_count == 0) {
    throw Error(ErrorCode::InvalidArgument, "window_count must be >= 1");
  }
  if (g.vertex_count() == 1) return true;

  const std::size_t count = sched.intervals.size();
  const std::size_t runs = count >= window_count ? count - window_count + 1 : 1;
  std::vector<bool> common(m, true);
  for (std::size_t r = 0; r < runs; ++r) {
    std::vector<bool> run_union(m, false);
    for (std::size_t i = r; i < std::min(count, r + window_count); ++i) {
      for (auto e : sched.intervals[i].active) run_union[e] = true;
    }
    for (std::size_t e = 0; e < m; ++e) common[e] = common[e] && run_union[e];
  }
  const auto tree = detail::dfs_tree_edges(g.vertex_count(), g.edges(), &common);
  return tree.size() == static_cast<std::size_t>(g.vertex_count() - 1);
}

}  // namespace pecons
