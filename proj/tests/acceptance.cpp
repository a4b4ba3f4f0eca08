// Acceptance checks: prints one PASS/FAIL line per criterion and exits with
// a nonzero status if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pecons/config.hpp"
#include "test_support.hpp"

namespace {

using namespace pecons;
namespace ts = pecons::testing;

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

const std::string kConfigDir = PECONS_CONFIG_DIR;

// 1. Consensus of the bundled four-agent example at mean(x0) = 0.4425.
Outcome consensus_example() {
  const auto start = Clock::now();
  const auto cfg = load_config(kConfigDir + "/example_consensus.json");
  const auto sim = run_simulation(to_experiment(cfg));
  const double elapsed = seconds_since(start);
  double worst = 0.0;
  const auto last = sim.nodes.final_state();
  for (Eigen::Index i = 0; i < last.size(); ++i) worst = std::max(worst, std::abs(last[i] - 0.4425));
  Outcome o;
  o.pass = worst < 1e-3 && elapsed < 5.0 && std::abs(sim.nodes.times.back() - 30.0) < 1e-12;
  o.detail = fmt("max |x_i(30) - 0.4425| = %.3g (< 1e-3), runtime %.3f s (< 5 s)", worst, elapsed);
  return o;
}

// 2. |x_T| stays under the certified envelope.
Outcome envelope_containment() {
  const auto cfg = load_config(kConfigDir + "/example_consensus.json");
  const auto example = check_envelope(to_experiment(cfg));
  int violations = example.report.contained ? 0 : 1;
  std::mt19937_64 rng(2024);
  int random_violations = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 50; ++trial) {
    const Graph g = ts::random_connected_graph(rng, 2, 8);
    SimConfig sim;
    sim.k = 0.2 + 2.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    sim.t_final = 20.0;
    PeSettings pe;
    pe.horizon = 20.0;
    const auto e = make_experiment(g, ts::random_pe_bank(rng, g.edge_count()), sim,
                                   ts::random_vector(rng, g.vertex_count()), pe);
    const auto r = check_envelope(e);
    if (!r.report.contained || !r.certificate.is_pe) ++random_violations;
    for (const auto& s : r.report.margins) min_margin = std::min(min_margin, s.margin);
  }
  Outcome o;
  o.pass = violations == 0 && random_violations == 0;
  o.detail = fmt("example contained = %g (rate %.3g, prefactor %.4g); random violations %g/50", example.report.contained,
                 example.bound.rate, example.bound.prefactor, random_violations);
  o.detail += fmt(", min random margin %.3g", min_margin);
  return o;
}

// 3. Bound rate has an interior maximum over the gain list; empirical rates
// grow and then flatten.
Outcome gain_saturation() {
  const auto cfg = load_config(kConfigDir + "/example_gain_sweep.json");
  const auto rows = gain_sweep(to_experiment(cfg), {0.1, 1.0, 10.0, 100.0});
  Outcome o;
  std::ostringstream detail;
  std::size_t best = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].status != "ok") o.pass = false;
    if (rows[i].bound_rate > rows[best].bound_rate) best = i;
    detail << (i ? "; " : "") << "k=" << rows[i].k << ": bound " << rows[i].bound_rate << ", emp "
           << rows[i].empirical_rate;
  }
  const bool interior = best > 0 && best + 1 < rows.size();
  const bool tail_below = rows.back().bound_rate < rows[best].bound_rate;
  bool non_decreasing = true;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].empirical_rate < 0.9 * rows[i - 1].empirical_rate) non_decreasing = false;
  }
  const double a = rows[rows.size() - 2].empirical_rate;
  const double b = rows.back().empirical_rate;
  const bool flat = std::abs(b - a) <= 0.1 * a;
  o.pass = o.pass && interior && tail_below && non_decreasing && flat;
  detail << " | interior max " << interior << ", bound(100) < max " << tail_below
         << ", empirical non-decreasing " << non_decreasing << ", flat tail " << flat;
  o.detail = detail.str();
  return o;
}

// 4. Node simulation mapped by D_T^T equals the reduced tree-edge simulation.
Outcome oracle_equivalence() {
  const auto start = Clock::now();
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Graph g = ts::random_connected_graph(rng, 2, 8);
    const auto inc = orient_and_incidence(g);
    const auto part = partition_spanning_tree(inc);
    const auto bank = ts::random_pe_bank(rng, g.edge_count());
    const auto x0 = ts::random_vector(rng, g.vertex_count());
    SimConfig cfg;
    cfg.k = 0.2 + 2.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    cfg.t_final = 10.0;
    const auto nodes = simulate_nodes(inc, bank, cfg, x0);
    const auto tree = simulate_tree_edges(part, bank, cfg, tree_edge_initial_state(part, x0));
    const auto mapped = nodes.mapped(part.D_T, DimensionKind::TreeEdge);
    if (tree.dimension() > 0) {
      worst = std::max(worst, (mapped.states - tree.states).cwiseAbs().maxCoeff());
    }
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-6 && elapsed < 60.0,
          fmt("sup-norm gap %.3g (< 1e-6) over 50 instances, runtime %.2f s (< 60 s)", worst, elapsed)};
}

// 5. Spectral identities on 100 random connected graphs.
Outcome spectral_identities() {
  std::mt19937_64 rng(5);
  double eig_gap = 0.0, tree_gap = 0.0, gamma_gap = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Graph g = ts::random_connected_graph(rng, 2, 12);
    const auto inc = orient_and_incidence(g);
    const auto node = ts::nonzero_eigenvalues(inc.D * inc.D.transpose());
    const auto edge = ts::nonzero_eigenvalues(inc.D.transpose() * inc.D);
    if (node.size() != edge.size()) {
      eig_gap = std::numeric_limits<double>::infinity();
    } else {
      for (std::size_t i = 0; i < node.size(); ++i) eig_gap = std::max(eig_gap, std::abs(node[i] - edge[i]));
    }
    const auto part = partition_spanning_tree(inc);
    if (part.cycle_count() > 0) {
      tree_gap = std::max(tree_gap, (part.D_T * part.T - part.D_C).cwiseAbs().maxCoeff());
    }
    const auto spec = tree_spectrum(part);
    const auto p = static_cast<Eigen::Index>(part.p);
    gamma_gap = std::max(gamma_gap, (spec.Gamma.transpose() * spec.Gamma - Eigen::MatrixXd::Identity(p, p))
                                        .cwiseAbs()
                                        .maxCoeff());
  }
  return {eig_gap <= 1e-9 && tree_gap <= 1e-10 && gamma_gap <= 1e-10,
          fmt("eigenvalue gap %.3g (<= 1e-9), |D_T T - D_C| %.3g (<= 1e-10), |G^T G - I| %.3g (<= 1e-10)",
              eig_gap, tree_gap, gamma_gap)};
}

// 6. Closed-form PE constants.
Outcome pe_analytics() {
  double worst_rel = 0.0;
  for (double c : {0.25, 1.0, 3.5}) {
    for (double window : {0.5, 1.0, 2 * kPi}) {
      const SignalBank bank(std::vector<WeightProfile>(3, WeightProfile::constant(c)));
      const auto cert = pe_certificate(bank, {window, 20.0, 0.05 * window, 1e-3});
      worst_rel = std::max({worst_rel, std::abs(cert.mu1 - c * window) / (c * window),
                            std::abs(cert.mu2 - c * window) / (c * window)});
    }
  }
  const auto sine = pe_certificate(SignalBank({WeightProfile::squared_sine(1.0)}),
                                   {2 * kPi, 30.0, 0.05 * 2 * kPi, 1e-3});
  const double sine_err = std::max(std::abs(sine.mu1 - kPi), std::abs(sine.mu2 - kPi));
  return {worst_rel <= 1e-12 && sine_err <= 1e-6,
          fmt("constant relative error %.3g (<= 1e-12), sin^2 |mu - pi| %.3g (<= 1e-6)", worst_rel, sine_err)};
}

SwitchingSchedule rotating(const std::vector<std::vector<std::size_t>>& pattern, double tau, double until) {
  SwitchingSchedule s;
  s.t_max = tau;
  for (std::size_t i = 0; static_cast<double>(i) * tau < until; ++i) {
    s.intervals.push_back({static_cast<double>(i) * tau, static_cast<double>(i + 1) * tau,
                           pattern[i % pattern.size()]});
  }
  return s;
}

// 7. Jointly connected switching gives PE of W_T and consensus; isolating a
// vertex gives neither.
Outcome switching_consensus() {
  const Graph g = ts::example_graph();
  const double tau = 0.5;
  const double t_final = 60.0;
  SimConfig sim;
  sim.t_final = t_final;
  const PeSettings pe{2.5 * tau, t_final, 0.05 * tau, 1e-3};

  // Tree edges (1,2), (2,3), (3,4) take turns; cycle edges ride along.
  const auto joint = rotating({{0, 3}, {1, 4}, {2}}, tau, t_final + tau);
  const bool joint_ok = joint_connectivity_check(joint, g, 3);
  const auto e1 = make_experiment(g, schedule_to_signals(joint, 5), sim, ts::example_x0(), pe);
  const auto cert1 = certify(e1, Block::Tree);
  const auto sim1 = run_simulation(e1);

  // Edges (3,4) and (2,4) never switch on: vertex 4 is cut off.
  const auto isolating = rotating({{0}, {1}, {4}}, tau, t_final + tau);
  const bool isolating_joint = joint_connectivity_check(isolating, g, 3);
  const auto e2 = make_experiment(g, schedule_to_signals(isolating, 5), sim, ts::example_x0(), pe);
  const auto cert2 = certify(e2, Block::Tree);
  const auto sim2 = run_simulation(e2);

  const bool pass = joint_ok && cert1.is_pe && cert1.mu1 > 0.0 && sim1.consensus.reached &&
                    !isolating_joint && !cert2.is_pe && !sim2.consensus.reached;
  std::string detail = fmt("jointly connected: mu1 = %.4g at T_w = 2.5 t_max, final spread %.3g; ", cert1.mu1,
                           consensus_spread(sim1.nodes.final_state()));
  detail += fmt("isolating: mu1 = %.3g, final spread %.3g", cert2.mu1, consensus_spread(sim2.nodes.final_state()));
  return {pass, detail};
}

// 8. Numeric observability Gramian within the scaled analytic bounds.
Outcome uco_consistency() {
  struct Case {
    Graph g;
    SignalBank bank;
    double k;
  };
  std::vector<Case> cases{{ts::example_graph(), ts::example_bank(), 1.0}};
  std::mt19937_64 rng(8);
  for (int i = 0; i < 10; ++i) {
    Graph g = ts::random_connected_graph(rng, 2, 6);
    SignalBank bank = ts::random_pe_bank(rng, g.edge_count());
    cases.push_back({std::move(g), std::move(bank), 0.1 + std::uniform_real_distribution<double>(0, 1)(rng)});
  }
  int failures = 0;
  double example_min = 0.0, example_lo = 0.0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto part = partition_spanning_tree(orient_and_incidence(cases[i].g));
    const auto spec = tree_spectrum(part);
    const PeSettings pe{2 * kPi, 30.0, 0.05 * 2 * kPi, 1e-3};
    const auto cert = pe_certificate(cases[i].bank.tree_block(part), pe);
    const auto analytic = uco_scaled_bounds(cases[i].k, spec, part.p, cert);
    const auto numeric = observability_gramian_estimate(part, spec, cases[i].bank, cases[i].k, pe.window, 0.0);
    if (!numeric.within(analytic, 1e-6)) ++failures;
    if (i == 0) {
      example_min = numeric.numeric_gramian_min;
      example_lo = analytic.beta_tilde_1;
    }
  }
  return {failures == 0, fmt("%g/11 outside bounds; example lambda_min(G) = %.4g >= beta~1 = %.4g", failures,
                             example_min, example_lo)};
}

// 9. RK4 step halving on smooth weights.
Outcome rk4_order() {
  const auto inc = orient_and_incidence(ts::example_graph());
  std::vector<WeightProfile> ps;
  for (int i = 1; i <= 5; ++i) ps.push_back(WeightProfile::squared_sine(i).scaled(1.0 + 0.2 * i));
  const SignalBank bank(std::move(ps));
  auto final_state = [&](double dt) {
    SimConfig cfg;
    cfg.t_final = 4.0;
    cfg.dt = dt;
    cfg.record_stride = 1;
    return simulate_nodes(inc, bank, cfg, ts::example_x0()).final_state();
  };
  const Eigen::VectorXd reference = final_state(0.01 / 64);
  const double ratio = (final_state(0.01) - reference).norm() / (final_state(0.005) - reference).norm();
  return {ratio >= 12.0 && ratio <= 20.0, fmt("error ratio %.3f (in [12, 20])", ratio)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"consensus of the four-agent example", consensus_example},
      {"envelope containment", envelope_containment},
      {"gain saturation", gain_saturation},
      {"node/tree oracle equivalence", oracle_equivalence},
      {"spectral identities", spectral_identities},
      {"PE certificate analytics", pe_analytics},
      {"jointly connected switching", switching_consensus},
      {"observability Gramian bounds", uco_consistency},
      {"RK4 order", rk4_order},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
