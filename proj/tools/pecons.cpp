#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pecons/commands.hpp"

int main(int argc, char** argv) {
  using namespace pecons::cli;

  CLI::App app{"Consensus analysis for networks with time-varying edge weights"};
  app.require_subcommand(1);

  Options opts;
  std::string block = "tree";
  std::string output_dir;
  std::string k_list;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "Experiment configuration (JSON)")
        ->required();
    sub->add_option("--output", output_dir, "Output directory (overrides outputs.directory)");
  };

  auto* simulate = app.add_subcommand("simulate", "Simulate the node-level closed loop");
  auto* pe_cert = app.add_subcommand("pe-cert", "Estimate PE constants of a weight block");
  auto* bound = app.add_subcommand("bound", "Evaluate the exponential convergence-rate bound");
  auto* check = app.add_subcommand("check", "Check the tree-edge norm against its envelope");
  auto* sweep = app.add_subcommand("sweep", "Sweep the control gain");
  for (auto* sub : {simulate, pe_cert, bound, check, sweep}) add_common(sub);
  pe_cert->add_option("--block", block, "Weight block to certify")
      ->check(CLI::IsMember({"tree", "cycle", "all"}));
  sweep->add_option("--k-list", k_list, "Comma-separated gains, e.g. 0.1,1,10,100");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInvalidConfig;
  }

  if (!output_dir.empty()) opts.output_dir = output_dir;
  if (!k_list.empty()) opts.k_list = k_list;
  opts.block = block == "cycle" ? pecons::Block::Cycle
               : block == "all" ? pecons::Block::All
                                : pecons::Block::Tree;

  if (*simulate) return run_guarded(cmd_simulate, opts, std::cout, std::cerr);
  if (*pe_cert) return run_guarded(cmd_pe_cert, opts, std::cout, std::cerr);
  if (*bound) return run_guarded(cmd_bound, opts, std::cout, std::cerr);
  if (*check) return run_guarded(cmd_check, opts, std::cout, std::cerr);
  return run_guarded(cmd_sweep, opts, std::cout, std::cerr);
}
