// Command-line front end: train agents/baselines, evaluate checkpoints,
// aggregate run reports.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "idxlab/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"learned index-selection workbench"};
  app.require_subcommand(1);

  std::string config_path;
  std::string agent;
  int64_t seed = -1;
  std::string out_dir;

  auto* train = app.add_subcommand("train", "run training and evaluation for one agent");
  train->add_option("--config", config_path, "run config JSON")->required();
  train->add_option("--agent", agent, "bdqn|spg|default|full|search (overrides config)");
  train->add_option("--seed", seed, "seed override");
  train->add_option("--out", out_dir, "output directory (overrides config)");

  std::string checkpoint_path, workloads_path;
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a saved checkpoint on workloads");
  evaluate->add_option("--checkpoint", checkpoint_path, "checkpoint.json from a run")->required();
  evaluate->add_option("--workloads", workloads_path, "workloads JSON file")->required();
  evaluate->add_option("--out", out_dir, "output directory")->required();

  std::vector<std::string> run_dirs;
  auto* report = app.add_subcommand("report", "aggregate summaries across run directories");
  report->add_option("--runs", run_dirs, "run directories with summary.json")->required();
  report->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      idxlab::RunConfig cfg = idxlab::RunConfig::load_file(config_path);
      if (!agent.empty()) cfg.agent = idxlab::agent_kind_from_name(agent);
      if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      idxlab::RunResult result = idxlab::run_and_save(cfg);
      std::printf("run complete: agent=%s seed=%llu out=%s\n",
                  idxlab::agent_kind_name(cfg.agent),
                  static_cast<unsigned long long>(cfg.seed), cfg.resolved_out_dir().c_str());
      std::printf("  mean latency %.1f  p80 %.1f  noop rate %.3f  total bytes %lld\n",
                  result.eval.summary.mean_latency, result.eval.summary.p80_latency,
                  result.eval.summary.noop_rate,
                  static_cast<long long>(result.eval.summary.total_index_bytes));
    } else if (evaluate->parsed()) {
      idxlab::EvalSummary summary =
          idxlab::evaluate_checkpoint(checkpoint_path, workloads_path, out_dir);
      std::printf("evaluation complete: mean latency %.1f  p80 %.1f  noop rate %.3f\n",
                  summary.mean_latency, summary.p80_latency, summary.noop_rate);
    } else if (report->parsed()) {
      const std::string dir = out_dir.empty() ? "." : out_dir;
      idxlab::write_report(run_dirs, dir);
      std::printf("report written to %s/aggregate.json\n", dir.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
