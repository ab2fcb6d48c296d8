#include "shaped_pick/cli.h"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "shaped_pick/analysis.h"
#include "shaped_pick/config.h"
#include "shaped_pick/trainer.h"

namespace shaped_pick::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kRolloutStream = 11;

std::string trace_stem(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "trace_%03d", i);
  return buf;
}

fs::path report_path_for(const fs::path& trace_csv) {
  fs::path p = trace_csv;
  p.replace_extension(".report.json");
  return p;
}

std::optional<double> median(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::vector<fs::path> trace_files(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

std::optional<fs::path> resolve_out_dir(const std::optional<fs::path>& out,
                                        const std::string& leaf) {
  if (out) return out;
  if (const char* root = std::getenv(kRunRootEnv); root && *root) {
    return fs::path(root) / leaf;
  }
  return std::nullopt;
}

int cmd_train(const fs::path& config_path, const fs::path& out_dir,
              std::optional<std::uint64_t> seed_override, std::ostream& out,
              std::ostream& err, bool verbose) {
  TrainConfig config;
  try {
    config = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsageError;
  }
  if (seed_override) config.seed = *seed_override;

  try {
    RunOptions options;
    options.run_dir = out_dir;
    options.log_progress = verbose;
    const RunResult result = run(config, options);
    const auto series = result.metrics.eval_series();
    out << "trained " << result.metrics.rows.size() << " epochs ("
        << result.env_steps << " env steps); final eval success "
        << (series.empty() ? 0.0 : series.back()) << "\nrun directory: "
        << out_dir.string() << '\n';
  } catch (const TrainingHalted& e) {
    err << e.what() << '\n';
    return kHalted;
  } catch (const std::exception& e) {
    err << "train failed: " << e.what() << '\n';
    return kUsageError;
  }
  return kOk;
}

int cmd_rollout(const fs::path& checkpoint_path, int n, const fs::path& out_dir,
                std::uint64_t seed, const std::optional<fs::path>& config_path,
                double attainment_tol, std::ostream& out, std::ostream& err) {
  if (n < 1) {
    err << "rollout: --n must be >= 1\n";
    return kUsageError;
  }
  try {
    const fs::path cfg_path =
        config_path ? *config_path
                    : checkpoint_path.parent_path().parent_path() / "config.json";
    const TrainConfig config = load_config(cfg_path);
    const DdpgAgent agent = read_checkpoint(checkpoint_path);
    if (agent.feature_size != feature_size(config.task)) {
      err << "rollout: shape mismatch: checkpoint expects "
          << agent.feature_size << " observation features, config task '"
          << task_name(config.task) << "' provides "
          << feature_size(config.task) << '\n';
      return kUsageError;
    }

    fs::create_directories(out_dir);
    Rng rng = derive_rng(seed, {kRolloutStream});
    const Policy policy = greedy_policy(agent);
    int successes = 0;
    for (int i = 0; i < n; ++i) {
      const EpisodeTrace trace = rollout(config.env, config.reward, policy, rng);
      if (trace.final_success()) ++successes;
      const fs::path csv = out_dir / (trace_stem(i) + ".csv");
      analysis::export_trace(trace, csv);
      const auto report = analysis::analyze(trace, attainment_tol);
      std::ofstream json(report_path_for(csv));
      json << analysis::report_to_json(report).dump(2) << '\n';
      if (!json) throw std::runtime_error("cannot write report for " + csv.string());
    }
    out << "recorded " << n << " episodes in " << out_dir.string() << " ("
        << successes << " successful)\n";
  } catch (const std::exception& e) {
    err << "rollout failed: " << e.what() << '\n';
    return kUsageError;
  }
  return kOk;
}

int cmd_compare(const std::vector<fs::path>& run_dirs, double threshold,
                int window, const fs::path& out_dir, std::ostream& out,
                std::ostream& err) {
  if (run_dirs.empty()) {
    err << "compare: need at least one run directory\n";
    return kUsageError;
  }
  struct Row {
    std::string name;
    std::vector<double> eval;
    std::optional<int> converged;
    std::optional<double> mean_sequentiality;
  };
  std::vector<Row> rows;
  try {
    for (const auto& dir : run_dirs) {
      const fs::path metrics_path = dir / "metrics.csv";
      if (!fs::exists(metrics_path)) {
        err << "compare: missing " << metrics_path.string() << '\n';
        return kUsageError;
      }
      Row row;
      row.name = dir.filename().empty() ? dir.parent_path().filename().string()
                                        : dir.filename().string();
      row.eval = read_metrics(metrics_path).eval_series();
      row.converged = convergence_epoch(row.eval, threshold, window);
      double sum = 0.0;
      int count = 0;
      for (const auto& csv : trace_files(dir / "traces")) {
        const fs::path report = report_path_for(csv);
        if (!fs::exists(report)) continue;
        std::ifstream in(report);
        const auto r = analysis::report_from_json(nlohmann::json::parse(in));
        if (r.sequentiality_index) {
          sum += *r.sequentiality_index;
          ++count;
        }
      }
      if (count > 0) row.mean_sequentiality = sum / count;
      rows.push_back(std::move(row));
    }

    fs::create_directories(out_dir);
    std::ofstream table(out_dir / "comparison.csv");
    table << "run,convergence_epoch,final_eval_success,mean_sequentiality\n";
    out << std::left << std::setw(24) << "run" << std::setw(14) << "converged"
        << std::setw(12) << "final_eval" << "sequentiality\n";
    for (const auto& r : rows) {
      const std::string conv = r.converged ? std::to_string(*r.converged) : "-";
      const std::string final_eval =
          r.eval.empty() ? "-" : std::to_string(r.eval.back());
      const std::string seq =
          r.mean_sequentiality ? std::to_string(*r.mean_sequentiality) : "-";
      table << r.name << ',' << conv << ',' << final_eval << ',' << seq << '\n';
      out << std::left << std::setw(24) << r.name << std::setw(14) << conv
          << std::setw(12) << final_eval << seq << '\n';
    }

    std::ofstream merged(out_dir / "merged_eval.csv");
    merged << "epoch";
    std::size_t longest = 0;
    for (const auto& r : rows) {
      merged << ',' << r.name;
      longest = std::max(longest, r.eval.size());
    }
    merged << '\n';
    for (std::size_t e = 0; e < longest; ++e) {
      merged << e;
      for (const auto& r : rows) {
        merged << ',';
        if (e < r.eval.size()) merged << r.eval[e];
      }
      merged << '\n';
    }
    if (!table || !merged) throw std::runtime_error("cannot write to " + out_dir.string());
  } catch (const std::exception& e) {
    err << "compare failed: " << e.what() << '\n';
    return kUsageError;
  }
  return kOk;
}

int cmd_analyze(const std::vector<fs::path>& inputs, double attainment_tol,
                const std::string& subject_name, std::ostream& out,
                std::ostream& err) {
  std::vector<fs::path> files;
  for (const auto& p : inputs) {
    if (fs::is_directory(p)) {
      const auto found = trace_files(p);
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  if (files.empty()) {
    err << "analyze: no trace files found\n";
    return kUsageError;
  }
  try {
    const auto subject = analysis::subject_from_name(subject_name);
    std::vector<double> seq;
    for (const auto& csv : files) {
      const EpisodeTrace trace = analysis::import_trace(csv);
      const auto report = analysis::analyze(trace, attainment_tol, subject);
      std::ofstream json(report_path_for(csv));
      json << analysis::report_to_json(report).dump(2) << '\n';
      if (!json) throw std::runtime_error("cannot write report for " + csv.string());
      if (report.sequentiality_index) seq.push_back(*report.sequentiality_index);
      out << csv.filename().string() << ": attainment";
      for (const auto& s : report.attainment_steps) {
        out << ' ' << (s ? std::to_string(*s) : std::string("-"));
      }
      out << "  sequentiality "
          << (report.sequentiality_index
                  ? std::to_string(*report.sequentiality_index)
                  : std::string("-"))
          << "  l1 " << report.l1_path_length << "  l2 "
          << report.l2_path_length << '\n';
    }
    if (const auto m = median(seq)) {
      out << "median sequentiality over " << seq.size() << " traces: " << *m
          << '\n';
    }
  } catch (const std::exception& e) {
    err << "analyze failed: " << e.what() << '\n';
    return kUsageError;
  }
  return kOk;
}

int main(int argc, char** argv) {
  CLI::App app{"Shaped-reward DDPG+HER pick-and-place experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
  auto* train = app.add_subcommand("train", "train an agent into a run directory");
  train->add_option("--config", config_path, "run config JSON")->required();
  train->add_option("--out", out_dir, "run directory (default $" +
                                          std::string(kRunRootEnv) + "/<config>)");
  train->add_option("--seed", seed, "override the config seed");
  train->add_flag("-v,--verbose", verbose, "log per-epoch progress");

  std::string checkpoint;
  int n = 5;
  std::optional<std::string> rollout_config;
  double tol = kDefaultAttainmentTol;
  std::uint64_t rollout_seed = 0;
  auto* roll = app.add_subcommand("rollout", "record greedy episodes from a checkpoint");
  roll->add_option("checkpoint,--checkpoint", checkpoint, "checkpoint JSON")->required();
  roll->add_option("--n", n, "number of episodes");
  roll->add_option("--out", out_dir, "trace directory (default <run>/traces)");
  roll->add_option("--seed", rollout_seed, "episode seed");
  roll->add_option("--config", rollout_config, "config providing the environment");
  roll->add_option("--tol", tol, "axis attainment tolerance");

  std::vector<std::string> runs;
  double threshold = 0.9;
  int window = 5;
  auto* compare = app.add_subcommand("compare", "compare convergence across runs");
  compare->add_option("runs", runs, "run directories")->required();
  compare->add_option("--threshold", threshold, "convergence threshold");
  compare->add_option("--window", window, "convergence window (epochs)");
  compare->add_option("--out", out_dir, "output directory (default .)");

  std::vector<std::string> traces;
  std::string subject = "gripper";
  auto* analyze = app.add_subcommand("analyze", "analyze exported trace CSVs");
  analyze->add_option("traces", traces, "trace CSV files or directories")->required();
  analyze->add_option("--tol", tol, "axis attainment tolerance");
  analyze->add_option("--subject", subject, "gripper or object");

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) {
    const auto dir = resolve_out_dir(
        out_dir ? std::optional<fs::path>(*out_dir) : std::nullopt,
        fs::path(config_path).stem().string() +
            (seed ? "_seed" + std::to_string(*seed) : std::string()));
    if (!dir) {
      std::cerr << "train: pass --out or set " << kRunRootEnv << '\n';
      return kUsageError;
    }
    return cmd_train(config_path, *dir, seed, std::cout, std::cerr, verbose);
  }
  if (roll->parsed()) {
    const fs::path dir =
        out_dir ? fs::path(*out_dir)
                : fs::path(checkpoint).parent_path().parent_path() / "traces";
    return cmd_rollout(checkpoint, n, dir, rollout_seed,
                       rollout_config ? std::optional<fs::path>(*rollout_config)
                                      : std::nullopt,
                       tol, std::cout, std::cerr);
  }
  if (compare->parsed()) {
    std::vector<fs::path> dirs(runs.begin(), runs.end());
    return cmd_compare(dirs, threshold, window, out_dir ? *out_dir : ".",
                       std::cout, std::cerr);
  }
  std::vector<fs::path> paths(traces.begin(), traces.end());
  return cmd_analyze(paths, tol, subject, std::cout, std::cerr);
}

}  // namespace shaped_pick::cli
