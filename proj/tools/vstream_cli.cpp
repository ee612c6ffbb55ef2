#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vstream/experiment.hpp"
#include "vstream/fixtures.hpp"
#include "vstream/selfcheck.hpp"

namespace {

// exit codes: 0 ok, 1 config error, 2 runtime failure
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct CommonOpts {
  std::string config_path;
  std::string out;
  std::string policy;
  std::string objective;
  std::string mode;
  uint64_t seed = 0;
  bool seed_set = false;
};

vstream::ExperimentSpec load_spec(const CommonOpts& opts) {
  if (opts.config_path.empty()) throw std::runtime_error("missing --config");
  vstream::ExperimentSpec spec =
      vstream::spec_from_config(vstream::Config::parse_file(opts.config_path));
  if (!opts.policy.empty()) spec.policy = vstream::parse_policy(opts.policy);
  if (!opts.objective.empty()) {
    const bool keep_signed = spec.weights.signed_variation;
    spec.weights = vstream::QoEWeights::preset(opts.objective);
    spec.weights.signed_variation = keep_signed;
  }
  if (!opts.mode.empty()) {
    spec.train.mode = opts.mode;
    spec.policy = vstream::parse_policy(opts.mode);
  }
  if (opts.seed_set) {
    spec.seed = opts.seed;
    spec.train.seed = opts.seed;
  }
  if (!opts.out.empty()) spec.out_dir = opts.out;
  return spec;
}

void print_stats_line(const std::string& label, const vstream::EpisodeStats& s) {
  std::cout << label << ": mean_qoe " << s.mean_qoe << ", quality " << s.viewport_quality
            << ", temporal " << s.temporal_variation << ", spatial " << s.spatial_variation
            << ", rebuffer_s " << s.rebuffer_s << ", freeze_freq " << s.freeze_freq << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tile-based 360 video streaming lab: multi-viewpoint prediction, "
               "MAPPO/IPPO rate adaptation, and rule-based baselines"};
  app.require_subcommand(1);

  CommonOpts opts;

  auto* run_cmd = app.add_subcommand("run", "train and/or evaluate one policy");
  run_cmd->add_option("--config", opts.config_path, "experiment config file")->required();
  run_cmd->add_option("--policy", opts.policy, "override [experiment] policy");
  run_cmd->add_option("--objective", opts.objective, "override QoE objective, e.g. 1,2,1,1");
  run_cmd->add_option("--mode", opts.mode, "mappo or ippo (overrides policy and train mode)");
  run_cmd->add_option("--seed", opts.seed, "override seed")->each([&](const std::string&) {
    opts.seed_set = true;
  });
  run_cmd->add_option("--out", opts.out, "override output directory");

  auto* sweep_cmd = app.add_subcommand("sweep", "grid of training runs over epsilon x lambda");
  std::vector<double> sweep_eps{0.05, 0.2, 0.3, 0.5};
  std::vector<double> sweep_lam{0.05, 0.5, 0.95, 0.99};
  sweep_cmd->add_option("--config", opts.config_path, "experiment config file")->required();
  sweep_cmd->add_option("--epsilon", sweep_eps, "clip epsilon values");
  sweep_cmd->add_option("--lambda", sweep_lam, "GAE lambda values");
  sweep_cmd->add_option("--mode", opts.mode, "mappo or ippo");
  sweep_cmd->add_option("--seed", opts.seed, "override seed")->each([&](const std::string&) {
    opts.seed_set = true;
  });
  sweep_cmd->add_option("--out", opts.out, "override output directory");

  auto* report_cmd = app.add_subcommand("report", "comparison table over result bundles");
  std::string report_dir;
  report_cmd->add_option("dir", report_dir, "directory holding result bundles")->required();

  auto* gen_cmd = app.add_subcommand("gen-fixtures", "write synthetic manifests, traces, "
                                     "viewpoint logs, and prediction fixtures");
  std::string gen_dir = "fixtures";
  uint64_t gen_seed = 7;
  gen_cmd->add_option("--out", gen_dir, "fixture directory");
  gen_cmd->add_option("--seed", gen_seed, "generator seed");

  auto* verify_cmd = app.add_subcommand("verify", "run the randomized oracle suites");
  uint64_t verify_seed = 1;
  verify_cmd->add_option("--seed", verify_seed, "oracle seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (run_cmd->parsed()) {
      vstream::ExperimentSpec spec;
      try {
        spec = load_spec(opts);
      } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
      }
      const vstream::ResultBundle bundle = vstream::run_experiment(spec);
      std::cout << "policy " << bundle.policy << " objective (" << bundle.objective << ")\n";
      for (size_t r = 0; r < bundle.repetitions.size(); ++r)
        print_stats_line("rep" + std::to_string(r), bundle.repetitions[r].mean);
      print_stats_line("mean", bundle.mean);
      std::cout << "results written to " << spec.out_dir << "\n";
    } else if (sweep_cmd->parsed()) {
      vstream::ExperimentSpec spec;
      try {
        spec = load_spec(opts);
      } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
      }
      vstream::sweep(spec, sweep_eps, sweep_lam);
      std::cout << "sweep curves written to " << spec.out_dir << "\n";
    } else if (report_cmd->parsed()) {
      std::vector<vstream::ReportRow> rows;
      try {
        rows = vstream::report(report_dir);
      } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
      }
      vstream::write_report(rows, report_dir + "/report.txt");
      for (const auto& row : rows)
        std::cout << row.policy << "  normalized " << row.normalized_qoe << "  mean_qoe "
                  << row.mean_qoe << "\n";
      std::cout << "table written to " << report_dir << "/report.txt\n";
    } else if (gen_cmd->parsed()) {
      vstream::generate_fixtures(gen_dir, gen_seed);
      std::cout << "fixtures written to " << gen_dir << "\n";
    } else if (verify_cmd->parsed()) {
      const auto results = vstream::run_self_checks(verify_seed);
      bool all_pass = true;
      for (const auto& r : results) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << " (" << r.detail << ")\n";
        all_pass = all_pass && r.pass;
      }
      if (!all_pass) return kRuntimeError;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return 0;
}
