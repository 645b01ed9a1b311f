// bestofk: run identification experiments, print closed-form bounds, and
// run the exact-enumeration self checks.
//
// Exit codes: 0 ok, 1 usage or config error, 2 verification failure,
// 3 some replicate was inconclusive.

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "bestofk/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerify = 2;
constexpr int kExitInconclusive = 3;

int run_command(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out_path,
                bool trace, std::optional<std::size_t> threads) {
  bestofk::ExperimentConfig config = bestofk::load_config(config_path);
  if (seed) config.base_seed = *seed;
  if (!out_path.empty()) config.output = out_path;
  if (trace) config.trace = true;
  if (threads) config.threads = *threads;
  if (config.trace && config.output.empty()) {
    throw bestofk::PreconditionError("tracing needs an output path (--out or \"output\")");
  }

  const bestofk::ExperimentResult result = bestofk::run_experiment(config);
  if (config.output.empty()) {
    for (const auto& t : result.trials) std::cout << bestofk::trial_to_json(t).dump() << '\n';
    auto summary = bestofk::summary_to_json(result.summary);
    summary["config"] = bestofk::config_to_json(config);
    std::cout << summary.dump() << '\n';
  } else {
    bestofk::write_results(config, result, config.output);
    if (config.trace) bestofk::write_trace(result, config.output + ".trace.jsonl");
  }
  if (!config.table_output.empty()) bestofk::write_table(result, config.table_output);

  const auto comparison = bestofk::compare_to_bounds(result.summary, bestofk::bounds_for(config),
                                                     bestofk::arm_count(config.measure), config.k, config.delta,
                                                     config.lower_bound_fraction);
  std::cerr << bestofk::summary_to_json(result.summary).dump() << '\n';
  std::cerr << bestofk::comparison_to_json(comparison).dump() << '\n';
  for (const auto& t : result.trials) {
    for (const auto& w : t.record.warnings) std::cerr << "replicate " << t.replicate << ": " << w << '\n';
  }
  if (comparison.validation_checked && !comparison.validation_passed) return kExitVerify;
  return result.summary.inconclusive > 0 ? kExitInconclusive : kExitOk;
}

int bounds_command(const std::string& config_path) {
  const bestofk::ExperimentConfig config = bestofk::load_config(config_path);
  nlohmann::json doc;
  doc["config"] = bestofk::config_to_json(config);
  doc["bounds"] = nlohmann::json::array();
  for (const auto& r : bestofk::bounds_for(config)) doc["bounds"].push_back(bestofk::report_to_json(r));
  std::cout << doc.dump(2) << '\n';
  return kExitOk;
}

int verify_command(std::size_t max_k) {
  const nlohmann::json violations = bestofk::verify_suite(max_k);
  nlohmann::json doc;
  doc["max_k"] = max_k;
  doc["violations"] = violations;
  std::cout << doc.dump(2) << '\n';
  return violations.empty() ? kExitOk : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Best-of-K identification toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  bool trace = false;
  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("--config", config_path, "experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override the base seed");
  run->add_option("--out", out_path, "results file (JSON lines)");
  run->add_option("--threads", threads, "worker threads");
  run->add_flag("--trace", trace, "write <out>.trace.jsonl");

  std::string bounds_config;
  auto* bounds = app.add_subcommand("bounds", "print the closed-form bounds for a config");
  bounds->add_option("--config", bounds_config, "experiment config")->required()->check(CLI::ExistingFile);

  std::size_t max_k = 6;
  auto* verify = app.add_subcommand("verify", "run the exact-enumeration checks");
  verify->add_option("--max-k", max_k, "largest planted subset size to check")->check(CLI::Range(2, 13));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) return run_command(config_path, seed, out_path, trace, threads);
    if (*bounds) return bounds_command(bounds_config);
    if (*verify) return verify_command(max_k);
  } catch (const bestofk::PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
