#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "bestofk/elimination.hpp"
#include "bestofk/theory.hpp"

namespace bestofk {

enum class Algorithm { elimination, subset_arm, parity };

std::string to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& name);

struct ExperimentConfig {
  nlohmann::json measure_spec;
  Measure measure;
  FeedbackModel model = FeedbackModel::semi;
  std::size_t k = 1;
  double delta = 0.1;
  Algorithm algorithm = Algorithm::elimination;
  std::size_t replicates = 1;
  std::uint64_t base_seed = 0;
  std::optional<bool> exact_k;
  std::size_t stage_cap = 40;
  std::optional<std::uint64_t> max_queries;
  std::string output;
  std::string table_output;
  bool trace = false;
  bool trace_observations = false;
  std::size_t threads = 1;
  // Validation mode: observed median must reach this fraction of each lower bound.
  std::optional<double> lower_bound_fraction;
};

/// Parses and validates a config document. Throws PreconditionError.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

struct TrialResult {
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  TrialRecord record;
  // Set only when the measure has a unique optimal subset.
  std::optional<bool> success;
  double wall_seconds = 0.0;
  std::vector<std::string> trace_lines;
};

struct Summary {
  std::size_t trials = 0;
  std::optional<std::size_t> successes;
  std::optional<double> success_rate;
  std::optional<std::pair<double, double>> success_interval;
  std::size_t inconclusive = 0;
  double mean_queries = 0.0;
  // Nearest-rank quantiles of the query counts.
  std::uint64_t min_queries = 0;
  std::uint64_t q25_queries = 0;
  std::uint64_t median_queries = 0;
  std::uint64_t q75_queries = 0;
  std::uint64_t q90_queries = 0;
  std::uint64_t max_queries = 0;
};

struct ExperimentResult {
  std::vector<TrialResult> trials;
  Summary summary;
};

/// 95% Wilson score interval.
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

/// Nearest-rank quantile of an ascending list: element ceil(q N) - 1.
std::uint64_t nearest_rank(std::span<const std::uint64_t> sorted, double q);

/// Independent of record order. Throws PreconditionError on an empty list.
Summary summarize(std::span<const TrialResult> trials);

/// Runs every replicate (seed derive_seed(base_seed, r)) and returns the
/// records in replicate order. Does no file I/O.
ExperimentResult run_experiment(const ExperimentConfig& config);

nlohmann::json trial_to_json(const TrialResult& trial);
nlohmann::json summary_to_json(const Summary& summary);

/// JSON lines: one trial record per replicate, then a summary record. Wall
/// times are left out so identical runs give identical bytes.
void write_results(const ExperimentConfig& config, const ExperimentResult& result, const std::string& path);

/// CSV with a fixed column order, one row per replicate.
void write_table(const ExperimentResult& result, const std::string& path);

/// Stage and observation records of every replicate, in replicate order.
void write_trace(const ExperimentResult& result, const std::string& path);

/// Closed-form reports that apply to the configured instance.
std::vector<BoundReport> bounds_for(const ExperimentConfig& config);

struct BoundComparison {
  double median_queries = 0.0;
  std::vector<std::string> names;
  std::vector<std::string> kinds;
  std::vector<double> values;
  std::vector<double> ratios;  // median / value
  bool validation_checked = false;
  bool validation_passed = true;
  std::vector<std::string> notes;
};

/// Ratios of the observed median to each bound. When `lower_fraction` is set,
/// checks median >= fraction * value for every lower bound. Throws
/// PreconditionError if a report's n, k or delta differ from the instance.
BoundComparison compare_to_bounds(const Summary& summary, const std::vector<BoundReport>& reports, std::size_t n,
                                  std::size_t k, double delta, std::optional<double> lower_fraction = std::nullopt);

nlohmann::json comparison_to_json(const BoundComparison& comparison);

/// Runs the exact-enumeration checks (planted tables for k = 2..max_k, the
/// feasibility correspondence, recording statistics, information terms) and
/// returns one record per violation. Empty means everything held.
nlohmann::json verify_suite(std::size_t max_k);

}  // namespace bestofk
