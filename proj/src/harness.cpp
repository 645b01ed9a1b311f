#include "bestofk/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "bestofk/baselines.hpp"

namespace bestofk {

namespace {

const std::set<std::string> kConfigKeys = {
    "measure",     "model",     "k",     "delta",      "algorithm",          "replicates",
    "base_seed",   "exact_k_mode", "stage_cap", "max_queries", "output",     "table_output",
    "trace",       "trace_observations", "threads", "lower_bound_fraction"};

FeedbackModel implied_model(Algorithm algorithm) {
  return algorithm == Algorithm::parity ? FeedbackModel::semi : FeedbackModel::bandit;
}

std::size_t report_n(const BoundReport& r) {
  if (r.inputs.contains("n")) return r.inputs.at("n").get<std::size_t>();
  if (r.inputs.contains("means")) return r.inputs.at("means").size();
  return 0;
}

BoundReport unavailable(const std::string& name, const std::string& why) {
  BoundReport r;
  r.name = name;
  r.kind = "unavailable";
  r.notes.push_back(why);
  return r;
}

template <class F>
void add_report(std::vector<BoundReport>& out, const std::string& name, F&& make) {
  try {
    out.push_back(make());
  } catch (const std::exception& e) {
    out.push_back(unavailable(name, e.what()));
  }
}

}  // namespace

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::elimination:
      return "elimination";
    case Algorithm::subset_arm:
      return "subset_arm";
    case Algorithm::parity:
      return "parity";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "elimination") return Algorithm::elimination;
  if (name == "subset_arm") return Algorithm::subset_arm;
  if (name == "parity") return Algorithm::parity;
  throw PreconditionError("unknown algorithm \"" + name + "\"");
}

ExperimentConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw PreconditionError("config must be a JSON object");
  for (const auto& item : doc.items()) {
    if (!kConfigKeys.count(item.key())) throw PreconditionError("unknown config key \"" + item.key() + "\"");
  }
  ExperimentConfig c;
  try {
    if (!doc.contains("measure")) throw PreconditionError("config needs a \"measure\"");
    c.measure_spec = doc.at("measure");
    c.measure = measure_from_json(c.measure_spec);
    c.algorithm = parse_algorithm(doc.value("algorithm", std::string("elimination")));
    if (doc.contains("model")) {
      c.model = parse_model(doc.at("model").get<std::string>());
      if (c.algorithm != Algorithm::elimination && c.model != implied_model(c.algorithm)) {
        throw PreconditionError(to_string(c.algorithm) + " runs with " + to_string(implied_model(c.algorithm)) +
                                " feedback only");
      }
    } else if (c.algorithm == Algorithm::elimination) {
      throw PreconditionError("elimination needs a \"model\"");
    } else {
      c.model = implied_model(c.algorithm);
    }
    if (!doc.contains("k")) throw PreconditionError("config needs \"k\"");
    c.k = doc.at("k").get<std::size_t>();
    c.delta = doc.value("delta", 0.1);
    c.replicates = doc.value("replicates", std::size_t{1});
    c.base_seed = doc.value("base_seed", std::uint64_t{0});
    if (doc.contains("exact_k_mode") && !doc.at("exact_k_mode").is_null()) {
      c.exact_k = doc.at("exact_k_mode").get<bool>();
    }
    c.stage_cap = doc.value("stage_cap", std::size_t{40});
    if (doc.contains("max_queries") && !doc.at("max_queries").is_null()) {
      c.max_queries = doc.at("max_queries").get<std::uint64_t>();
    }
    c.output = doc.value("output", std::string());
    c.table_output = doc.value("table_output", std::string());
    c.trace = doc.value("trace", false);
    c.trace_observations = doc.value("trace_observations", false);
    c.threads = doc.value("threads", std::size_t{1});
    if (doc.contains("lower_bound_fraction") && !doc.at("lower_bound_fraction").is_null()) {
      c.lower_bound_fraction = doc.at("lower_bound_fraction").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(std::string("malformed config: ") + e.what());
  }
  const std::size_t n = arm_count(c.measure);
  if (c.k < 1 || c.k > n) throw PreconditionError("config k must satisfy 1 <= k <= n");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw PreconditionError("config delta must lie in (0, 1)");
  if (c.replicates < 1) throw PreconditionError("config replicates must be at least 1");
  if (c.threads < 1) throw PreconditionError("config threads must be at least 1");
  if (c.stage_cap < 1) throw PreconditionError("config stage_cap must be at least 1");
  return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json doc;
  doc["measure"] = measure_to_json(c.measure);
  doc["model"] = to_string(c.model);
  doc["k"] = c.k;
  doc["delta"] = c.delta;
  doc["algorithm"] = to_string(c.algorithm);
  doc["replicates"] = c.replicates;
  doc["base_seed"] = c.base_seed;
  doc["exact_k_mode"] = c.exact_k ? nlohmann::json(*c.exact_k) : nlohmann::json(nullptr);
  doc["stage_cap"] = c.stage_cap;
  doc["max_queries"] = c.max_queries ? nlohmann::json(*c.max_queries) : nlohmann::json(nullptr);
  return doc;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open config " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) throw PreconditionError("interval needs at least one trial");
  const double nn = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double centre = (phat + z2 / (2.0 * nn)) / (1.0 + z2 / nn);
  const double half = z * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn)) / (1.0 + z2 / nn);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::uint64_t nearest_rank(std::span<const std::uint64_t> sorted, double q) {
  if (sorted.empty()) throw PreconditionError("quantile of an empty list");
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

Summary summarize(std::span<const TrialResult> trials) {
  if (trials.empty()) throw PreconditionError("cannot summarise an empty trial list");
  Summary s;
  s.trials = trials.size();
  std::vector<std::uint64_t> queries;
  std::size_t judged = 0;
  std::size_t wins = 0;
  long double total = 0;
  for (const auto& t : trials) {
    queries.push_back(t.record.queries);
    total += t.record.queries;
    if (t.record.inconclusive) ++s.inconclusive;
    if (t.success) {
      ++judged;
      if (*t.success) ++wins;
    }
  }
  std::sort(queries.begin(), queries.end());
  s.mean_queries = static_cast<double>(total / static_cast<long double>(queries.size()));
  s.min_queries = queries.front();
  s.q25_queries = nearest_rank(queries, 0.25);
  s.median_queries = nearest_rank(queries, 0.5);
  s.q75_queries = nearest_rank(queries, 0.75);
  s.q90_queries = nearest_rank(queries, 0.9);
  s.max_queries = queries.back();
  if (judged == trials.size()) {
    s.successes = wins;
    s.success_rate = static_cast<double>(wins) / static_cast<double>(judged);
    s.success_interval = wilson_interval(wins, judged);
  }
  return s;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  std::optional<ArmSet> truth;
  try {
    truth = optimal_subset(config.measure, config.k);
  } catch (const SizeCapError&) {
    truth.reset();
  }

  ExperimentResult result;
  result.trials.resize(config.replicates);

  auto run_one = [&](std::size_t r) {
    TrialResult& out = result.trials[r];
    out.replicate = r;
    out.seed = derive_seed(config.base_seed, r);
    Rng rng(out.seed);
    std::vector<std::string>* lines = config.trace ? &out.trace_lines : nullptr;
    auto stage_sink = [&](const StageLog& stage) {
      if (!lines) return;
      auto rec = stage_to_json(stage);
      rec["replicate"] = r;
      lines->push_back(rec.dump());
    };
    ObservationSink obs_sink;
    if (config.trace && config.trace_observations) {
      obs_sink = [&](std::uint64_t index, const Observation& obs) {
        auto rec = observation_to_json(index, obs);
        rec["replicate"] = r;
        lines->push_back(rec.dump());
      };
    }
    const auto start = std::chrono::steady_clock::now();
    switch (config.algorithm) {
      case Algorithm::elimination: {
        ElimConfig ec;
        ec.exact_k = config.exact_k;
        ec.stage_cap = config.stage_cap;
        ec.max_queries = config.max_queries;
        ec.keep_stage_arms = config.trace;
        ec.stage_sink = stage_sink;
        ec.observation_sink = obs_sink;
        out.record = run_identification(config.measure, config.model, config.k, config.delta, ec, rng);
        break;
      }
      case Algorithm::subset_arm:
      case Algorithm::parity: {
        SubsetEliminationConfig sc;
        sc.round_cap = config.stage_cap;
        sc.max_queries = config.max_queries;
        sc.stage_sink = stage_sink;
        sc.observation_sink = obs_sink;
        out.record = config.algorithm == Algorithm::subset_arm
                         ? subset_arm_identify(config.measure, config.k, config.delta, rng, sc)
                         : parity_identify(config.measure, config.k, config.delta, rng, sc);
        break;
      }
    }
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (truth && !out.record.inconclusive) out.success = out.record.returned == *truth;
    if (truth && out.record.inconclusive) out.success = false;
  };

  const std::size_t workers = std::min(config.threads, config.replicates);
  if (workers <= 1) {
    for (std::size_t r = 0; r < config.replicates; ++r) run_one(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < config.replicates; r = next++) {
          try {
            run_one(r);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  result.summary = summarize(result.trials);
  return result;
}

nlohmann::json trial_to_json(const TrialResult& t) {
  nlohmann::json rec;
  rec["record"] = "trial";
  rec["replicate"] = t.replicate;
  rec["seed"] = t.seed;
  rec["returned"] = t.record.returned;
  rec["success"] = t.success ? nlohmann::json(*t.success) : nlohmann::json(nullptr);
  rec["queries"] = t.record.queries;
  rec["stages"] = t.record.stages;
  rec["inconclusive"] = t.record.inconclusive;
  if (!t.record.warnings.empty()) rec["warnings"] = t.record.warnings;
  return rec;
}

nlohmann::json summary_to_json(const Summary& s) {
  nlohmann::json rec;
  rec["record"] = "summary";
  rec["trials"] = s.trials;
  rec["successes"] = s.successes ? nlohmann::json(*s.successes) : nlohmann::json(nullptr);
  rec["success_rate"] = s.success_rate ? nlohmann::json(*s.success_rate) : nlohmann::json(nullptr);
  if (s.success_interval) {
    rec["success_interval"] = {s.success_interval->first, s.success_interval->second};
  } else {
    rec["success_interval"] = nullptr;
  }
  rec["inconclusive"] = s.inconclusive;
  rec["queries"] = {{"mean", s.mean_queries}, {"min", s.min_queries},       {"q25", s.q25_queries},
                    {"median", s.median_queries}, {"q75", s.q75_queries}, {"q90", s.q90_queries},
                    {"max", s.max_queries}};
  return rec;
}

void write_results(const ExperimentConfig& config, const ExperimentResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write results to " + path);
  for (const auto& t : result.trials) out << trial_to_json(t).dump() << '\n';
  auto summary = summary_to_json(result.summary);
  summary["config"] = config_to_json(config);
  out << summary.dump() << '\n';
  if (!out) throw std::runtime_error("error while writing " + path);
}

void write_table(const ExperimentResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write table to " + path);
  out << "replicate,seed,success,queries,stages,inconclusive,returned,wall_seconds\n";
  for (const auto& t : result.trials) {
    std::string returned;
    for (std::size_t j = 0; j < t.record.returned.size(); ++j) {
      if (j) returned += ' ';
      returned += std::to_string(t.record.returned[j]);
    }
    out << t.replicate << ',' << t.seed << ',' << (t.success ? (*t.success ? "1" : "0") : "") << ','
        << t.record.queries << ',' << t.record.stages << ',' << (t.record.inconclusive ? 1 : 0) << ",\""
        << returned << "\"," << std::setprecision(6) << t.wall_seconds << '\n';
  }
}

void write_trace(const ExperimentResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write trace to " + path);
  for (const auto& t : result.trials) {
    for (const auto& line : t.trace_lines) out << line << '\n';
  }
}

std::vector<BoundReport> bounds_for(const ExperimentConfig& config) {
  std::vector<BoundReport> out;
  const std::size_t n = arm_count(config.measure);
  const std::size_t k = config.k;
  if (const auto* product = std::get_if<ProductMeasure>(&config.measure)) {
    if (k >= n) return out;
    add_report(out, "information_sharing", [&] { return info_sharing(product->means, k, config.model); });
    add_report(out, "upper_" + to_string(config.model), [&] {
      auto profile = make_gap_profile(product->means, k);
      return upper_bound_total(profile, config.model, config.delta, !config.exact_k.value_or(true));
    });
    if (config.model != FeedbackModel::marked) {
      add_report(out, "lower_independent", [&] {
        auto profile = make_gap_profile(product->means, k);
        return independent_lower_bound(profile, k, config.delta, config.model);
      });
    }
  } else if (const auto* planted = std::get_if<PlantedMeasure>(&config.measure)) {
    if (k != planted->k) return out;
    add_report(out, "lower_dependent",
               [&] { return dependent_lower_bound(n, k, planted->mu, planted->p, config.delta, config.model); });
  }
  return out;
}

BoundComparison compare_to_bounds(const Summary& summary, const std::vector<BoundReport>& reports, std::size_t n,
                                  std::size_t k, double delta, std::optional<double> lower_fraction) {
  if (summary.trials == 0) throw PreconditionError("cannot compare an empty trial list");
  BoundComparison c;
  c.median_queries = static_cast<double>(summary.median_queries);
  c.validation_checked = lower_fraction.has_value();
  for (const auto& r : reports) {
    if (r.kind != "upper" && r.kind != "lower") continue;
    const std::size_t rn = report_n(r);
    if ((rn && rn != n) || (r.inputs.contains("k") && r.inputs.at("k").get<std::size_t>() != k) ||
        (r.inputs.contains("delta") && r.inputs.at("delta").get<double>() != delta)) {
      throw PreconditionError("bound " + r.name + " was computed for a different instance");
    }
    c.names.push_back(r.name);
    c.kinds.push_back(r.kind);
    c.values.push_back(r.value);
    c.ratios.push_back(r.value > 0.0 ? c.median_queries / r.value : std::numeric_limits<double>::infinity());
    if (lower_fraction && r.kind == "lower" && c.median_queries < *lower_fraction * r.value) {
      c.validation_passed = false;
      c.notes.push_back("median below " + std::to_string(*lower_fraction) + " of " + r.name);
    }
  }
  return c;
}

nlohmann::json comparison_to_json(const BoundComparison& c) {
  nlohmann::json doc;
  doc["record"] = "comparison";
  doc["median_queries"] = c.median_queries;
  doc["bounds"] = nlohmann::json::array();
  for (std::size_t i = 0; i < c.names.size(); ++i) {
    doc["bounds"].push_back({{"name", c.names[i]}, {"kind", c.kinds[i]}, {"value", c.values[i]},
                             {"ratio", c.ratios[i]}});
  }
  if (c.validation_checked) doc["validation_passed"] = c.validation_passed;
  if (!c.notes.empty()) doc["notes"] = c.notes;
  return doc;
}

}  // namespace bestofk
