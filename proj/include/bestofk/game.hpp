#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bestofk/measures.hpp"
#include "bestofk/rng.hpp"

namespace bestofk {

enum class FeedbackModel { bandit, marked, semi };

std::string to_string(FeedbackModel model);
FeedbackModel parse_model(const std::string& name);

/// Feedback for one query. `query` is the queried arms in play order; which
/// payload field is meaningful depends on `model`:
///   bandit: `bit` is the max over the query;
///   marked: `marked` is empty or a uniformly chosen arm of the query with x = 1;
///   semi:   `bits[j]` is the value of `query[j]`.
struct Observation {
  FeedbackModel model = FeedbackModel::bandit;
  ArmSet query;
  std::uint8_t bit = 0;
  std::optional<Arm> marked;
  // Position of the marked arm within `query` (meaningful only when marked).
  std::size_t marked_position = 0;
  std::vector<std::uint8_t> bits;
};

/// Writes the feedback for x on the concatenation q1 ++ q2 into `out`,
/// reusing its storage. Only the marked model consumes randomness.
void observe_into(std::span<const std::uint8_t> x, std::span<const Arm> q1, std::span<const Arm> q2,
                  FeedbackModel model, Rng& rng, Observation& out);

/// Throws PreconditionError if an arm of q is out of range.
Observation observe(std::span<const std::uint8_t> x, std::span<const Arm> q, FeedbackModel model, Rng& rng);

/// Counts queries. Per-subset counts are optional because they cost memory
/// proportional to the number of distinct queries.
class QueryLedger {
 public:
  explicit QueryLedger(bool per_subset = false) : per_subset_(per_subset) {}

  void record(std::span<const Arm> query);
  std::uint64_t total() const { return total_; }
  bool tracks_subsets() const { return per_subset_; }
  const std::map<ArmSet, std::uint64_t>& per_subset_counts() const { return counts_; }

 private:
  bool per_subset_;
  std::uint64_t total_ = 0;
  std::map<ArmSet, std::uint64_t> counts_;
};

/// Receives (query index, observation) for every play, for trace output.
using ObservationSink = std::function<void(std::uint64_t, const Observation&)>;

/// Size rule for queries: at most k arms, or exactly k when exact_k is set.
struct QueryRules {
  std::size_t n = 0;
  std::size_t k = 0;
  bool exact_k = false;
};

/// Sample-then-observe loop against one environment. Owns the scratch reward
/// vector and observation so the hot path does not allocate.
class Game {
 public:
  Game(const Measure& env, FeedbackModel model, QueryRules rules, Rng& rng, QueryLedger& ledger);

  /// Plays q1 ++ q2 (which must be disjoint) as one query. The returned
  /// reference is valid until the next call.
  const Observation& play(std::span<const Arm> q1, std::span<const Arm> q2 = {});

  void set_sink(ObservationSink sink) { sink_ = std::move(sink); }

  FeedbackModel model() const { return model_; }
  const QueryRules& rules() const { return rules_; }
  const Measure& env() const { return env_; }
  Rng& rng() { return rng_; }
  QueryLedger& ledger() { return ledger_; }

 private:
  const Measure& env_;
  FeedbackModel model_;
  QueryRules rules_;
  Rng& rng_;
  QueryLedger& ledger_;
  RewardVector x_;
  Observation obs_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
  ObservationSink sink_;
};

/// One-shot convenience: sample, observe, count.
Observation play(const Measure& env, std::span<const Arm> q, FeedbackModel model, Rng& rng, QueryLedger& ledger);

nlohmann::json observation_to_json(std::uint64_t index, const Observation& obs);

}  // namespace bestofk
