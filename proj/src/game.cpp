#include "bestofk/game.hpp"

#include <algorithm>

namespace bestofk {

std::string to_string(FeedbackModel model) {
  switch (model) {
    case FeedbackModel::bandit:
      return "bandit";
    case FeedbackModel::marked:
      return "marked";
    case FeedbackModel::semi:
      return "semi";
  }
  return "unknown";
}

FeedbackModel parse_model(const std::string& name) {
  if (name == "bandit") return FeedbackModel::bandit;
  if (name == "marked") return FeedbackModel::marked;
  if (name == "semi") return FeedbackModel::semi;
  throw PreconditionError("unknown feedback model \"" + name + "\"");
}

void observe_into(std::span<const std::uint8_t> x, std::span<const Arm> q1, std::span<const Arm> q2,
                  FeedbackModel model, Rng& rng, Observation& out) {
  out.model = model;
  out.query.assign(q1.begin(), q1.end());
  out.query.insert(out.query.end(), q2.begin(), q2.end());
  out.bit = 0;
  out.marked.reset();
  out.bits.clear();
  switch (model) {
    case FeedbackModel::bandit:
      for (Arm a : out.query) out.bit |= x[a];
      break;
    case FeedbackModel::semi:
      for (Arm a : out.query) {
        out.bits.push_back(x[a]);
        out.bit |= x[a];
      }
      break;
    case FeedbackModel::marked: {
      std::size_t ones = 0;
      for (Arm a : out.query) ones += x[a];
      if (ones == 0) break;
      out.bit = 1;
      std::size_t pick = rng.below(ones);
      for (std::size_t j = 0; j < out.query.size(); ++j) {
        if (x[out.query[j]] && pick-- == 0) {
          out.marked = out.query[j];
          out.marked_position = j;
          break;
        }
      }
      break;
    }
  }
}

Observation observe(std::span<const std::uint8_t> x, std::span<const Arm> q, FeedbackModel model, Rng& rng) {
  for (Arm a : q) {
    if (a >= x.size()) throw PreconditionError("arm " + std::to_string(a) + " out of range");
  }
  Observation out;
  observe_into(x, q, {}, model, rng, out);
  return out;
}

void QueryLedger::record(std::span<const Arm> query) {
  ++total_;
  if (per_subset_) {
    ArmSet key(query.begin(), query.end());
    std::sort(key.begin(), key.end());
    ++counts_[key];
  }
}

Game::Game(const Measure& env, FeedbackModel model, QueryRules rules, Rng& rng, QueryLedger& ledger)
    : env_(env), model_(model), rules_(rules), rng_(rng), ledger_(ledger) {
  rules_.n = arm_count(env);
  if (rules_.k < 1 || rules_.k > rules_.n) throw PreconditionError("query size k must satisfy 1 <= k <= n");
  x_.resize(rules_.n);
  stamp_.assign(rules_.n, 0);
}

const Observation& Game::play(std::span<const Arm> q1, std::span<const Arm> q2) {
  const std::size_t size = q1.size() + q2.size();
  if (size == 0) throw PreconditionError("query must be nonempty");
  if (size > rules_.k) {
    throw PreconditionError("query of size " + std::to_string(size) + " exceeds k=" + std::to_string(rules_.k));
  }
  if (rules_.exact_k && size != rules_.k) {
    throw PreconditionError("exact-k mode needs queries of size " + std::to_string(rules_.k) + ", got " +
                            std::to_string(size));
  }
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    epoch_ = 1;
  }
  for (auto part : {q1, q2}) {
    for (Arm a : part) {
      if (a >= rules_.n) throw PreconditionError("arm " + std::to_string(a) + " out of range");
      if (stamp_[a] == epoch_) throw PreconditionError("arm " + std::to_string(a) + " appears twice in a query");
      stamp_[a] = epoch_;
    }
  }
  sample_into(env_, rng_, x_);
  observe_into(x_, q1, q2, model_, rng_, obs_);
  ledger_.record(obs_.query);
  if (sink_) sink_(ledger_.total(), obs_);
  return obs_;
}

Observation play(const Measure& env, std::span<const Arm> q, FeedbackModel model, Rng& rng, QueryLedger& ledger) {
  Game game(env, model, QueryRules{0, q.empty() ? 1 : q.size(), false}, rng, ledger);
  return game.play(q);
}

nlohmann::json observation_to_json(std::uint64_t index, const Observation& obs) {
  nlohmann::json rec;
  rec["record"] = "observation";
  rec["t"] = index;
  rec["query"] = obs.query;
  rec["model"] = to_string(obs.model);
  switch (obs.model) {
    case FeedbackModel::bandit:
      rec["payload"] = obs.bit;
      break;
    case FeedbackModel::marked:
      rec["payload"] = obs.marked ? nlohmann::json(*obs.marked) : nlohmann::json(nullptr);
      break;
    case FeedbackModel::semi:
      rec["payload"] = obs.bits;
      break;
  }
  return rec;
}

}  // namespace bestofk
