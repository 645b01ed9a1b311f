#include "bestofk/elimination.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace bestofk {

namespace {

ArmSet set_minus(const ArmSet& a, const ArmSet& b) {
  ArmSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

ArmSet set_union(const ArmSet& a, const ArmSet& b) {
  ArmSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

Interval confidence_radius(double mu_hat, std::uint64_t T, std::size_t n, std::size_t t, double delta) {
  if (T < 2) throw PreconditionError("confidence radius needs T >= 2");
  if (!(mu_hat >= 0.0 && mu_hat <= 1.0)) throw PreconditionError("empirical mean must lie in [0, 1]");
  if (!(delta > 0.0 && delta < 1.0)) throw PreconditionError("delta must lie in (0, 1)");
  if (n < 1 || t < 1) throw PreconditionError("confidence radius needs n >= 1 and t >= 1");
  const double tt = static_cast<double>(T);
  const double st = static_cast<double>(t);
  const double log_term = std::log(8.0 * static_cast<double>(n) * st * st / delta);
  Interval out;
  out.mu_hat = mu_hat;
  out.v_hat = tt * mu_hat * (1.0 - mu_hat) / (tt - 1.0);
  out.c_hat = std::sqrt(2.0 * out.v_hat * log_term / tt) + 8.0 * log_term / (3.0 * (tt - 1.0));
  return out;
}

double true_radius(double variance, double T, std::size_t n, double t, double delta) {
  if (!(T > 1.0)) throw PreconditionError("true radius needs T > 1");
  const double log_term = std::log(8.0 * static_cast<double>(n) * t * t / delta);
  return std::sqrt(2.0 * variance * log_term / T) + 14.0 * log_term / (3.0 * (T - 1.0));
}

double inversion_sample_size(double variance, double gap, std::size_t n, double delta) {
  if (!(gap > 0.0)) throw PreconditionError("inversion needs a positive gap");
  const double a = 16.0 * variance / (gap * gap) + 14.0 / gap;
  const double nn = static_cast<double>(n);
  return a * std::log(24.0 * nn / delta * std::log(12.0 * nn / delta * a));
}

void play_and_record(std::span<const Arm> q_record, std::span<const Arm> q_extra, std::span<std::uint64_t> y,
                     Game& game) {
  // Game::play rejects overlap between the two parts.
  const Observation& obs = game.play(q_record, q_extra);
  const std::size_t recorded = q_record.size();
  switch (obs.model) {
    case FeedbackModel::semi:
      for (std::size_t j = 0; j < recorded; ++j) y[obs.query[j]] += obs.bits[j];
      break;
    case FeedbackModel::marked:
      if (obs.marked && obs.marked_position < recorded) ++y[*obs.marked];
      break;
    case FeedbackModel::bandit:
      if (obs.bit) {
        for (Arm a : q_record) ++y[a];
      }
      break;
  }
}

std::size_t balance_size(std::size_t undecided, std::size_t k1) {
  // ceil((5 k1 - 2 |U| - 1) / 2), clamped at zero.
  const long long num = 5LL * static_cast<long long>(k1) - 2LL * static_cast<long long>(undecided) - 1LL;
  if (num <= 0) return 0;
  return static_cast<std::size_t>((num + 1) / 2);
}

std::size_t balance_min_arms(std::size_t k) { return (7 * k + 1) / 2; }

SamplingSets balance(const ArmSet& undecided, const ArmSet& rejected, std::size_t k1, std::size_t n, std::size_t k,
                     Rng& rng) {
  if (n < balance_min_arms(k)) {
    throw PreconditionError("balancing needs n >= ceil(7k/2) = " + std::to_string(balance_min_arms(k)));
  }
  const std::size_t size = balance_size(undecided.size(), k1);
  if (rejected.size() < size) {
    throw InfeasibleError("balancing set of size " + std::to_string(size) + " exceeds the " +
                          std::to_string(rejected.size()) + " rejected arms");
  }
  SamplingSets out;
  out.balance = rng.sample_subset(rejected, size);
  out.u_prime = set_union(undecided, out.balance);
  out.r_prime = set_minus(rejected, out.balance);
  return out;
}

double balance_kappa1(std::size_t u_prime, std::size_t k1) {
  return 1.0 - static_cast<double>(k1 - 1) / static_cast<double>(u_prime - 1);
}

double balance_kappa2(std::size_t u_prime, std::size_t k1) {
  return static_cast<double>(k1 - 1) / (static_cast<double>(u_prime) - 2.0 * static_cast<double>(k1));
}

std::size_t uniform_play(std::span<const Arm> u_prime, std::span<const Arm> accepted, std::span<const Arm> r_prime,
                         std::size_t k1, bool exact_k, Game& game, std::span<std::uint64_t> y) {
  if (u_prime.empty()) throw PreconditionError("uniform play needs a nonempty sampling set");
  if (k1 < 1 || k1 > u_prime.size()) throw PreconditionError("uniform play needs 1 <= k1 <= |U'|");
  Rng& rng = game.rng();
  const std::size_t k = game.rules().k;

  ArmSet order(u_prime.begin(), u_prime.end());
  rng.shuffle(std::span<Arm>(order));

  ArmSet top_off;
  if (exact_k && k1 < k) {
    const std::size_t k2 = k - k1;
    if (r_prime.size() + accepted.size() < k2) {
      throw InfeasibleError("top-off needs " + std::to_string(k2) + " arms but only " +
                            std::to_string(r_prime.size() + accepted.size()) + " are decided");
    }
    if (r_prime.size() >= k2) {
      top_off = rng.sample_subset(r_prime, k2);
    } else {
      top_off.assign(r_prime.begin(), r_prime.end());
      ArmSet more = rng.sample_subset(accepted, k2 - r_prime.size());
      top_off.insert(top_off.end(), more.begin(), more.end());
    }
  }

  const std::size_t blocks = order.size() / k1;
  const std::size_t full = blocks * k1;
  const std::span<const Arm> all(order);
  for (std::size_t b = 0; b < blocks; ++b) {
    play_and_record(all.subspan(b * k1, k1), top_off, y, game);
  }
  std::size_t queries = blocks;
  if (full < order.size()) {
    // Pad the remainder with unrecorded arms from the full blocks.
    const std::span<const Arm> remainder = all.subspan(full);
    ArmSet extra = rng.sample_subset(all.first(full), k1 - remainder.size());
    extra.insert(extra.end(), top_off.begin(), top_off.end());
    play_and_record(remainder, extra, y, game);
    ++queries;
  }
  return queries;
}

ElimState ElimState::initial(std::size_t n, std::size_t k) {
  if (k < 1 || k > n) throw PreconditionError("need 1 <= k <= n");
  ElimState s;
  s.n = n;
  s.k = k;
  s.undecided.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.undecided[i] = static_cast<Arm>(i);
  return s;
}

void elimination_step(ElimState& state, std::span<const Interval> intervals) {
  auto& u = state.undecided;
  if (intervals.size() != u.size()) {
    throw PreconditionError("expected " + std::to_string(u.size()) + " intervals, got " +
                            std::to_string(intervals.size()));
  }
  if (state.accepted.size() >= state.k || u.size() + state.accepted.size() <= state.k) {
    throw PreconditionError("elimination step called on a finished state");
  }
  const std::size_t kt = state.k - state.accepted.size();

  std::vector<double> upper;
  std::vector<double> lower;
  for (const auto& iv : intervals) {
    upper.push_back(iv.upper());
    lower.push_back(iv.lower());
  }
  // Thresholds: (kt+1)-th largest upper bound and kt-th largest lower bound.
  std::vector<double> sorted = upper;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(kt), sorted.end(),
                   std::greater<>());
  const double accept_above = sorted[kt];
  sorted = lower;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(kt - 1), sorted.end(),
                   std::greater<>());
  const double reject_below = sorted[kt - 1];

  ArmSet keep;
  ArmSet newly_accepted;
  ArmSet newly_rejected;
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (lower[j] > accept_above) {
      newly_accepted.push_back(u[j]);
    } else if (upper[j] < reject_below) {
      newly_rejected.push_back(u[j]);
    } else {
      keep.push_back(u[j]);
    }
  }
  state.accepted = set_union(state.accepted, newly_accepted);
  state.rejected = set_union(state.rejected, newly_rejected);
  u = std::move(keep);

  if (state.rejected.size() == state.n - state.k) {
    state.accepted = set_union(state.accepted, u);
    u.clear();
  } else if (state.accepted.size() == state.k) {
    state.rejected = set_union(state.rejected, u);
    u.clear();
  }
  ++state.t;
  state.T *= 2;
}

nlohmann::json stage_to_json(const StageLog& stage) {
  nlohmann::json rec;
  rec["record"] = "stage";
  rec["t"] = stage.t;
  rec["undecided"] = stage.undecided;
  rec["accepted"] = stage.accepted;
  rec["rejected"] = stage.rejected;
  rec["balance"] = stage.balance;
  rec["T"] = stage.T;
  rec["queries"] = stage.queries;
  if (!stage.arms.empty()) {
    rec["arms"] = stage.arms;
    rec["mu_hat"] = stage.mu_hat;
    rec["c_hat"] = stage.c_hat;
  }
  return rec;
}

bool default_exact_k(FeedbackModel model) { return model != FeedbackModel::semi; }

TrialRecord run_identification(const Measure& env, FeedbackModel model, std::size_t k, double delta,
                               const ElimConfig& config, Rng& rng) {
  const std::size_t n = arm_count(env);
  if (k < 1 || k > n) throw PreconditionError("need 1 <= k <= n");
  if (!(delta > 0.0 && delta < 1.0)) throw PreconditionError("delta must lie in (0, 1)");
  TrialRecord record;
  if (n == k) {
    record.returned.resize(n);
    for (std::size_t i = 0; i < n; ++i) record.returned[i] = static_cast<Arm>(i);
    return record;
  }
  if (model == FeedbackModel::bandit) {
    if (auto means = product_means(env)) {
      for (double mu : *means) {
        if (mu >= 1.0) throw IdentifiabilityError("bandit feedback cannot identify arms when some mean is 1");
      }
    }
  }
  const bool exact_k = config.exact_k.value_or(default_exact_k(model));
  bool balancing = model == FeedbackModel::bandit;
  if (balancing && n < balance_min_arms(k)) {
    balancing = false;
    record.warnings.push_back("n=" + std::to_string(n) + " is below ceil(7k/2)=" +
                              std::to_string(balance_min_arms(k)) + "; running without balancing");
  }

  QueryLedger ledger;
  Game game(env, model, QueryRules{n, k, exact_k}, rng, ledger);
  if (config.observation_sink) game.set_sink(config.observation_sink);

  ElimState state = ElimState::initial(n, k);
  std::vector<std::uint64_t> y(n);
  std::vector<Interval> intervals;
  while (!state.done()) {
    if (state.t > config.stage_cap) {
      record.inconclusive = true;
      record.warnings.push_back("stage cap " + std::to_string(config.stage_cap) + " reached");
      break;
    }
    const std::size_t k1 = std::min(state.undecided.size(), k);
    SamplingSets sets;
    if (balancing) {
      sets = balance(state.undecided, state.rejected, k1, n, k, rng);
    } else {
      sets.u_prime = state.undecided;
      sets.r_prime = state.rejected;
    }
    std::fill(y.begin(), y.end(), 0);
    const std::uint64_t before = ledger.total();
    for (std::uint64_t s = 0; s < state.T; ++s) {
      uniform_play(sets.u_prime, state.accepted, sets.r_prime, k1, exact_k, game, y);
    }

    intervals.clear();
    const double tt = static_cast<double>(state.T);
    for (Arm a : state.undecided) {
      intervals.push_back(confidence_radius(static_cast<double>(y[a]) / tt, state.T, n, state.t, delta));
    }

    StageLog log;
    log.t = state.t;
    log.undecided = state.undecided.size();
    log.accepted = state.accepted.size();
    log.rejected = state.rejected.size();
    log.balance = sets.balance.size();
    log.T = state.T;
    log.queries = ledger.total() - before;
    if (config.keep_stage_arms) {
      log.arms = state.undecided;
      for (const auto& iv : intervals) {
        log.mu_hat.push_back(iv.mu_hat);
        log.c_hat.push_back(iv.reported_radius());
      }
    }
    if (config.stage_sink) config.stage_sink(log);
    record.stage_log.push_back(std::move(log));

    elimination_step(state, intervals);
    ++record.stages;

    if (config.max_queries && ledger.total() >= *config.max_queries && !state.done()) {
      record.inconclusive = true;
      record.warnings.push_back("query budget " + std::to_string(*config.max_queries) + " exhausted");
      break;
    }
  }
  record.returned = state.accepted;
  record.queries = ledger.total();
  return record;
}

}  // namespace bestofk
