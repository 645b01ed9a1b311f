#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bestofk/game.hpp"
#include "bestofk/measures.hpp"
#include "bestofk/rng.hpp"

namespace bestofk {

/// Empirical mean, confidence radius and sample variance for one arm.
/// `c_hat` is unclipped; `reported_radius()` clips it to [0, 1] for logs.
struct Interval {
  double mu_hat = 0.0;
  double c_hat = 0.0;
  double v_hat = 0.0;

  double lower() const { return mu_hat - c_hat; }
  double upper() const { return mu_hat + c_hat; }
  double reported_radius() const { return c_hat < 1.0 ? c_hat : 1.0; }
};

/// Empirical-Bernstein interval after T samples at stage t:
///   v = T mu (1 - mu) / (T - 1),  L = ln(8 n t^2 / delta),
///   c = sqrt(2 v L / T) + 8 L / (3 (T - 1)).
Interval confidence_radius(double mu_hat, std::uint64_t T, std::size_t n, std::size_t t, double delta);

/// Same radius shape with the true variance and the larger constant 14
/// in the second term. `t` may be fractional.
double true_radius(double variance, double T, std::size_t n, double t, double delta);

/// Sample size after which true_radius(variance, T, ...) <= gap:
///   a = 16 V / gap^2 + 14 / gap,  T = a ln((24 n / delta) ln(12 n a / delta)).
double inversion_sample_size(double variance, double gap, std::size_t n, double delta);

/// Plays q_record ++ q_extra once and adds the recorded ones to y (indexed by
/// arm). semi/marked record each arm of q_record seen at one; bandit records
/// every arm of q_record when the max is one. q_extra is never recorded.
void play_and_record(std::span<const Arm> q_record, std::span<const Arm> q_extra, std::span<std::uint64_t> y,
                     Game& game);

/// Arms the sampler draws from. U' = U + B, R' = R - B.
struct SamplingSets {
  ArmSet u_prime;
  ArmSet r_prime;
  ArmSet balance;
};

/// |B| = max(0, ceil(5 k1 / 2 - |U| - 1/2)).
std::size_t balance_size(std::size_t undecided, std::size_t k1);

/// Smallest n for which balancing is always feasible: ceil(7k/2).
std::size_t balance_min_arms(std::size_t k);

/// Draws B uniformly from R. Throws PreconditionError if n < ceil(7k/2) and
/// InfeasibleError if |R| < |B|.
SamplingSets balance(const ArmSet& undecided, const ArmSet& rejected, std::size_t k1, std::size_t n, std::size_t k,
                     Rng& rng);

/// 1 - (k1 - 1) / (|U'| - 1).
double balance_kappa1(std::size_t u_prime, std::size_t k1);
/// (k1 - 1) / (|U'| - 2 k1).
double balance_kappa2(std::size_t u_prime, std::size_t k1);

/// One pass over a uniformly shuffled U' in blocks of k1. Each arm of U' is
/// recorded at most once. With exact_k and k1 < k, a single top-off set of
/// k - k1 arms from R' (then A) is appended to every query. Returns the
/// number of queries issued, ceil(|U'| / k1).
std::size_t uniform_play(std::span<const Arm> u_prime, std::span<const Arm> accepted, std::span<const Arm> r_prime,
                         std::size_t k1, bool exact_k, Game& game, std::span<std::uint64_t> y);

struct ElimState {
  std::size_t n = 0;
  std::size_t k = 0;
  ArmSet undecided;
  ArmSet accepted;
  ArmSet rejected;
  std::size_t t = 1;
  std::uint64_t T = 2;

  static ElimState initial(std::size_t n, std::size_t k);
  bool done() const { return undecided.empty(); }
};

/// Applies the accept/reject rules to `state.undecided` using one interval
/// per undecided arm (same order), then advances the stage.
void elimination_step(ElimState& state, std::span<const Interval> intervals);

struct StageLog {
  std::size_t t = 0;
  std::size_t undecided = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t balance = 0;
  std::uint64_t T = 0;
  std::uint64_t queries = 0;
  ArmSet arms;
  std::vector<double> mu_hat;
  std::vector<double> c_hat;
};

nlohmann::json stage_to_json(const StageLog& stage);

/// Outcome of one identification run, shared by every identifier.
struct TrialRecord {
  ArmSet returned;
  std::uint64_t queries = 0;
  std::size_t stages = 0;
  bool inconclusive = false;
  std::vector<StageLog> stage_log;
  std::vector<std::string> warnings;
};

struct ElimConfig {
  // Defaults to on for bandit and marked, off for semi.
  std::optional<bool> exact_k;
  std::size_t stage_cap = 40;
  // Flags the run inconclusive once a stage ends past this many queries.
  std::optional<std::uint64_t> max_queries;
  bool keep_stage_arms = true;
  std::function<void(const StageLog&)> stage_sink;
  ObservationSink observation_sink;
};

bool default_exact_k(FeedbackModel model);

TrialRecord run_identification(const Measure& env, FeedbackModel model, std::size_t k, double delta,
                               const ElimConfig& config, Rng& rng);

}  // namespace bestofk
