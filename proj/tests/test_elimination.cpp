#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "bestofk/elimination.hpp"
#include "bestofk/theory.hpp"

using namespace bestofk;

namespace {

std::vector<double> instance_means() {
  std::vector<double> means = {0.8, 0.7, 0.6};
  means.insert(means.end(), 7, 0.3);
  return means;
}

struct Fixture {
  Measure env;
  Rng rng;
  QueryLedger ledger;
  Game game;

  Fixture(std::vector<double> means, FeedbackModel model, std::size_t k, bool exact_k)
      : env(make_product(std::move(means))),
        rng(42),
        game(env, model, QueryRules{0, k, exact_k}, rng, ledger) {}
};

}  // namespace

TEST_CASE("confidence radius closed form") {
  const Interval iv = confidence_radius(0.5, 8, 10, 3, 0.1);
  CHECK(iv.v_hat == doctest::Approx(2.0 / 7.0).epsilon(1e-15));
  CHECK(std::abs(iv.c_hat - 4.180059593408715) < 1e-12);
  CHECK(iv.reported_radius() == 1.0);
  CHECK(iv.lower() == doctest::Approx(0.5 - iv.c_hat));

  const Interval zero = confidence_radius(0.0, 8, 10, 3, 0.1);
  CHECK(zero.v_hat == 0.0);
  CHECK(zero.c_hat == doctest::Approx(8.0 * std::log(8.0 * 10 * 9 / 0.1) / 21.0).epsilon(1e-14));
  CHECK(confidence_radius(1.0, 8, 10, 3, 0.1).c_hat == zero.c_hat);
  CHECK_THROWS_AS(confidence_radius(0.5, 1, 10, 3, 0.1), PreconditionError);
  CHECK_THROWS_AS(confidence_radius(1.5, 4, 10, 3, 0.1), PreconditionError);
}

TEST_CASE("inversion sample size makes the true radius fall below the gap") {
  for (double v : {0.0, 0.01, 0.1, 0.25}) {
    for (double gap : {0.01, 0.05, 0.2, 0.5, 1.0}) {
      for (std::size_t n : {1u, 10u, 1000u}) {
        for (double delta : {0.001, 0.05, 0.3}) {
          const double T = inversion_sample_size(v, gap, n, delta);
          const double t = std::log2(T);
          CHECK(true_radius(v, T, n, t, delta) <= gap);
        }
      }
    }
  }
}

TEST_CASE("recording rules") {
  SUBCASE("semi records only the recorded part") {
    Fixture f({0, 1, 0, 0, 1}, FeedbackModel::semi, 3, false);
    std::vector<std::uint64_t> y(5, 0);
    play_and_record(ArmSet{1, 2}, ArmSet{4}, y, f.game);
    CHECK(y == std::vector<std::uint64_t>{0, 1, 0, 0, 0});
  }
  SUBCASE("bandit credits every recorded arm on a one") {
    Fixture f({1, 0, 0}, FeedbackModel::bandit, 2, false);
    std::vector<std::uint64_t> y(3, 0);
    play_and_record(ArmSet{0, 1}, ArmSet{}, y, f.game);
    CHECK(y == std::vector<std::uint64_t>{1, 1, 0});
    play_and_record(ArmSet{1}, ArmSet{2}, y, f.game);
    CHECK(y == std::vector<std::uint64_t>{1, 1, 0});
  }
  SUBCASE("marked ignores marks on extra arms") {
    Fixture f({0, 0, 1}, FeedbackModel::marked, 3, false);
    std::vector<std::uint64_t> y(3, 0);
    play_and_record(ArmSet{0, 1}, ArmSet{2}, y, f.game);
    CHECK(y == std::vector<std::uint64_t>{0, 0, 0});
    play_and_record(ArmSet{2}, ArmSet{0}, y, f.game);
    CHECK(y == std::vector<std::uint64_t>{0, 0, 1});
  }
  SUBCASE("overlapping parts are rejected") {
    Fixture f({0.5, 0.5}, FeedbackModel::semi, 2, false);
    std::vector<std::uint64_t> y(2, 0);
    CHECK_THROWS_AS(play_and_record(ArmSet{0}, ArmSet{0}, y, f.game), PreconditionError);
  }
}

TEST_CASE("uniform play query counts and single recording") {
  for (FeedbackModel model : {FeedbackModel::semi, FeedbackModel::marked, FeedbackModel::bandit}) {
    for (std::size_t u : {6u, 7u, 8u}) {
      // All arms deterministic ones; semi then records exactly once per arm.
      Fixture f(std::vector<double>(10, 1.0), model, 3, true);
      ArmSet u_prime;
      for (std::size_t i = 0; i < u; ++i) u_prime.push_back(static_cast<Arm>(i));
      std::vector<std::uint64_t> y(10, 0);
      const std::size_t queries = uniform_play(u_prime, ArmSet{}, ArmSet{}, 3, true, f.game, y);
      CHECK(queries == (u + 2) / 3);
      CHECK(f.ledger.total() == queries);
      std::uint64_t total = 0;
      for (std::size_t i = 0; i < 10; ++i) {
        CHECK(y[i] <= 1);
        if (i >= u) CHECK(y[i] == 0);
        total += y[i];
      }
      if (model != FeedbackModel::marked) CHECK(total == u);
    }
  }
}

TEST_CASE("uniform play top-off fills exact-k queries") {
  Fixture f({0.5, 0.5, 0.5, 0.5, 0.5, 0.5}, FeedbackModel::bandit, 4, true);
  std::vector<std::uint64_t> y(6, 0);
  std::vector<std::size_t> sizes;
  f.game.set_sink([&](std::uint64_t, const Observation& o) { sizes.push_back(o.query.size()); });
  uniform_play(ArmSet{0, 1, 2}, ArmSet{5}, ArmSet{3}, 3, true, f.game, y);
  REQUIRE(sizes.size() == 1);
  CHECK(sizes[0] == 4);
  CHECK(y[3] == 0);
  CHECK(y[5] == 0);
  // R' too small: A completes the top-off.
  sizes.clear();
  uniform_play(ArmSet{0, 1}, ArmSet{4, 5}, ArmSet{3}, 2, true, f.game, y);
  CHECK(sizes == std::vector<std::size_t>{4});
  CHECK_THROWS_AS(uniform_play(ArmSet{0, 1}, ArmSet{}, ArmSet{3}, 2, true, f.game, y), InfeasibleError);
}

TEST_CASE("balancing sets") {
  CHECK(balance_size(10, 4) == 0);
  CHECK(balance_size(3, 3) == 4);
  CHECK(balance_size(4, 4) == 6);
  CHECK(balance_kappa1(7, 3) == doctest::Approx(2.0 / 3.0));
  CHECK(balance_kappa2(7, 3) == doctest::Approx(2.0));
  CHECK(balance_min_arms(3) == 11);
  CHECK(balance_min_arms(2) == 7);

  Rng rng(3);
  const SamplingSets same = balance(ArmSet{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, ArmSet{10, 11, 12, 13}, 4, 14, 4, rng);
  CHECK(same.balance.empty());
  CHECK(same.u_prime.size() == 10);

  const SamplingSets s = balance(ArmSet{0, 5, 9}, ArmSet{1, 2, 3, 4, 6, 7, 8, 10}, 3, 11, 3, rng);
  CHECK(s.balance.size() == 4);
  CHECK(s.u_prime.size() == 7);
  CHECK(s.r_prime.size() == 4);
  for (Arm b : s.balance) CHECK(std::find(s.r_prime.begin(), s.r_prime.end(), b) == s.r_prime.end());

  const SamplingSets four = balance(ArmSet{0, 1, 2, 3}, ArmSet{4, 5, 6, 7, 8, 9, 10}, 4, 14, 4, rng);
  CHECK(four.u_prime.size() == 10);
  CHECK(four.u_prime.size() * 2 <= 5 * 4);

  CHECK_THROWS_AS(balance(ArmSet{0, 1, 2}, ArmSet{3}, 3, 10, 3, rng), PreconditionError);
  CHECK_THROWS_AS(balance(ArmSet{0, 1, 2}, ArmSet{3}, 3, 11, 3, rng), InfeasibleError);

  // For every undecided count with k1 = min(|U|, k), the claimed ranges hold.
  for (std::size_t k = 2; k <= 12; ++k) {
    for (std::size_t u = 1; u <= 4 * k; ++u) {
      const std::size_t k1 = std::min(u, k);
      const std::size_t up = u + balance_size(u, k1);
      CHECK(2 * up <= 5 * u);
      if (k1 >= 2) {
        CHECK(balance_kappa1(up, k1) >= 0.5);
        CHECK(balance_kappa2(up, k1) <= 2.0);
      }
    }
  }
}

TEST_CASE("elimination step rules") {
  SUBCASE("accept above the runner-up upper bound") {
    ElimState s = ElimState::initial(3, 1);
    const std::vector<Interval> iv = {{0.9, 0.05, 0}, {0.5, 0.1, 0}, {0.4, 0.1, 0}};
    elimination_step(s, iv);
    CHECK(s.accepted == ArmSet{0});
    CHECK(s.rejected == ArmSet{1, 2});
    CHECK(s.done());
    CHECK(s.t == 2);
    CHECK(s.T == 4);
  }
  SUBCASE("overlapping intervals change nothing") {
    ElimState s = ElimState::initial(4, 2);
    const std::vector<Interval> iv = {{0.5, 0.4, 0}, {0.4, 0.4, 0}, {0.3, 0.4, 0}, {0.2, 0.4, 0}};
    elimination_step(s, iv);
    CHECK(s.accepted.empty());
    CHECK(s.rejected.empty());
    CHECK(s.undecided.size() == 4);
  }
  SUBCASE("enough rejections end the run") {
    ElimState s = ElimState::initial(5, 2);
    const std::vector<Interval> iv = {{0.9, 0.2, 0}, {0.85, 0.2, 0}, {0.2, 0.1, 0}, {0.2, 0.1, 0}, {0.1, 0.1, 0}};
    elimination_step(s, iv);
    CHECK(s.rejected == ArmSet{2, 3, 4});
    CHECK(s.accepted == ArmSet{0, 1});
    CHECK(s.done());
  }
  SUBCASE("interval count must match") {
    ElimState s = ElimState::initial(3, 1);
    const std::vector<Interval> iv = {{0.9, 0.05, 0}};
    CHECK_THROWS_AS(elimination_step(s, iv), PreconditionError);
  }
}

TEST_CASE("identification basics") {
  ElimConfig config;
  Rng rng(1);
  const TrialRecord all = run_identification(make_product({0.1, 0.2}), FeedbackModel::bandit, 2, 0.1, config, rng);
  CHECK(all.returned == ArmSet{0, 1});
  CHECK(all.queries == 0);

  CHECK_THROWS_AS(run_identification(make_product({1.0, 0.2, 0.1}), FeedbackModel::bandit, 1, 0.1, config, rng),
                  IdentifiabilityError);

  const TrialRecord small =
      run_identification(make_product({0.8, 0.2, 0.1}), FeedbackModel::bandit, 1, 0.1, config, rng);
  CHECK(small.warnings.size() == 1);
  CHECK(small.returned == ArmSet{0});

  ElimConfig capped;
  capped.stage_cap = 2;
  const TrialRecord cut =
      run_identification(make_product({0.51, 0.5, 0.1}), FeedbackModel::semi, 1, 0.1, capped, rng);
  CHECK(cut.inconclusive);
  CHECK(cut.stages == 2);

  ElimConfig budget;
  budget.max_queries = 10;
  const TrialRecord spent =
      run_identification(make_product({0.51, 0.5, 0.1}), FeedbackModel::semi, 1, 0.1, budget, rng);
  CHECK(spent.inconclusive);
}

TEST_CASE("two-arm semi identification") {
  int wins = 0;
  for (std::uint64_t r = 0; r < 200; ++r) {
    Rng rng(derive_seed(77, r));
    const TrialRecord rec = run_identification(make_product({0.9, 0.1}), FeedbackModel::semi, 1, 0.1, {}, rng);
    wins += rec.returned == ArmSet{0};
  }
  CHECK(wins >= 180);
}

TEST_CASE("stage logs follow the schedule and never decide wrongly") {
  const std::vector<double> means = instance_means();
  const double upper = upper_bound_total(make_gap_profile(means, 3), FeedbackModel::semi, 0.1).value;
  const int runs = 40;
  int mistakes = 0;
  for (std::uint64_t r = 0; r < runs; ++r) {
    Rng rng(derive_seed(5, r));
    ElimConfig config;
    std::vector<StageLog> logs;
    config.stage_sink = [&](const StageLog& s) { logs.push_back(s); };
    const TrialRecord rec = run_identification(make_product(means), FeedbackModel::semi, 3, 0.1, config, rng);
    CHECK_FALSE(rec.inconclusive);
    mistakes += rec.returned != ArmSet{0, 1, 2};
    CHECK(static_cast<double>(rec.queries) <= upper);
    REQUIRE(logs.size() == rec.stages);
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < logs.size(); ++i) {
      const StageLog& s = logs[i];
      CHECK(s.t == i + 1);
      CHECK(s.T == (std::uint64_t{2} << i));
      CHECK(s.undecided + s.accepted + s.rejected == means.size());
      CHECK(s.accepted <= 3);
      const std::size_t k1 = std::min<std::size_t>(s.undecided, 3);
      CHECK(s.queries == s.T * ((s.undecided + k1 - 1) / k1));
      total += s.queries;
    }
    CHECK(total == rec.queries);
  }
  CHECK(mistakes <= 4);
}

TEST_CASE("bandit runs balance and keep queries exact-k") {
  const std::vector<double> means = {0.9, 0.8, 0.7, 0.5, 0.45, 0.4, 0.35, 0.3, 0.25, 0.2, 0.15};
  Rng rng(8);
  ElimConfig config;
  std::size_t bad_sizes = 0;
  std::size_t balanced_stages = 0;
  config.observation_sink = [&](std::uint64_t, const Observation& o) { bad_sizes += o.query.size() != 3; };
  config.stage_sink = [&](const StageLog& s) {
    CHECK(s.balance == balance_size(s.undecided, std::min<std::size_t>(s.undecided, 3)));
    balanced_stages += s.balance > 0;
  };
  const TrialRecord rec = run_identification(make_product(means), FeedbackModel::bandit, 3, 0.1, config, rng);
  CHECK(bad_sizes == 0);
  CHECK(rec.returned == ArmSet{0, 1, 2});
  CHECK(rec.warnings.empty());
  CHECK(balanced_stages > 0);
}

TEST_CASE("stage record json") {
  StageLog s;
  s.t = 2;
  s.T = 4;
  s.undecided = 3;
  s.arms = {0, 1, 2};
  s.mu_hat = {0.5, 0.25, 0.0};
  s.c_hat = {1.0, 0.9, 0.8};
  const auto j = stage_to_json(s);
  CHECK(j["t"] == 2);
  CHECK(j["T"] == 4);
  CHECK(j["arms"].size() == 3);
  s.arms.clear();
  CHECK_FALSE(stage_to_json(s).contains("arms"));
}
