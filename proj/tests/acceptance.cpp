// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. `--only N` runs a single criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include <unistd.h>

#include "bestofk/baselines.hpp"
#include "bestofk/combinatorics.hpp"
#include "bestofk/harness.hpp"
#include "bestofk/oracle.hpp"

using namespace bestofk;

namespace {

// Tolerances and sizes, fixed here.
constexpr double kExactTol = 1e-12;
constexpr double kOutsideStep = 1e-9;
constexpr std::size_t kGridPoints = 20;
constexpr std::size_t kIdentReplicates = 200;
constexpr double kIdentDelta = 0.1;
constexpr double kIdentSlackSe = 3.0;
constexpr int kMonteCarloCalls = 100000;
constexpr double kMonteCarloSe = 4.0;
constexpr std::size_t kCoverageRuns = 500;
constexpr std::size_t kCoverageStages = 12;
constexpr std::size_t kCoverageArms = 10;
constexpr double kCoverageDelta = 0.1;
constexpr double kCoverageSlackSe = 3.0;
constexpr int kKlPairs = 10000;
constexpr double kKlGolden = 0.143841;
constexpr double kKlGoldenTol = 1e-6;
constexpr int kParityDraws = 100000;
constexpr double kParitySe = 4.0;
constexpr std::size_t kScalingReplicates = 61;
constexpr double kScalingBand = 0.5;
constexpr double kCalculatorTol = 1e-9;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Detail {
 public:
  template <class T>
  Detail& operator<<(const T& v) {
    s_ << v;
    return *this;
  }
  std::string str() const { return s_.str(); }

 private:
  std::ostringstream s_;
};

// ---------------------------------------------------------------- 1

Outcome planted_exactness() {
  Outcome o;
  double worst_marginal = 0.0;
  double worst_independence = 0.0;
  double worst_gap = 0.0;
  for (std::size_t k = 2; k <= 6; ++k) {
    for (double mu : {0.1, 0.25, 0.4, 0.5}) {
      for (double p : {0.25, 0.5, 1.0}) {
        const ExactTable t = exact_planted_table(k, mu, p);
        for (double m : table_marginals(t)) worst_marginal = std::max(worst_marginal, std::abs(m - mu));
        worst_independence = std::max(worst_independence, independence_check(t, k - 1).max_deviation);
        std::vector<std::size_t> vars(k);
        for (std::size_t j = 0; j < k; ++j) vars[j] = j;
        const double kk = static_cast<double>(k);
        const double gap = 1.0 - table_all_zero(t, vars) - (1.0 - std::pow(1.0 - mu, kk));
        worst_gap = std::max(worst_gap, std::abs(gap - p * std::pow(mu, kk)));
      }
    }
  }
  o.pass = worst_marginal <= kExactTol && worst_independence <= kExactTol && worst_gap <= kExactTol;
  o.detail = (Detail() << "max marginal err " << worst_marginal << ", max (k-1)-wise dev " << worst_independence
                       << ", max gap err " << worst_gap)
                 .str();
  return o;
}

// ---------------------------------------------------------------- 2

Outcome feasibility_correspondence() {
  Outcome o;
  double worst_endpoint = 0.0;
  double worst_atom = 0.0;
  double worst_dev = 0.0;
  double worst_marginal = 0.0;
  std::size_t outside_missed = 0;
  for (std::size_t k = 2; k <= 6; ++k) {
    for (double mu : {0.1, 0.25, 0.4}) {
      const FeasibilityRange r = feasible_range(mu, k);
      worst_endpoint = std::max(worst_endpoint, std::abs(r.lo - phi(r.k_even, mu, k)));
      worst_endpoint = std::max(worst_endpoint, std::abs(r.hi - phi(r.k_odd, mu, k)));
      for (std::size_t g = 0; g < kGridPoints; ++g) {
        const double w0 = r.lo + (r.hi - r.lo) * static_cast<double>(g) / static_cast<double>(kGridPoints - 1);
        const JointTableMeasure m = joint_from_w0(mu, k, w0);
        const auto raw = joint_atoms_from_w0(mu, k, w0);
        worst_atom = std::min(worst_atom, *std::min_element(raw.begin(), raw.end()));
        const ExactTable table{k, iota_set(k), m.probs};
        worst_dev = std::max(worst_dev, independence_check(table, k - 1).max_deviation);
        for (double v : table_marginals(table)) worst_marginal = std::max(worst_marginal, std::abs(v - mu));
      }
      for (double w0 : {r.lo - kOutsideStep, r.hi + kOutsideStep}) {
        const auto atoms = joint_atoms_from_w0(mu, k, w0);
        if (!(*std::min_element(atoms.begin(), atoms.end()) < 0.0)) ++outside_missed;
      }
    }
  }
  o.pass = worst_endpoint <= kExactTol && worst_atom >= -kExactTol && worst_dev <= kExactTol &&
           worst_marginal <= kExactTol && outside_missed == 0;
  o.detail = (Detail() << "endpoint err " << worst_endpoint << ", min atom " << worst_atom << ", (k-1)-wise dev "
                       << worst_dev << ", marginal err " << worst_marginal << ", outside points without a negative atom "
                       << outside_missed)
                 .str();
  return o;
}

// ---------------------------------------------------------------- 3

Outcome identification() {
  Outcome o;
  const double floor = 0.9 - kIdentSlackSe * std::sqrt(0.09 / static_cast<double>(kIdentReplicates));
  Detail d;
  d << "threshold " << floor;
  for (FeedbackModel model : {FeedbackModel::semi, FeedbackModel::marked, FeedbackModel::bandit}) {
    std::vector<double> means = {0.8, 0.7, 0.6};
    means.insert(means.end(), model == FeedbackModel::bandit ? 8 : 7, 0.3);
    ExperimentConfig c;
    c.measure = make_product(means);
    c.measure_spec = measure_to_json(c.measure);
    c.model = model;
    c.k = 3;
    c.delta = kIdentDelta;
    c.replicates = kIdentReplicates;
    c.base_seed = 3000 + static_cast<std::uint64_t>(model);
    const ExperimentResult r = run_experiment(c);
    const double rate = *r.summary.success_rate;
    o.pass = o.pass && rate >= floor;
    d << "; " << to_string(model) << " n=" << means.size() << " success " << rate << " median queries "
      << r.summary.median_queries;
  }
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------- 4

Outcome recording_order() {
  Outcome o;
  const std::vector<double> means = {0.9, 0.75, 0.6, 0.5, 0.4, 0.3, 0.2, 0.05};
  const Measure env = make_product(means);
  PlaySetup setup;
  setup.u_prime = iota_set(means.size());
  setup.k1 = 3;
  setup.k = 3;
  setup.exact_k = true;
  Detail d;
  double worst_z = 0.0;
  for (FeedbackModel model : {FeedbackModel::semi, FeedbackModel::marked, FeedbackModel::bandit}) {
    const QueryStatistics exact = exact_query_stats(env, setup, model);
    bool ordered = true;
    for (std::size_t i = 0; i < means.size(); ++i) {
      for (std::size_t j = 0; j < means.size(); ++j) {
        if ((exact.mu_bar[i] > exact.mu_bar[j]) != (means[i] > means[j])) ordered = false;
      }
    }
    Rng rng(4000 + static_cast<std::uint64_t>(model));
    QueryLedger ledger;
    Game game(env, model, QueryRules{0, setup.k, true}, rng, ledger);
    std::vector<std::uint64_t> y(means.size(), 0);
    for (int c = 0; c < kMonteCarloCalls; ++c) {
      uniform_play(setup.u_prime, setup.accepted, setup.r_prime, setup.k1, true, game, y);
    }
    double model_z = 0.0;
    for (std::size_t i = 0; i < means.size(); ++i) {
      const double freq = static_cast<double>(y[i]) / kMonteCarloCalls;
      const double se = std::sqrt(exact.variance[i] / kMonteCarloCalls);
      model_z = std::max(model_z, std::abs(freq - exact.mu_bar[i]) / se);
    }
    worst_z = std::max(worst_z, model_z);
    o.pass = o.pass && ordered && model_z <= kMonteCarloSe;
    d << to_string(model) << (ordered ? " ordered" : " NOT ordered") << " max z " << model_z << "; ";
  }
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------- 5

std::uint64_t binomial_draw(std::uint64_t trials, double p, Rng& rng) {
  std::uint64_t ones = 0;
  for (std::uint64_t i = 0; i < trials; ++i) ones += rng.bernoulli(p);
  return ones;
}

Outcome interval_validity() {
  Outcome o;
  std::vector<double> mu_bar(kCoverageArms);
  for (std::size_t i = 0; i < kCoverageArms; ++i) mu_bar[i] = 0.05 + 0.9 * static_cast<double>(i) / (kCoverageArms - 1);
  Rng rng(5000);
  std::size_t covered = 0;
  for (std::size_t run = 0; run < kCoverageRuns; ++run) {
    bool all = true;
    for (std::size_t t = 1; t <= kCoverageStages && all; ++t) {
      const std::uint64_t T = std::uint64_t{1} << t;
      for (std::size_t i = 0; i < kCoverageArms; ++i) {
        const double mu_hat = static_cast<double>(binomial_draw(T, mu_bar[i], rng)) / static_cast<double>(T);
        const Interval iv = confidence_radius(mu_hat, T, kCoverageArms, t, kCoverageDelta);
        if (std::abs(mu_hat - mu_bar[i]) > iv.c_hat) {
          all = false;
          break;
        }
      }
    }
    covered += all;
  }
  const double rate = static_cast<double>(covered) / kCoverageRuns;
  const double floor = 1.0 - kCoverageDelta -
                       kCoverageSlackSe * std::sqrt(kCoverageDelta * (1 - kCoverageDelta) / kCoverageRuns);

  std::size_t grid = 0;
  std::size_t failures = 0;
  for (double v : {0.0, 0.001, 0.01, 0.05, 0.1, 0.25}) {
    for (double gap : {0.001, 0.01, 0.05, 0.1, 0.3, 0.6, 1.0}) {
      for (std::size_t n : {1u, 2u, 10u, 100u, 10000u}) {
        for (double delta : {1e-4, 0.01, 0.1, 0.5}) {
          const double T = inversion_sample_size(v, gap, n, delta);
          ++grid;
          if (true_radius(v, T, n, std::log2(T), delta) > gap) ++failures;
        }
      }
    }
  }
  o.pass = rate >= floor && failures == 0;
  o.detail = (Detail() << "simultaneous coverage " << rate << " (floor " << floor << "), inversion grid " << grid - failures
                       << "/" << grid)
                 .str();
  return o;
}

// ---------------------------------------------------------------- 6

Outcome kl_sandwich() {
  Outcome o;
  Rng rng(6000);
  std::size_t violations = 0;
  for (int i = 0; i < kKlPairs; ++i) {
    double x = rng.uniform();
    double y = rng.uniform();
    if (x == 0.0 || y == 0.0) {
      --i;
      continue;
    }
    const KlBounds b = kl_bounds(x, y);
    const double d = bernoulli_kl(x, y);
    // Relative slack of a few ulps for the rounding in each closed form.
    const double slack = 1e-12 * std::max(d, 1e-300);
    if (b.lower > d + slack || d > b.upper + slack) ++violations;
  }
  const double golden = bernoulli_kl(0.5, 0.25);
  o.pass = violations == 0 && std::abs(golden - kKlGolden) <= kKlGoldenTol;
  o.detail = (Detail() << violations << " violations in " << kKlPairs << " pairs, d(0.5, 0.25) = " << golden).str();
  return o;
}

// ---------------------------------------------------------------- 7

Outcome parity_estimator() {
  Outcome o;
  Detail d;
  for (double p : {0.25, 0.5, 1.0}) {
    const PlantedMeasure m = make_planted(6, 3, 0.5, p, {4, 1, 5, 0, 3, 2});
    const ArmSet star = m.planted_set();
    const std::vector<ArmSet> others = {{0, 1, 2}, {1, 2, 4}, {0, 3}};
    Rng rng(7000 + static_cast<std::uint64_t>(p * 100));
    std::uint64_t star_ones = 0;
    std::vector<std::uint64_t> other_ones(others.size(), 0);
    for (int i = 0; i < kParityDraws; ++i) {
      const RewardVector x = sample(m, rng);
      star_ones += parity_of(x, star);
      for (std::size_t j = 0; j < others.size(); ++j) other_ones[j] += parity_of(x, others[j]);
    }
    const double want = 0.5 + p / 2;
    const double star_mean = static_cast<double>(star_ones) / kParityDraws;
    const double star_se = std::sqrt(want * (1 - want) / kParityDraws);
    bool ok = std::abs(star_mean - want) <= kParitySe * star_se;
    const double half_se = std::sqrt(0.25 / kParityDraws);
    for (std::uint64_t ones : other_ones) {
      ok = ok && std::abs(static_cast<double>(ones) / kParityDraws - 0.5) <= kParitySe * half_se;
    }
    o.pass = o.pass && ok;
    d << "p=" << p << " W(S*) " << star_mean << " (want " << want << ")" << (ok ? "" : " FAILED") << "; ";
  }
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------- 8

Outcome combinatorial_scaling() {
  Outcome o;
  Detail d;
  std::vector<double> med;
  std::vector<double> count;
  for (std::size_t n : {4u, 5u, 6u}) {
    ExperimentConfig c;
    c.measure = make_planted(n, 2, 0.5, 1.0);
    c.measure_spec = measure_to_json(c.measure);
    c.algorithm = Algorithm::subset_arm;
    c.model = FeedbackModel::bandit;
    c.k = 2;
    c.delta = 0.1;
    c.replicates = kScalingReplicates;
    c.base_seed = 8000 + n;
    const ExperimentResult r = run_experiment(c);
    med.push_back(static_cast<double>(r.summary.median_queries));
    count.push_back(binomial(n, 2));
    d << "n=" << n << " median " << r.summary.median_queries << " success " << *r.summary.success_rate << "; ";
  }
  for (std::size_t i = 1; i < med.size(); ++i) {
    const double normalized = (med[i] / med[0]) / (count[i] / count[0]);
    o.pass = o.pass && std::abs(normalized - 1.0) <= kScalingBand;
    d << "ratio/C-ratio " << normalized << "; ";
  }
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------- 9

Outcome calculator_goldens() {
  Outcome o;
  Detail d;
  // Headline form at (1 - mu)^k = 1/2 with a vanishing bias.
  double worst_headline = 0.0;
  for (std::size_t n : {5u, 8u, 20u}) {
    for (std::size_t k : {2u, 3u, 4u}) {
      if (k >= n) continue;
      for (double delta : {0.01, 0.05, 0.2}) {
        const double mu = half_mass_mu(k);
        const double p = 1e-10;
        const double gap = p * std::pow(mu, static_cast<double>(k));
        const double want = binomial(n, k) / (gap * gap) * std::log(1.0 / (2.0 * delta)) / 3.0;
        for (FeedbackModel model : {FeedbackModel::bandit, FeedbackModel::marked}) {
          const double got = dependent_lower_bound(n, k, mu, p, delta, model).value;
          worst_headline = std::max(worst_headline, std::abs(got - want) / want);
        }
        const double simple = dependent_lower_bound_simplified(n, k, gap, delta, FeedbackModel::bandit).value;
        worst_headline = std::max(worst_headline, std::abs(simple - want) / want);
      }
    }
  }
  const double example = dependent_lower_bound_simplified(5, 2, 1.0 / 16, 0.05, FeedbackModel::bandit).value;
  const double example_want = 10.0 * 256.0 * std::log(10.0) / 3.0;
  const bool example_ok = std::abs(example - example_want) / example_want <= kCalculatorTol;

  std::size_t transform_fail = 0;
  std::size_t transform_points = 0;
  for (double tau : {2.0, 10.0, 100.0, 1e3, 1e5}) {
    for (std::size_t n : {2u, 5u, 10u, 50u}) {
      for (double delta : {0.01, 0.05, 0.1, 0.3, 0.5}) {
        const std::size_t kp = 1 + (transform_points % n);
        ++transform_points;
        if (calT(tau * static_cast<double>(kp), n, delta) > 2.0 * static_cast<double>(kp) * calT(tau, n, delta)) {
          ++transform_fail;
        }
      }
    }
  }

  Rng rng(9000);
  std::size_t sharing_fail = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t k = 1 + rng.below(15);
    std::vector<double> means(k - 1);
    for (double& v : means) v = rng.uniform();
    if (info_sharing(means, k, FeedbackModel::marked).value < 1.0 / static_cast<double>(k) - 1e-15) ++sharing_fail;
  }

  std::size_t h_fail = 0;
  for (std::size_t n = 1; n <= 12; ++n) {
    std::vector<double> means(n);
    for (double& v : means) v = rng.uniform();
    for (std::size_t p = 1; p <= n; ++p) {
      const auto h = h_terms(means, p);
      for (std::size_t j = 0; j < n; ++j) {
        ArmSet pool;
        for (std::size_t i = 0; i < n; ++i) {
          if (i != j) pool.push_back(static_cast<Arm>(i));
        }
        double best = 0.0;
        for_each_combination(pool, p - 1, [&](const ArmSet& s) {
          double prod = 1.0;
          for (Arm a : s) prod *= 1.0 - means[a];
          best = std::max(best, prod);
        });
        if (std::abs(h[j] - best) > 1e-15) ++h_fail;
      }
    }
  }
  o.pass = worst_headline <= kCalculatorTol && example_ok && transform_fail == 0 && sharing_fail == 0 && h_fail == 0;
  d << "headline rel err " << worst_headline << ", n=5 k=2 example " << example << ", transform grid "
    << transform_points - transform_fail << "/" << transform_points << ", marked term floor failures " << sharing_fail
    << ", h_j mismatches " << h_fail;
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------- 10

Outcome determinism() {
  Outcome o;
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / ("bestofk_accept_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  const std::vector<nlohmann::json> configs = {
      {{"measure", {{"type", "product"}, {"means", {0.8, 0.7, 0.6, 0.3, 0.3, 0.3, 0.3}}}},
       {"model", "marked"}, {"k", 3}, {"replicates", 5}, {"base_seed", 10}, {"threads", 2}},
      {{"measure", {{"type", "planted"}, {"n", 5}, {"k", 2}, {"mu", 0.5}, {"p", 1.0}, {"labels", {4, 2, 0, 1, 3}}}},
       {"algorithm", "subset_arm"}, {"k", 2}, {"replicates", 5}, {"base_seed", 11}},
      {{"measure", {{"type", "planted"}, {"n", 4}, {"k", 2}, {"mu", 0.5}, {"p", 1.0}}},
       {"algorithm", "parity"}, {"k", 2}, {"replicates", 5}, {"base_seed", 12}},
  };
  std::size_t identical = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const ExperimentConfig c = config_from_json(configs[i]);
    const auto a = dir / ("a" + std::to_string(i));
    const auto b = dir / ("b" + std::to_string(i));
    write_results(c, run_experiment(c), a.string());
    write_results(c, run_experiment(c), b.string());
    const std::string sa = slurp(a);
    identical += !sa.empty() && sa == slurp(b);
  }
  std::filesystem::remove_all(dir);
  o.pass = identical == configs.size();
  o.detail = (Detail() << identical << "/" << configs.size() << " configs reproduced byte for byte").str();
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
  }
  const std::vector<Criterion> criteria = {
      {1, "planted construction exactness", 30, planted_exactness},
      {2, "feasible range correspondence", 10, feasibility_correspondence},
      {3, "identification correctness", 300, identification},
      {4, "recording order preservation", 60, recording_order},
      {5, "interval validity", 60, interval_validity},
      {6, "KL sandwich", 1, kl_sandwich},
      {7, "parity estimator", 10, parity_estimator},
      {8, "combinatorial scaling", 300, combinatorial_scaling},
      {9, "calculator goldens", 10, calculator_goldens},
      {10, "determinism", 0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (only && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.limit_seconds <= 0 || secs <= c.limit_seconds;
    const bool pass = out.pass && in_time;
    failed += !pass;
    const std::string limit = c.limit_seconds > 0 ? (Detail() << ", limit " << c.limit_seconds << "s").str() : "";
    std::printf("%s criterion %d (%s): %s [%.2fs%s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, out.detail.c_str(),
                secs, limit.c_str(), in_time ? "" : ", OVER TIME");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
