#include <algorithm>
#include <cmath>

#include "bestofk/combinatorics.hpp"
#include "bestofk/harness.hpp"
#include "bestofk/oracle.hpp"

namespace bestofk {

namespace {

constexpr double kExact = 1e-12;

struct Violations {
  nlohmann::json list = nlohmann::json::array();

  void check(bool ok, const std::string& name, nlohmann::json params, double deviation) {
    if (ok) return;
    params["check"] = name;
    params["deviation"] = deviation;
    list.push_back(std::move(params));
  }
};

// E[1/(1+sum)] by walking all 2^m outcomes.
double enumerate_marked_term(const std::vector<double>& means) {
  const std::size_t m = means.size();
  double value = 0.0;
  for (std::size_t t = 0; t < (std::size_t{1} << m); ++t) {
    double w = 1.0;
    int ones = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const bool on = (t >> j) & 1U;
      w *= on ? means[j] : 1.0 - means[j];
      ones += on;
    }
    value += w / (1.0 + ones);
  }
  return value;
}

void verify_planted(std::size_t k, double mu, double p, Violations& v) {
  const nlohmann::json params = {{"k", k}, {"mu", mu}, {"p", p}};
  const std::size_t extras = std::min<std::size_t>(1, kOracleVariableCap - k);
  const ExactTable table = exact_planted_table(k, mu, p, extras);
  const auto marginals = table_marginals(table);
  double worst = 0.0;
  for (double m : marginals) worst = std::max(worst, std::abs(m - mu));
  v.check(worst <= kExact, "planted_marginals", params, worst);

  const IndependenceResult ind = independence_check(table, k - 1);
  v.check(ind.independent, "planted_lower_order_independence", params, ind.max_deviation);

  // Every k-subset other than the planted one factorizes.
  double other = 0.0;
  for_each_combination(iota_set(table.k_total), k, [&](const ArmSet& s) {
    if (s.back() < k) return;
    std::vector<std::size_t> vars(s.begin(), s.end());
    other = std::max(other, factorization_deviation(table, vars));
  });
  v.check(other <= kExact, "planted_other_subsets_independent", params, other);

  std::vector<std::size_t> star(k);
  for (std::size_t j = 0; j < k; ++j) star[j] = j;
  const double kk = static_cast<double>(k);
  const double gap = 1.0 - table_all_zero(table, star) - (1.0 - std::pow(1.0 - mu, kk));
  const double want = p * std::pow(mu, kk);
  v.check(std::abs(gap - want) <= kExact, "planted_gap", params, std::abs(gap - want));
}

void verify_feasibility(std::size_t k, double mu, Violations& v) {
  const nlohmann::json params = {{"k", k}, {"mu", mu}};
  const FeasibilityRange range = feasible_range(mu, k);
  const double lo_dev = std::abs(range.lo - phi(range.k_even, mu, k));
  const double hi_dev = std::abs(range.hi - phi(range.k_odd, mu, k));
  v.check(lo_dev <= kExact && hi_dev <= kExact, "feasibility_endpoints", params, std::max(lo_dev, hi_dev));
  for (int g = 0; g < 20; ++g) {
    const double w0 = range.lo + (range.hi - range.lo) * g / 19.0;
    auto atoms = joint_atoms_from_w0(mu, k, w0);
    const double min_atom = *std::min_element(atoms.begin(), atoms.end());
    v.check(min_atom >= -1e-13, "feasible_point_nonnegative", {{"k", k}, {"mu", mu}, {"w0", w0}}, min_atom);
    for (double& a : atoms) a = std::max(a, 0.0);
    ExactTable table{k, iota_set(k), atoms};
    const auto ind = independence_check(table, k - 1);
    v.check(ind.independent, "feasible_point_lower_order_independence", {{"k", k}, {"mu", mu}, {"w0", w0}},
            ind.max_deviation);
    double worst = 0.0;
    for (double m : table_marginals(table)) worst = std::max(worst, std::abs(m - mu));
    v.check(worst <= kExact, "feasible_point_marginals", {{"k", k}, {"mu", mu}, {"w0", w0}}, worst);
  }
  for (double w0 : {range.lo - 1e-9, range.hi + 1e-9}) {
    const auto atoms = joint_atoms_from_w0(mu, k, w0);
    const double min_atom = *std::min_element(atoms.begin(), atoms.end());
    v.check(min_atom < 0.0, "outside_point_negative_atom", {{"k", k}, {"mu", mu}, {"w0", w0}}, min_atom);
  }
}

void verify_query_stats(Violations& v) {
  const std::vector<double> means = {0.85, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1};
  const Measure env = make_product(means);
  PlaySetup setup;
  setup.u_prime = iota_set(8);
  setup.k1 = 3;
  setup.k = 3;
  for (FeedbackModel model : {FeedbackModel::semi, FeedbackModel::marked, FeedbackModel::bandit}) {
    const QueryStatistics stats = exact_query_stats(env, setup, model);
    const nlohmann::json params = {{"model", to_string(model)}};
    if (model == FeedbackModel::semi) {
      double worst = 0.0;
      for (std::size_t i = 0; i < means.size(); ++i) worst = std::max(worst, std::abs(stats.mu_bar[i] - means[i]));
      v.check(worst <= kExact, "semi_recording_equals_mean", params, worst);
    }
    double slack = 1.0;
    for (std::size_t i = 0; i + 1 < means.size(); ++i) slack = std::min(slack, stats.mu_bar[i] - stats.mu_bar[i + 1]);
    v.check(slack > 0.0, "recording_order_preserved", params, slack);
  }
}

void verify_information_terms(Violations& v) {
  const std::vector<std::vector<double>> lists = {
      {}, {0.5}, {0.1, 0.9}, {0.3, 0.3, 0.3}, {0.05, 0.2, 0.5, 0.7, 0.95}, {0.0, 1.0, 0.25, 0.6}};
  for (const auto& means : lists) {
    const double dp = marked_information_sharing(means);
    const double brute = enumerate_marked_term(means);
    v.check(std::abs(dp - brute) <= kExact, "marked_term_matches_enumeration", {{"means", means}},
            std::abs(dp - brute));
    const double floor = 1.0 / static_cast<double>(means.size() + 1);
    v.check(dp >= floor - kExact, "marked_term_at_least_one_over_k", {{"means", means}}, dp - floor);
  }
}

}  // namespace

nlohmann::json verify_suite(std::size_t max_k) {
  if (max_k < 2) throw PreconditionError("verify needs max k >= 2");
  if (max_k > kOracleVariableCap - 1) throw SizeCapError("verify max k above 13");
  Violations v;
  for (std::size_t k = 2; k <= max_k; ++k) {
    for (double mu : {0.1, 0.25, 0.4, 0.5}) {
      for (double p : {0.25, 0.5, 1.0}) verify_planted(k, mu, p, v);
      if (mu < 0.5) verify_feasibility(k, mu, v);
    }
  }
  verify_query_stats(v);
  verify_information_terms(v);
  return v.list;
}

}  // namespace bestofk
