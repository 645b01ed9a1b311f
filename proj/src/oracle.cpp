#include "bestofk/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "bestofk/combinatorics.hpp"

namespace bestofk {

namespace {

constexpr double kMixtureCap = 2e6;

// Count distribution of ones among independent arms, and its mixture over
// uniformly drawn subsets.
std::vector<double> count_pmf(std::span<const double> means, std::span<const Arm> arms) {
  std::vector<double> pmf{1.0};
  for (Arm a : arms) {
    const double mu = means[a];
    pmf.push_back(0.0);
    for (std::size_t c = pmf.size() - 1; c > 0; --c) pmf[c] = pmf[c] * (1.0 - mu) + pmf[c - 1] * mu;
    pmf[0] *= 1.0 - mu;
  }
  return pmf;
}

void add_scaled(std::vector<double>& into, const std::vector<double>& pmf, double weight) {
  if (into.size() < pmf.size()) into.resize(pmf.size(), 0.0);
  for (std::size_t c = 0; c < pmf.size(); ++c) into[c] += weight * pmf[c];
}

std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

// The possible top-off sets with their probabilities.
std::vector<std::pair<ArmSet, double>> top_off_sets(const PlaySetup& s) {
  std::vector<std::pair<ArmSet, double>> out;
  if (!(s.exact_k && s.k1 < s.k)) {
    out.emplace_back(ArmSet{}, 1.0);
    return out;
  }
  const std::size_t k2 = s.k - s.k1;
  if (s.r_prime.size() + s.accepted.size() < k2) throw InfeasibleError("top-off set cannot be filled");
  const ArmSet& pool = s.r_prime.size() >= k2 ? s.r_prime : s.accepted;
  const std::size_t draw = s.r_prime.size() >= k2 ? k2 : k2 - s.r_prime.size();
  const double count = binomial(pool.size(), draw);
  if (count > kMixtureCap) throw SizeCapError("too many top-off sets to enumerate");
  for_each_combination(pool, draw, [&](const ArmSet& c) {
    ArmSet set = c;
    if (s.r_prime.size() < k2) set.insert(set.end(), s.r_prime.begin(), s.r_prime.end());
    out.emplace_back(std::move(set), 1.0 / count);
  });
  return out;
}

ArmSet without(const ArmSet& set, Arm drop) {
  ArmSet out;
  for (Arm a : set) {
    if (a != drop) out.push_back(a);
  }
  return out;
}

void check_setup(const PlaySetup& s, std::size_t n) {
  if (s.u_prime.empty()) throw PreconditionError("query statistics need a nonempty U'");
  if (s.u_prime.size() > kOracleVariableCap) throw SizeCapError("U' above the enumeration cap of 14 arms");
  if (s.k1 < 1 || s.k1 > s.u_prime.size()) throw PreconditionError("need 1 <= k1 <= |U'|");
  for (const ArmSet* set : {&s.u_prime, &s.accepted, &s.r_prime}) {
    for (Arm a : *set) {
      if (a >= n) throw PreconditionError("arm out of range in query setup");
    }
  }
}

QueryStatistics product_stats(const std::vector<double>& means, const PlaySetup& s, FeedbackModel model) {
  std::vector<double> plus;
  for (const auto& [set, w] : top_off_sets(s)) add_scaled(plus, count_pmf(means, set), w);
  QueryStatistics out;
  out.arms = s.u_prime;
  for (Arm i : s.u_prime) {
    const ArmSet others = without(s.u_prime, i);
    const double count = binomial(others.size(), s.k1 - 1);
    std::vector<double> mates;
    for_each_combination(others, s.k1 - 1, [&](const ArmSet& c) { add_scaled(mates, count_pmf(means, c), 1.0 / count); });
    const std::vector<double> rest = convolve(mates, plus);
    const double mu = means[i];
    double bar = 0.0;
    switch (model) {
      case FeedbackModel::semi:
        bar = mu;
        break;
      case FeedbackModel::marked:
        for (std::size_t c = 0; c < rest.size(); ++c) bar += mu * rest[c] / static_cast<double>(c + 1);
        break;
      case FeedbackModel::bandit:
        bar = 1.0 - (1.0 - mu) * rest[0];
        break;
    }
    out.mu_bar.push_back(bar);
    out.variance.push_back(bar * (1.0 - bar));
  }
  return out;
}

// probs indexed by arm bits.
QueryStatistics table_stats(const std::vector<double>& probs, const PlaySetup& s, FeedbackModel model) {
  const auto plus = top_off_sets(s);
  QueryStatistics out;
  out.arms = s.u_prime;
  for (Arm i : s.u_prime) {
    const ArmSet others = without(s.u_prime, i);
    const double count = binomial(others.size(), s.k1 - 1);
    const std::size_t bit_i = std::size_t{1} << i;
    double bar = 0.0;
    for_each_combination(others, s.k1 - 1, [&](const ArmSet& c) {
      for (const auto& [set, w] : plus) {
        std::size_t mask = bit_i;
        for (Arm a : c) mask |= std::size_t{1} << a;
        for (Arm a : set) mask |= std::size_t{1} << a;
        double value = 0.0;
        for (std::size_t t = 0; t < probs.size(); ++t) {
          if (probs[t] == 0.0) continue;
          switch (model) {
            case FeedbackModel::semi:
              if (t & bit_i) value += probs[t];
              break;
            case FeedbackModel::marked:
              if (t & bit_i) value += probs[t] / static_cast<double>(std::popcount(t & mask));
              break;
            case FeedbackModel::bandit:
              if (t & mask) value += probs[t];
              break;
          }
        }
        bar += value * w / count;
      }
    });
    out.mu_bar.push_back(bar);
    out.variance.push_back(bar * (1.0 - bar));
  }
  return out;
}

}  // namespace

ExactTable exact_planted_table(std::size_t k, double mu, double p, std::size_t extras) {
  if (k < 2) throw PreconditionError("planted table needs k >= 2");
  if (!(mu > 0.0 && mu <= 0.5)) throw PreconditionError("planted table needs 0 < mu <= 1/2");
  if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("planted table needs 0 <= p <= 1");
  if (k + extras > kOracleVariableCap) throw SizeCapError("planted table above the 14-variable cap");

  const std::size_t size = std::size_t{1} << k;
  const double u = 2.0 * mu;
  const double z_weight = std::ldexp(1.0, -static_cast<int>(k));
  std::vector<double> planted(size, 0.0);
  for (int y = 0; y < 2; ++y) {
    const double y_weight = y ? p : 1.0 - p;
    if (y_weight == 0.0) continue;
    // Z_1..Z_k are all drawn; with Y = 1 the first is overwritten by the parity completion.
    for (std::size_t z = 0; z < size; ++z) {
      std::size_t eff = z;
      if (y) {
        const auto parity = static_cast<std::size_t>(std::popcount(z >> 1) & 1);
        eff = (z & ~std::size_t{1}) | (1 ^ parity);
      }
      // X = Z * U, so only U on the support of Z matters; U elsewhere sums out.
      const int support = std::popcount(eff);
      for (std::size_t sub = eff;; sub = (sub - 1) & eff) {
        const int ones = std::popcount(sub);
        planted[sub] += y_weight * z_weight * std::pow(u, ones) * std::pow(1.0 - u, support - ones);
        if (sub == 0) break;
      }
    }
  }

  ExactTable table;
  table.k_total = k + extras;
  table.arms = iota_set(table.k_total);
  table.probs.assign(std::size_t{1} << table.k_total, 0.0);
  for (std::size_t t = 0; t < table.probs.size(); ++t) {
    double w = planted[t & (size - 1)];
    for (std::size_t e = 0; e < extras; ++e) w *= ((t >> (k + e)) & 1U) ? mu : 1.0 - mu;
    table.probs[t] = w;
  }
  return table;
}

ExactTable exact_planted_table(const PlantedMeasure& measure, std::size_t extras) {
  if (measure.k + extras > measure.n) throw PreconditionError("more extra arms requested than the measure has");
  ExactTable table = exact_planted_table(measure.k, measure.mu, measure.p, extras);
  for (std::size_t j = 0; j < table.k_total; ++j) table.arms[j] = measure.labels[j];
  return table;
}

std::vector<double> table_marginals(const ExactTable& table) {
  std::vector<double> out(table.k_total, 0.0);
  for (std::size_t t = 0; t < table.probs.size(); ++t) {
    for (std::size_t j = 0; j < table.k_total; ++j) {
      if ((t >> j) & 1U) out[j] += table.probs[t];
    }
  }
  return out;
}

double table_all_zero(const ExactTable& table, std::span<const std::size_t> vars) {
  std::size_t mask = 0;
  for (auto v : vars) mask |= std::size_t{1} << v;
  double value = 0.0;
  for (std::size_t t = 0; t < table.probs.size(); ++t) {
    if ((t & mask) == 0) value += table.probs[t];
  }
  return value;
}

double factorization_deviation(const ExactTable& table, std::span<const std::size_t> vars) {
  const std::size_t m = vars.size();
  std::vector<double> joint(std::size_t{1} << m, 0.0);
  std::vector<double> marginal(m, 0.0);
  for (std::size_t t = 0; t < table.probs.size(); ++t) {
    std::size_t local = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if ((t >> vars[j]) & 1U) {
        local |= std::size_t{1} << j;
        marginal[j] += table.probs[t];
      }
    }
    joint[local] += table.probs[t];
  }
  double worst = 0.0;
  for (std::size_t s = 0; s < joint.size(); ++s) {
    double product = 1.0;
    for (std::size_t j = 0; j < m; ++j) product *= ((s >> j) & 1U) ? marginal[j] : 1.0 - marginal[j];
    worst = std::max(worst, std::abs(joint[s] - product));
  }
  return worst;
}

IndependenceResult independence_check(const ExactTable& table, std::size_t order, double tolerance) {
  IndependenceResult out;
  if (order > table.k_total) throw PreconditionError("independence order exceeds the number of variables");
  if (order == 0) return out;
  ArmSet positions = iota_set(table.k_total);
  std::vector<std::size_t> vars(order);
  for_each_combination(positions, order, [&](const ArmSet& c) {
    std::copy(c.begin(), c.end(), vars.begin());
    out.max_deviation = std::max(out.max_deviation, factorization_deviation(table, vars));
  });
  out.independent = out.max_deviation <= tolerance;
  return out;
}

QueryStatistics exact_query_stats(const Measure& measure, const PlaySetup& setup, FeedbackModel model) {
  const std::size_t n = arm_count(measure);
  check_setup(setup, n);
  if (const auto* product = std::get_if<ProductMeasure>(&measure)) return product_stats(product->means, setup, model);
  if (n > kOracleVariableCap) throw SizeCapError("exact statistics for dependent measures need n <= 14");
  std::vector<double> probs(std::size_t{1} << n, 0.0);
  if (const auto* table = std::get_if<JointTableMeasure>(&measure)) {
    probs = table->probs;
  } else if (const auto* planted = std::get_if<PlantedMeasure>(&measure)) {
    const ExactTable t = exact_planted_table(*planted, n - planted->k);
    for (std::size_t s = 0; s < t.probs.size(); ++s) {
      std::size_t mapped = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if ((s >> j) & 1U) mapped |= std::size_t{1} << t.arms[j];
      }
      probs[mapped] += t.probs[s];
    }
  } else {
    // Coverage: enumerate the universe.
    const auto& cov = std::get<CoverageMeasure>(measure);
    for (std::size_t e = 0; e < cov.m; ++e) {
      std::size_t mask = 0;
      for (Arm a : cov.arms_of[e]) mask |= std::size_t{1} << a;
      probs[mask] += 1.0 / static_cast<double>(cov.m);
    }
  }
  return table_stats(probs, setup, model);
}

double all_zero_probability(const Measure& measure, const ArmSet& s) { return 1.0 - expected_max(measure, s); }

}  // namespace bestofk
