#include "bestofk/measures.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "bestofk/combinatorics.hpp"

namespace bestofk {

namespace {

constexpr double kTieTolerance = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_probability(double value, const char* what) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw PreconditionError(std::string(what) + " must lie in [0, 1], got " + std::to_string(value));
  }
}

void check_planted_params(std::size_t n, std::size_t k, double mu, double p) {
  if (k < 2 || k >= n) {
    throw PreconditionError("planted measure needs 2 <= k < n (k=" + std::to_string(k) + ", n=" + std::to_string(n) +
                            ")");
  }
  if (!(mu > 0.0 && mu <= 0.5)) {
    throw PreconditionError("planted measure needs 0 < mu <= 1/2, got " + std::to_string(mu));
  }
  if (!(p > 0.0 && p <= 1.0)) {
    throw PreconditionError("planted measure needs 0 < p <= 1, got " + std::to_string(p));
  }
}

void sample_planted(const PlantedMeasure& m, Rng& rng, std::span<std::uint8_t> out) {
  // Latent draw order is fixed: Y, Z_2..Z_k, Z_1, U_1..U_n, Z_{k+1}..Z_n.
  const bool y = rng.bernoulli(m.p);
  std::uint8_t parity = 0;
  std::uint8_t z_rest[64];
  std::vector<std::uint8_t> z_heap;
  std::uint8_t* z = z_rest;
  if (m.n > 64) {
    z_heap.resize(m.n);
    z = z_heap.data();
  }
  for (std::size_t c = 1; c < m.k; ++c) {
    z[c] = rng.bernoulli(0.5) ? 1 : 0;
    parity ^= z[c];
  }
  const std::uint8_t z_first = rng.bernoulli(0.5) ? 1 : 0;
  z[0] = y ? static_cast<std::uint8_t>(1 ^ parity) : z_first;
  const double u_prob = 2.0 * m.mu;
  for (std::size_t c = 0; c < m.n; ++c) {
    out[m.labels[c]] = rng.bernoulli(u_prob) ? 1 : 0;
  }
  for (std::size_t c = m.k; c < m.n; ++c) {
    z[c] = rng.bernoulli(0.5) ? 1 : 0;
  }
  for (std::size_t c = 0; c < m.n; ++c) {
    out[m.labels[c]] = static_cast<std::uint8_t>(out[m.labels[c]] & z[c]);
  }
}

}  // namespace

ArmSet PlantedMeasure::planted_set() const {
  ArmSet s(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(s.begin(), s.end());
  return s;
}

ProductMeasure make_product(std::vector<double> means) {
  if (means.empty()) throw PreconditionError("product measure needs at least one arm");
  for (double mu : means) check_probability(mu, "arm mean");
  return ProductMeasure{std::move(means)};
}

PlantedMeasure make_planted(std::size_t n, std::size_t k, double mu, double p, std::vector<Arm> labels) {
  check_planted_params(n, k, mu, p);
  if (labels.empty()) {
    labels = iota_set(n);
  } else {
    if (labels.size() != n) throw PreconditionError("planted labels must have length n");
    std::vector<Arm> sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i) {
      if (sorted[i] != i) throw PreconditionError("planted labels must be a permutation of [0, n)");
    }
  }
  return PlantedMeasure{n, k, mu, p, std::move(labels)};
}

CoverageMeasure from_coverage(std::size_t m, std::vector<std::vector<std::uint32_t>> sets) {
  if (m == 0) throw PreconditionError("coverage universe must be nonempty");
  if (sets.empty()) throw PreconditionError("coverage measure needs at least one set");
  std::vector<std::vector<Arm>> arms_of(m);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    auto& v = sets[i];
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    for (auto e : v) {
      if (e >= m) {
        throw PreconditionError("coverage element " + std::to_string(e) + " outside universe of size " +
                                std::to_string(m));
      }
      arms_of[e].push_back(static_cast<Arm>(i));
    }
  }
  return CoverageMeasure{m, std::move(sets), std::move(arms_of)};
}

JointTableMeasure make_joint_table(std::vector<double> probs, double tolerance) {
  if (probs.size() < 2 || (probs.size() & (probs.size() - 1)) != 0) {
    throw PreconditionError("joint table length must be 2^k with k >= 1");
  }
  const auto k = static_cast<std::size_t>(std::countr_zero(probs.size()));
  if (k > 24) throw SizeCapError("joint table dimension above 24");
  double total = 0.0;
  for (double w : probs) {
    if (!(w >= 0.0)) throw PreconditionError("joint table entries must be nonnegative");
    total += w;
  }
  const double error = total - 1.0;
  if (std::abs(error) > tolerance) {
    throw PreconditionError("joint table sums to " + std::to_string(total));
  }
  if (error != 0.0) {
    for (double& w : probs) w /= total;
  }
  std::vector<double> cdf(probs.size());
  std::partial_sum(probs.begin(), probs.end(), cdf.begin());
  cdf.back() = 1.0;
  return JointTableMeasure{k, std::move(probs), std::move(cdf), error};
}

double planted_gap(double mu, double p, std::size_t k) {
  if (k < 2) throw PreconditionError("planted gap needs k >= 2");
  if (!(mu > 0.0 && mu <= 0.5)) throw PreconditionError("planted gap needs 0 < mu <= 1/2");
  if (!(p > 0.0 && p <= 1.0)) throw PreconditionError("planted gap needs 0 < p <= 1");
  return p * std::pow(mu, static_cast<double>(k));
}

std::size_t arm_count(const Measure& measure) {
  return std::visit(overloaded{
                        [](const ProductMeasure& m) { return m.means.size(); },
                        [](const PlantedMeasure& m) { return m.n; },
                        [](const CoverageMeasure& m) { return m.sets.size(); },
                        [](const JointTableMeasure& m) { return m.k; },
                    },
                    measure);
}

std::string type_name(const Measure& measure) {
  static const char* names[] = {"product", "planted", "coverage", "joint_table"};
  return names[measure.index()];
}

void sample_into(const Measure& measure, Rng& rng, std::span<std::uint8_t> out) {
  std::visit(overloaded{
                 [&](const ProductMeasure& m) {
                   for (std::size_t i = 0; i < m.means.size(); ++i) out[i] = rng.bernoulli(m.means[i]) ? 1 : 0;
                 },
                 [&](const PlantedMeasure& m) { sample_planted(m, rng, out); },
                 [&](const CoverageMeasure& m) {
                   std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(m.sets.size()), 0);
                   for (Arm a : m.arms_of[rng.below(m.m)]) out[a] = 1;
                 },
                 [&](const JointTableMeasure& m) {
                   const double u = rng.uniform();
                   auto it = std::upper_bound(m.cdf.begin(), m.cdf.end(), u);
                   std::size_t atom = std::min<std::size_t>(static_cast<std::size_t>(it - m.cdf.begin()),
                                                            m.cdf.size() - 1);
                   for (std::size_t j = 0; j < m.k; ++j) out[j] = static_cast<std::uint8_t>((atom >> j) & 1U);
                 },
             },
             measure);
}

RewardVector sample(const Measure& measure, Rng& rng) {
  RewardVector x(arm_count(measure));
  sample_into(measure, rng, x);
  return x;
}

void check_subset(const ArmSet& s, std::size_t n) {
  if (s.empty()) throw PreconditionError("subset must be nonempty");
  std::vector<bool> seen(n, false);
  for (Arm a : s) {
    if (a >= n) throw PreconditionError("arm " + std::to_string(a) + " out of range for n=" + std::to_string(n));
    if (seen[a]) throw PreconditionError("arm " + std::to_string(a) + " repeated in subset");
    seen[a] = true;
  }
}

double expected_max(const Measure& measure, const ArmSet& s) {
  check_subset(s, arm_count(measure));
  return std::visit(
      overloaded{
          [&](const ProductMeasure& m) {
            double none = 1.0;
            for (Arm a : s) none *= 1.0 - m.means[a];
            return 1.0 - none;
          },
          [&](const PlantedMeasure& m) {
            const ArmSet star = m.planted_set();
            ArmSet sorted = s;
            std::sort(sorted.begin(), sorted.end());
            const bool covers = std::includes(sorted.begin(), sorted.end(), star.begin(), star.end());
            const double q = 1.0 - m.mu;
            const double kk = static_cast<double>(m.k);
            if (!covers) return 1.0 - std::pow(q, static_cast<double>(s.size()));
            const double rest = std::pow(q, static_cast<double>(s.size() - m.k));
            return 1.0 - rest * (std::pow(q, kk) - m.p * std::pow(m.mu, kk));
          },
          [&](const CoverageMeasure& m) {
            std::vector<bool> hit(m.m, false);
            std::size_t covered = 0;
            for (Arm a : s) {
              for (auto e : m.sets[a]) {
                if (!hit[e]) {
                  hit[e] = true;
                  ++covered;
                }
              }
            }
            return static_cast<double>(covered) / static_cast<double>(m.m);
          },
          [&](const JointTableMeasure& m) {
            std::size_t mask = 0;
            for (Arm a : s) mask |= std::size_t{1} << a;
            // Sum the all-zero-on-s atoms; fewer terms and less cancellation.
            double none = 0.0;
            for (std::size_t t = 0; t < m.probs.size(); ++t) {
              if ((t & mask) == 0) none += m.probs[t];
            }
            return 1.0 - none;
          },
      },
      measure);
}

std::vector<double> marginal_means(const Measure& measure) {
  return std::visit(overloaded{
                        [](const ProductMeasure& m) { return m.means; },
                        [](const PlantedMeasure& m) { return std::vector<double>(m.n, m.mu); },
                        [](const CoverageMeasure& m) {
                          std::vector<double> out;
                          for (const auto& v : m.sets) {
                            out.push_back(static_cast<double>(v.size()) / static_cast<double>(m.m));
                          }
                          return out;
                        },
                        [](const JointTableMeasure& m) {
                          std::vector<double> out(m.k, 0.0);
                          for (std::size_t t = 0; t < m.probs.size(); ++t) {
                            for (std::size_t j = 0; j < m.k; ++j) {
                              if ((t >> j) & 1U) out[j] += m.probs[t];
                            }
                          }
                          return out;
                        },
                    },
                    measure);
}

std::optional<ArmSet> optimal_subset(const Measure& measure, std::size_t k, std::size_t cap) {
  const std::size_t n = arm_count(measure);
  if (k < 1 || k > n) throw PreconditionError("subset size must satisfy 1 <= k <= n");
  if (k == n) return iota_set(n);
  if (const auto* product = std::get_if<ProductMeasure>(&measure)) {
    ArmSet order = iota_set(n);
    const auto& mu = product->means;
    std::stable_sort(order.begin(), order.end(), [&](Arm a, Arm b) { return mu[a] > mu[b]; });
    if (!(mu[order[k - 1]] > mu[order[k]] + kTieTolerance)) return std::nullopt;
    ArmSet top(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(top.begin(), top.end());
    return top;
  }
  if (const auto* planted = std::get_if<PlantedMeasure>(&measure)) {
    if (k != planted->k) {
      // Different sizes: every k-subset has the independent reward when k < planted k.
      if (k < planted->k) return std::nullopt;
    } else {
      return planted->planted_set();
    }
  }
  if (binomial(n, k) > static_cast<double>(cap)) throw SizeCapError("too many subsets to search exhaustively");
  double best = -1.0;
  double second = -1.0;
  ArmSet best_set;
  for_each_combination(iota_set(n), k, [&](const ArmSet& s) {
    const double v = expected_max(measure, s);
    if (v > best) {
      second = best;
      best = v;
      best_set = s;
    } else if (v > second) {
      second = v;
    }
  });
  if (best - second <= kTieTolerance) return std::nullopt;
  return best_set;
}

std::optional<std::vector<double>> product_means(const Measure& measure) {
  if (const auto* product = std::get_if<ProductMeasure>(&measure)) return product->means;
  return std::nullopt;
}

nlohmann::json measure_to_json(const Measure& measure) {
  nlohmann::json doc;
  doc["type"] = type_name(measure);
  doc["n"] = arm_count(measure);
  std::visit(overloaded{
                 [&](const ProductMeasure& m) { doc["means"] = m.means; },
                 [&](const PlantedMeasure& m) {
                   doc["k"] = m.k;
                   doc["mu"] = m.mu;
                   doc["p"] = m.p;
                   doc["labels"] = m.labels;
                 },
                 [&](const CoverageMeasure& m) {
                   doc["m"] = m.m;
                   doc["sets"] = m.sets;
                 },
                 [&](const JointTableMeasure& m) {
                   doc["k"] = m.k;
                   doc["probs"] = m.probs;
                 },
             },
             measure);
  return doc;
}

Measure measure_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("type")) throw PreconditionError("measure description needs a \"type\" key");
  const std::string type = doc.at("type").get<std::string>();
  Measure out;
  try {
    if (type == "product") {
      out = make_product(doc.at("means").get<std::vector<double>>());
    } else if (type == "planted") {
      std::vector<Arm> labels;
      if (doc.contains("labels")) labels = doc.at("labels").get<std::vector<Arm>>();
      out = make_planted(doc.at("n").get<std::size_t>(), doc.at("k").get<std::size_t>(), doc.at("mu").get<double>(),
                         doc.at("p").get<double>(), std::move(labels));
    } else if (type == "coverage") {
      out = from_coverage(doc.at("m").get<std::size_t>(),
                          doc.at("sets").get<std::vector<std::vector<std::uint32_t>>>());
    } else if (type == "joint_table") {
      out = make_joint_table(doc.at("probs").get<std::vector<double>>(), 1e-9);
    } else {
      throw PreconditionError("unknown measure type \"" + type + "\"");
    }
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(std::string("malformed ") + type + " measure: " + e.what());
  }
  if (doc.contains("n") && doc.at("n").get<std::size_t>() != arm_count(out)) {
    throw PreconditionError("measure \"n\" does not match its contents");
  }
  return out;
}

}  // namespace bestofk
