#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "bestofk/rng.hpp"
#include "bestofk/types.hpp"

namespace bestofk {

/// One draw of the n binary arm values.
using RewardVector = std::vector<std::uint8_t>;

/// Independent Bernoulli arms.
struct ProductMeasure {
  std::vector<double> means;
};

/// Hidden k-wise dependent subset among otherwise independent Bernoulli(mu)
/// arms. Construction index c in [0, n) maps to arm labels[c]; the planted set
/// is labels[0..k). The bias parameter p is the gap scale: gap = p * mu^k.
struct PlantedMeasure {
  std::size_t n = 0;
  std::size_t k = 0;
  double mu = 0.0;
  double p = 0.0;
  std::vector<Arm> labels;

  ArmSet planted_set() const;
};

/// X_i = 1 iff a uniform element of [0, m) lies in sets[i].
struct CoverageMeasure {
  std::size_t m = 0;
  std::vector<std::vector<std::uint32_t>> sets;
  // arms_of[e] lists the arms whose set contains element e.
  std::vector<std::vector<Arm>> arms_of;
};

/// Explicit law over {0,1}^k. Bit j of an index is the value of arm j.
struct JointTableMeasure {
  std::size_t k = 0;
  std::vector<double> probs;
  std::vector<double> cdf;
  // Total mass before renormalisation, minus one. Zero for exact tables.
  double normalization_correction = 0.0;
};

using Measure = std::variant<ProductMeasure, PlantedMeasure, CoverageMeasure, JointTableMeasure>;

ProductMeasure make_product(std::vector<double> means);

/// Throws PreconditionError unless 2 <= k < n, 0 < mu <= 1/2, 0 < p <= 1.
/// An empty `labels` means the identity (planted set {0..k-1}); otherwise it
/// must be a permutation of [0, n).
PlantedMeasure make_planted(std::size_t n, std::size_t k, double mu, double p, std::vector<Arm> labels = {});

CoverageMeasure from_coverage(std::size_t m, std::vector<std::vector<std::uint32_t>> sets);

/// Requires entries >= 0 and total mass within `tolerance` of one. The table
/// is rescaled to sum to one and the pre-scaling error is recorded.
JointTableMeasure make_joint_table(std::vector<double> probs, double tolerance = 1e-12);

double planted_gap(double mu, double p, std::size_t k);

std::size_t arm_count(const Measure& measure);
std::string type_name(const Measure& measure);

void sample_into(const Measure& measure, Rng& rng, std::span<std::uint8_t> out);
RewardVector sample(const Measure& measure, Rng& rng);

/// Throws PreconditionError if `s` is empty, has duplicates, or is out of range.
void check_subset(const ArmSet& s, std::size_t n);

/// Exact E[max_{i in s} X_i].
double expected_max(const Measure& measure, const ArmSet& s);

/// Exact per-arm marginal means.
std::vector<double> marginal_means(const Measure& measure);

/// The unique reward-maximising k-subset when one exists. Product measures use
/// the sorted means; planted measures return the planted set; the others are
/// searched exhaustively (SizeCapError beyond `cap` subsets). Ties within
/// 1e-12 give nullopt.
std::optional<ArmSet> optimal_subset(const Measure& measure, std::size_t k, std::size_t cap = 100000);

/// Product means if the measure is a product measure, else nullopt.
std::optional<std::vector<double>> product_means(const Measure& measure);

nlohmann::json measure_to_json(const Measure& measure);

/// Joint tables are accepted up to 1e-9 normalisation error on load.
Measure measure_from_json(const nlohmann::json& doc);

}  // namespace bestofk
