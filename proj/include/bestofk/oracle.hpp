#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bestofk/game.hpp"
#include "bestofk/measures.hpp"

namespace bestofk {

/// Exact joint law of a few arms. Bit j of an index is the value of arms[j].
struct ExactTable {
  std::size_t k_total = 0;
  ArmSet arms;
  std::vector<double> probs;
};

inline constexpr std::size_t kOracleVariableCap = 14;

/// Joint law of the planted set (construction order) plus the next `extras`
/// arms, by enumerating the latent variables. `p` may be 0 here, which gives
/// the independent product. Arms are labelled 0..k+extras-1.
ExactTable exact_planted_table(std::size_t k, double mu, double p, std::size_t extras = 0);

/// Same for a constructed measure: arms carry the measure's labels.
ExactTable exact_planted_table(const PlantedMeasure& measure, std::size_t extras = 0);

/// Per-variable marginal means of a table.
std::vector<double> table_marginals(const ExactTable& table);

/// Pr(every variable in `vars` is zero), variables given by table position.
double table_all_zero(const ExactTable& table, std::span<const std::size_t> vars);

/// Largest |Pr(atom) - prod of marginals| of the joint law of `vars`.
double factorization_deviation(const ExactTable& table, std::span<const std::size_t> vars);

struct IndependenceResult {
  bool independent = true;
  double max_deviation = 0.0;
};

/// Whether every size-`order` sub-collection of the table's variables
/// factorizes, within `tolerance`.
IndependenceResult independence_check(const ExactTable& table, std::size_t order, double tolerance = 1e-12);

/// Exact recording statistics for one uniform_play call.
struct QueryStatistics {
  ArmSet arms;                     // the arms of U'
  std::vector<double> mu_bar;      // Pr(arm recorded as a one)
  std::vector<double> variance;    // mu_bar (1 - mu_bar)
};

/// Setup of a uniform_play call: sampling set, decided pools, block size.
struct PlaySetup {
  ArmSet u_prime;
  ArmSet accepted;
  ArmSet r_prime;
  std::size_t k1 = 0;
  std::size_t k = 0;
  bool exact_k = false;
};

/// Pr(record arm i) where i's query is a uniform k1-subset of U' containing i
/// plus the independent top-off set. Product measures use count mixtures;
/// joint tables and planted measures (n <= 14) enumerate atoms.
QueryStatistics exact_query_stats(const Measure& measure, const PlaySetup& setup, FeedbackModel model);

/// 1 - E[max_{i in s} X_i].
double all_zero_probability(const Measure& measure, const ArmSet& s);

}  // namespace bestofk
