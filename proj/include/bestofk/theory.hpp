#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "bestofk/game.hpp"
#include "bestofk/measures.hpp"

namespace bestofk {

/// A named closed-form value with its inputs echoed for audit. `terms` holds
/// the per-arm breakdown where the formula has one (indexed by arm).
struct BoundReport {
  std::string name;
  std::string kind;  // "upper", "lower", "term" or "range"
  nlohmann::json inputs;
  double value = 0.0;
  std::vector<double> terms;
  std::vector<std::string> notes;
};

nlohmann::json report_to_json(const BoundReport& report);

// ---------------------------------------------------------------- KL

/// Bernoulli KL divergence d(x, y) with 0 log 0 = 0. Returns +infinity when y
/// is 0 or 1 and x differs from it (see is_infinite_divergence).
double bernoulli_kl(double x, double y);
bool is_infinite_divergence(double x, double y);

struct KlBounds {
  double lower = 0.0;
  double upper = 0.0;
  // (y-x)^2/2 / (x(1-x) - [(y-x)(2x-1)]_+), reported only; it undershoots d
  // for some pairs (e.g. x = 0.5, y = 0.25) and is not used as a bound.
  std::optional<double> middle;
};

/// lower = (y-x)^2/2 / sup_{z in [x,y]} z(1-z),
/// upper = (y-x)^2/2 / min{x(1-x), y(1-y)}. Needs x, y in (0, 1).
KlBounds kl_bounds(double x, double y);

// ---------------------------------------------------------------- transforms

/// tau * ln((16 n log2(e) / delta) * ln(8 n tau log2(e) / delta)).
/// Throws PreconditionError where either logarithm's argument is <= 1.
double calT(double tau, std::size_t n, double delta);

/// E[1 / (1 + sum X_l)] for independent X_l ~ Bernoulli(means[l]),
/// by dynamic programming over the count distribution.
double marked_information_sharing(std::span<const double> means);

/// prod (1 - means[l]).
double bandit_information_sharing(std::span<const double> means);

/// Information sharing term for the k-1 largest of `means`. Semi feedback
/// has no occlusion and gives 1. A zero bandit term is flagged in notes.
BoundReport info_sharing(std::span<const double> means, std::size_t k, FeedbackModel model);

// ---------------------------------------------------------------- gap profile

/// Per-arm gaps and variances of an independent instance (arms in any order).
struct GapProfile {
  std::vector<double> means;
  std::size_t k = 0;
  std::vector<bool> top;       // arm is among the k largest
  std::vector<double> gaps;    // mu_i - mu_(k+1) on top, mu_(k) - mu_i below
  std::vector<double> variances;
  double kth_mean = 0.0;       // mu_(k)
  double next_mean = 0.0;      // mu_(k+1)
};

/// Throws PreconditionError unless 1 <= k < n and the top k is unique.
GapProfile make_gap_profile(std::vector<double> means, std::size_t k);

/// Per-arm complexity terms:
///   semi:   56/D + 256/D^2 max{V_i, max V on the other side},
///   marked: 56/D + 256/D^2 (mu_i on top, mu_(k) below),
///   bandit: 66/D + 2560/D^2 [...] (an upper bound on the bandit term).
std::vector<double> tau_terms(const GapProfile& profile, FeedbackModel model);

/// Total-query upper bound of the elimination algorithm. `fewer_than_k`
/// selects the marked variant that may pull fewer than k arms per query.
BoundReport upper_bound_total(const GapProfile& profile, FeedbackModel model, double delta,
                              bool fewer_than_k = false);

// ---------------------------------------------------------------- lower bounds

/// Lower bound for the planted instance with gap p mu^k:
///   bandit/marked: 4(1 - p rho^k)/3 (1-(1-mu)^k)(1-mu)^k C(n,k) D^-2 ln(1/(2 delta)), rho = mu/(1-mu),
///   semi:          2/3 mu^{2k} (1-p) C(n,k) D^-2 ln(1/(2 delta)).
BoundReport dependent_lower_bound(std::size_t n, std::size_t k, double mu, double p, double delta,
                                  FeedbackModel model);

/// The simplified headline forms: C(n,k) D^-2 ln(1/(2 delta)) / 3 for
/// bandit/marked, with an extra 2^{-2k} factor for semi.
BoundReport dependent_lower_bound_simplified(std::size_t n, std::size_t k, double gap, double delta,
                                             FeedbackModel model);

/// mu with (1 - mu)^k = 1/2.
double half_mass_mu(std::size_t k);

/// h_j = max over (p_pull - 1)-subsets of [n] - {j} of prod (1 - mu_i);
/// attained by the arms with the smallest means.
std::vector<double> h_terms(std::span<const double> means, std::size_t p_pull);

/// (max_j tau_j + (1/p_pull) sum_j tau_j) ln(1/(2 delta)) for an independent
/// instance queried with subsets of size p_pull. Bandit or semi feedback.
BoundReport independent_lower_bound(const GapProfile& profile, std::size_t p_pull, double delta,
                                    FeedbackModel model);

// ---------------------------------------------------------------- feasibility

/// psi(i) = mu^i (1-mu)^{k-1-i}.
double psi(std::size_t i, double mu, std::size_t k);

/// Phi(p) = sum_{i<p} (-1)^i psi(i).
double phi(std::size_t p, double mu, std::size_t k);

/// Range of Pr(all zero) over (k-1)-wise independent laws with common mean mu.
struct FeasibilityRange {
  double mu = 0.0;
  std::size_t k = 0;
  std::size_t k_even = 0;
  std::size_t k_odd = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> phi_table;  // Phi(0..k)
};

FeasibilityRange feasible_range(double mu, std::size_t k);

/// The 2^k atoms determined by w0 = Pr(all zero), without validation. Arm
/// k-1 is the completing coordinate; with H the weight of the first k-1 bits,
///   Pr(t, 0) = (-1)^H w0 + (-1)^{H-1} Phi(H),  Pr(t, 1) = psi(H) - Pr(t, 0).
std::vector<double> joint_atoms_from_w0(double mu, std::size_t k, double w0);

/// As above, as a measure. Throws InfeasibleError if an atom is below -1e-13;
/// smaller negative rounding noise is clamped to zero.
JointTableMeasure joint_from_w0(double mu, std::size_t k, double w0);

}  // namespace bestofk
