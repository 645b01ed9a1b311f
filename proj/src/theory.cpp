#include "bestofk/theory.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "bestofk/combinatorics.hpp"
#include "bestofk/elimination.hpp"

namespace bestofk {

namespace {

const double kLog2E = 1.0 / std::log(2.0);

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw PreconditionError(std::string(what) + " must lie in [0, 1]");
}

void check_delta(double delta, double upper) {
  if (!(delta > 0.0 && delta < upper)) {
    throw PreconditionError("delta must lie in (0, " + std::to_string(upper) + ")");
  }
}

// The k-1 largest entries.
std::vector<double> largest_others(std::span<const double> means, std::size_t k) {
  std::vector<double> sorted(means.begin(), means.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const std::size_t keep = k == 0 ? 0 : std::min(k - 1, sorted.size());
  sorted.resize(keep);
  return sorted;
}

std::vector<double> sorted_desc(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

}  // namespace

nlohmann::json report_to_json(const BoundReport& report) {
  nlohmann::json doc;
  doc["name"] = report.name;
  doc["kind"] = report.kind;
  doc["inputs"] = report.inputs;
  doc["value"] = report.value;
  if (!report.terms.empty()) doc["terms"] = report.terms;
  if (!report.notes.empty()) doc["notes"] = report.notes;
  return doc;
}

double bernoulli_kl(double x, double y) {
  check_unit(x, "x");
  check_unit(y, "y");
  if (x == y) return 0.0;
  if (is_infinite_divergence(x, y)) return std::numeric_limits<double>::infinity();
  double value = 0.0;
  if (x > 0.0) value += x * std::log(x / y);
  if (x < 1.0) value += (1.0 - x) * std::log((1.0 - x) / (1.0 - y));
  return value;
}

bool is_infinite_divergence(double x, double y) { return (y == 0.0 && x > 0.0) || (y == 1.0 && x < 1.0); }

KlBounds kl_bounds(double x, double y) {
  if (!(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0)) throw PreconditionError("KL bounds need x, y in (0, 1)");
  KlBounds out;
  if (x == y) {
    out.middle = 0.0;
    return out;
  }
  const double half_sq = (y - x) * (y - x) / 2.0;
  const double lo = std::min(x, y);
  const double hi = std::max(x, y);
  const double sup = (lo <= 0.5 && hi >= 0.5) ? 0.25 : std::max(lo * (1.0 - lo), hi * (1.0 - hi));
  out.lower = half_sq / sup;
  out.upper = half_sq / std::min(x * (1.0 - x), y * (1.0 - y));
  const double middle_den = x * (1.0 - x) - std::max(0.0, (y - x) * (2.0 * x - 1.0));
  if (middle_den > 0.0) out.middle = half_sq / middle_den;
  return out;
}

double calT(double tau, std::size_t n, double delta) {
  if (!(tau > 0.0)) throw PreconditionError("transform needs tau > 0");
  if (n < 1) throw PreconditionError("transform needs n >= 1");
  check_delta(delta, 1.0);
  const double nn = static_cast<double>(n);
  const double inner = 8.0 * nn * tau * kLog2E / delta;
  if (!(inner > 1.0)) throw PreconditionError("transform undefined: inner logarithm argument <= 1");
  const double outer = 16.0 * nn * kLog2E / delta * std::log(inner);
  if (!(outer > 1.0)) throw PreconditionError("transform undefined: outer logarithm argument <= 1");
  return tau * std::log(outer);
}

double marked_information_sharing(std::span<const double> means) {
  // pmf[c] = Pr(sum = c), built one arm at a time.
  std::vector<double> pmf{1.0};
  for (double mu : means) {
    check_unit(mu, "mean");
    pmf.push_back(0.0);
    for (std::size_t c = pmf.size() - 1; c > 0; --c) pmf[c] = pmf[c] * (1.0 - mu) + pmf[c - 1] * mu;
    pmf[0] *= 1.0 - mu;
  }
  double value = 0.0;
  for (std::size_t c = 0; c < pmf.size(); ++c) value += pmf[c] / static_cast<double>(c + 1);
  return value;
}

double bandit_information_sharing(std::span<const double> means) {
  double value = 1.0;
  for (double mu : means) {
    check_unit(mu, "mean");
    value *= 1.0 - mu;
  }
  return value;
}

BoundReport info_sharing(std::span<const double> means, std::size_t k, FeedbackModel model) {
  if (k < 1) throw PreconditionError("information sharing needs k >= 1");
  const std::vector<double> others = largest_others(means, k);
  BoundReport r;
  r.kind = "term";
  r.inputs = {{"means", std::vector<double>(means.begin(), means.end())}, {"k", k}, {"model", to_string(model)}};
  switch (model) {
    case FeedbackModel::semi:
      r.name = "information_sharing_semi";
      r.value = 1.0;
      break;
    case FeedbackModel::marked:
      r.name = "information_sharing_marked";
      r.value = marked_information_sharing(others);
      break;
    case FeedbackModel::bandit:
      r.name = "information_sharing_bandit";
      r.value = bandit_information_sharing(others);
      if (r.value == 0.0) r.notes.push_back("identifiability: an occluding arm has mean 1");
      break;
  }
  return r;
}

GapProfile make_gap_profile(std::vector<double> means, std::size_t k) {
  const std::size_t n = means.size();
  if (k < 1 || k >= n) throw PreconditionError("gap profile needs 1 <= k < n");
  for (double mu : means) check_unit(mu, "mean");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return means[a] > means[b]; });
  GapProfile g;
  g.k = k;
  g.kth_mean = means[order[k - 1]];
  g.next_mean = means[order[k]];
  if (!(g.kth_mean > g.next_mean)) throw PreconditionError("top-k arms are not unique (mu_(k) == mu_(k+1))");
  g.top.assign(n, false);
  for (std::size_t r = 0; r < k; ++r) g.top[order[r]] = true;
  for (std::size_t i = 0; i < n; ++i) {
    g.gaps.push_back(g.top[i] ? means[i] - g.next_mean : g.kth_mean - means[i]);
    g.variances.push_back(means[i] * (1.0 - means[i]));
  }
  g.means = std::move(means);
  return g;
}

std::vector<double> tau_terms(const GapProfile& g, FeedbackModel model) {
  const std::size_t n = g.means.size();
  double max_v_top = 0.0;
  double max_v_bottom = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double& side = g.top[i] ? max_v_top : max_v_bottom;
    side = std::max(side, g.variances[i]);
  }
  double h_bandit = 1.0;
  if (model == FeedbackModel::bandit) h_bandit = bandit_information_sharing(largest_others(g.means, g.k));
  std::vector<double> tau(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = g.gaps[i];
    if (!(d > 0.0)) throw PreconditionError("zero gap for arm " + std::to_string(i));
    const double mu = g.means[i];
    switch (model) {
      case FeedbackModel::semi: {
        const double v = std::max(g.variances[i], g.top[i] ? max_v_bottom : max_v_top);
        tau[i] = 56.0 / d + 256.0 / (d * d) * v;
        break;
      }
      case FeedbackModel::marked:
        tau[i] = 56.0 / d + 256.0 / (d * d) * (g.top[i] ? mu : g.kth_mean);
        break;
      case FeedbackModel::bandit: {
        double bracket;
        if (g.top[i]) {
          const double q = 1.0 - g.next_mean;
          bracket = 2.0 * q * mu + q * q * (1.0 - h_bandit);
        } else {
          const double q = 1.0 - mu;
          bracket = 2.0 * q * g.next_mean + q * q * (1.0 - h_bandit);
        }
        tau[i] = 66.0 / d + 2560.0 / (d * d) * bracket;
        break;
      }
    }
  }
  return tau;
}

BoundReport upper_bound_total(const GapProfile& g, FeedbackModel model, double delta, bool fewer_than_k) {
  check_delta(delta, 1.0);
  const std::size_t n = g.means.size();
  const std::size_t k = g.k;
  const double kk = static_cast<double>(k);
  BoundReport r;
  r.kind = "upper";
  r.inputs = {{"means", g.means},
              {"k", k},
              {"delta", delta},
              {"model", to_string(model)},
              {"fewer_than_k", fewer_than_k}};
  if (model == FeedbackModel::bandit) {
    if (n < balance_min_arms(k)) {
      throw PreconditionError("bandit upper bound needs n >= ceil(7k/2) = " + std::to_string(balance_min_arms(k)));
    }
    for (double mu : g.means) {
      if (mu >= 1.0) throw IdentifiabilityError("identifiability: bandit upper bound needs every mean < 1");
    }
  }
  r.terms = tau_terms(g, model);
  const std::vector<double> s = sorted_desc(r.terms);
  auto T = [&](double tau) { return calT(tau, n, delta); };
  double tail = 0.0;
  switch (model) {
    case FeedbackModel::semi:
      r.name = "upper_semi";
      for (std::size_t i = k; i < n; ++i) tail += T(s[i]);
      r.value = 8.0 * T(s[0]) + 4.0 / kk * tail;
      break;
    case FeedbackModel::marked: {
      const double h = marked_information_sharing(largest_others(g.means, k));
      r.inputs["information_sharing"] = h;
      if (!fewer_than_k) {
        r.name = "upper_marked";
        for (std::size_t i = k; i < n; ++i) tail += T(s[i] / h);
        r.value = 16.0 * T(s[0] / h) + 8.0 / kk * tail;
      } else {
        r.name = "upper_marked_fewer_than_k";
        double head = 0.0;
        for (std::size_t i = 1; i < k; ++i) {
          head = std::max(head, static_cast<double>(i) * T(s[i - 1]));
        }
        for (std::size_t i = 1; i < n; ++i) tail += T(s[i]);
        r.value = 8.0 * head + 8.0 / (kk * h) * tail;
      }
      break;
    }
    case FeedbackModel::bandit: {
      const double h = bandit_information_sharing(largest_others(g.means, k));
      r.inputs["information_sharing"] = h;
      r.name = "upper_bandit";
      for (std::size_t i = k; i < n; ++i) tail += T(s[i] / h);
      r.value = 20.0 * T(s[0] / h) + 5.0 / kk * tail;
      r.notes.push_back("per-arm bandit terms are themselves upper bounds");
      break;
    }
  }
  return r;
}

BoundReport dependent_lower_bound(std::size_t n, std::size_t k, double mu, double p, double delta,
                                  FeedbackModel model) {
  if (k < 2 || k >= n) throw PreconditionError("dependent lower bound needs 2 <= k < n");
  if (!(mu > 0.0 && mu <= 0.5)) throw PreconditionError("dependent lower bound needs 0 < mu <= 1/2");
  if (!(p > 0.0 && p <= 1.0)) throw PreconditionError("dependent lower bound needs 0 < p <= 1");
  check_delta(delta, 0.5);
  const double kk = static_cast<double>(k);
  const double gap = p * std::pow(mu, kk);
  const double q_k = std::pow(1.0 - mu, kk);
  double prefactor;
  BoundReport r;
  r.kind = "lower";
  r.inputs = {{"n", n}, {"k", k}, {"mu", mu}, {"p", p}, {"delta", delta}, {"model", to_string(model)}, {"gap", gap}};
  if (model == FeedbackModel::semi) {
    r.name = "lower_dependent_semi";
    prefactor = 2.0 / 3.0 * std::pow(mu, 2.0 * kk) * (1.0 - p);
    if (prefactor == 0.0) r.notes.push_back("degenerate: the semi bound vanishes at p = 1");
  } else {
    r.name = "lower_dependent_bandit";
    const double rho = mu / (1.0 - mu);
    prefactor = 4.0 * (1.0 - p * std::pow(rho, kk)) / 3.0 * (1.0 - q_k) * q_k;
  }
  double log_count = std::log(binomial(n, k));
  r.value = prefactor * std::exp(log_count - 2.0 * std::log(gap)) * std::log(1.0 / (2.0 * delta));
  return r;
}

BoundReport dependent_lower_bound_simplified(std::size_t n, std::size_t k, double gap, double delta,
                                             FeedbackModel model) {
  if (k < 1 || k >= n) throw PreconditionError("need 1 <= k < n");
  if (!(gap > 0.0)) throw PreconditionError("gap must be positive");
  check_delta(delta, 0.5);
  BoundReport r;
  r.kind = "lower";
  r.name = model == FeedbackModel::semi ? "lower_dependent_semi_simplified" : "lower_dependent_bandit_simplified";
  r.inputs = {{"n", n}, {"k", k}, {"gap", gap}, {"delta", delta}, {"model", to_string(model)}};
  double factor = 1.0 / 3.0;
  if (model == FeedbackModel::semi) factor *= std::pow(2.0, -2.0 * static_cast<double>(k));
  r.value = factor * binomial(n, k) / (gap * gap) * std::log(1.0 / (2.0 * delta));
  return r;
}

double half_mass_mu(std::size_t k) { return 1.0 - std::pow(2.0, -1.0 / static_cast<double>(k)); }

std::vector<double> h_terms(std::span<const double> means, std::size_t p_pull) {
  const std::size_t n = means.size();
  if (p_pull < 1 || p_pull > n) throw PreconditionError("h terms need 1 <= p <= n");
  std::vector<double> out(n);
  std::vector<double> rest;
  for (std::size_t j = 0; j < n; ++j) {
    rest.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (i != j) rest.push_back(means[i]);
    }
    std::sort(rest.begin(), rest.end());
    double h = 1.0;
    for (std::size_t i = 0; i + 1 < p_pull; ++i) h *= 1.0 - rest[i];
    out[j] = h;
  }
  return out;
}

BoundReport independent_lower_bound(const GapProfile& g, std::size_t p_pull, double delta, FeedbackModel model) {
  if (p_pull < 1 || p_pull > g.k) throw PreconditionError("independent lower bound needs 1 <= p <= k");
  if (model == FeedbackModel::marked) {
    throw PreconditionError("independent lower bound is stated for bandit and semi feedback only");
  }
  check_delta(delta, 0.5);
  const std::size_t n = g.means.size();
  BoundReport r;
  r.kind = "lower";
  r.name = model == FeedbackModel::semi ? "lower_independent_semi" : "lower_independent_bandit";
  r.inputs = {{"means", g.means}, {"k", g.k}, {"p", p_pull}, {"delta", delta}, {"model", to_string(model)}};
  const std::vector<double> h = h_terms(g.means, p_pull);
  r.terms.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double mu = g.means[j];
    const double d = g.gaps[j];
    const double d2 = d * d;
    if (model == FeedbackModel::semi) {
      r.terms[j] = g.top[j] ? (1.0 - mu) * (mu - d) / d2 : (1.0 - mu - d) * mu / d2;
    } else {
      if (h[j] == 0.0) throw IdentifiabilityError("identifiability: occluding arms with mean 1");
      r.terms[j] = g.top[j] ? (1.0 - mu) / d2 * (1.0 - h[j] + (mu - d) * h[j]) / h[j]
                            : (1.0 - mu - d) / d2 * (1.0 - h[j] + mu * h[j]) / h[j];
    }
  }
  const double mx = *std::max_element(r.terms.begin(), r.terms.end());
  const double sum = std::accumulate(r.terms.begin(), r.terms.end(), 0.0);
  r.value = (mx + sum / static_cast<double>(p_pull)) * std::log(1.0 / (2.0 * delta));
  return r;
}

double psi(std::size_t i, double mu, std::size_t k) {
  return std::pow(mu, static_cast<double>(i)) * std::pow(1.0 - mu, static_cast<double>(k - 1 - i));
}

double phi(std::size_t p, double mu, std::size_t k) {
  double value = 0.0;
  for (std::size_t i = 0; i < p; ++i) value += (i % 2 == 0 ? 1.0 : -1.0) * psi(i, mu, k);
  return value;
}

FeasibilityRange feasible_range(double mu, std::size_t k) {
  check_unit(mu, "mu");
  if (k < 2) throw PreconditionError("feasibility range needs k >= 2");
  FeasibilityRange r;
  r.mu = mu;
  r.k = k;
  r.k_even = k % 2 == 0 ? k : k - 1;
  r.k_odd = k % 2 == 1 ? k : k - 1;
  for (std::size_t p = 0; p <= k; ++p) r.phi_table.push_back(phi(p, mu, k));
  const double kk = static_cast<double>(k);
  if (mu < 0.5) {
    const double rho = mu / (1.0 - mu);
    const double base = std::pow(1.0 - mu, kk);
    r.lo = base * (1.0 - std::pow(rho, static_cast<double>(r.k_even)));
    r.hi = base * (1.0 + std::pow(rho, static_cast<double>(r.k_odd)));
  } else {
    r.lo = 0.0;
    r.hi = std::pow(1.0 - mu, kk - 1.0);
  }
  return r;
}

std::vector<double> joint_atoms_from_w0(double mu, std::size_t k, double w0) {
  check_unit(mu, "mu");
  if (k < 2 || k > 24) throw PreconditionError("joint table needs 2 <= k <= 24");
  const std::size_t half = std::size_t{1} << (k - 1);
  std::vector<double> atoms(2 * half);
  std::vector<double> phis(k);
  std::vector<double> psis(k);
  for (std::size_t h = 0; h < k; ++h) {
    phis[h] = phi(h, mu, k);
    psis[h] = psi(h, mu, k);
  }
  for (std::size_t t = 0; t < half; ++t) {
    const auto h = static_cast<std::size_t>(std::popcount(t));
    const double sign = h % 2 == 0 ? 1.0 : -1.0;
    const double w = sign * (w0 - phis[h]);
    atoms[t] = w;
    atoms[t | half] = psis[h] - w;
  }
  return atoms;
}

JointTableMeasure joint_from_w0(double mu, std::size_t k, double w0) {
  std::vector<double> atoms = joint_atoms_from_w0(mu, k, w0);
  for (double& a : atoms) {
    if (a < -1e-13) {
      throw InfeasibleError("Pr(all zero) = " + std::to_string(w0) + " gives a negative atom");
    }
    if (a < 0.0) a = 0.0;
  }
  return make_joint_table(std::move(atoms), 1e-12);
}

}  // namespace bestofk
