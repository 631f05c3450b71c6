#include "privsbm/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "privsbm/errors.hpp"
#include "privsbm/estimators.hpp"
#include "privsbm/rng.hpp"

namespace privsbm {

namespace {

Labeling run_estimator(EstimatorKind kind, const Graph& g, int r,
                       const SolverConfig& solver) {
  switch (kind) {
    case EstimatorKind::kMle:
      return mle_exact(g, r);
    case EstimatorKind::kSdp:
      return round_solution(sdp_solve(g, r, solver), r);
    case EstimatorKind::kSpectral:
      return spectral_estimate(g, r);
  }
  throw OutOfRangeError("unknown estimator kind");
}

EstimatorFn make_estimator(EstimatorKind kind, int r, const SolverConfig& solver) {
  return [kind, r, solver](const Graph& g) {
    return run_estimator(kind, g, r, solver);
  };
}

double binomial_coeff(int n, int k) {
  double v = 1.0;
  for (int i = 1; i <= k; ++i) {
    v *= static_cast<double>(n - k + i) / i;
    if (v > 1e18) return 1e18;
  }
  return v;
}

void require_budget(const PrivacyBudget& budget, bool needs_delta) {
  if (!(budget.epsilon > 0.0) || !std::isfinite(budget.epsilon)) {
    throw OutOfRangeError("privacy budget requires finite epsilon > 0");
  }
  if (needs_delta && !(budget.delta > 0.0 && budget.delta <= 1.0)) {
    throw OutOfRangeError("stability release requires delta in (0, 1]");
  }
}

// P(Laplace(scale) > t), exact on both tails.
double laplace_upper_tail(double t, double scale) {
  return t >= 0.0 ? 0.5 * std::exp(-t / scale) : 1.0 - 0.5 * std::exp(t / scale);
}

// Log-likelihood ratio per intra edge: weight(sigma) proportional to
// exp(tau * m_in(sigma)), the whole SBM likelihood up to sigma-independent
// factors.  tau = 0 (p = q) makes the posterior uniform.
double intra_edge_tilt(const EdgeProbs& probs) {
  if (!(probs.q > 0.0) || !(probs.p < 1.0) || !(probs.q <= 1.0) || !(probs.p > 0.0)) {
    throw DomainError("posterior weights need 0 < q and p < 1");
  }
  if (probs.p < probs.q) throw DomainError("model assumes p >= q");
  return std::log(probs.p * (1.0 - probs.q)) - std::log(probs.q * (1.0 - probs.p));
}

struct WeightedPartitions {
  std::vector<Labeling> labelings;
  std::vector<double> probs;
};

// Enumerates balanced partitions with probability proportional to
// exp(-beta * inter_community_edges).  Bayesian sampling uses beta = -tau
// through m_in = m - cut; the exponential mechanism uses beta = epsilon.
WeightedPartitions cut_weighted_partitions(const Graph& g, int r, double beta) {
  if (r < 2 || g.n() % r != 0) {
    throw OutOfRangeError("partition weights: r must be >= 2 and divide n");
  }
  if (!within_exhaustive_cap(g.n(), r)) {
    throw TooLargeError("partition enumeration beyond the exhaustive cap");
  }
  WeightedPartitions out;
  std::vector<double> logw;
  for_each_balanced_partition(g.n(), r, [&](const std::vector<int>& assign) {
    Labeling sigma{assign, r};
    logw.push_back(-beta * inter_community_edges(g, sigma));
    out.labelings.push_back(std::move(sigma));
    return true;
  });
  const double peak = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  out.probs.resize(logw.size());
  for (std::size_t i = 0; i < logw.size(); ++i) {
    out.probs[i] = std::exp(logw[i] - peak);
    total += out.probs[i];
  }
  for (double& p : out.probs) p /= total;
  return out;
}

const Labeling& pick_weighted(const WeightedPartitions& parts, Rng& rng) {
  double u = rng.uniform01();
  for (std::size_t i = 0; i < parts.probs.size(); ++i) {
    u -= parts.probs[i];
    if (u <= 0.0) return parts.labelings[i];
  }
  return parts.labelings.back();  // guard against rounding residue
}

// Metropolis sampler targeting exp(-beta * cut) over balanced labelings,
// pair-swap proposals, 50 n^2 burn-in.  Approximate: the audit-grade
// guarantees attach to the exact enumerators only.
Labeling chain_sample(const Graph& g, int r, double beta, std::uint64_t seed) {
  if (r < 2 || g.n() % r != 0) {
    throw OutOfRangeError("chain sampler: r must be >= 2 and divide n");
  }
  const int n = g.n();
  Rng rng(seed);
  Labeling sigma = random_balanced_labeling(n, r, rng);

  std::vector<std::vector<int>> adjacency(static_cast<std::size_t>(n));
  for (const auto& [i, j] : g.edges()) {
    adjacency[i].push_back(j);
    adjacency[j].push_back(i);
  }
  std::vector<std::vector<int>> deg(static_cast<std::size_t>(n),
                                    std::vector<int>(static_cast<std::size_t>(r), 0));
  for (int v = 0; v < n; ++v) {
    for (int w : adjacency[v]) ++deg[v][sigma.labels[w]];
  }

  const std::int64_t steps = 50LL * n * n;
  for (std::int64_t step = 0; step < steps; ++step) {
    const int u = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const int v = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const int cu = sigma.labels[u];
    const int cv = sigma.labels[v];
    if (cu == cv) continue;
    const int delta = (deg[u][cu] - deg[u][cv]) + (deg[v][cv] - deg[v][cu]) +
                      2 * (g.has_edge(u, v) ? 1 : 0);
    if (delta > 0 && rng.uniform01() >= std::exp(-beta * delta)) continue;
    for (int w : adjacency[u]) {
      --deg[w][cu];
      ++deg[w][cv];
    }
    for (int w : adjacency[v]) {
      --deg[w][cv];
      ++deg[w][cu];
    }
    sigma.labels[u] = cv;
    sigma.labels[v] = cu;
  }
  return canonical_form(sigma);
}

}  // namespace

int default_stability_cap(int n, double epsilon) {
  if (n < 2) throw OutOfRangeError("stability cap needs n >= 2");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw OutOfRangeError("stability cap needs finite epsilon > 0");
  }
  return static_cast<int>(std::ceil(2.0 * std::log(static_cast<double>(n)) / epsilon)) + 1;
}

StabilityReport capped_stability(const Graph& g, const EstimatorFn& estimator,
                                 int cap, std::int64_t eval_budget) {
  if (cap < 1) throw OutOfRangeError("capped_stability: cap must be >= 1");
  if (eval_budget < 1) throw OutOfRangeError("capped_stability: empty evaluation budget");
  const Labeling baseline = canonical_form(estimator(g));
  const int pairs = g.pair_count();
  double remaining = static_cast<double>(eval_budget);

  Graph h = g;
  for (int k = 1; k <= cap && k <= pairs; ++k) {
    const double level = binomial_coeff(pairs, k);
    if (level > remaining) {
      throw TooLargeError("stability search would exceed its evaluation budget at flip-set size " +
                          std::to_string(k));
    }
    remaining -= level;

    std::vector<int> members(static_cast<std::size_t>(k));
    std::iota(members.begin(), members.end(), 0);
    for (;;) {
      for (int p : members) h.flip_pair(p);
      const bool changed = canonical_form(estimator(h)) != baseline;
      for (int p : members) h.flip_pair(p);
      if (changed) {
        return {k, false, StabilityMode::kExactCapped, 1, false};
      }
      int pos = k - 1;
      while (pos >= 0 && members[pos] == pairs - k + pos) --pos;
      if (pos < 0) break;
      ++members[pos];
      for (int t = pos + 1; t < k; ++t) members[t] = members[t - 1] + 1;
    }
  }
  return {cap, true, StabilityMode::kExactCapped, 1, false};
}

StabilityReport gap_statistic(const Graph& g, int r) {
  const CutLandscape land = cut_landscape(g, r);
  return {land.second_cut - land.best_cut, false, StabilityMode::kGapLowerBound, 2,
          false};
}

StabilityReport local_gap_statistic(const Graph& g, const Labeling& sigma) {
  require_balanced(sigma);
  if (sigma.n() != g.n()) {
    throw SizeMismatchError("local gap: labeling size != graph size");
  }
  const int n = g.n();
  const int r = sigma.r;
  std::vector<std::vector<int>> deg(static_cast<std::size_t>(n),
                                    std::vector<int>(static_cast<std::size_t>(r), 0));
  for (const auto& [i, j] : g.edges()) {
    ++deg[i][sigma.labels[j]];
    ++deg[j][sigma.labels[i]];
  }
  int best = std::numeric_limits<int>::max();
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      const int cu = sigma.labels[u];
      const int cv = sigma.labels[v];
      if (cu == cv) continue;
      const int delta = (deg[u][cu] - deg[u][cv]) + (deg[v][cv] - deg[v][cu]) +
                        2 * (g.has_edge(u, v) ? 1 : 0);
      best = std::min(best, delta);
    }
  }
  return {std::max(0, best), false, StabilityMode::kGapLowerBound, 2, true};
}

MechanismOutput stability_mechanism(const Graph& g, EstimatorKind estimator,
                                    int r, const PrivacyBudget& budget,
                                    StabilityMode mode, std::uint64_t seed,
                                    int cap, const SolverConfig& solver) {
  require_budget(budget, /*needs_delta=*/true);
  const Labeling sigma = run_estimator(estimator, g, r, solver);

  StabilityReport report;
  if (mode == StabilityMode::kExactCapped) {
    const int effective_cap =
        cap > 0 ? cap : default_stability_cap(g.n(), budget.epsilon);
    report = capped_stability(g, make_estimator(estimator, r, solver), effective_cap);
  } else if (within_exhaustive_cap(g.n(), r)) {
    report = gap_statistic(g, r);
  } else {
    report = local_gap_statistic(g, sigma);
  }

  // Centered statistic: any graph whose output one flip can change sits at
  // 0, so its release probability is exactly the delta/2 Laplace tail; the
  // threshold scales with the statistic's sensitivity.
  const double scale = report.sensitivity / budget.epsilon;
  const double threshold =
      report.sensitivity * std::log(1.0 / budget.delta) / budget.epsilon;
  const double centered = std::max(report.value - 1, 0);

  Rng rng(seed);
  if (centered + rng.laplace(scale) > threshold) {
    return {sigma};
  }
  return {std::nullopt};
}

Labeling bayesian_mechanism(const Graph& g, int r, const EdgeProbs& probs,
                            std::uint64_t seed) {
  const double tau = intra_edge_tilt(probs);
  // exp(tau * m_in) = exp(-tau * cut) up to a constant factor.
  const WeightedPartitions parts = cut_weighted_partitions(g, r, tau);
  Rng rng(seed);
  return pick_weighted(parts, rng);
}

Labeling bayesian_mechanism_chain(const Graph& g, int r, const EdgeProbs& probs,
                                  std::uint64_t seed) {
  return chain_sample(g, r, intra_edge_tilt(probs), seed);
}

Labeling exponential_mechanism(const Graph& g, int r, double epsilon,
                               std::uint64_t seed, SamplingMode mode) {
  if (epsilon < 0.0 || !std::isfinite(epsilon)) {
    throw OutOfRangeError("exponential mechanism needs finite epsilon >= 0");
  }
  const bool exact_feasible = within_exhaustive_cap(g.n(), r);
  const bool exact = mode == SamplingMode::kExact ||
                     (mode == SamplingMode::kAuto && exact_feasible);
  if (exact) {
    const WeightedPartitions parts = cut_weighted_partitions(g, r, epsilon);
    Rng rng(seed);
    return pick_weighted(parts, rng);
  }
  return chain_sample(g, r, epsilon, seed);
}

double rr_flip_probability(double epsilon) {
  if (epsilon < 0.0 || !std::isfinite(epsilon)) {
    throw OutOfRangeError("randomized response needs finite epsilon >= 0");
  }
  return 1.0 / (std::exp(epsilon) + 1.0);
}

Graph randomized_response(const Graph& g, double epsilon, std::uint64_t seed) {
  const double mu = rr_flip_probability(epsilon);
  Rng rng(seed);
  Graph out = g;
  const int pairs = g.pair_count();
  for (int p = 0; p < pairs; ++p) {
    if (rng.bernoulli(mu)) out.flip_pair(p);
  }
  return out;
}

Labeling rr_pipeline(const Graph& g, int r, double epsilon,
                     EstimatorKind estimator, std::uint64_t seed,
                     const SolverConfig& solver) {
  const Graph noisy = randomized_response(g, epsilon, seed);
  return run_estimator(estimator, noisy, r, solver);
}

bool is_known_mechanism(const std::string& handle) {
  return handle == "stability-mle" || handle == "stability-sdp" ||
         handle == "bayesian" || handle == "exponential" || handle == "rr-sdp" ||
         handle == "rr-spectral" || handle == "mle" || handle == "sdp" ||
         handle == "spectral";
}

bool is_private_mechanism(const std::string& handle) {
  return is_known_mechanism(handle) && handle != "mle" && handle != "sdp" &&
         handle != "spectral";
}

MechanismOutput run_mechanism(const MechanismSpec& spec, const Graph& g,
                              std::uint64_t seed) {
  const std::string& h = spec.handle;
  if (h == "mle") return {mle_exact(g, spec.r)};
  if (h == "sdp") return {round_solution(sdp_solve(g, spec.r, spec.solver), spec.r)};
  if (h == "spectral") return {spectral_estimate(g, spec.r)};
  if (h == "stability-mle" || h == "stability-sdp") {
    const EstimatorKind kind =
        h == "stability-mle" ? EstimatorKind::kMle : EstimatorKind::kSdp;
    return stability_mechanism(g, kind, spec.r, spec.budget, spec.mode, seed,
                               spec.cap, spec.solver);
  }
  if (h == "bayesian") return {bayesian_mechanism(g, spec.r, spec.probs, seed)};
  if (h == "exponential") {
    return {exponential_mechanism(g, spec.r, spec.budget.epsilon, seed)};
  }
  if (h == "rr-sdp" || h == "rr-spectral") {
    const EstimatorKind kind =
        h == "rr-sdp" ? EstimatorKind::kSdp : EstimatorKind::kSpectral;
    try {
      return {rr_pipeline(g, spec.r, spec.budget.epsilon, kind, seed, spec.solver)};
    } catch (const DegenerateSpectrumError&) {
      // A perturbed graph with no spectral signal maps to the withheld
      // symbol; the flip step's privacy survives any deterministic
      // post-processing, this one included.
      return {std::nullopt};
    }
  }
  throw DomainError("unknown mechanism handle: " + h);
}

std::string output_key(const MechanismOutput& output) {
  if (output.is_bottom()) return "bottom";
  const Labeling canon = canonical_form(*output.labeling);
  std::string key;
  key.reserve(canon.labels.size());
  for (int label : canon.labels) key += std::to_string(label);
  return key;
}

namespace {

std::string estimator_output_key(EstimatorKind kind, const Graph& g, int r,
                                 const SolverConfig& solver) {
  try {
    return output_key({run_estimator(kind, g, r, solver)});
  } catch (const DegenerateSpectrumError&) {
    return "bottom";
  }
}

OutputDistribution rr_distribution(const MechanismSpec& spec, const Graph& g,
                                   std::vector<std::string>* key_cache) {
  const EstimatorKind kind =
      spec.handle == "rr-sdp" ? EstimatorKind::kSdp : EstimatorKind::kSpectral;
  const double mu = rr_flip_probability(spec.budget.epsilon);
  const int pairs = g.pair_count();
  std::uint64_t base = 0;
  for (int p = 0; p < pairs; ++p) {
    if (g.test_pair(p)) base |= 1ULL << p;
  }
  OutputDistribution dist;
  for (std::uint64_t pattern = 0; pattern < (1ULL << pairs); ++pattern) {
    const std::uint64_t bits = base ^ pattern;
    std::string key;
    if (key_cache != nullptr) {
      std::string& slot = (*key_cache)[bits];
      if (slot.empty()) {
        slot = estimator_output_key(kind, graph_from_bits(g.n(), bits), spec.r,
                                    spec.solver);
      }
      key = slot;
    } else {
      key = estimator_output_key(kind, graph_from_bits(g.n(), bits), spec.r,
                                 spec.solver);
    }
    const int flips = __builtin_popcountll(pattern);
    dist[key] += std::pow(mu, flips) * std::pow(1.0 - mu, pairs - flips);
  }
  return dist;
}

OutputDistribution stability_distribution(const MechanismSpec& spec, const Graph& g) {
  require_budget(spec.budget, /*needs_delta=*/true);
  const EstimatorKind kind =
      spec.handle == "stability-mle" ? EstimatorKind::kMle : EstimatorKind::kSdp;
  const Labeling sigma = run_estimator(kind, g, spec.r, spec.solver);

  StabilityReport report;
  if (spec.mode == StabilityMode::kExactCapped) {
    const int cap =
        spec.cap > 0 ? spec.cap : default_stability_cap(g.n(), spec.budget.epsilon);
    report = capped_stability(g, make_estimator(kind, spec.r, spec.solver), cap);
  } else if (within_exhaustive_cap(g.n(), spec.r)) {
    report = gap_statistic(g, spec.r);
  } else {
    report = local_gap_statistic(g, sigma);
  }

  const double scale = report.sensitivity / spec.budget.epsilon;
  const double threshold =
      report.sensitivity * std::log(1.0 / spec.budget.delta) / spec.budget.epsilon;
  const double centered = std::max(report.value - 1, 0);
  const double release = laplace_upper_tail(threshold - centered, scale);

  OutputDistribution dist;
  dist[output_key({sigma})] = release;
  dist["bottom"] += 1.0 - release;
  return dist;
}

OutputDistribution distribution_impl(const MechanismSpec& spec, const Graph& g,
                                     std::vector<std::string>* rr_key_cache) {
  if (g.n() > 6) {
    throw TooLargeError("exact output distributions enumerate outputs only up to n = 6");
  }
  const std::string& h = spec.handle;
  if (h == "bayesian") {
    const WeightedPartitions parts =
        cut_weighted_partitions(g, spec.r, intra_edge_tilt(spec.probs));
    OutputDistribution dist;
    for (std::size_t i = 0; i < parts.labelings.size(); ++i) {
      dist[output_key({parts.labelings[i]})] = parts.probs[i];
    }
    return dist;
  }
  if (h == "exponential") {
    if (spec.budget.epsilon < 0.0 || !std::isfinite(spec.budget.epsilon)) {
      throw OutOfRangeError("exponential mechanism needs finite epsilon >= 0");
    }
    const WeightedPartitions parts =
        cut_weighted_partitions(g, spec.r, spec.budget.epsilon);
    OutputDistribution dist;
    for (std::size_t i = 0; i < parts.labelings.size(); ++i) {
      dist[output_key({parts.labelings[i]})] = parts.probs[i];
    }
    return dist;
  }
  if (h == "rr-sdp" || h == "rr-spectral") {
    return rr_distribution(spec, g, rr_key_cache);  // flip rate validates epsilon
  }
  if (h == "stability-mle" || h == "stability-sdp") {
    return stability_distribution(spec, g);
  }
  if (h == "mle" || h == "sdp" || h == "spectral") {
    const EstimatorKind kind = h == "mle"   ? EstimatorKind::kMle
                               : h == "sdp" ? EstimatorKind::kSdp
                                            : EstimatorKind::kSpectral;
    return {{estimator_output_key(kind, g, spec.r, spec.solver), 1.0}};
  }
  throw DomainError("unknown mechanism handle: " + h);
}

}  // namespace

OutputDistribution exact_output_distribution(const MechanismSpec& spec,
                                             const Graph& g) {
  return distribution_impl(spec, g, nullptr);
}

Graph graph_from_bits(int n, std::uint64_t bits) {
  if (n < 2) throw OutOfRangeError("graph_from_bits: n must be >= 2");
  const int pairs = n * (n - 1) / 2;
  if (pairs < 64 && bits >= (1ULL << pairs)) {
    throw OutOfRangeError("graph_from_bits: bits outside the pair range");
  }
  Graph g(n);
  for (int p = 0; p < pairs; ++p) {
    if ((bits >> p) & 1ULL) g.flip_pair(p);
  }
  return g;
}

AuditReport dp_audit(const MechanismSpec& spec, int n) {
  if (n < 2 || n > 5) {
    throw TooLargeError("audit enumerates all graphs only for 2 <= n <= 5");
  }
  if (n % spec.r != 0) {
    throw OutOfRangeError("audit size must be divisible by r");
  }
  const int pairs = n * (n - 1) / 2;
  const std::uint64_t graphs = 1ULL << pairs;

  // RR pipelines share one estimator table across all start graphs; every
  // perturbed graph lives in the same enumeration space.
  std::vector<std::string> rr_key_cache;
  std::vector<std::string>* cache = nullptr;
  if (spec.handle == "rr-sdp" || spec.handle == "rr-spectral") {
    rr_key_cache.assign(graphs, std::string());
    cache = &rr_key_cache;
  }

  std::vector<OutputDistribution> dists(graphs);
  for (std::uint64_t bits = 0; bits < graphs; ++bits) {
    dists[bits] = distribution_impl(spec, graph_from_bits(n, bits), cache);
  }

  const double e_eps = std::exp(spec.budget.epsilon);
  const double delta = spec.budget.delta;
  AuditReport report;
  report.graphs = static_cast<int>(graphs);
  for (std::uint64_t bits = 0; bits < graphs; ++bits) {
    for (int p = 0; p < pairs; ++p) {
      const std::uint64_t nb = bits ^ (1ULL << p);
      ++report.pairs_checked;
      for (const auto& [key, prob] : dists[bits]) {
        const auto it = dists[nb].find(key);
        const double other = it == dists[nb].end() ? 0.0 : it->second;
        const double bound = e_eps * other + delta;
        if (prob > bound + 1e-12 * std::max(1.0, bound)) {
          if (report.violations.size() < 64) {
            report.violations.push_back({bits, nb, key, prob, other});
          }
        }
        if (other > 0.0) {
          const double ratio = (prob - delta) / other;
          if (ratio > report.max_ratio) {
            report.max_ratio = ratio;
            report.worst_graph_bits = bits;
            report.worst_neighbor_bits = nb;
            report.worst_output = key;
          }
        }
      }
    }
  }
  return report;
}

}  // namespace privsbm
