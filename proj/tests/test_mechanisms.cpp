#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "privsbm/errors.hpp"
#include "privsbm/estimators.hpp"
#include "privsbm/graph.hpp"
#include "privsbm/mechanisms.hpp"
#include "privsbm/rng.hpp"

using namespace privsbm;

namespace {

Graph graph_from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  Graph g(n);
  for (const auto& [i, j] : edges) g.set_edge(i, j, true);
  return g;
}

Graph disjoint_cliques(int n, int r) {
  Graph g(n);
  const int size = n / r;
  for (int c = 0; c < r; ++c) {
    for (int i = c * size; i < (c + 1) * size; ++i) {
      for (int j = i + 1; j < (c + 1) * size; ++j) g.set_edge(i, j, true);
    }
  }
  return g;
}

Labeling block_labels(int n, int r) {
  Labeling sigma;
  sigma.r = r;
  sigma.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) sigma.labels[i] = i / (n / r);
  return sigma;
}

// Test-side MLE oracle: independent partition walk, strict-improvement
// tie-break, no reliance on the estimator module's search internals.
Labeling oracle_mle(const Graph& g, int r) {
  Labeling best;
  int best_cut = g.pair_count() + 1;
  for_each_balanced_partition(g.n(), r, [&](const std::vector<int>& assign) {
    Labeling sigma{assign, r};
    const int cut = inter_community_edges(g, sigma);
    if (cut < best_cut) {
      best_cut = cut;
      best = sigma;
    }
    return true;
  });
  return best;
}

// Test-side flip-set BFS: smallest k <= max_k whose flips change the MLE,
// or 0 when none does.
int oracle_min_flips(const Graph& g, int r, int max_k) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < g.n(); ++i) {
    for (int j = i + 1; j < g.n(); ++j) pairs.emplace_back(i, j);
  }
  const Labeling base = oracle_mle(g, r);
  const int total = static_cast<int>(pairs.size());
  for (int k = 1; k <= max_k; ++k) {
    std::vector<int> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    for (;;) {
      EdgeFlipSet flips;
      for (int t : idx) flips.flips.push_back(pairs[t]);
      if (oracle_mle(apply_flips(g, flips), r) != base) return k;
      int pos = k - 1;
      while (pos >= 0 && idx[pos] == total - k + pos) --pos;
      if (pos < 0) break;
      ++idx[pos];
      for (int t = pos + 1; t < k; ++t) idx[t] = idx[t - 1] + 1;
    }
  }
  return 0;
}

EstimatorFn mle_estimator(int r) {
  return [r](const Graph& g) { return mle_exact(g, r); };
}

// Exact exp(-beta*cut) distribution over canonical label keys, test side.
std::map<std::string, double> oracle_cut_distribution(const Graph& g, int r,
                                                      double beta) {
  std::map<std::string, double> logs;
  for_each_balanced_partition(g.n(), r, [&](const std::vector<int>& assign) {
    Labeling sigma{assign, r};
    logs[output_key({sigma})] = -beta * inter_community_edges(g, sigma);
    return true;
  });
  double peak = -1e300;
  for (const auto& [key, lw] : logs) peak = std::max(peak, lw);
  double total = 0.0;
  std::map<std::string, double> dist;
  for (const auto& [key, lw] : logs) {
    dist[key] = std::exp(lw - peak);
    total += dist[key];
  }
  for (auto& [key, w] : dist) w /= total;
  return dist;
}

double tv_distance(const std::map<std::string, double>& a,
                   const std::map<std::string, double>& b) {
  std::map<std::string, double> merged = a;
  for (const auto& [key, w] : b) merged[key] -= w;
  double tv = 0.0;
  for (const auto& [key, w] : merged) tv += std::abs(w);
  return tv / 2.0;
}

}  // namespace

TEST_CASE("default stability cap follows the threshold scale") {
  CHECK(default_stability_cap(100, 1.0) == 11);  // ceil(2 ln 100) + 1
  CHECK(default_stability_cap(100, 2.0) == 6);
  CHECK_THROWS_AS(default_stability_cap(100, 0.0), OutOfRangeError);
  CHECK_THROWS_AS(default_stability_cap(1, 1.0), OutOfRangeError);
}

TEST_CASE("capped stability of two disjoint edges is three flips") {
  const Graph g = graph_from_edges(4, {{0, 1}, {2, 3}});
  // Independent oracle (exhaustive flip-set BFS over the partition walk).
  CHECK(oracle_min_flips(g, 2, 4) == 3);

  const StabilityReport rep = capped_stability(g, mle_estimator(2), 3);
  CHECK(rep.value == 3);
  CHECK_FALSE(rep.capped);
  CHECK(rep.mode == StabilityMode::kExactCapped);
  CHECK(rep.sensitivity == 1);
  CHECK_FALSE(rep.heuristic);

  // A tighter cap truncates: no 2-flip set changes the lexicographic argmin.
  const StabilityReport tight = capped_stability(g, mle_estimator(2), 2);
  CHECK(tight.value == 2);
  CHECK(tight.capped);
}

TEST_CASE("capped stability of a single edge is two flips") {
  const Graph g = graph_from_edges(4, {{0, 1}});
  CHECK(oracle_min_flips(g, 2, 4) == 2);
  const StabilityReport rep = capped_stability(g, mle_estimator(2), 3);
  CHECK(rep.value == 2);
  CHECK_FALSE(rep.capped);
}

TEST_CASE("capped stability respects cap and budget") {
  const Graph g = disjoint_cliques(8, 2);
  const StabilityReport rep = capped_stability(g, mle_estimator(2), 1);
  CHECK(rep.value == 1);
  CHECK(rep.capped);  // one flip cannot overcome a cut gap of six

  CHECK_THROWS_AS(capped_stability(g, mle_estimator(2), 3, 5), TooLargeError);
  CHECK_THROWS_AS(capped_stability(g, mle_estimator(2), 0), OutOfRangeError);
}

TEST_CASE("gap statistic matches hand-enumerated cut spreads") {
  const StabilityReport two = gap_statistic(graph_from_edges(4, {{0, 1}, {2, 3}}), 2);
  CHECK(two.value == 2);  // cuts 0, 2, 2
  CHECK(two.mode == StabilityMode::kGapLowerBound);
  CHECK(two.sensitivity == 2);
  CHECK_FALSE(two.heuristic);

  CHECK(gap_statistic(Graph(4), 2).value == 0);
  Graph k4(4);
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) k4.set_edge(i, j, true);
  }
  CHECK(gap_statistic(k4, 2).value == 0);
  CHECK(gap_statistic(graph_from_edges(4, {{0, 1}}), 2).value == 1);
  CHECK_THROWS_AS(gap_statistic(Graph(26), 2), TooLargeError);
}

TEST_CASE("local gap agrees with the exact gap at strong optima") {
  const Graph cliques = disjoint_cliques(8, 2);
  const StabilityReport local = local_gap_statistic(cliques, block_labels(8, 2));
  CHECK(local.value == 6);
  CHECK(local.heuristic);
  CHECK(local.value == gap_statistic(cliques, 2).value);

  const Graph g = graph_from_edges(4, {{0, 1}, {2, 3}});
  CHECK(local_gap_statistic(g, block_labels(4, 2)).value == 2);

  // Anchoring at a suboptimal labeling gives negative swap improvements,
  // clamped to zero.
  CHECK(local_gap_statistic(g, Labeling{{0, 1, 0, 1}, 2}).value == 0);

  CHECK_THROWS_AS(local_gap_statistic(g, Labeling{{0, 0, 0, 1}, 2}), OutOfRangeError);
  CHECK_THROWS_AS(local_gap_statistic(g, block_labels(8, 2)), SizeMismatchError);
}

TEST_CASE("stability mechanism releases the estimate or bottom") {
  const Graph g = disjoint_cliques(8, 2);
  const PrivacyBudget budget{1.0, 0.125};
  int released = 0, withheld = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const MechanismOutput out = stability_mechanism(
        g, EstimatorKind::kMle, 2, budget, StabilityMode::kGapLowerBound, seed);
    if (out.is_bottom()) {
      ++withheld;
    } else {
      CHECK(*out.labeling == block_labels(8, 2));
      ++released;
    }
  }
  CHECK(released > 0);  // gap 6 clears the threshold 2 ln 8 ~ 4.16 easily
  CHECK(released + withheld == 100);
}

TEST_CASE("stability bottom rate matches the Laplace closed form") {
  // delta = 1 puts the threshold at zero.  Exact mode on the two-edge graph
  // has value 3, so the centered statistic is 2 and
  // P(bottom) = P(2 + Lap(1/eps) <= 0) = 0.5 e^{-2} at eps = 1.
  const Graph g = graph_from_edges(4, {{0, 1}, {2, 3}});
  const PrivacyBudget budget{1.0, 1.0};
  int bottoms = 0;
  const int runs = 2000;
  for (std::uint64_t seed = 0; seed < runs; ++seed) {
    if (stability_mechanism(g, EstimatorKind::kMle, 2, budget,
                            StabilityMode::kExactCapped, seed, 3)
            .is_bottom()) {
      ++bottoms;
    }
  }
  const double expected = 0.06766764161830635;
  const double sigma3 = 3.0 * std::sqrt(expected * (1.0 - expected) / runs);
  CHECK(std::abs(static_cast<double>(bottoms) / runs - expected) <= sigma3);

  // Gap mode on the single-edge graph centers at zero: P(bottom) = 1/2.
  const Graph lone = graph_from_edges(4, {{0, 1}});
  bottoms = 0;
  for (std::uint64_t seed = 0; seed < runs; ++seed) {
    if (stability_mechanism(lone, EstimatorKind::kMle, 2, budget,
                            StabilityMode::kGapLowerBound, seed)
            .is_bottom()) {
      ++bottoms;
    }
  }
  CHECK(std::abs(static_cast<double>(bottoms) / runs - 0.5) <=
        3.0 * std::sqrt(0.25 / runs));
}

TEST_CASE("stability bottom probability decreases with epsilon") {
  MechanismSpec spec;
  spec.handle = "stability-mle";
  spec.r = 2;
  spec.mode = StabilityMode::kGapLowerBound;
  spec.budget.delta = 0.25;
  const Graph g = graph_from_edges(4, {{0, 1}, {2, 3}});
  double last = 1.0;
  for (double eps : {1.0, 2.0, 4.0}) {
    spec.budget.epsilon = eps;
    const double bottom = exact_output_distribution(spec, g).at("bottom");
    CHECK(bottom < last);
    last = bottom;
  }
}

TEST_CASE("stability mechanism validates its budget") {
  const Graph g = graph_from_edges(4, {{0, 1}});
  CHECK_THROWS_AS(stability_mechanism(g, EstimatorKind::kMle, 2, {1.0, 0.0},
                                      StabilityMode::kGapLowerBound, 1),
                  OutOfRangeError);
  CHECK_THROWS_AS(stability_mechanism(g, EstimatorKind::kMle, 2, {1.0, 1.5},
                                      StabilityMode::kGapLowerBound, 1),
                  OutOfRangeError);
  CHECK_THROWS_AS(stability_mechanism(g, EstimatorKind::kMle, 2, {0.0, 0.5},
                                      StabilityMode::kGapLowerBound, 1),
                  OutOfRangeError);
}

TEST_CASE("stability falls back to the single-swap gap beyond the cap") {
  // n = 26 is beyond exhaustive enumeration; the SDP estimate anchors a
  // local gap of 24, far above the release threshold.
  const Graph g = disjoint_cliques(26, 2);
  const PrivacyBudget budget{1.0, 1.0 / 26.0};
  const MechanismOutput out = stability_mechanism(
      g, EstimatorKind::kSdp, 2, budget, StabilityMode::kGapLowerBound, 7);
  REQUIRE_FALSE(out.is_bottom());
  CHECK(*out.labeling == block_labels(26, 2));
  CHECK(local_gap_statistic(g, block_labels(26, 2)).value == 24);
}

TEST_CASE("bayesian posterior concentrates on a planted block graph") {
  const Graph g = disjoint_cliques(8, 2);
  const EdgeProbs probs{0.999, 0.001};

  // Oracle posterior from raw log-likelihoods over all balanced partitions.
  std::vector<double> logs;
  double truth_log = 0.0;
  for_each_balanced_partition(8, 2, [&](const std::vector<int>& assign) {
    Labeling sigma{assign, 2};
    logs.push_back(log_likelihood(g, sigma, probs));
    if (sigma == block_labels(8, 2)) truth_log = logs.back();
    return true;
  });
  const double peak = *std::max_element(logs.begin(), logs.end());
  double total = 0.0;
  for (double lw : logs) total += std::exp(lw - peak);
  CHECK(std::exp(truth_log - peak) / total > 0.999);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CHECK(bayesian_mechanism(g, 2, probs, seed) == block_labels(8, 2));
  }
}

TEST_CASE("bayesian posterior on a single edge weighs partitions 3:1:1") {
  MechanismSpec spec;
  spec.handle = "bayesian";
  spec.probs = {0.5, 0.25};
  const OutputDistribution dist =
      exact_output_distribution(spec, graph_from_edges(4, {{0, 1}}));
  CHECK(dist.at("0011") == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(dist.at("0101") == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(dist.at("0110") == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("bayesian sampling is uniform when p equals q") {
  const Graph g = graph_from_edges(4, {{0, 1}, {1, 2}});
  std::map<std::string, int> counts;
  const int draws = 10000;
  for (std::uint64_t seed = 0; seed < draws; ++seed) {
    counts[output_key({bayesian_mechanism(g, 2, {0.3, 0.3}, seed)})]++;
  }
  REQUIRE(counts.size() == 3);
  const double expected = draws / 3.0;
  double chi2 = 0.0;
  for (const auto& [key, c] : counts) {
    chi2 += (c - expected) * (c - expected) / expected;
  }
  CHECK(chi2 < 9.21);  // chi-square df=2 at significance 0.01
}

TEST_CASE("bayesian rejects degenerate probabilities and oversize inputs") {
  const Graph g(4);
  CHECK_THROWS_AS(bayesian_mechanism(g, 2, {0.2, 0.5}, 1), DomainError);
  CHECK_THROWS_AS(bayesian_mechanism(g, 2, {1.0, 0.5}, 1), DomainError);
  CHECK_THROWS_AS(bayesian_mechanism(g, 2, {0.5, 0.0}, 1), DomainError);
  CHECK_THROWS_AS(bayesian_mechanism(Graph(26), 2, {0.5, 0.25}, 1), TooLargeError);
}

TEST_CASE("exponential mechanism matches the three-term closed form") {
  MechanismSpec spec;
  spec.handle = "exponential";
  spec.budget.epsilon = 1.0;
  const OutputDistribution dist =
      exact_output_distribution(spec, graph_from_edges(4, {{0, 1}}));
  CHECK(dist.at("0011") ==
        doctest::Approx(0.5761168847658291).epsilon(1e-12));  // 1/(1+2e^-1)

  // Empirical frequencies agree within 4 sigma.
  std::map<std::string, int> counts;
  const int draws = 20000;
  for (std::uint64_t seed = 0; seed < draws; ++seed) {
    counts[output_key({exponential_mechanism(graph_from_edges(4, {{0, 1}}), 2,
                                             1.0, seed)})]++;
  }
  for (const auto& [key, prob] : dist) {
    const double freq = static_cast<double>(counts[key]) / draws;
    CHECK(std::abs(freq - prob) <= 4.0 * std::sqrt(prob * (1.0 - prob) / draws));
  }
}

TEST_CASE("exponential mechanism is uniform at epsilon zero and on empty graphs") {
  MechanismSpec spec;
  spec.handle = "exponential";
  spec.budget.epsilon = 0.0;
  for (const auto& [key, prob] :
       exact_output_distribution(spec, graph_from_edges(4, {{0, 1}, {1, 3}}))) {
    CHECK(prob == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  spec.budget.epsilon = 2.0;
  for (const auto& [key, prob] : exact_output_distribution(spec, Graph(4))) {
    CHECK(prob == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(exponential_mechanism(Graph(4), 2, -1.0, 1), OutOfRangeError);
  CHECK_THROWS_AS(
      exponential_mechanism(Graph(26), 2, 1.0, 1, SamplingMode::kExact),
      TooLargeError);
}

TEST_CASE("chain sampling tracks the exact distribution") {
  const Graph g = graph_from_edges(8, {{0, 1}, {2, 3}});
  const auto exact = oracle_cut_distribution(g, 2, 1.0);

  std::map<std::string, double> empirical;
  const int draws = 10000;
  for (std::uint64_t seed = 0; seed < draws; ++seed) {
    empirical[output_key(
        {exponential_mechanism(g, 2, 1.0, seed, SamplingMode::kChain)})] +=
        1.0 / draws;
  }
  CHECK(tv_distance(exact, empirical) <= 0.05);

  // Bayesian chain with tilt log(p(1-q)/(q(1-p))) = 1 targets the same law.
  const double p = std::exp(1.0) / (3.0 + std::exp(1.0));
  std::map<std::string, double> bayes;
  for (std::uint64_t seed = 0; seed < draws; ++seed) {
    bayes[output_key({bayesian_mechanism_chain(g, 2, {p, 0.25}, seed)})] +=
        1.0 / draws;
  }
  CHECK(tv_distance(exact, bayes) <= 0.05);
}

TEST_CASE("randomized response flips at the advertised rate") {
  CHECK(rr_flip_probability(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(rr_flip_probability(std::log(3.0)) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS(rr_flip_probability(-0.1), OutOfRangeError);

  const Graph g(400);
  const Graph noisy = randomized_response(g, std::log(3.0), 11);
  const double pairs = g.pair_count();
  const double rate = edge_distance(g, noisy) / pairs;
  CHECK(std::abs(rate - 0.25) <= 3.0 * std::sqrt(0.25 * 0.75 / pairs));

  // Large epsilon leaves the graph untouched; tiny flip odds are below the
  // generator's resolution.
  const Graph planted = disjoint_cliques(100, 2);
  CHECK(randomized_response(planted, 50.0, 3) == planted);

  CHECK(randomized_response(planted, 1.0, 5) == randomized_response(planted, 1.0, 5));
  CHECK(randomized_response(planted, 1.0, 5) != randomized_response(planted, 1.0, 6));
}

TEST_CASE("rr pipeline recovers a strong planted partition at large epsilon") {
  const Labeling truth = block_labels(100, 2);
  int exact_spectral = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const Graph g = sample_sbm(truth, {0.9, 0.05}, rng);
    const Labeling out =
        rr_pipeline(g, 2, 6.0, EstimatorKind::kSpectral, seed + 1000);
    if (agreement(out, truth) == 1.0) ++exact_spectral;
  }
  CHECK(exact_spectral >= 95);

  const Labeling small_truth = block_labels(60, 2);
  int exact_sdp = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Graph g = sample_sbm(small_truth, {0.9, 0.05}, rng);
    const Labeling out = rr_pipeline(g, 2, 6.0, EstimatorKind::kSdp, seed + 1000);
    if (agreement(out, small_truth) == 1.0) ++exact_sdp;
  }
  CHECK(exact_sdp >= 9);
}

TEST_CASE("rr pipeline at epsilon zero destroys the signal") {
  const Labeling truth = block_labels(100, 2);
  double total = 0.0;
  const int trials = 30;
  for (std::uint64_t seed = 0; seed < trials; ++seed) {
    Rng rng(seed);
    const Graph g = sample_sbm(truth, {0.9, 0.05}, rng);
    total += agreement(rr_pipeline(g, 2, 0.0, EstimatorKind::kSpectral, seed + 500),
                       truth);
  }
  const double mean = total / trials;
  CHECK(mean >= 0.5);
  CHECK(mean <= 0.62);  // best-relabeling agreement of an uncorrelated split
}

TEST_CASE("exact output distributions sum to one") {
  const Graph g = graph_from_edges(4, {{0, 1}, {1, 2}, {2, 3}});
  std::vector<MechanismSpec> specs;
  for (const std::string handle :
       {"bayesian", "exponential", "rr-sdp", "rr-spectral", "stability-mle",
        "stability-sdp", "mle", "sdp", "spectral"}) {
    MechanismSpec spec;
    spec.handle = handle;
    spec.budget = {1.0, 0.2};
    spec.probs = {0.6, 0.2};
    specs.push_back(spec);
  }
  for (const auto& spec : specs) {
    CAPTURE(spec.handle);
    const OutputDistribution dist = exact_output_distribution(spec, g);
    double total = 0.0;
    for (const auto& [key, prob] : dist) {
      CHECK(prob >= 0.0);
      total += prob;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }

  MechanismSpec big;
  big.handle = "exponential";
  CHECK_THROWS_AS(exact_output_distribution(big, Graph(8)), TooLargeError);
}

TEST_CASE("stability release probabilities have closed forms") {
  // Gap-mode, eps=1, delta=0.2: threshold 2 ln 5, scale 2.  A centered
  // statistic of zero releases with probability exactly delta/2.
  MechanismSpec spec;
  spec.handle = "stability-mle";
  spec.budget = {1.0, 0.2};
  spec.mode = StabilityMode::kGapLowerBound;

  const OutputDistribution lone =
      exact_output_distribution(spec, graph_from_edges(4, {{0, 1}}));
  CHECK(lone.at("0011") == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(lone.at("bottom") == doctest::Approx(0.9).epsilon(1e-12));

  const OutputDistribution two =
      exact_output_distribution(spec, graph_from_edges(4, {{0, 1}, {2, 3}}));
  CHECK(two.at("0011") ==
        doctest::Approx(0.16487212707001284).epsilon(1e-12));  // 0.1 sqrt(e)
}

TEST_CASE("exhaustive audit passes the exponential mechanism") {
  MechanismSpec spec;
  spec.handle = "exponential";
  spec.budget.epsilon = 1.0;
  const AuditReport report = dp_audit(spec, 4);
  CHECK(report.graphs == 64);
  CHECK(report.pairs_checked == 384);
  CHECK(report.violations.empty());
  CHECK(report.max_ratio <= std::exp(1.0) * (1.0 + 1e-12));
  CHECK(report.max_ratio > 1.0);
}

TEST_CASE("exhaustive audit passes randomized response with sdp rounding") {
  MechanismSpec spec;
  spec.handle = "rr-sdp";
  spec.budget.epsilon = 1.0;
  const AuditReport report = dp_audit(spec, 4);
  CHECK(report.violations.empty());
  CHECK(report.max_ratio <= std::exp(1.0) * (1.0 + 1e-9));
}

TEST_CASE("the audit flags a mechanism with no privacy at all") {
  MechanismSpec spec;
  spec.handle = "mle";
  spec.budget = {1.0, 0.0};
  const AuditReport report = dp_audit(spec, 4);
  CHECK_FALSE(report.violations.empty());
}

TEST_CASE("audit rejects oversize or incompatible instances") {
  MechanismSpec spec;
  spec.handle = "exponential";
  CHECK_THROWS_AS(dp_audit(spec, 6), TooLargeError);
  spec.r = 3;
  CHECK_THROWS_AS(dp_audit(spec, 4), OutOfRangeError);
}

TEST_CASE("mechanism handles are routed and replay deterministically") {
  CHECK(is_known_mechanism("stability-sdp"));
  CHECK(is_known_mechanism("spectral"));
  CHECK_FALSE(is_known_mechanism("madeup"));
  CHECK(is_private_mechanism("bayesian"));
  CHECK_FALSE(is_private_mechanism("mle"));

  const Graph g = graph_from_edges(4, {{0, 1}, {1, 2}});
  for (const std::string handle :
       {"mle", "sdp", "spectral", "stability-mle", "stability-sdp", "bayesian",
        "exponential", "rr-sdp", "rr-spectral"}) {
    CAPTURE(handle);
    MechanismSpec spec;
    spec.handle = handle;
    spec.budget = {1.0, 0.2};
    spec.probs = {0.6, 0.2};
    const MechanismOutput a = run_mechanism(spec, g, 42);
    const MechanismOutput b = run_mechanism(spec, g, 42);
    CHECK(output_key(a) == output_key(b));
  }

  MechanismSpec unknown;
  unknown.handle = "madeup";
  CHECK_THROWS_AS(run_mechanism(unknown, g, 1), DomainError);
}

TEST_CASE("output keys and bit graphs round-trip") {
  CHECK(output_key({std::nullopt}) == "bottom");
  CHECK(output_key({Labeling{{1, 1, 0, 0}, 2}}) == "0011");

  const Graph g = graph_from_bits(4, 0b100001);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(2, 3));
  CHECK(g.edge_count() == 2);
  CHECK_THROWS_AS(graph_from_bits(4, 1ULL << 6), OutOfRangeError);
}
