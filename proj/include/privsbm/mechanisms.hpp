#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "privsbm/estimators.hpp"
#include "privsbm/graph.hpp"

namespace privsbm {

struct PrivacyBudget {
  double epsilon = 1.0;
  double delta = 0.0;
};

// Deterministic labeling function of a graph; what the stability search
// perturbs.  Must carry its own tie-breaking (all built-in estimators do).
using EstimatorFn = std::function<Labeling(const Graph&)>;

enum class StabilityMode { kExactCapped, kGapLowerBound };

struct StabilityReport {
  int value = 0;        // min(d, cap) for exact mode, the cut gap otherwise
  bool capped = false;  // exact search exhausted the cap without a change
  StabilityMode mode = StabilityMode::kExactCapped;
  int sensitivity = 1;  // 1 for exact mode, 2 for the gap statistic
  // True when the gap was taken over single-swap neighbors only (large n).
  // Heuristic values can overstate stability; the audit-grade guarantees
  // apply to the exhaustive modes only.
  bool heuristic = false;
};

// Default BFS cap, matching the release threshold's scale: ceil(2 log(n) / epsilon) + 1.
int default_stability_cap(int n, double epsilon);

// Smallest k <= cap such that toggling some set of k pairs changes the
// estimator's output, found by breadth-first search over flip sets of
// growing size (within each size, pairs in index order).  Every candidate
// costs one estimator run; the search throws TooLargeError before starting
// a level that would push total runs past eval_budget.
StabilityReport capped_stability(const Graph& g, const EstimatorFn& estimator,
                                 int cap, std::int64_t eval_budget = 2'000'000);

// Second-best balanced cut minus best balanced cut, by exhaustive
// enumeration; a lower bound on the exact stability of the MLE (one flip
// moves any cut difference by at most 1) with sensitivity 2.
StabilityReport gap_statistic(const Graph& g, int r);

// Single-swap variant for n beyond the exhaustive cap: anchors at sigma and
// minimizes over labelings that swap one pair of vertices across
// communities.  Marked heuristic in the report.
StabilityReport local_gap_statistic(const Graph& g, const Labeling& sigma);

// Either a labeling or the bottom symbol (withheld output).
struct MechanismOutput {
  std::optional<Labeling> labeling;
  bool is_bottom() const { return !labeling.has_value(); }
};

enum class EstimatorKind { kMle, kSdp, kSpectral };

// Propose-test-release: computes the stability statistic of the estimate,
// adds Laplace(sensitivity/epsilon) noise to its instability-centered form
// (statistic - 1, clamped at 0, so graphs whose output a single flip can
// change sit exactly at 0), and releases the estimate only when the noisy
// value clears sensitivity * log(1/delta) / epsilon.  Requires delta > 0.
MechanismOutput stability_mechanism(const Graph& g, EstimatorKind estimator,
                                    int r, const PrivacyBudget& budget,
                                    StabilityMode mode, std::uint64_t seed,
                                    int cap = 0,  // 0: default_stability_cap
                                    const SolverConfig& solver = {});

// Exact posterior sampling over balanced partitions under the SBM
// likelihood, uniform prior.  epsilon-DP for epsilon >= log(p(1-q)/(q(1-p))).
// Requires p >= q (equality gives the uniform distribution).
Labeling bayesian_mechanism(const Graph& g, int r, const EdgeProbs& probs,
                            std::uint64_t seed);

// Exponential mechanism with score = inter-community edges and weight
// exp(-epsilon * score).  The full epsilon (not epsilon/2) is correct here:
// one edge flip moves every partition's score by 0 or 1 in the same
// direction, so the normalizing constants already absorb half the usual
// sensitivity cost.  Exact enumeration within the cap; beyond it a
// Metropolis pair-swap chain with 50 n^2 burn-in steps (approximate; audit
// guarantees apply to the exact mode only).
enum class SamplingMode { kAuto, kExact, kChain };
Labeling exponential_mechanism(const Graph& g, int r, double epsilon,
                               std::uint64_t seed,
                               SamplingMode mode = SamplingMode::kAuto);
Labeling bayesian_mechanism_chain(const Graph& g, int r, const EdgeProbs& probs,
                                  std::uint64_t seed);

// Randomized response on edges: toggles each pair independently with
// probability mu = 1 / (e^epsilon + 1), walking pairs in index order.
// epsilon = 0 degenerates to a fair coin per pair.
Graph randomized_response(const Graph& g, double epsilon, std::uint64_t seed);
double rr_flip_probability(double epsilon);

// Randomized response followed by a non-private estimator on the noisy
// graph.  The estimator sees only the privatized graph, so the composition
// inherits the epsilon of the flip step.
Labeling rr_pipeline(const Graph& g, int r, double epsilon,
                     EstimatorKind estimator, std::uint64_t seed,
                     const SolverConfig& solver = {});

// Identifies one mechanism configuration for audits and experiments.
// Handles: stability-mle, stability-sdp, bayesian, exponential, rr-sdp,
// rr-spectral, and the non-private baselines mle, sdp, spectral.
struct MechanismSpec {
  std::string handle = "exponential";
  int r = 2;
  PrivacyBudget budget;
  EdgeProbs probs;                                    // bayesian only
  StabilityMode mode = StabilityMode::kGapLowerBound; // stability only
  int cap = 0;
  SolverConfig solver;
};

MechanismOutput run_mechanism(const MechanismSpec& spec, const Graph& g,
                              std::uint64_t seed);
bool is_known_mechanism(const std::string& handle);
bool is_private_mechanism(const std::string& handle);

// Exact output distribution of a mechanism on one small graph, keyed by the
// canonical label string ("0011", ...) with "bottom" for withheld outputs.
// Bayesian/exponential: normalized weight enumeration.  RR pipelines:
// exhaustive sum over all perturbed graphs.  Stability: closed-form Laplace
// tail for the release event.  Probabilities sum to 1 within 1e-12.
using OutputDistribution = std::map<std::string, double>;
OutputDistribution exact_output_distribution(const MechanismSpec& spec,
                                             const Graph& g);
std::string output_key(const MechanismOutput& output);

// Exhaustive differential privacy audit at size n: for every graph on n
// vertices and every single-edge neighbor, checks
//   P(o | G) <= e^epsilon P(o | G') + delta
// for every output o, using exact output distributions.  max_ratio reports
// the largest (P(o|G) - delta) / P(o|G') over pairs with P(o|G') > 0.
struct AuditViolation {
  std::uint64_t graph_bits = 0;
  std::uint64_t neighbor_bits = 0;
  std::string output;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct AuditReport {
  int graphs = 0;
  int pairs_checked = 0;
  double max_ratio = 0.0;
  std::uint64_t worst_graph_bits = 0;
  std::uint64_t worst_neighbor_bits = 0;
  std::string worst_output;
  std::vector<AuditViolation> violations;  // capped at 64 entries
};

AuditReport dp_audit(const MechanismSpec& spec, int n);

// Graph whose pair p is edge iff bit p of `bits` is set; audit enumeration
// order.
Graph graph_from_bits(int n, std::uint64_t bits);

}  // namespace privsbm
