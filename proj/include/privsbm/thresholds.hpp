#pragma once

#include <string>

#include "privsbm/graph.hpp"

namespace privsbm {

// Closed-form recovery thresholds: each private mechanism recovers the
// planted partition exactly (with high probability, as n grows) when
// sqrt(a) - sqrt(b) clears a mechanism-specific requirement.
struct ThresholdQuery {
  std::string mechanism = "non-private";  // non-private, mle-stability,
                                          // sdp-stability, bayesian,
                                          // exponential, rr-sdp
  int r = 2;
  double a = 0.0;
  double b = 0.0;
  double epsilon = 1.0;
};

struct ThresholdReport {
  double required = 0.0;  // threshold on sqrt(a) - sqrt(b)
  double attained = 0.0;  // sqrt(a) - sqrt(b)
  bool satisfied = false; // attained > required (strict)
};

// Requirements by mechanism:
//   non-private    sqrt(r)
//   mle-stability  r=2: sqrt(2) sqrt(1 + 1/eps)
//                  r>2: sqrt(r) sqrt(1 + (2 + log(a/b))/eps)
//   sdp-stability  4 sqrt(r) (1 + 1/sqrt(eps))
//   bayesian       max[sqrt(2), 2/((sqrt(2)-1)(1 - e^{-eps0}))], eps0 = log(a/b);
//                  queries with epsilon < eps0 throw EpsilonBelowFloorError
//   exponential    max[sqrt(r), 2/((sqrt(2)-1) eps)]
//   rr-sdp         sqrt(2) sqrt((e^eps+1)/(e^eps-1)) + 1/sqrt(e^eps - 1)
// bayesian and rr-sdp are defined for r = 2 only; other combinations throw
// UnsupportedCombinationError.
ThresholdReport threshold_gap(const ThresholdQuery& query);

// Smallest epsilon at which the posterior-sampling mechanism is private:
// log(a/b) in the dense parametrization.
double epsilon_floor_bayesian(double a, double b);

// Exact per-pair bound for the posterior sampler at concrete probabilities:
// log(p(1-q) / (q(1-p))).
double epsilon_exact_bayesian(const EdgeProbs& probs);

// Effective SBM rates after randomized response with flip probability
// mu = 1/(e^eps + 1):
//   a_n = n / ((e^eps + 1) log n) + ((e^eps - 1)/(e^eps + 1)) a
// and the same for b.  Equivalent to p~ = p(1-mu) + (1-p)mu on the
// probability scale, which perturbed_edge_probs returns.
SbmParams perturbed_params(const SbmParams& params, double epsilon);
EdgeProbs perturbed_edge_probs(const EdgeProbs& probs, double epsilon);

// Privacy level at which randomized response keeps enough signal for exact
// recovery in the dense regime: log(n) - log(log(n)).  Takes n as a real so
// the scaling curve can be evaluated off the integer grid.
double rr_epsilon_requirement(double n);

}  // namespace privsbm
