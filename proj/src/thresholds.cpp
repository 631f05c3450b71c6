#include "privsbm/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "privsbm/errors.hpp"

namespace privsbm {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

// The mechanism module names the stability handles estimator-first; Table
// queries accept either spelling.
std::string normalized(const std::string& mechanism) {
  if (mechanism == "stability-mle") return "mle-stability";
  if (mechanism == "stability-sdp") return "sdp-stability";
  return mechanism;
}

void validate(const ThresholdQuery& query) {
  if (query.r < 2) throw OutOfRangeError("threshold query needs r >= 2");
  if (!(query.epsilon > 0.0) || !std::isfinite(query.epsilon)) {
    throw OutOfRangeError("threshold query needs finite epsilon > 0");
  }
  if (!std::isfinite(query.a) || !std::isfinite(query.b) || query.b < 0.0 ||
      !(query.a > query.b)) {
    throw OutOfRangeError("threshold query needs a > b >= 0");
  }
}

}  // namespace

ThresholdReport threshold_gap(const ThresholdQuery& query) {
  validate(query);
  const std::string mech = normalized(query.mechanism);
  const double r = static_cast<double>(query.r);
  const double eps = query.epsilon;

  double required = 0.0;
  if (mech == "non-private") {
    required = std::sqrt(r);
  } else if (mech == "mle-stability") {
    required = query.r == 2
                   ? kSqrt2 * std::sqrt(1.0 + 1.0 / eps)
                   : std::sqrt(r) *
                         std::sqrt(1.0 + (2.0 + std::log(query.a / query.b)) / eps);
  } else if (mech == "sdp-stability") {
    required = 4.0 * std::sqrt(r) * (1.0 + 1.0 / std::sqrt(eps));
  } else if (mech == "bayesian") {
    if (query.r != 2) {
      throw UnsupportedCombinationError("bayesian threshold is stated for r = 2 only");
    }
    const double floor = epsilon_floor_bayesian(query.a, query.b);
    if (eps < floor) {
      throw EpsilonBelowFloorError("bayesian sampling is private only for epsilon >= log(a/b)");
    }
    required = std::max(kSqrt2, 2.0 / ((kSqrt2 - 1.0) * (1.0 - std::exp(-floor))));
  } else if (mech == "exponential") {
    required = std::max(std::sqrt(r), 2.0 / ((kSqrt2 - 1.0) * eps));
  } else if (mech == "rr-sdp") {
    if (query.r != 2) {
      throw UnsupportedCombinationError("rr-sdp threshold is stated for r = 2 only");
    }
    const double grow = std::exp(eps);
    required = kSqrt2 * std::sqrt((grow + 1.0) / (grow - 1.0)) +
               1.0 / std::sqrt(grow - 1.0);
  } else {
    throw UnsupportedCombinationError("no recovery threshold for mechanism: " +
                                      query.mechanism);
  }

  ThresholdReport report;
  report.required = required;
  report.attained = std::sqrt(query.a) - std::sqrt(query.b);
  report.satisfied = report.attained > required;
  return report;
}

double epsilon_floor_bayesian(double a, double b) {
  if (!(b > 0.0) || !(a > b) || !std::isfinite(a)) {
    throw DomainError("bayesian privacy floor needs a > b > 0");
  }
  return std::log(a / b);
}

double epsilon_exact_bayesian(const EdgeProbs& probs) {
  if (!(probs.q > 0.0) || !(probs.p < 1.0) || probs.p < probs.q) {
    throw DomainError("exact bayesian bound needs 0 < q <= p < 1");
  }
  return std::log(probs.p * (1.0 - probs.q)) -
         std::log(probs.q * (1.0 - probs.p));
}

SbmParams perturbed_params(const SbmParams& params, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw OutOfRangeError("perturbed rates need finite epsilon > 0");
  }
  if (params.n < 2 || params.b < 0.0 || params.a < params.b) {
    throw OutOfRangeError("perturbed rates need n >= 2 and a >= b >= 0");
  }
  const double grow = std::exp(epsilon);
  const double noise_rate =
      params.n / ((grow + 1.0) * std::log(static_cast<double>(params.n)));
  const double shrink = (grow - 1.0) / (grow + 1.0);
  SbmParams out = params;
  out.a = noise_rate + shrink * params.a;
  out.b = noise_rate + shrink * params.b;
  return out;
}

EdgeProbs perturbed_edge_probs(const EdgeProbs& probs, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw OutOfRangeError("perturbed probabilities need finite epsilon > 0");
  }
  if (probs.p < 0.0 || probs.p > 1.0 || probs.q < 0.0 || probs.q > 1.0) {
    throw OutOfRangeError("perturbed probabilities need p, q in [0, 1]");
  }
  const double mu = 1.0 / (std::exp(epsilon) + 1.0);
  return {probs.p * (1.0 - mu) + (1.0 - probs.p) * mu,
          probs.q * (1.0 - mu) + (1.0 - probs.q) * mu};
}

double rr_epsilon_requirement(double n) {
  if (!(n >= 3.0) || !std::isfinite(n)) {
    throw OutOfRangeError("randomized-response scaling needs n >= 3");
  }
  return std::log(n) - std::log(std::log(n));
}

}  // namespace privsbm
