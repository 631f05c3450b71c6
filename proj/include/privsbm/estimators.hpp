#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "privsbm/graph.hpp"

namespace privsbm {

// Exhaustive search caps.  Beyond these the partition space is too large to
// enumerate and the exhaustive estimators throw TooLargeError.
constexpr int kMleCapR2 = 24;
constexpr int kMleCapR3 = 15;
constexpr double kMaxEnumeratedPartitions = 3.0e6;

// True when (n, r) is inside the exhaustive-enumeration budget.
bool within_exhaustive_cap(int n, int r);

// Maximum-likelihood estimate under the p > q model: the balanced labeling
// minimizing inter-community edges.  Ties break to the lexicographically
// smallest canonical assignment (vertex 0 in community 0, the first vertex
// outside it in community 1, ...).  Throws TooLargeError beyond the caps.
Labeling mle_exact(const Graph& g, int r);

// Like mle_exact but also reports the two best balanced cut values.
struct CutLandscape {
  Labeling best;
  int best_cut = 0;
  int second_cut = 0;  // minimum over partitions other than `best`
};
CutLandscape cut_landscape(const Graph& g, int r);

struct SolverConfig {
  double tolerance = 1e-6;
  int max_iterations = 5000;
  double penalty = 1.0;  // ADMM rho
};

// Feasibility residuals of the returned iterate, all in max-norm.
struct SdpResiduals {
  double psd_floor = 0.0;       // max(0, -lambda_min)
  double diag_dev = 0.0;        // max |X_ii - 1|
  double balance_dev = 0.0;     // r=2: |sum X| / n^2;  r>2: max row-sum gap
  double entrywise_floor = 0.0; // r>2: max(0, -min X_ij), 0 for r=2
};

struct SdpSolution {
  Eigen::MatrixXd matrix;
  double objective = 0.0;
  SdpResiduals residuals;
  int iterations = 0;
  bool converged = false;
};

// Semidefinite relaxation of the balanced cut problem, maximizing tr(A*X).
//   r = 2:  X psd, X_ii = 1, sum of entries 0
//   r > 2:  X psd, X_ii = 1, X >= 0 entrywise, row sums n/r
// Solved by ADMM splitting: affine projection (closed form for r = 2,
// Dykstra passes over {diag}, {row sums}, {nonnegativity} for r > 2)
// alternating with a PSD projection that clips negative eigenvalues, the
// gradient of the objective folded into the affine step.  If max_iterations
// is hit, returns the best iterate with converged = false.
SdpSolution sdp_solve(const Graph& g, int r, const SolverConfig& config = {});

// Rounds an SDP iterate to a balanced labeling.  r = 2: sign split of the
// leading eigenvector, repaired to balance by flipping lowest-margin
// vertices.  r > 2: k-means (fixed restarts, internally seeded) on the
// top-r eigenvector embedding, then greedy lowest-margin balance repair.
// Throws DegenerateSpectrumError when the leading eigenspace carries no
// sign information (aligned with the all-ones direction).
Labeling round_solution(const SdpSolution& solution, int r);

// Spectral baseline: r = 2 splits on the sign of the leading eigenvector of
// the centered adjacency P*A*P with P = I - J/n (equivalently, A's second
// eigenvector once the all-ones direction is removed); r > 2 runs k-means
// on the top-r eigenvector embedding of A.  Balance-repaired, deterministic.
Labeling spectral_estimate(const Graph& g, int r);

struct ConcentrationParams {
  double c1 = 1.0;
  double c2 = 1.0;
  double c3 = 1.0;
};

struct ConcentrationReport {
  bool cond1 = false;  // min_i (s_i - r_i) > c1 * log n
  bool cond2 = false;  // ||A - E[A]||_2 <= c2 * sqrt(log n)
  bool cond3 = false;  // community averages of r_i <= (n/r) q + c3 sqrt(log n)
  double degree_margin = 0.0;       // attained min_i (s_i - r_i)
  double spectral_norm = 0.0;       // attained ||A - E[A]||_2
  double max_community_avg = 0.0;   // attained max_k mean_{i in C_k} r_i
  bool all() const { return cond1 && cond2 && cond3; }
};

// Checks the three-part concentration conditions of the model at a given
// ground truth: per-vertex degree margins, spectral deviation from the
// expected adjacency, and community-averaged cross degrees.
ConcentrationReport concentration_check(const Graph& g, const Labeling& truth,
                                        const EdgeProbs& probs,
                                        const ConcentrationParams& params = {});
ConcentrationReport concentration_check(const Graph& g, const Labeling& truth,
                                        const SbmParams& params,
                                        const ConcentrationParams& consts = {});

}  // namespace privsbm
