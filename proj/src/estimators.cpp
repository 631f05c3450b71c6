#include "privsbm/estimators.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "privsbm/errors.hpp"
#include "privsbm/rng.hpp"

namespace privsbm {

namespace {

constexpr std::uint64_t kKmeansSeed = 0x5eedc0de1234abcdULL;

int popcount(std::uint64_t x) { return __builtin_popcountll(x); }

}  // namespace

bool within_exhaustive_cap(int n, int r) {
  if (n < 2 || r < 2 || n % r != 0 || n > 64) return false;
  if (r == 2) return n <= kMleCapR2;
  if (r == 3) return n <= kMleCapR3;
  return count_balanced_partitions(n, r) <= kMaxEnumeratedPartitions;
}

namespace {

void require_cap(const Graph& g, int r) {
  if (r < 2) throw OutOfRangeError("estimator: r must be >= 2");
  if (g.n() % r != 0) throw OutOfRangeError("estimator: r must divide n");
  if (!within_exhaustive_cap(g.n(), r)) {
    throw TooLargeError("exhaustive search beyond cap at n = " +
                        std::to_string(g.n()) + ", r = " + std::to_string(r));
  }
}

// r = 2 enumeration over vertex subsets containing 0, in lexicographic
// member order, which visits canonical assignments in lexicographic order.
// Strict improvement therefore leaves `best` at the lexicographically
// smallest canonical argmin, the documented tie-break.
CutLandscape landscape_r2(const Graph& g) {
  const int n = g.n();
  const int half = n / 2;
  const auto adj = g.adjacency_masks();

  std::vector<int> members(static_cast<std::size_t>(half));
  std::iota(members.begin(), members.end(), 0);  // members[0] stays 0

  CutLandscape out;
  out.best_cut = std::numeric_limits<int>::max();
  out.second_cut = std::numeric_limits<int>::max();
  std::uint64_t best_mask = 0;

  for (;;) {
    std::uint64_t mask = 0;
    for (int v : members) mask |= 1ULL << v;
    int cut = 0;
    for (int v : members) cut += popcount(adj[v] & ~mask);
    if (cut < out.best_cut) {
      out.second_cut = out.best_cut;
      out.best_cut = cut;
      best_mask = mask;
    } else {
      out.second_cut = std::min(out.second_cut, cut);
    }

    // Next subset of {1..n-1} of size half-1, lexicographic.
    int pos = half - 1;
    while (pos >= 1 && members[pos] == n - half + pos) --pos;
    if (pos < 1) break;
    ++members[pos];
    for (int k = pos + 1; k < half; ++k) members[k] = members[k - 1] + 1;
  }

  out.best.r = 2;
  out.best.labels.assign(static_cast<std::size_t>(n), 1);
  for (int v = 0; v < n; ++v) {
    if ((best_mask >> v) & 1ULL) out.best.labels[v] = 0;
  }
  return out;
}

struct GeneralLandscapeState {
  const std::vector<std::uint64_t>* adj = nullptr;
  std::vector<int> assign;
  std::vector<int> sizes;
  std::vector<std::uint64_t> label_masks;
  std::uint64_t assigned_mask = 0;
  int quota = 0;
  int r = 0;
  CutLandscape out;
  std::vector<int> best_assign;
};

void landscape_recurse(GeneralLandscapeState& st, int vertex, int used, int cross) {
  const int n = static_cast<int>(st.assign.size());
  if (vertex == n) {
    if (cross < st.out.best_cut) {
      st.out.second_cut = st.out.best_cut;
      st.out.best_cut = cross;
      st.best_assign = st.assign;
    } else {
      st.out.second_cut = std::min(st.out.second_cut, cross);
    }
    return;
  }
  const std::uint64_t nbrs = (*st.adj)[vertex];
  const int assigned_nbrs = popcount(nbrs & st.assigned_mask);
  const int limit = std::min(used + 1, st.r);
  for (int c = 0; c < limit; ++c) {
    if (st.sizes[c] == st.quota) continue;
    const int added_cross = assigned_nbrs - popcount(nbrs & st.label_masks[c]);
    st.assign[vertex] = c;
    ++st.sizes[c];
    st.label_masks[c] |= 1ULL << vertex;
    st.assigned_mask |= 1ULL << vertex;
    landscape_recurse(st, vertex + 1, std::max(used, c + 1), cross + added_cross);
    st.assigned_mask &= ~(1ULL << vertex);
    st.label_masks[c] &= ~(1ULL << vertex);
    --st.sizes[c];
  }
}

CutLandscape landscape_general(const Graph& g, int r) {
  const auto adj = g.adjacency_masks();
  GeneralLandscapeState st;
  st.adj = &adj;
  st.assign.assign(static_cast<std::size_t>(g.n()), 0);
  st.sizes.assign(static_cast<std::size_t>(r), 0);
  st.label_masks.assign(static_cast<std::size_t>(r), 0);
  st.quota = g.n() / r;
  st.r = r;
  st.out.best_cut = std::numeric_limits<int>::max();
  st.out.second_cut = std::numeric_limits<int>::max();
  landscape_recurse(st, 0, 0, 0);
  st.out.best.labels = st.best_assign;
  st.out.best.r = r;
  return st.out;
}

}  // namespace

CutLandscape cut_landscape(const Graph& g, int r) {
  require_cap(g, r);
  CutLandscape out = r == 2 ? landscape_r2(g) : landscape_general(g, r);
  // A single-partition space (n == r) has no runner-up; report a gap larger
  // than any cut can be, which is constant in g and so has sensitivity 0.
  if (out.second_cut == std::numeric_limits<int>::max()) {
    out.second_cut = out.best_cut + g.pair_count() + 1;
  }
  return out;
}

Labeling mle_exact(const Graph& g, int r) { return cut_landscape(g, r).best; }

// ----------------------------------------------------------------------
// SDP relaxation by ADMM splitting.

namespace {

// Orthogonal projection onto {X symmetric : diag X = 1, sum X = 0}.
// Writing X = M + diag(lambda) + mu J and solving the two constraint
// families gives mu in closed form.
void project_affine_r2(Eigen::MatrixXd& m) {
  const auto n = static_cast<double>(m.rows());
  const double mu = (m.trace() - n - m.sum()) / (n * n - n);
  m.array() += mu;
  m.diagonal().setOnes();
}

// Projection onto {X symmetric : X 1 = k 1} within symmetric matrices:
// X = M + lambda 1^T + 1 lambda^T with lambda solved from the row sums.
void project_row_sums(Eigen::MatrixXd& m, double k) {
  const auto n = static_cast<double>(m.rows());
  const double c = (k * n - m.sum()) / (2.0 * n);
  const Eigen::VectorXd lambda =
      (Eigen::VectorXd::Constant(m.rows(), k) - m.rowwise().sum() -
       Eigen::VectorXd::Constant(m.rows(), c)) /
      n;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.rows());
  m += lambda * ones.transpose() + ones * lambda.transpose();
}

// Dykstra alternating projections onto {diag = 1}, {row sums = k}, {X >= 0}.
// Correction terms make the limit the true projection onto the
// intersection, not just a feasible point.
void project_affine_general(Eigen::MatrixXd& m, double k, double tol) {
  const auto n = m.rows();
  Eigen::MatrixXd inc_diag = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd inc_rows = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd inc_pos = Eigen::MatrixXd::Zero(n, n);
  for (int pass = 0; pass < 80; ++pass) {
    Eigen::MatrixXd before = m + inc_diag;
    m = before;
    m.diagonal().setOnes();
    inc_diag = before - m;

    before = m + inc_rows;
    m = before;
    project_row_sums(m, k);
    inc_rows = before - m;

    before = m + inc_pos;
    m = before.cwiseMax(0.0);
    inc_pos = before - m;

    const double row_dev = (m.rowwise().sum().array() - k).abs().maxCoeff();
    const double diag_dev = (m.diagonal().array() - 1.0).abs().maxCoeff();
    if (row_dev <= tol && diag_dev <= tol && m.minCoeff() >= -tol) break;
  }
}

}  // namespace

SdpSolution sdp_solve(const Graph& g, int r, const SolverConfig& config) {
  if (r < 2) throw OutOfRangeError("sdp_solve: r must be >= 2");
  if (g.n() % r != 0) throw OutOfRangeError("sdp_solve: r must divide n");
  if (config.tolerance <= 0.0 || config.max_iterations < 1 || config.penalty <= 0.0) {
    throw OutOfRangeError("sdp_solve: bad solver configuration");
  }
  const int n = g.n();
  const Eigen::MatrixXd a = g.adjacency_matrix();
  const double row_target = static_cast<double>(n) / r;
  const double affine_tol = 0.1 * config.tolerance;

  double rho = config.penalty;
  Eigen::MatrixXd x = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd y = x;
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, n);

  SdpSolution solution;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  int iter = 0;
  bool converged = false;
  for (; iter < config.max_iterations; ++iter) {
    // Affine step with the objective ascent folded in.
    x = y - u + a / rho;
    if (r == 2) {
      project_affine_r2(x);
    } else {
      project_affine_general(x, row_target, affine_tol);
    }

    // PSD projection: clip negative eigenvalues.
    const Eigen::MatrixXd y_prev = y;
    eig.compute(x + u);
    y = eig.eigenvectors() *
        eig.eigenvalues().cwiseMax(0.0).asDiagonal() *
        eig.eigenvectors().transpose();
    u += x - y;

    const double primal = (x - y).cwiseAbs().maxCoeff();
    const double dual = (y - y_prev).cwiseAbs().maxCoeff();
    if (primal <= config.tolerance && dual <= config.tolerance) {
      converged = true;
      ++iter;
      break;
    }
    // Residual balancing keeps the two rates comparable; the scaled dual
    // must shrink when rho grows.
    if (primal > 10.0 * dual && rho < 1e4) {
      rho *= 2.0;
      u /= 2.0;
    } else if (dual > 10.0 * primal && rho > 1e-4) {
      rho /= 2.0;
      u *= 2.0;
    }
  }

  solution.matrix = 0.5 * (x + x.transpose());
  solution.objective = (a * solution.matrix).trace();
  solution.iterations = iter;
  solution.converged = converged;

  eig.compute(solution.matrix);
  solution.residuals.psd_floor = std::max(0.0, -eig.eigenvalues().minCoeff());
  solution.residuals.diag_dev =
      (solution.matrix.diagonal().array() - 1.0).abs().maxCoeff();
  if (r == 2) {
    solution.residuals.balance_dev =
        std::abs(solution.matrix.sum()) / (static_cast<double>(n) * n);
    solution.residuals.entrywise_floor = 0.0;
  } else {
    solution.residuals.balance_dev =
        (solution.matrix.rowwise().sum().array() - row_target).abs().maxCoeff();
    solution.residuals.entrywise_floor =
        std::max(0.0, -solution.matrix.minCoeff());
  }
  return solution;
}

// ----------------------------------------------------------------------
// Rounding and the spectral baseline.

namespace {

Labeling balance_repair_r2(const Eigen::VectorXd& v) {
  const int n = static_cast<int>(v.size());
  Labeling sigma;
  sigma.r = 2;
  sigma.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) sigma.labels[i] = v[i] > 0.0 ? 0 : 1;

  // Move lowest-|margin| vertices from the big side until balanced.
  auto count0 = static_cast<int>(
      std::count(sigma.labels.begin(), sigma.labels.end(), 0));
  const int target = n / 2;
  if (count0 != target) {
    const int from = count0 > target ? 0 : 1;
    int excess = std::abs(count0 - target);
    std::vector<int> candidates;
    for (int i = 0; i < n; ++i) {
      if (sigma.labels[i] == from) candidates.push_back(i);
    }
    std::sort(candidates.begin(), candidates.end(), [&](int lhs, int rhs) {
      const double ml = std::abs(v[lhs]), mr = std::abs(v[rhs]);
      return ml != mr ? ml < mr : lhs < rhs;
    });
    for (int k = 0; k < excess; ++k) sigma.labels[candidates[k]] = 1 - from;
  }
  return canonical_form(sigma);
}

void check_not_ones_aligned(const Eigen::VectorXd& v) {
  const double align =
      std::abs(v.sum()) / (v.norm() * std::sqrt(static_cast<double>(v.size())));
  if (align > 1.0 - 1e-6) {
    throw DegenerateSpectrumError(
        "leading eigenvector carries no sign information (all-ones direction)");
  }
}

double sq_dist(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  return (a - b).squaredNorm();
}

// Lloyd k-means with k-means++ seeding, fixed restarts, then a greedy
// balance repair that moves lowest-margin vertices out of over-quota
// clusters.  Deterministic: all randomness comes from the seed argument.
Labeling balanced_kmeans(const Eigen::MatrixXd& points, int r, std::uint64_t seed) {
  const int n = static_cast<int>(points.rows());
  const int quota = n / r;
  Rng rng(seed);

  std::vector<int> best_assign;
  double best_inertia = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < 50; ++restart) {
    // k-means++ seeding.
    Eigen::MatrixXd centers(r, points.cols());
    centers.row(0) = points.row(static_cast<int>(rng.below(n)));
    Eigen::VectorXd dist2 = Eigen::VectorXd::Constant(n, 0.0);
    for (int i = 0; i < n; ++i) dist2[i] = sq_dist(points.row(i), centers.row(0));
    for (int c = 1; c < r; ++c) {
      const double total = dist2.sum();
      int pick = 0;
      if (total > 0.0) {
        double target = rng.uniform01() * total;
        for (; pick < n - 1; ++pick) {
          target -= dist2[pick];
          if (target <= 0.0) break;
        }
      } else {
        pick = static_cast<int>(rng.below(n));
      }
      centers.row(c) = points.row(pick);
      for (int i = 0; i < n; ++i) {
        dist2[i] = std::min(dist2[i], sq_dist(points.row(i), centers.row(c)));
      }
    }

    std::vector<int> assign(static_cast<std::size_t>(n), 0);
    for (int round = 0; round < 100; ++round) {
      bool changed = false;
      for (int i = 0; i < n; ++i) {
        int arg = 0;
        double best = sq_dist(points.row(i), centers.row(0));
        for (int c = 1; c < r; ++c) {
          const double d = sq_dist(points.row(i), centers.row(c));
          if (d < best) {
            best = d;
            arg = c;
          }
        }
        if (assign[i] != arg) {
          assign[i] = arg;
          changed = true;
        }
      }
      centers.setZero();
      Eigen::VectorXi sizes = Eigen::VectorXi::Zero(r);
      for (int i = 0; i < n; ++i) {
        centers.row(assign[i]) += points.row(i);
        ++sizes[assign[i]];
      }
      for (int c = 0; c < r; ++c) {
        if (sizes[c] > 0) centers.row(c) /= sizes[c];
      }
      if (!changed) break;
    }

    double inertia = 0.0;
    for (int i = 0; i < n; ++i) {
      inertia += sq_dist(points.row(i), centers.row(assign[i]));
    }
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_assign = assign;
    }
  }

  // Greedy balance repair against the final centers of the winning run.
  Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(r, points.cols());
  Eigen::VectorXi sizes = Eigen::VectorXi::Zero(r);
  for (int i = 0; i < n; ++i) {
    centers.row(best_assign[i]) += points.row(i);
    ++sizes[best_assign[i]];
  }
  for (int c = 0; c < r; ++c) {
    if (sizes[c] > 0) centers.row(c) /= sizes[c];
  }
  for (;;) {
    int over = -1;
    for (int c = 0; c < r; ++c) {
      if (sizes[c] > quota) {
        over = c;
        break;
      }
    }
    if (over < 0) break;
    int move_vertex = -1, move_to = -1;
    double move_cost = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (best_assign[i] != over) continue;
      for (int c = 0; c < r; ++c) {
        if (sizes[c] >= quota) continue;
        const double cost = sq_dist(points.row(i), centers.row(c)) -
                            sq_dist(points.row(i), centers.row(over));
        if (cost < move_cost) {
          move_cost = cost;
          move_vertex = i;
          move_to = c;
        }
      }
    }
    best_assign[move_vertex] = move_to;
    --sizes[over];
    ++sizes[move_to];
  }

  Labeling sigma;
  sigma.r = r;
  sigma.labels = best_assign;
  return canonical_form(sigma);
}

Labeling round_matrix(const Eigen::MatrixXd& m, int r) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  const int n = static_cast<int>(m.rows());
  if (r == 2) {
    const Eigen::VectorXd v = eig.eigenvectors().col(n - 1);
    check_not_ones_aligned(v);
    return balance_repair_r2(v);
  }
  // Top-r embedding weighted by the positive part of the spectrum.
  Eigen::MatrixXd points(n, r);
  for (int c = 0; c < r; ++c) {
    const int col = n - 1 - c;
    const double lambda = std::max(0.0, eig.eigenvalues()[col]);
    points.col(c) = eig.eigenvectors().col(col) * std::sqrt(lambda);
  }
  return balanced_kmeans(points, r, kKmeansSeed);
}

}  // namespace

Labeling round_solution(const SdpSolution& solution, int r) {
  if (r < 2) throw OutOfRangeError("round_solution: r must be >= 2");
  const int n = static_cast<int>(solution.matrix.rows());
  if (n < 2 || n % r != 0) {
    throw OutOfRangeError("round_solution: matrix size incompatible with r");
  }
  return round_matrix(solution.matrix, r);
}

Labeling spectral_estimate(const Graph& g, int r) {
  if (r < 2) throw OutOfRangeError("spectral_estimate: r must be >= 2");
  if (g.n() % r != 0) throw OutOfRangeError("spectral_estimate: r must divide n");
  const int n = g.n();
  const Eigen::MatrixXd a = g.adjacency_matrix();

  if (r == 2) {
    // Double centering projects out the all-ones direction, so the leading
    // eigenvector here is A's community eigenvector even when A's top two
    // eigenvalues tie (disjoint cliques).
    const Eigen::VectorXd row_sums = a.rowwise().sum();
    const double total = row_sums.sum();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    Eigen::MatrixXd b = a - (row_sums * ones.transpose()) / n -
                        (ones * row_sums.transpose()) / n +
                        Eigen::MatrixXd::Constant(n, n, total / (static_cast<double>(n) * n));
    if (b.cwiseAbs().maxCoeff() < 1e-12) {
      throw DegenerateSpectrumError(
          "centered adjacency vanishes: no spectral signal to split on");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
    const Eigen::VectorXd v = eig.eigenvectors().col(n - 1);
    check_not_ones_aligned(v);
    return balance_repair_r2(v);
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  Eigen::MatrixXd points(n, r);
  for (int c = 0; c < r; ++c) points.col(c) = eig.eigenvectors().col(n - 1 - c);
  return balanced_kmeans(points, r, kKmeansSeed);
}

// ----------------------------------------------------------------------
// Concentration conditions.

ConcentrationReport concentration_check(const Graph& g, const Labeling& truth,
                                        const EdgeProbs& probs,
                                        const ConcentrationParams& params) {
  require_balanced(truth);
  if (truth.n() != g.n()) {
    throw SizeMismatchError("concentration_check: labeling size != graph size");
  }
  const int n = g.n();
  const int r = truth.r;
  const double group = static_cast<double>(n) / r;
  const double log_n = std::log(static_cast<double>(n));

  // s_i: same-community neighbors; r_i: max neighbors in one other community.
  std::vector<int> s(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> by_comm(static_cast<std::size_t>(n),
                                        std::vector<int>(static_cast<std::size_t>(r), 0));
  for (const auto& [i, j] : g.edges()) {
    ++by_comm[i][truth.labels[j]];
    ++by_comm[j][truth.labels[i]];
  }
  std::vector<int> cross_max(static_cast<std::size_t>(n), 0);
  double degree_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    s[i] = by_comm[i][truth.labels[i]];
    int worst = 0;
    for (int c = 0; c < r; ++c) {
      if (c != truth.labels[i]) worst = std::max(worst, by_comm[i][c]);
    }
    cross_max[i] = worst;
    degree_margin = std::min(degree_margin, static_cast<double>(s[i] - worst));
  }

  Eigen::MatrixXd expected(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      expected(i, j) =
          i == j ? 0.0 : (truth.labels[i] == truth.labels[j] ? probs.p : probs.q);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.adjacency_matrix() - expected);
  const double spectral_norm = eig.eigenvalues().cwiseAbs().maxCoeff();

  double max_avg = 0.0;
  for (int c = 0; c < r; ++c) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      if (truth.labels[i] == c) sum += cross_max[i];
    }
    max_avg = std::max(max_avg, sum / group);
  }

  ConcentrationReport report;
  report.degree_margin = degree_margin;
  report.spectral_norm = spectral_norm;
  report.max_community_avg = max_avg;
  report.cond1 = degree_margin > params.c1 * log_n;
  report.cond2 = spectral_norm <= params.c2 * std::sqrt(log_n);
  report.cond3 = max_avg <= group * probs.q + params.c3 * std::sqrt(log_n);
  return report;
}

ConcentrationReport concentration_check(const Graph& g, const Labeling& truth,
                                        const SbmParams& params,
                                        const ConcentrationParams& consts) {
  return concentration_check(g, truth, dense_probs(params), consts);
}

}  // namespace privsbm
