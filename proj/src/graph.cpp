#include "privsbm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "privsbm/errors.hpp"

namespace privsbm {

double laplace_sample(double scale, Rng& rng) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw OutOfRangeError("laplace_sample: scale must be positive, got " +
                          std::to_string(scale));
  }
  return rng.laplace(scale);
}

EdgeProbs dense_probs(const SbmParams& params) {
  if (params.n < 2) throw OutOfRangeError("SbmParams: n must be >= 2");
  if (params.r < 2) throw OutOfRangeError("SbmParams: r must be >= 2");
  if (params.n % params.r != 0) {
    throw OutOfRangeError("SbmParams: r must divide n for balanced communities");
  }
  if (!(params.b >= 0.0) || !(params.a >= params.b)) {
    throw OutOfRangeError("SbmParams: need 0 <= b <= a");
  }
  const double scale = std::log(static_cast<double>(params.n)) / params.n;
  EdgeProbs probs{params.a * scale, params.b * scale};
  if (probs.p > 1.0) {
    throw OutOfRangeError("SbmParams: a*log(n)/n exceeds 1");
  }
  return probs;
}

void require_balanced(const Labeling& sigma) {
  if (sigma.r < 2) throw OutOfRangeError("Labeling: r must be >= 2");
  const int n = sigma.n();
  if (n == 0 || n % sigma.r != 0) {
    throw OutOfRangeError("Labeling: community count must divide n");
  }
  std::vector<int> sizes(sigma.r, 0);
  for (int label : sigma.labels) {
    if (label < 0 || label >= sigma.r) {
      throw OutOfRangeError("Labeling: label out of [0, r)");
    }
    ++sizes[label];
  }
  const int quota = n / sigma.r;
  for (int size : sizes) {
    if (size != quota) {
      throw OutOfRangeError("Labeling: communities are not balanced");
    }
  }
}

Labeling canonical_form(const Labeling& sigma) {
  Labeling out;
  out.r = sigma.r;
  out.labels.resize(sigma.labels.size());
  std::vector<int> remap(static_cast<std::size_t>(sigma.r), -1);
  int next = 0;
  for (std::size_t v = 0; v < sigma.labels.size(); ++v) {
    const int label = sigma.labels[v];
    if (label < 0 || label >= sigma.r) {
      throw OutOfRangeError("canonical_form: label out of [0, r)");
    }
    if (remap[label] < 0) remap[label] = next++;
    out.labels[v] = remap[label];
  }
  return out;
}

Graph::Graph(int n) : n_(n) {
  if (n < 2) throw OutOfRangeError("Graph: n must be >= 2");
  words_.assign((static_cast<std::size_t>(pair_count()) + 63) / 64, 0);
}

int Graph::pair_index(int n, int i, int j) {
  if (i == j) throw OutOfRangeError("Graph: self pair");
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= n) throw OutOfRangeError("Graph: vertex out of range");
  return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

bool Graph::has_edge(int i, int j) const { return test_pair(pair_index(i, j)); }

void Graph::set_edge(int i, int j, bool present) {
  const int pair = pair_index(i, j);
  if (test_pair(pair) != present) flip_pair(pair);
}

void Graph::flip_edge(int i, int j) { flip_pair(pair_index(i, j)); }

int Graph::edge_count() const {
  int total = 0;
  for (std::uint64_t word : words_) total += __builtin_popcountll(word);
  return total;
}

std::vector<std::pair<int, int>> Graph::edges() const {
  std::vector<std::pair<int, int>> out;
  int pair = 0;
  for (int i = 0; i < n_; ++i) {
    for (int j = i + 1; j < n_; ++j, ++pair) {
      if (test_pair(pair)) out.emplace_back(i, j);
    }
  }
  return out;
}

Eigen::MatrixXd Graph::adjacency_matrix() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
  int pair = 0;
  for (int i = 0; i < n_; ++i) {
    for (int j = i + 1; j < n_; ++j, ++pair) {
      if (test_pair(pair)) {
        a(i, j) = 1.0;
        a(j, i) = 1.0;
      }
    }
  }
  return a;
}

std::vector<std::uint64_t> Graph::adjacency_masks() const {
  if (n_ > 64) throw OutOfRangeError("adjacency_masks: needs n <= 64");
  std::vector<std::uint64_t> masks(static_cast<std::size_t>(n_), 0);
  int pair = 0;
  for (int i = 0; i < n_; ++i) {
    for (int j = i + 1; j < n_; ++j, ++pair) {
      if (test_pair(pair)) {
        masks[i] |= 1ULL << j;
        masks[j] |= 1ULL << i;
      }
    }
  }
  return masks;
}

Graph apply_flips(const Graph& g, const EdgeFlipSet& flips) {
  Graph out = g;
  std::set<int> seen;
  for (const auto& [i, j] : flips.flips) {
    const int pair = out.pair_index(i, j);
    if (!seen.insert(pair).second) {
      throw OutOfRangeError("apply_flips: duplicate flip pair");
    }
    out.flip_pair(pair);
  }
  return out;
}

int edge_distance(const Graph& g, const Graph& h) {
  if (g.n() != h.n()) throw SizeMismatchError("edge_distance: graph sizes differ");
  int dist = 0;
  for (int pair = 0; pair < g.pair_count(); ++pair) {
    dist += g.test_pair(pair) != h.test_pair(pair);
  }
  return dist;
}

Labeling random_balanced_labeling(int n, int r, Rng& rng) {
  if (r < 2 || n < 2 || n % r != 0) {
    throw OutOfRangeError("random_balanced_labeling: need r >= 2 and r | n");
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }
  Labeling sigma;
  sigma.r = r;
  sigma.labels.assign(static_cast<std::size_t>(n), 0);
  const int quota = n / r;
  for (int pos = 0; pos < n; ++pos) sigma.labels[order[pos]] = pos / quota;
  return sigma;
}

Graph sample_sbm(const Labeling& truth, const EdgeProbs& probs, Rng& rng) {
  require_balanced(truth);
  if (!(probs.p >= 0.0) || !(probs.p <= 1.0) || !(probs.q >= 0.0) ||
      !(probs.q <= 1.0)) {
    throw OutOfRangeError("sample_sbm: probabilities must lie in [0, 1]");
  }
  const int n = truth.n();
  Graph g(n);
  // One uniform draw per pair, pairs in index order: the bitstream contract.
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double p = truth.labels[i] == truth.labels[j] ? probs.p : probs.q;
      if (rng.bernoulli(p)) g.set_edge(i, j, true);
    }
  }
  return g;
}

Graph sample_sbm(const SbmParams& params, const Labeling& truth, Rng& rng) {
  return sample_sbm(truth, dense_probs(params), rng);
}

namespace {

void check_labeling_size(const Graph& g, const Labeling& sigma, const char* where) {
  if (sigma.n() != g.n()) {
    throw SizeMismatchError(std::string(where) + ": labeling size != graph size");
  }
}

}  // namespace

int intra_community_edges(const Graph& g, const Labeling& sigma) {
  check_labeling_size(g, sigma, "intra_community_edges");
  int count = 0;
  int pair = 0;
  for (int i = 0; i < g.n(); ++i) {
    for (int j = i + 1; j < g.n(); ++j, ++pair) {
      if (g.test_pair(pair) && sigma.labels[i] == sigma.labels[j]) ++count;
    }
  }
  return count;
}

int inter_community_edges(const Graph& g, const Labeling& sigma) {
  check_labeling_size(g, sigma, "inter_community_edges");
  return g.edge_count() - intra_community_edges(g, sigma);
}

double log_likelihood(const Graph& g, const Labeling& sigma, const EdgeProbs& probs) {
  check_labeling_size(g, sigma, "log_likelihood");
  require_balanced(sigma);
  if (!(probs.q > 0.0) || !(probs.p < 1.0) || !(probs.q <= probs.p)) {
    throw DomainError("log_likelihood: need 0 < q <= p < 1");
  }
  const int n = g.n();
  const double group = static_cast<double>(n / sigma.r);
  const double pairs_in = sigma.r * group * (group - 1.0) / 2.0;
  const double pairs_out = n * (n - 1.0) / 2.0 - pairs_in;
  const double m_in = intra_community_edges(g, sigma);
  const double m_out = inter_community_edges(g, sigma);
  return m_in * std::log(probs.p) + (pairs_in - m_in) * std::log1p(-probs.p) +
         m_out * std::log(probs.q) + (pairs_out - m_out) * std::log1p(-probs.q);
}

namespace {

double agreement_exact(const Labeling& sigma, const Labeling& truth) {
  std::vector<int> perm(static_cast<std::size_t>(sigma.r));
  std::iota(perm.begin(), perm.end(), 0);
  int best = 0;
  do {
    int matches = 0;
    for (std::size_t v = 0; v < sigma.labels.size(); ++v) {
      matches += perm[sigma.labels[v]] == truth.labels[v];
    }
    best = std::max(best, matches);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(sigma.n());
}

// Greedy confusion-matrix matching: repeatedly commit the largest remaining
// cell.  Not optimal in general, which is fine for a score at r > 5.
double agreement_greedy(const Labeling& sigma, const Labeling& truth) {
  const int r = sigma.r;
  std::vector<std::vector<int>> confusion(r, std::vector<int>(r, 0));
  for (std::size_t v = 0; v < sigma.labels.size(); ++v) {
    ++confusion[sigma.labels[v]][truth.labels[v]];
  }
  std::vector<bool> row_used(r, false), col_used(r, false);
  int matched = 0;
  for (int round = 0; round < r; ++round) {
    int best_k = -1, best_l = -1, best = -1;
    for (int k = 0; k < r; ++k) {
      if (row_used[k]) continue;
      for (int l = 0; l < r; ++l) {
        if (col_used[l]) continue;
        if (confusion[k][l] > best) {
          best = confusion[k][l];
          best_k = k;
          best_l = l;
        }
      }
    }
    row_used[best_k] = true;
    col_used[best_l] = true;
    matched += best;
  }
  return static_cast<double>(matched) / static_cast<double>(sigma.n());
}

}  // namespace

double agreement(const Labeling& sigma, const Labeling& truth) {
  if (sigma.n() != truth.n()) throw SizeMismatchError("agreement: sizes differ");
  if (sigma.r != truth.r) throw SizeMismatchError("agreement: community counts differ");
  for (int label : sigma.labels) {
    if (label < 0 || label >= sigma.r) throw OutOfRangeError("agreement: bad label");
  }
  for (int label : truth.labels) {
    if (label < 0 || label >= truth.r) throw OutOfRangeError("agreement: bad label");
  }
  return sigma.r <= 5 ? agreement_exact(sigma, truth)
                      : agreement_greedy(sigma, truth);
}

namespace {

bool visit_partitions(std::vector<int>& assign, std::vector<int>& sizes,
                      int vertex, int used, int quota,
                      const std::function<bool(const std::vector<int>&)>& visit) {
  const int n = static_cast<int>(assign.size());
  if (vertex == n) return visit(assign);
  // Canonical order: a fresh label may only follow all smaller labels, which
  // enumerates each partition exactly once, in lexicographic assignment
  // order.
  const int r = static_cast<int>(sizes.size());
  const int limit = std::min(used + 1, r);
  for (int c = 0; c < limit; ++c) {
    if (sizes[c] == quota) continue;
    assign[vertex] = c;
    ++sizes[c];
    const bool keep_going = visit_partitions(assign, sizes, vertex + 1,
                                             std::max(used, c + 1), quota, visit);
    --sizes[c];
    if (!keep_going) return false;
  }
  return true;
}

}  // namespace

void for_each_balanced_partition(
    int n, int r, const std::function<bool(const std::vector<int>&)>& visit) {
  if (r < 2 || n < 2 || n % r != 0) {
    throw OutOfRangeError("for_each_balanced_partition: need r >= 2 and r | n");
  }
  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  std::vector<int> sizes(static_cast<std::size_t>(r), 0);
  visit_partitions(assign, sizes, 0, 0, n / r, visit);
}

double count_balanced_partitions(int n, int r) {
  if (r < 2 || n < 2 || n % r != 0) {
    throw OutOfRangeError("count_balanced_partitions: need r >= 2 and r | n");
  }
  double log_count = std::lgamma(n + 1.0) - r * std::lgamma(n / r + 1.0) -
                     std::lgamma(r + 1.0);
  return std::round(std::exp(log_count));
}

}  // namespace privsbm
