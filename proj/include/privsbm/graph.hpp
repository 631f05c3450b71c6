#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "privsbm/rng.hpp"

namespace privsbm {

// Parameters of the balanced planted-partition model in the dense scaling
// p = a*log(n)/n, q = b*log(n)/n (natural log throughout).
struct SbmParams {
  int n = 0;
  int r = 2;
  double a = 0.0;
  double b = 0.0;
};

// Raw edge probabilities, for callers that want to bypass the a,b scaling.
struct EdgeProbs {
  double p = 0.0;
  double q = 0.0;
};

// Validates ranges and maps (a, b) to (p, q).  Throws OutOfRangeError when
// n < 2, r < 2, n % r != 0, a < b, b < 0, or a*log(n)/n > 1.
EdgeProbs dense_probs(const SbmParams& params);

// Community assignment.  `labels[v]` in [0, r).  Balance (n/r vertices per
// community) is required by the model and the estimators but not by every
// consumer (agreement scores arbitrary assignments), so it is a named check
// rather than a constructor invariant.
struct Labeling {
  std::vector<int> labels;
  int r = 2;

  int n() const { return static_cast<int>(labels.size()); }
  bool operator==(const Labeling& other) const = default;
};

// Throws OutOfRangeError unless every label is in [0, r) and each community
// has exactly n/r members.
void require_balanced(const Labeling& sigma);

// Relabels communities in order of first appearance, so vertex 0 gets
// community 0, the first vertex outside it gets community 1, and so on.
// Two labelings describe the same partition iff their canonical forms match.
Labeling canonical_form(const Labeling& sigma);

// Simple undirected graph on vertices 0..n-1, no self loops.  Adjacency is
// packed bits over the upper triangle in row-major pair order: pair (i, j)
// with i < j sits at index i*(2n-i-1)/2 + (j-i-1).  That order is part of
// the sampling contract: sample_sbm and randomized_response walk pairs in
// exactly this sequence.
class Graph {
 public:
  Graph() = default;
  explicit Graph(int n);

  int n() const { return n_; }
  int pair_count() const { return n_ * (n_ - 1) / 2; }

  static int pair_index(int n, int i, int j);
  int pair_index(int i, int j) const { return pair_index(n_, i, j); }

  bool has_edge(int i, int j) const;
  void set_edge(int i, int j, bool present);
  void flip_edge(int i, int j);

  bool test_pair(int pair) const {
    return (words_[static_cast<std::size_t>(pair) >> 6] >> (pair & 63)) & 1u;
  }
  void flip_pair(int pair) {
    words_[static_cast<std::size_t>(pair) >> 6] ^= 1ULL << (pair & 63);
  }

  int edge_count() const;
  std::vector<std::pair<int, int>> edges() const;

  // Dense symmetric 0/1 adjacency with zero diagonal.
  Eigen::MatrixXd adjacency_matrix() const;

  // Per-vertex adjacency bitmask; only valid for n <= 64.  Used by the
  // exhaustive estimators for O(1) cut updates.
  std::vector<std::uint64_t> adjacency_masks() const;

  bool operator==(const Graph& other) const = default;

 private:
  int n_ = 0;
  std::vector<std::uint64_t> words_;
};

// A set of distinct vertex pairs to toggle; applying it to G yields a graph
// at edge-edit distance exactly flips.size().
struct EdgeFlipSet {
  std::vector<std::pair<int, int>> flips;
};

// Throws OutOfRangeError on self pairs or out-of-range vertices and
// SizeMismatchError on duplicate pairs.
Graph apply_flips(const Graph& g, const EdgeFlipSet& flips);

// Number of pairs on which the two graphs disagree (edge-edit distance).
// Throws SizeMismatchError if sizes differ.
int edge_distance(const Graph& g, const Graph& h);

// Draws a random balanced labeling (uniform over all of them) by shuffling
// vertices and cutting the shuffle into r blocks.
Labeling random_balanced_labeling(int n, int r, Rng& rng);

// Samples the graph: each intra-community pair is an edge with probability
// p, each inter-community pair with probability q, independently, walking
// pairs in the documented order with one uniform draw per pair.
Graph sample_sbm(const Labeling& truth, const EdgeProbs& probs, Rng& rng);
Graph sample_sbm(const SbmParams& params, const Labeling& truth, Rng& rng);

// Edges whose endpoints share a community / cross communities.
int intra_community_edges(const Graph& g, const Labeling& sigma);
int inter_community_edges(const Graph& g, const Labeling& sigma);

// Log of the SBM likelihood of g under sigma:
//   m_in*log(p) + (P_in - m_in)*log(1-p) + m_out*log(q) + (P_out - m_out)*log(1-q)
// with P_in/P_out the intra/inter pair counts.  Throws DomainError unless
// 0 < q <= p < 1.
double log_likelihood(const Graph& g, const Labeling& sigma, const EdgeProbs& probs);

// Fraction of vertices on which the labelings agree under the best
// community relabeling: exact maximum over all r! permutations for r <= 5,
// greedy confusion-matrix matching above that.
double agreement(const Labeling& sigma, const Labeling& truth);

// Visits every balanced labeling once per partition, in lexicographic order
// of the canonical assignment vector.  Return false from the visitor to stop
// early.  The count is multinomial(n; n/r,...,n/r) / r!.
void for_each_balanced_partition(int n, int r,
                                 const std::function<bool(const std::vector<int>&)>& visit);
double count_balanced_partitions(int n, int r);

}  // namespace privsbm
