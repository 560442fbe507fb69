#pragma once

#include "grasp/projection.hpp"

#include <cstddef>
#include <limits>
#include <vector>

namespace grasp {

inline constexpr int kNoise = -1;

struct ClusteringParams {
  std::size_t min_cluster_size = 9;
  std::size_t min_samples = 1;
  double epsilon = 0.18;

  void validate() const;
};

struct MstEdge {
  std::size_t a = 0;
  std::size_t b = 0;
  double weight = 0.0;
};

double euclidean(const Point& x, const Point& y);

/// Distance from each point to its min_samples-th nearest neighbour, counting
/// the point itself as the first (min_samples = 1 gives all zeros).
std::vector<double> core_distances(const std::vector<Point>& points, std::size_t min_samples);

/// Prim's algorithm over the dense mutual-reachability graph
/// max(core(a), core(b), d(a, b)). Returns n - 1 edges in insertion order.
std::vector<MstEdge> mutual_reachability_mst(const std::vector<Point>& points, std::size_t min_samples);

/// A node of the condensed cluster tree. Index 0 is the root.
struct CondensedCluster {
  int parent = -1;
  double birth = std::numeric_limits<double>::infinity();  // split distance that created it
  std::size_t size = 0;
  std::vector<int> children;
};

struct CondensedTree {
  std::vector<CondensedCluster> clusters;
  std::vector<int> point_cluster;  // last cluster each point belonged to
};

/// Builds the condensed hierarchy from an MST: splits where both sides keep at
/// least min_cluster_size points create child clusters, smaller sides fall out.
CondensedTree condense(std::size_t n_points, std::vector<MstEdge> mst, std::size_t min_cluster_size);

/// Leaf selection with epsilon merging. Returns selected cluster indices.
std::vector<int> select_clusters(const CondensedTree& tree, double epsilon);

struct Clustering {
  std::vector<int> labels;  // dense ids 0..n_clusters-1, kNoise for noise
  std::size_t n_clusters = 0;
};

/// Density clustering: core distances, mutual-reachability MST, condensed
/// tree, leaf selection merged by epsilon. Cluster ids are ordered by their
/// lowest member index.
Clustering cluster(const std::vector<Point>& points, const ClusteringParams& params);

}  // namespace grasp
