#include "grasp/clustering.hpp"

#include "grasp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace grasp {

void ClusteringParams::validate() const {
  if (min_cluster_size < 2) throw std::invalid_argument("min_cluster_size must be >= 2");
  if (min_samples < 1) throw std::invalid_argument("min_samples must be >= 1");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("cluster selection epsilon must be >= 0");
}

double euclidean(const Point& x, const Point& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return std::sqrt(s);
}

namespace {

std::size_t worker_count() {
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

std::vector<double> core_distances(const std::vector<Point>& points, std::size_t min_samples) {
  const std::size_t n = points.size();
  std::vector<double> core(n, 0.0);
  if (min_samples <= 1 || n <= 1) return core;
  const std::size_t k = std::min(min_samples, n) - 1;  // 0-based rank, self at rank 0
  parallel_for(n, worker_count(), [&](std::size_t i) {
    std::vector<double> d(n);
    for (std::size_t j = 0; j < n; ++j) d[j] = i == j ? 0.0 : euclidean(points[i], points[j]);
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    core[i] = d[k];
  });
  return core;
}

std::vector<MstEdge> mutual_reachability_mst(const std::vector<Point>& points, std::size_t min_samples) {
  const std::size_t n = points.size();
  std::vector<MstEdge> edges;
  if (n < 2) return edges;
  const auto core = core_distances(points, min_samples);
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<bool> in_tree(n, false);
  std::vector<double> best(n, inf);
  std::vector<std::size_t> from(n, 0);
  edges.reserve(n - 1);
  std::size_t current = 0;
  in_tree[0] = true;
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t next = n;
    double next_w = inf;
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double w = std::max({core[current], core[j], euclidean(points[current], points[j])});
      if (w < best[j]) {
        best[j] = w;
        from[j] = current;
      }
      if (best[j] < next_w) {
        next_w = best[j];
        next = j;
      }
    }
    in_tree[next] = true;
    edges.push_back({from[next], next, next_w});
    current = next;
  }
  return edges;
}

CondensedTree condense(std::size_t n_points, std::vector<MstEdge> mst, std::size_t min_cluster_size) {
  CondensedTree tree;
  tree.point_cluster.assign(n_points, 0);
  tree.clusters.push_back({-1, std::numeric_limits<double>::infinity(), n_points, {}});
  if (n_points < 2) return tree;

  std::stable_sort(mst.begin(), mst.end(), [](const MstEdge& x, const MstEdge& y) {
    if (x.weight != y.weight) return x.weight < y.weight;
    const auto kx = std::minmax(x.a, x.b);
    const auto ky = std::minmax(y.a, y.b);
    return kx < ky;
  });

  // Single-linkage dendrogram: nodes [0, n) are points, [n, 2n-1) merges.
  const std::size_t total = 2 * n_points - 1;
  std::vector<std::size_t> left(total, 0), right(total, 0), size(total, 1);
  std::vector<double> height(total, 0.0);
  std::vector<std::size_t> uf_parent(total);
  std::iota(uf_parent.begin(), uf_parent.end(), 0);
  const auto find = [&](std::size_t x) {
    while (uf_parent[x] != x) {
      uf_parent[x] = uf_parent[uf_parent[x]];
      x = uf_parent[x];
    }
    return x;
  };
  std::size_t next_node = n_points;
  for (const auto& e : mst) {
    const std::size_t ra = find(e.a);
    const std::size_t rb = find(e.b);
    if (ra == rb) throw std::logic_error("condense: MST contains a cycle");
    left[next_node] = ra;
    right[next_node] = rb;
    height[next_node] = e.weight;
    size[next_node] = size[ra] + size[rb];
    uf_parent[ra] = uf_parent[rb] = next_node;
    ++next_node;
  }
  if (next_node != total) throw std::logic_error("condense: MST does not span all points");

  const auto drop_subtree = [&](std::size_t node, int cluster) {
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      if (x < n_points) {
        tree.point_cluster[x] = cluster;
      } else {
        stack.push_back(left[x]);
        stack.push_back(right[x]);
      }
    }
  };

  std::vector<std::pair<std::size_t, int>> work{{total - 1, 0}};
  while (!work.empty()) {
    const auto [node, cluster] = work.back();
    work.pop_back();
    if (node < n_points) {
      tree.point_cluster[node] = cluster;
      continue;
    }
    const std::size_t l = left[node];
    const std::size_t r = right[node];
    const bool big_l = size[l] >= min_cluster_size;
    const bool big_r = size[r] >= min_cluster_size;
    if (big_l && big_r) {
      for (std::size_t child : {l, r}) {
        const int id = static_cast<int>(tree.clusters.size());
        tree.clusters.push_back({cluster, height[node], size[child], {}});
        tree.clusters[static_cast<std::size_t>(cluster)].children.push_back(id);
        work.emplace_back(child, id);
      }
    } else if (!big_l && !big_r) {
      drop_subtree(l, cluster);
      drop_subtree(r, cluster);
    } else if (!big_l) {
      drop_subtree(l, cluster);
      work.emplace_back(r, cluster);
    } else {
      drop_subtree(r, cluster);
      work.emplace_back(l, cluster);
    }
  }
  return tree;
}

std::vector<int> select_clusters(const CondensedTree& tree, double epsilon) {
  const auto& cs = tree.clusters;
  std::vector<int> selected;
  for (std::size_t c = 1; c < cs.size(); ++c) {
    if (!cs[c].children.empty()) continue;
    int pick = static_cast<int>(c);
    if (cs[c].birth < epsilon) {
      // Climb while the ancestor was itself born below epsilon; never select the root.
      int cur = pick;
      while (true) {
        const int parent = cs[static_cast<std::size_t>(cur)].parent;
        if (parent == 0) {
          pick = cur;
          break;
        }
        if (cs[static_cast<std::size_t>(parent)].birth > epsilon) {
          pick = parent;
          break;
        }
        cur = parent;
      }
    }
    selected.push_back(pick);
  }
  std::sort(selected.begin(), selected.end());
  selected.erase(std::unique(selected.begin(), selected.end()), selected.end());

  // Drop selections nested under another selection.
  std::vector<bool> chosen(cs.size(), false);
  for (int s : selected) chosen[static_cast<std::size_t>(s)] = true;
  std::vector<int> out;
  for (int s : selected) {
    bool nested = false;
    for (int a = cs[static_cast<std::size_t>(s)].parent; a > 0; a = cs[static_cast<std::size_t>(a)].parent) {
      if (chosen[static_cast<std::size_t>(a)]) {
        nested = true;
        break;
      }
    }
    if (!nested) out.push_back(s);
  }
  return out;
}

Clustering cluster(const std::vector<Point>& points, const ClusteringParams& params) {
  params.validate();
  if (points.empty()) throw std::invalid_argument("cluster: no points");
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw std::invalid_argument("cluster: points have differing dimensions");
  }

  Clustering out;
  out.labels.assign(points.size(), kNoise);
  if (points.size() < params.min_cluster_size) return out;

  const auto tree = condense(points.size(), mutual_reachability_mst(points, params.min_samples),
                             params.min_cluster_size);
  const auto selected = select_clusters(tree, params.epsilon);

  // Map every condensed cluster to the selected cluster containing it.
  std::vector<int> owner(tree.clusters.size(), -1);
  for (std::size_t i = 0; i < selected.size(); ++i) owner[static_cast<std::size_t>(selected[i])] = static_cast<int>(i);
  for (std::size_t c = 1; c < tree.clusters.size(); ++c) {
    if (owner[c] >= 0) continue;
    for (int a = tree.clusters[c].parent; a > 0; a = tree.clusters[static_cast<std::size_t>(a)].parent) {
      if (owner[static_cast<std::size_t>(a)] >= 0) {
        owner[c] = owner[static_cast<std::size_t>(a)];
        break;
      }
    }
  }

  // Dense ids by lowest member index.
  std::vector<int> dense(selected.size(), -1);
  int next = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int sel = owner[static_cast<std::size_t>(tree.point_cluster[i])];
    if (sel < 0) continue;
    if (dense[static_cast<std::size_t>(sel)] < 0) dense[static_cast<std::size_t>(sel)] = next++;
    out.labels[i] = dense[static_cast<std::size_t>(sel)];
  }
  out.n_clusters = static_cast<std::size_t>(next);
  return out;
}

}  // namespace grasp
