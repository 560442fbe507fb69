#pragma once

#include "grasp/clustering.hpp"
#include "grasp/corpus.hpp"
#include "grasp/pool.hpp"
#include "grasp/rng.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <algorithm>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace grasp::testing {

inline Example make_example(std::string id, EntityMap entities = {}) {
  Example e;
  e.id = std::move(id);
  e.text = "text of " + e.id;
  e.entities = std::move(entities);
  return e;
}

/// A pool whose cluster c holds sizes[c] examples; examples are laid out
/// cluster by cluster with ids "c<cluster>-<i>".
inline ClusteredPool make_pool(const std::vector<std::size_t>& sizes) {
  std::vector<Example> examples;
  std::vector<int> assignment;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      examples.push_back(make_example("c" + std::to_string(c) + "-" + std::to_string(i)));
      assignment.push_back(static_cast<int>(c));
    }
  }
  return filter_noise(examples, assignment);
}

/// Isotropic Gaussian blob around `centre`.
inline std::vector<Point> gaussian_blob(const Point& centre, std::size_t n, double sigma, Rng& rng) {
  std::vector<Point> pts;
  for (std::size_t i = 0; i < n; ++i) {
    Point p = centre;
    for (auto& x : p) x += sigma * rng.normal();
    pts.push_back(std::move(p));
  }
  return pts;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("grasp_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Brute-force mutual-reachability MST: O(n^3) Prim without a key array,
/// recomputing every distance from scratch. Edges come back with a < b,
/// sorted by (weight, a, b).
inline std::vector<MstEdge> brute_force_mst(const std::vector<Point>& pts, std::size_t min_samples) {
  const std::size_t n = pts.size();
  auto dist = [&](std::size_t a, std::size_t b) {
    double s = 0;
    for (std::size_t d = 0; d < pts[a].size(); ++d) s += (pts[a][d] - pts[b][d]) * (pts[a][d] - pts[b][d]);
    return std::sqrt(s);
  };
  std::vector<double> core(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> ds;
    for (std::size_t j = 0; j < n; ++j) ds.push_back(dist(i, j));
    std::sort(ds.begin(), ds.end());
    core[i] = ds[min_samples - 1];
  }
  auto mr = [&](std::size_t a, std::size_t b) { return std::max({core[a], core[b], dist(a, b)}); };
  std::vector<bool> in(n, false);
  in[0] = true;
  std::vector<MstEdge> edges;
  for (std::size_t step = 1; step < n; ++step) {
    double best = INFINITY;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (in[j]) continue;
        const double w = mr(i, j);
        if (w < best) best = w, bi = i, bj = j;
      }
    }
    in[bj] = true;
    edges.push_back({std::min(bi, bj), std::max(bi, bj), best});
  }
  std::sort(edges.begin(), edges.end(), [](const MstEdge& x, const MstEdge& y) {
    return std::tie(x.weight, x.a, x.b) < std::tie(y.weight, y.a, y.b);
  });
  return edges;
}

/// Connected components of the graph joining points closer than `radius`.
inline std::vector<int> components_within(const std::vector<Point>& pts, double radius) {
  const std::size_t n = pts.size();
  std::vector<int> comp(n, -1);
  int next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] != -1) continue;
    std::vector<std::size_t> stack{s};
    comp[s] = next;
    while (!stack.empty()) {
      const auto i = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < n; ++j) {
        if (comp[j] == -1 && euclidean(pts[i], pts[j]) < radius) {
          comp[j] = next;
          stack.push_back(j);
        }
      }
    }
    ++next;
  }
  return comp;
}

/// Writes pool.jsonl with n_clusters * per_cluster labelled examples and a
/// matching projection.txt of tight, well separated Gaussian blobs (rows in
/// pool order, blob members interleaved so clusters are not contiguous).
inline void write_blob_fixture(const std::filesystem::path& dir, std::size_t n_clusters, std::size_t per_cluster,
                               std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point> centres;
  for (std::size_t c = 0; c < n_clusters; ++c) {
    Point p(dim, 0.0);
    for (auto& x : p) x = rng.uniform(-1.0, 1.0);
    // Spread centres far apart along the first axes.
    p[c % dim] += 40.0 * static_cast<double>(1 + c / dim);
    centres.push_back(std::move(p));
  }
  std::ofstream pool(dir / "pool.jsonl", std::ios::binary | std::ios::trunc);
  std::ofstream proj(dir / "projection.txt", std::ios::binary | std::ios::trunc);
  proj.precision(17);
  for (std::size_t i = 0; i < per_cluster; ++i) {
    for (std::size_t c = 0; c < n_clusters; ++c) {
      const std::string id = "ex" + std::to_string(c) + "_" + std::to_string(i);
      Example e;
      e.id = id;
      e.text = "Topic " + std::to_string(c) + " sentence " + std::to_string(i) + ".";
      if (i % 3 != 0) e.entities["Label" + std::to_string(c % 4)].insert(std::to_string(i));
      e.provenance = Provenance::synthetic;
      pool << to_json(e).dump() << '\n';
      for (std::size_t d = 0; d < dim; ++d) {
        proj << (d ? " " : "") << centres[c][d] + 0.05 * rng.normal();
      }
      proj << '\n';
    }
  }
}

}  // namespace grasp::testing
