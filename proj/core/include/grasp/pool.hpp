#pragma once

#include "grasp/corpus.hpp"

#include <cstddef>
#include <filesystem>
#include <vector>

namespace grasp {

/// Noise-free examples grouped by cluster. Cluster ids are dense and every
/// member list is ascending.
struct ClusteredPool {
  std::vector<Example> examples;
  std::vector<std::size_t> source_index;            // position in the unfiltered input
  std::vector<int> assignment;                      // cluster id per example
  std::vector<std::vector<std::size_t>> clusters;   // cluster id -> example indices

  std::size_t n_clusters() const noexcept { return clusters.size(); }
  std::size_t size() const noexcept { return examples.size(); }
};

/// Drops noise-labelled examples and re-densifies cluster ids in ascending
/// order of the original ids.
ClusteredPool filter_noise(const std::vector<Example>& examples, const std::vector<int>& assignment);

struct CandidatePool {
  std::vector<std::size_t> selected;  // indices into the ClusteredPool, in draw order
  std::size_t k = 0;
};

/// Round-robin over clusters from largest to smallest (ties by id), one
/// example per visit in member order, until k are drawn or the pool runs out.
CandidatePool build_pool(const ClusteredPool& pool, std::size_t k);

/// The sub-pool spanned by a candidate pool; clusters without a selected
/// member disappear and the rest are re-densified.
ClusteredPool restrict_pool(const ClusteredPool& pool, const CandidatePool& candidates);

/// Tab-separated "id<TAB>cluster" rows, noise as -1.
void save_assignment(const std::filesystem::path& path, const std::vector<Example>& examples,
                     const std::vector<int>& assignment);
std::vector<int> load_assignment(const std::filesystem::path& path, const std::vector<Example>& examples);

}  // namespace grasp
