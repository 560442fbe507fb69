#include "grasp/pool.hpp"

#include "grasp/clustering.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace grasp {

ClusteredPool filter_noise(const std::vector<Example>& examples, const std::vector<int>& assignment) {
  if (assignment.size() != examples.size()) {
    throw std::invalid_argument("assignment covers " + std::to_string(assignment.size()) + " of " +
                                std::to_string(examples.size()) + " examples");
  }
  std::map<int, int> remap;
  for (int c : assignment) {
    if (c < kNoise) throw std::invalid_argument("invalid cluster id " + std::to_string(c));
    if (c != kNoise) remap.emplace(c, 0);
  }
  int next = 0;
  for (auto& [from, to] : remap) to = next++;

  ClusteredPool pool;
  pool.clusters.resize(remap.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (assignment[i] == kNoise) continue;
    const int c = remap.at(assignment[i]);
    pool.clusters[static_cast<std::size_t>(c)].push_back(pool.examples.size());
    pool.examples.push_back(examples[i]);
    pool.source_index.push_back(i);
    pool.assignment.push_back(c);
  }
  return pool;
}

CandidatePool build_pool(const ClusteredPool& pool, std::size_t k) {
  if (k < 1) throw std::invalid_argument("pool size k must be >= 1");
  std::vector<std::size_t> order(pool.n_clusters());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pool.clusters[a].size() > pool.clusters[b].size();
  });

  CandidatePool out;
  out.k = k;
  const std::size_t target = std::min(k, pool.size());
  out.selected.reserve(target);
  std::vector<std::size_t> cursor(pool.n_clusters(), 0);
  while (out.selected.size() < target) {
    for (std::size_t c : order) {
      if (out.selected.size() == target) break;
      if (cursor[c] < pool.clusters[c].size()) out.selected.push_back(pool.clusters[c][cursor[c]++]);
    }
  }
  return out;
}

ClusteredPool restrict_pool(const ClusteredPool& pool, const CandidatePool& candidates) {
  std::vector<int> assignment(pool.size(), kNoise);
  for (std::size_t idx : candidates.selected) {
    if (idx >= pool.size()) throw std::out_of_range("candidate index out of range");
    assignment[idx] = pool.assignment[idx];
  }
  auto sub = filter_noise(pool.examples, assignment);
  for (auto& s : sub.source_index) s = pool.source_index[s];
  return sub;
}

void save_assignment(const std::filesystem::path& path, const std::vector<Example>& examples,
                     const std::vector<int>& assignment) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "id\tcluster\n";
  for (std::size_t i = 0; i < examples.size(); ++i) out << examples[i].id << '\t' << assignment[i] << '\n';
}

std::vector<int> load_assignment(const std::filesystem::path& path, const std::vector<Example>& examples) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < examples.size(); ++i) index.emplace(examples[i].id, i);
  std::vector<int> out(examples.size(), kNoise);
  std::vector<bool> seen(examples.size(), false);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw std::runtime_error("malformed assignment row: " + line);
    const auto it = index.find(line.substr(0, tab));
    if (it == index.end()) throw std::runtime_error("assignment names unknown id " + line.substr(0, tab));
    out[it->second] = std::stoi(line.substr(tab + 1));
    seen[it->second] = true;
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
    throw std::runtime_error("assignment file does not cover every example");
  }
  return out;
}

}  // namespace grasp
