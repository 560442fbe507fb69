#include "grasp/genome.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace grasp {
namespace {

constexpr int kMaxRedraws = 64;

bool contains_other(const Genome& g, const Gene& gene, std::size_t skip) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i != skip && g[i] == gene) return true;
  }
  return false;
}

// Examples of `cluster` not used by any gene other than `skip`, excluding `exclude`.
std::vector<std::size_t> free_examples(const Genome& g, const ClusteredPool& pool, std::size_t cluster,
                                       std::size_t skip, std::size_t exclude) {
  std::vector<bool> used(pool.clusters[cluster].size(), false);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i != skip && g[i].cluster == cluster) used[g[i].example] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t e = 0; e < used.size(); ++e) {
    if (!used[e] && e != exclude) out.push_back(e);
  }
  return out;
}

}  // namespace

std::vector<std::size_t> example_indices(const Genome& genome, const ClusteredPool& pool) {
  std::vector<std::size_t> out;
  out.reserve(genome.size());
  for (const auto& g : genome) out.push_back(pool.clusters.at(g.cluster).at(g.example));
  return out;
}

bool is_valid(const Genome& genome, const ClusteredPool& pool) {
  std::set<Gene> seen;
  for (const auto& g : genome) {
    if (g.cluster >= pool.n_clusters() || g.example >= pool.clusters[g.cluster].size()) return false;
    if (!seen.insert(g).second) return false;
  }
  return true;
}

Genome random_genome(const ClusteredPool& pool, std::size_t length, Rng& rng) {
  if (pool.n_clusters() == 0 || pool.size() < length) {
    throw std::invalid_argument("pool of " + std::to_string(pool.size()) + " examples cannot fill a genome of length " +
                                std::to_string(length));
  }
  Genome g;
  g.reserve(length);
  std::set<Gene> used;
  while (g.size() < length) {
    Gene gene;
    bool placed = false;
    for (int attempt = 0; attempt < 10'000 && !placed; ++attempt) {
      gene.cluster = rng.index(pool.n_clusters());
      gene.example = rng.index(pool.clusters[gene.cluster].size());
      placed = used.insert(gene).second;
    }
    if (!placed) {
      // Nearly exhausted pool: take the first free slot.
      for (std::size_t c = 0; c < pool.n_clusters() && !placed; ++c) {
        for (std::size_t e = 0; e < pool.clusters[c].size() && !placed; ++e) {
          gene = {c, e};
          placed = used.insert(gene).second;
        }
      }
    }
    g.push_back(gene);
  }
  return g;
}

Genome sample_genome(const ClusteredPool& pool, std::size_t length, Rng& rng) {
  if (pool.size() < length) {
    throw std::invalid_argument("pool of " + std::to_string(pool.size()) + " examples cannot fill a genome of length " +
                                std::to_string(length));
  }
  // Position of each example inside its cluster's member list.
  std::vector<std::size_t> slot(pool.size(), 0);
  for (const auto& members : pool.clusters) {
    for (std::size_t e = 0; e < members.size(); ++e) slot[members[e]] = e;
  }
  std::vector<std::size_t> idx(pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Genome g;
  g.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
    const std::size_t ex = idx[i];
    g.push_back({static_cast<std::size_t>(pool.assignment[ex]), slot[ex]});
  }
  return g;
}

double diversity(std::span<const Genome> population, std::size_t n_clusters) {
  if (n_clusters == 0) throw std::invalid_argument("diversity: n_clusters must be >= 1");
  std::vector<bool> seen(n_clusters, false);
  std::size_t distinct = 0;
  for (const auto& genome : population) {
    for (const auto& gene : genome) {
      if (gene.cluster < n_clusters && !seen[gene.cluster]) {
        seen[gene.cluster] = true;
        ++distinct;
      }
    }
  }
  return static_cast<double>(distinct) / static_cast<double>(n_clusters);
}

Genome mutate(const Genome& genome, const ClusteredPool& pool, MutationKind kind, Rng& rng) {
  if (genome.empty() || pool.n_clusters() == 0) return genome;
  const std::size_t pos = rng.index(genome.size());
  const Gene old = genome[pos];
  Genome out = genome;

  if (kind == MutationKind::intra) {
    const auto options = free_examples(genome, pool, old.cluster, pos, old.example);
    if (options.empty()) return genome;
    out[pos].example = options[rng.index(options.size())];
    return out;
  }

  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    Gene g;
    g.cluster = rng.index(pool.n_clusters());
    g.example = rng.index(pool.clusters[g.cluster].size());
    if (g != old && !contains_other(genome, g, pos)) {
      out[pos] = g;
      return out;
    }
  }
  return genome;
}

Genome mutate(const Genome& genome, const ClusteredPool& pool, double p_inter, Rng& rng) {
  const auto kind = rng.uniform() < p_inter ? MutationKind::inter : MutationKind::intra;
  return mutate(genome, pool, kind, rng);
}

namespace {

// Redraws swapped-in genes that collide with a kept gene. False if impossible.
bool repair(Genome& child, std::size_t first, std::size_t last, const ClusteredPool& pool, Rng& rng) {
  for (std::size_t p = first; p < last; ++p) {
    if (!contains_other(child, child[p], p)) continue;
    const auto options = free_examples(child, pool, child[p].cluster, p, child[p].example);
    if (options.empty()) return false;
    child[p].example = options[rng.index(options.size())];
  }
  return true;
}

}  // namespace

std::pair<Genome, Genome> crossover_at(const Genome& a, const Genome& b, std::size_t first, std::size_t last,
                                       const ClusteredPool& pool, Rng& rng) {
  if (a.size() != b.size()) throw std::invalid_argument("crossover: parents differ in length");
  if (first > last || last > a.size()) throw std::invalid_argument("crossover: invalid cut points");
  Genome c1 = a;
  Genome c2 = b;
  for (std::size_t i = first; i < last; ++i) std::swap(c1[i], c2[i]);
  if (!repair(c1, first, last, pool, rng)) c1 = a;
  if (!repair(c2, first, last, pool, rng)) c2 = b;
  return {std::move(c1), std::move(c2)};
}

std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, const ClusteredPool& pool, Rng& rng) {
  if (a.size() < 2) throw std::invalid_argument("crossover needs genomes of length >= 2");
  const std::size_t n = a.size();
  // Uniform over the n(n+1)/2 pairs first < last drawn from {0..n}.
  std::size_t r = rng.index(n * (n + 1) / 2);
  std::size_t first = 0;
  while (r >= n - first) {
    r -= n - first;
    ++first;
  }
  const std::size_t last = first + 1 + r;
  return crossover_at(a, b, first, last, pool, rng);
}

std::vector<std::size_t> select_tournament(std::span<const double> fitness, std::size_t n, std::size_t size,
                                           Rng& rng) {
  if (fitness.empty()) throw std::invalid_argument("tournament over an empty population");
  if (size < 1) throw std::invalid_argument("tournament size must be >= 1");
  std::vector<std::size_t> winners;
  winners.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    std::size_t best = rng.index(fitness.size());
    for (std::size_t s = 1; s < size; ++s) {
      const std::size_t c = rng.index(fitness.size());
      if (fitness[c] > fitness[best]) best = c;
    }
    winners.push_back(best);
  }
  return winners;
}

}  // namespace grasp
