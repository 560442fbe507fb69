#pragma once

#include "grasp/pool.hpp"
#include "grasp/rng.hpp"

#include <compare>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace grasp {

/// One demonstration slot: a cluster and an index into that cluster's member list.
struct Gene {
  std::size_t cluster = 0;
  std::size_t example = 0;

  friend auto operator<=>(const Gene&, const Gene&) = default;
};

using Genome = std::vector<Gene>;

/// Indices into pool.examples, in gene order.
std::vector<std::size_t> example_indices(const Genome& genome, const ClusteredPool& pool);

/// Every gene addresses an existing member and no (cluster, example) pair repeats.
bool is_valid(const Genome& genome, const ClusteredPool& pool);

/// Gene-by-gene draw: cluster uniform over clusters, example uniform within,
/// duplicates redrawn. Throws if the pool has fewer examples than `length`.
Genome random_genome(const ClusteredPool& pool, std::size_t length, Rng& rng);

/// `length` distinct examples drawn uniformly without replacement from the
/// whole pool (not cluster-first), mapped to genes.
Genome sample_genome(const ClusteredPool& pool, std::size_t length, Rng& rng);

/// Fraction of the pool's clusters used by at least one gene of the population.
double diversity(std::span<const Genome> population, std::size_t n_clusters);

enum class MutationKind { inter, intra };

/// Changes exactly one uniformly chosen gene. Inter-cluster mutation redraws
/// cluster and example; intra-cluster mutation redraws only the example.
/// Returns the genome unchanged when no valid replacement exists.
Genome mutate(const Genome& genome, const ClusteredPool& pool, MutationKind kind, Rng& rng);

/// Picks inter-cluster mutation with probability p_inter, intra otherwise.
Genome mutate(const Genome& genome, const ClusteredPool& pool, double p_inter, Rng& rng);

/// Swaps genes in [first, last) between the parents, then repairs duplicate
/// genes by intra-cluster redraw. A child that cannot be repaired reverts to
/// a clone of its own parent.
std::pair<Genome, Genome> crossover_at(const Genome& a, const Genome& b, std::size_t first, std::size_t last,
                                       const ClusteredPool& pool, Rng& rng);

/// Two-point crossover with cut points 0 <= first < last <= length drawn uniformly.
std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, const ClusteredPool& pool, Rng& rng);

/// n tournaments of `size` draws with replacement; each returns the index of
/// the fittest draw (ties go to the earliest draw).
std::vector<std::size_t> select_tournament(std::span<const double> fitness, std::size_t n, std::size_t size,
                                           Rng& rng);

}  // namespace grasp
