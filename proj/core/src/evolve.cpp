#include "grasp/evolve.hpp"

#include "grasp/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace grasp {

void GAConfig::validate() const {
  if (mu < 1 || lambda < 1) throw std::invalid_argument("mu and lambda must be >= 1");
  if (p_cx < 0 || p_mut < 0 || p_cx + p_mut > 1.0 + 1e-12) {
    throw std::invalid_argument("p_cx and p_mut must be non-negative with p_cx + p_mut <= 1");
  }
  if (!(p_min >= 0 && p_min <= p_max && p_max <= 1)) {
    throw std::invalid_argument("need 0 <= p_min <= p_max <= 1");
  }
  if (tournament_size < 1) throw std::invalid_argument("tournament_size must be >= 1");
  if (genome_length < 1) throw std::invalid_argument("genome_length must be >= 1");
  if (p_cx > 0 && genome_length < 2) throw std::invalid_argument("crossover needs genome_length >= 2");
  if (eval_workers < 1) throw std::invalid_argument("eval_workers must be >= 1");
}

double inter_probability(double diversity, const GAConfig& cfg) {
  return cfg.p_min + (cfg.p_max - cfg.p_min) * diversity;
}

void write_trace_header(std::ostream& out) {
  out << "generation\tmean_fitness\tbest_fitness\tdiversity\tp_inter\tevaluations\n";
}

void write_trace_row(std::ostream& out, const GenerationRecord& r) {
  out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", r.generation, r.mean_fitness, r.best_fitness, r.diversity,
                     r.p_inter, r.evaluations);
}

void write_trace(std::ostream& out, const RunTrace& trace) {
  write_trace_header(out);
  for (const auto& r : trace) write_trace_row(out, r);
}

RunTrace read_trace(std::istream& in) {
  RunTrace trace;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    GenerationRecord r;
    if (!(ss >> r.generation >> r.mean_fitness >> r.best_fitness >> r.diversity >> r.p_inter >> r.evaluations)) {
      throw std::runtime_error("malformed trace row: " + line);
    }
    trace.push_back(r);
  }
  return trace;
}

namespace {

struct Individual {
  Genome genome;
  double fitness = 0.0;
  bool evaluated = false;
  std::size_t birth = 0;
};

}  // namespace

EvolutionResult evolve(const ClusteredPool& pool, FitnessProvider& fitness, const GAConfig& cfg,
                       const EvolveObserver& observer) {
  cfg.validate();
  if (pool.n_clusters() == 0 || pool.size() < cfg.genome_length) {
    throw std::invalid_argument("pool of " + std::to_string(pool.size()) + " examples cannot support genomes of length " +
                                std::to_string(cfg.genome_length));
  }

  Rng rng(cfg.seed);
  std::map<Genome, double> cache;
  EvolutionResult result;

  std::vector<Individual> parents;
  parents.reserve(cfg.mu);
  for (std::size_t i = 0; i < cfg.mu; ++i) parents.push_back({random_genome(pool, cfg.genome_length, rng), 0.0, false, 0});
  std::vector<Individual> offspring;

  // Evaluates every unevaluated individual; the RNG is not touched here.
  const auto evaluate_all = [&](std::vector<Individual>& group) -> std::size_t {
    std::vector<const Genome*> pending;
    std::map<Genome, std::size_t> queued;
    for (auto& ind : group) {
      if (ind.evaluated) continue;
      if (cache.count(ind.genome) == 0 && queued.emplace(ind.genome, pending.size()).second) {
        pending.push_back(&ind.genome);
      }
    }
    std::vector<double> scores(pending.size());
    try {
      parallel_for(pending.size(), cfg.eval_workers, [&](std::size_t i) { scores[i] = fitness.evaluate(*pending[i]); });
    } catch (const std::exception& e) {
      throw EvolutionAborted(std::string("fitness evaluation failed: ") + e.what(), result.trace);
    }
    for (std::size_t i = 0; i < pending.size(); ++i) cache.emplace(*pending[i], scores[i]);
    for (auto& ind : group) {
      if (!ind.evaluated) {
        ind.fitness = cache.at(ind.genome);
        ind.evaluated = true;
      }
    }
    return pending.size();
  };

  std::vector<double> best_history;
  std::size_t stalled = 0;
  for (std::size_t gen = 0;; ++gen) {
    std::size_t evaluations = evaluate_all(gen == 0 ? parents : offspring);
    result.total_evaluations += evaluations;

    if (gen > 0) {
      std::vector<Individual> merged;
      merged.reserve(parents.size() + offspring.size());
      std::move(parents.begin(), parents.end(), std::back_inserter(merged));
      std::move(offspring.begin(), offspring.end(), std::back_inserter(merged));
      offspring.clear();
      std::stable_sort(merged.begin(), merged.end(), [](const Individual& x, const Individual& y) {
        if (x.fitness != y.fitness) return x.fitness > y.fitness;
        return x.birth < y.birth;
      });
      merged.resize(cfg.mu);
      parents = std::move(merged);
    }

    std::vector<Genome> genomes;
    std::vector<double> scores;
    genomes.reserve(parents.size());
    scores.reserve(parents.size());
    for (const auto& p : parents) {
      genomes.push_back(p.genome);
      scores.push_back(p.fitness);
    }
    const auto best_it = std::max_element(scores.begin(), scores.end());
    const auto best_idx = static_cast<std::size_t>(best_it - scores.begin());

    GenerationRecord rec;
    rec.generation = gen;
    rec.mean_fitness = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
    rec.best_fitness = *best_it;
    rec.diversity = diversity(genomes, pool.n_clusters());
    rec.p_inter = inter_probability(rec.diversity, cfg);
    rec.evaluations = evaluations;
    result.trace.push_back(rec);
    if (observer.on_population) observer.on_population(gen, genomes);
    if (observer.on_generation) observer.on_generation(rec);

    if (gen == 0 || rec.best_fitness > result.best_fitness) {
      result.best_fitness = rec.best_fitness;
      result.best = parents[best_idx].genome;
    }
    best_history.push_back(rec.best_fitness);

    if (gen > cfg.warmup && gen >= cfg.patience) {
      const double ref = best_history[gen - cfg.patience];
      const double rel = (rec.best_fitness - ref) / std::max(std::abs(ref), 1e-12);
      stalled = rel < cfg.min_relative_improvement ? stalled + 1 : 0;
      if (stalled >= cfg.patience) {
        result.early_stopped = true;
        break;
      }
    }
    if (gen >= cfg.max_generations) break;

    offspring.reserve(cfg.lambda);
    for (std::size_t k = 0; k < cfg.lambda; ++k) {
      const double op = rng.uniform();
      Individual child;
      child.birth = gen + 1;
      if (op < cfg.p_cx) {
        const auto pick = select_tournament(scores, 2, cfg.tournament_size, rng);
        child.genome = crossover(genomes[pick[0]], genomes[pick[1]], pool, rng).first;
      } else if (op < cfg.p_cx + cfg.p_mut) {
        const auto pick = select_tournament(scores, 1, cfg.tournament_size, rng);
        child.genome = mutate(genomes[pick[0]], pool, rec.p_inter, rng);
      } else {
        const auto pick = select_tournament(scores, 1, cfg.tournament_size, rng);
        child.genome = genomes[pick[0]];
      }
      if (const auto it = cache.find(child.genome); it != cache.end()) {
        child.fitness = it->second;
        child.evaluated = true;
      }
      offspring.push_back(std::move(child));
    }
  }
  return result;
}

}  // namespace grasp
