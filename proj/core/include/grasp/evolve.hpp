#pragma once

#include "grasp/genome.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace grasp {

/// (mu + lambda) settings. Defaults are the reference run's values.
struct GAConfig {
  std::size_t mu = 80;
  std::size_t lambda = 180;
  std::size_t max_generations = 20;
  double p_cx = 0.30;
  double p_mut = 0.50;
  std::size_t tournament_size = 3;
  double p_min = 0.05;
  double p_max = 0.70;
  std::size_t warmup = 5;
  std::size_t patience = 5;
  double min_relative_improvement = 0.003;
  std::size_t genome_length = 5;
  std::size_t eval_workers = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// p_min + (p_max - p_min) * diversity
double inter_probability(double diversity, const GAConfig& cfg);

struct GenerationRecord {
  std::size_t generation = 0;
  double mean_fitness = 0.0;
  double best_fitness = 0.0;
  double diversity = 0.0;
  double p_inter = 0.0;
  std::size_t evaluations = 0;
};

using RunTrace = std::vector<GenerationRecord>;

void write_trace(std::ostream& out, const RunTrace& trace);
void write_trace_header(std::ostream& out);
void write_trace_row(std::ostream& out, const GenerationRecord& r);
RunTrace read_trace(std::istream& in);

/// Scores one genome. Must be thread-safe when GAConfig::eval_workers > 1.
class FitnessProvider {
 public:
  virtual ~FitnessProvider() = default;
  virtual double evaluate(const Genome& genome) = 0;
};

/// Adapts a callable.
class FunctionFitness : public FitnessProvider {
 public:
  explicit FunctionFitness(std::function<double(const Genome&)> fn) : fn_(std::move(fn)) {}
  double evaluate(const Genome& genome) override { return fn_(genome); }

 private:
  std::function<double(const Genome&)> fn_;
};

struct EvolutionResult {
  Genome best;
  double best_fitness = 0.0;
  RunTrace trace;
  bool early_stopped = false;
  std::size_t total_evaluations = 0;
};

struct EvolveObserver {
  std::function<void(const GenerationRecord&)> on_generation;
  std::function<void(std::size_t generation, std::span<const Genome> parents)> on_population;
};

/// Raised when the fitness provider fails; carries the trace recorded so far.
class EvolutionAborted : public std::runtime_error {
 public:
  EvolutionAborted(const std::string& what, RunTrace trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const RunTrace& trace() const noexcept { return trace_; }

 private:
  RunTrace trace_;
};

/// Generation 0 is the random initial population; each later generation adds
/// lambda offspring (crossover, mutation or clone) and keeps the best mu of
/// parents and offspring. Stops after max_generations or when, past the
/// warm-up, the windowed relative improvement of the best fitness stays below
/// the threshold for `patience` consecutive generations.
EvolutionResult evolve(const ClusteredPool& pool, FitnessProvider& fitness, const GAConfig& cfg,
                       const EvolveObserver& observer = {});

}  // namespace grasp
