#include "grasp/config.hpp"
#include "grasp/pipeline.hpp"
#include "grasp/plot.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kConfigError = 2, kStageFailure = 3, kClientFailure = 4 };

struct Common {
  std::string config;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::string fitness_mode;
  std::string force;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_force) {
  cmd->add_option("-c,--config", c.config, "Pipeline config file (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--output", c.output, "Output directory (overrides the config)");
  cmd->add_option("--seed", c.seed, "Global seed (overrides the config)");
  cmd->add_option("--fitness-mode", c.fitness_mode, "llm or surrogate")->check(CLI::IsMember({"llm", "surrogate"}));
  cmd->add_flag("-q,--quiet", c.quiet, "Suppress progress output");
  if (with_force) {
    cmd->add_option("--force", c.force, "Re-run this stage even if its artifacts are current")
        ->check(CLI::IsMember({"generate", "reduce", "pools", "select", "evaluate"}));
  }
}

grasp::PipelineConfig resolve(const Common& c) {
  auto cfg = grasp::load_config(c.config);
  if (!c.output.empty()) cfg.output_dir = c.output;
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.snapshot["seed"] = *c.seed;
  }
  if (!c.fitness_mode.empty()) {
    cfg.fitness_mode = grasp::fitness_mode_from_string(c.fitness_mode);
    cfg.snapshot["fitness_mode"] = c.fitness_mode;
  }
  return cfg;
}

int run_until(const Common& c, grasp::Stage until) {
  const auto cfg = resolve(c);
  grasp::RunOptions opts;
  opts.until = until;
  if (!c.force.empty()) opts.force = grasp::stage_from_string(c.force);
  if (!c.quiet) opts.log = &std::cerr;
  const auto manifest = grasp::run_pipeline(cfg, opts);
  if (!c.quiet) std::cerr << "outputs in " << cfg.output_dir.string() << '\n';
  return kOk;
}

int plot(const std::string& dir) {
  int written = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("trace_", 0) != 0 || entry.path().extension() != ".tsv") continue;
    std::ifstream in(entry.path());
    const auto trace = grasp::read_trace(in);
    const auto stem = entry.path().stem().string();
    std::ofstream(entry.path().parent_path() / (stem + "_fitness.svg")) << grasp::fitness_chart_svg(trace, stem);
    std::ofstream(entry.path().parent_path() / (stem + "_mutation.svg")) << grasp::mutation_chart_svg(trace, stem);
    for (const char* kind : {"_fitness.svg", "_mutation.svg"}) {
      std::cout << (entry.path().parent_path() / (stem + kind)).string() << '\n';
    }
    ++written;
  }
  if (written == 0) {
    std::cerr << "no trace_*.tsv files in " << dir << '\n';
    return kStageFailure;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grasp: generate, reduce and select few-shot demonstrations"};
  app.require_subcommand(1);

  Common common;
  auto* gen = app.add_subcommand("generate", "Build the candidate pool and the validation split");
  auto* red = app.add_subcommand("reduce", "Embed, project and cluster; write the candidate pools");
  auto* sel = app.add_subcommand("select", "Run the genetic search for every pool size");
  auto* eva = app.add_subcommand("evaluate", "Score the selected prompts");
  auto* all = app.add_subcommand("run-all", "Run every stage, resuming from the manifest");
  auto* base = app.add_subcommand("baseline", "Random (and zero-shot) baselines over the candidate pools");
  for (auto* cmd : {gen, red, sel, eva, all}) add_common(cmd, common, true);
  add_common(base, common, false);

  std::string plot_dir;
  auto* plt = app.add_subcommand("plot", "Render SVG charts from the trace files in a run directory");
  plt->add_option("dir", plot_dir, "Run output directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return run_until(common, grasp::Stage::generate);
    if (*red) return run_until(common, grasp::Stage::pools);
    if (*sel) return run_until(common, grasp::Stage::select);
    if (*eva || *all) return run_until(common, grasp::Stage::evaluate);
    if (*base) {
      const auto cfg = resolve(common);
      std::cout << grasp::run_baselines(cfg).dump(2) << '\n';
      return kOk;
    }
    if (*plt) return plot(plot_dir);
  } catch (const grasp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const grasp::LlmError& e) {
    std::cerr << "client error (" << grasp::to_string(e.kind()) << "): " << e.what() << '\n';
    return kClientFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kStageFailure;
  }
  return kUsage;
}
