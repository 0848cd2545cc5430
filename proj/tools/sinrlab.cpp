// sinrlab: batch front-end for the analysis and simulation library.
//
//   sinrlab <kind> --config <file> [--set key=value]... --out <dir>
//           [--seed N] [--realizations N] [--slots N] [--jobs N]

#include "sinrlab/analysis.hpp"
#include "sinrlab/experiment.hpp"
#include "sinrlab/parallel.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <iostream>

namespace {

constexpr int kConfigExit = 2;
constexpr int kNumericalExit = 3;
constexpr int kIoExit = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sinrlab: success probability, meta distribution and stability of spatially interacting queues"};
  std::string kind;
  std::string config_file;
  std::vector<std::string> overrides;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> realizations;
  std::optional<long> slots;
  std::optional<unsigned> jobs;

  app.add_option("kind", kind, "solve | simulate | meta | stability | sweep | compare")
      ->required()
      ->check(CLI::IsMember({"solve", "simulate", "meta", "stability", "sweep", "compare"}));
  app.add_option("--config", config_file, "JSON experiment configuration")->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "override a configuration key (key=value, repeatable)");
  app.add_option("--out", out, "output directory")->required();
  app.add_option("--seed", seed, "master seed");
  app.add_option("--realizations", realizations, "topology realisations per point");
  app.add_option("--slots", slots, "slots per realisation (warm-up included)");
  app.add_option("--jobs", jobs, "worker threads")->envname("SINRLAB_JOBS");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  sinrlab::ExperimentConfig config;
  try {
    overrides.insert(overrides.begin(), "kind=\"" + kind + "\"");
    config = config_file.empty() ? sinrlab::parse_config("{}", overrides)
                                 : sinrlab::load_config(config_file, overrides);
    config.out = out;
    if (seed) config.seed = *seed;
    if (realizations) {
      if (*realizations < 1) throw sinrlab::ConfigError("--realizations must be at least 1");
      config.realizations = *realizations;
    }
    if (slots) {
      if (*slots <= config.warmup) throw sinrlab::ConfigError("--slots must exceed the warm-up");
      config.slots = *slots;
    }
    config.jobs = jobs ? *jobs : sinrlab::default_jobs();
    if (config.jobs < 1) throw sinrlab::ConfigError("--jobs must be at least 1");
  } catch (const sinrlab::ConfigError& e) {
    std::cerr << "sinrlab: config error: " << e.what() << '\n';
    return kConfigExit;
  }

  try {
    const sinrlab::ExperimentOutcome r = sinrlab::run_experiment(config);
    std::cout << "sinrlab " << kind << ": " << r.rows << " rows in " << r.wall_seconds << " s -> "
              << config.out.string() << '\n';
    if (!r.converged) {
      std::cerr << "sinrlab: some points did not converge (converged=false rows kept)\n";
      return kNumericalExit;
    }
    return 0;
  } catch (const sinrlab::ConfigError& e) {
    std::cerr << "sinrlab: config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const sinrlab::IoError& e) {
    std::cerr << "sinrlab: I/O error: " << e.what() << '\n';
    return kIoExit;
  } catch (const sinrlab::NumericalError& e) {
    std::cerr << "sinrlab: numerical failure: " << e.what() << '\n';
    return kNumericalExit;
  }
}
