#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "smbo/acquisition.hpp"
#include "smbo/evaluators.hpp"
#include "smbo/search_space.hpp"
#include "smbo/trial_store.hpp"

namespace smbo {

struct OptimizerConfig {
  std::size_t t_init = 32;    // random trials seeding the history
  std::size_t n_total = 100;  // total trials in a finished run
  AcquisitionConfig acquisition;
  std::uint64_t master_seed = 0;

  void validate() const;
};

/// Seconds since the epoch; injectable so runs can be byte-reproducible.
using WallClock = std::function<double()>;
double system_clock_seconds();

/// Where a run stands. `rng_token` is the seed of the next trial's stream;
/// together with the history it fully determines the rest of the run.
struct RunState {
  TrialDatabase db;
  std::size_t iteration = 0;
  std::string rng_token;
};

/// Hex FNV-1a digest over the space definition and the settings that shape
/// proposals (t_init, gamma, p, candidate count). n_total and the seed are
/// excluded: the seed has its own header field and n_total may grow on resume.
std::string config_digest(const SearchSpace& space, const OptimizerConfig& cfg);
RunHeader make_header(const SearchSpace& space, const OptimizerConfig& cfg);

/// Seed of trial `index`'s random stream.
std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t index);

/// The assignment for trial `index`, reading only trials[0, index). Trials
/// below t_init are uniform draws tagged random; later ones come from
/// propose_next.
Proposal proposal_for(const SearchSpace& space, const OptimizerConfig& cfg, std::span<const Trial> trials,
                      std::size_t index);

/// Sequential SMBO driver: propose, evaluate, append, repeat.
class Optimizer {
 public:
  Optimizer(const SearchSpace& space, Evaluator& evaluator, const OptimizerConfig& cfg, TrialStore& store,
            WallClock clock = system_clock_seconds);

  /// Runs one trial. Returns false once the store holds n_total trials.
  bool step();
  /// Steps until done and returns the final database.
  const TrialDatabase& run();

  bool done() const;
  RunState state() const;

 private:
  const SearchSpace& space_;
  Evaluator& evaluator_;
  OptimizerConfig cfg_;
  TrialStore& store_;
  WallClock clock_;
};

/// Fresh run into a store holding no trials yet. Throws Error if the store
/// already has trials or its header does not match.
TrialDatabase run_optimizer(const SearchSpace& space, Evaluator& evaluator, const OptimizerConfig& cfg,
                            TrialStore& store, WallClock clock = system_clock_seconds);

/// Continues a persisted run at its current trial count. A finished run is
/// returned as is.
TrialDatabase resume(const SearchSpace& space, Evaluator& evaluator, const OptimizerConfig& cfg,
                     TrialStore& store, WallClock clock = system_clock_seconds);

}  // namespace smbo
