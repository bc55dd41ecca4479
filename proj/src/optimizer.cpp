#include "smbo/optimizer.hpp"

#include <chrono>
#include <cstdio>

#include "smbo/error.hpp"

namespace smbo {

void OptimizerConfig::validate() const {
  acquisition.validate();
  if (t_init < 1) throw Error("t_init must be at least 1");
  if (n_total < 1) throw Error("n_total must be at least 1");
  if (t_init > n_total) throw Error("t_init must not exceed n_total");
}

double system_clock_seconds() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

std::string config_digest(const SearchSpace& space, const OptimizerConfig& cfg) {
  const nlohmann::json doc{{"space", space.to_json()},
                           {"t_init", cfg.t_init},
                           {"gamma", cfg.acquisition.gamma},
                           {"p_hybrid", cfg.acquisition.p_hybrid},
                           {"n_candidates", cfg.acquisition.n_candidates}};
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunHeader make_header(const SearchSpace& space, const OptimizerConfig& cfg) {
  RunHeader h;
  h.space_name = space.name();
  h.space_version = space.version();
  h.master_seed = cfg.master_seed;
  h.config_digest = config_digest(space, cfg);
  return h;
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t index) { return derive_seed(master_seed, index); }

Proposal proposal_for(const SearchSpace& space, const OptimizerConfig& cfg, std::span<const Trial> trials,
                      std::size_t index) {
  if (index > trials.size()) throw Error("trial history is shorter than the requested index");
  Rng rng(trial_seed(cfg.master_seed, index));
  if (index < cfg.t_init) return Proposal{sample_uniform(space, rng), Branch::random};
  return propose_next(trials.first(index), space, cfg.acquisition, rng);
}

// ---------------------------------------------------------------------------

Optimizer::Optimizer(const SearchSpace& space, Evaluator& evaluator, const OptimizerConfig& cfg,
                     TrialStore& store, WallClock clock)
    : space_(space), evaluator_(evaluator), cfg_(cfg), store_(store), clock_(std::move(clock)) {
  cfg_.validate();
  const auto expected = make_header(space_, cfg_);
  if (store_.header() != expected)
    throw Error(store_.path() + ": run header does not match the space/configuration (space '" +
                store_.header().space_name + "' v" + std::to_string(store_.header().space_version) +
                ", seed " + std::to_string(store_.header().master_seed) + ", digest " +
                store_.header().config_digest + "; expected '" + expected.space_name + "' v" +
                std::to_string(expected.space_version) + ", seed " + std::to_string(expected.master_seed) +
                ", digest " + expected.config_digest + ")");
}

bool Optimizer::done() const { return store_.database().size() >= cfg_.n_total; }

RunState Optimizer::state() const {
  RunState s;
  s.db = store_.database();
  s.iteration = s.db.size();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(trial_seed(cfg_.master_seed, s.iteration)));
  s.rng_token = buf;
  return s;
}

bool Optimizer::step() {
  if (done()) return false;
  const auto& trials = store_.database().trials;
  const std::size_t index = trials.size();

  Trial t;
  t.id = index;
  t.seed = trial_seed(cfg_.master_seed, index);
  t.started_at = clock_();
  auto proposal = proposal_for(space_, cfg_, trials, index);
  t.assignment = std::move(proposal.assignment);
  t.branch = proposal.branch;

  EvalRequest req;
  req.trial_id = index;
  req.assignment = &t.assignment;
  req.seed = derive_seed(t.seed, 1);
  auto result = evaluator_.evaluate(req);
  if (result.status != Status::ok || !(result.error >= 0.0 && result.error <= 1.0)) {
    if (result.status == Status::ok) {
      result.detail = "evaluator returned error outside [0,1]";
      result.status = Status::failed;
    }
    result.error = 1.0;
  }
  t.error = result.error;
  t.status = result.status;
  t.wall_time = result.wall_time;
  t.detail = std::move(result.detail);
  t.finished_at = clock_();

  store_.append(t);
  return !done();
}

const TrialDatabase& Optimizer::run() {
  while (step()) {
  }
  return store_.database();
}

TrialDatabase run_optimizer(const SearchSpace& space, Evaluator& evaluator, const OptimizerConfig& cfg,
                            TrialStore& store, WallClock clock) {
  if (!store.database().empty())
    throw Error(store.path() + ": store already holds " + std::to_string(store.database().size()) +
                " trials; resume instead");
  Optimizer opt(space, evaluator, cfg, store, std::move(clock));
  return opt.run();
}

TrialDatabase resume(const SearchSpace& space, Evaluator& evaluator, const OptimizerConfig& cfg,
                     TrialStore& store, WallClock clock) {
  Optimizer opt(space, evaluator, cfg, store, std::move(clock));
  return opt.run();
}

}  // namespace smbo
