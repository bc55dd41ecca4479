#include "smbo/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "smbo/dcn_space.hpp"
#include "smbo/error.hpp"
#include "smbo/format.hpp"
#include "smbo/optimizer.hpp"
#include "smbo/report.hpp"
#include "smbo/trial_store.hpp"

namespace smbo {

namespace {

struct RunFlags {
  std::string space_path;
  std::string store_path;
  std::size_t n_total = 100;
  std::size_t t_init = 32;
  double gamma = 0.5;
  double p = 0.9;
  std::size_t candidates = 64;
  std::uint64_t seed = 0;
  std::string evaluator = "surrogate";
  std::string surface_path;
  std::uint64_t surface_seed = 0;
  std::optional<double> timeout;
  std::string run_dir;
  bool recover = false;
  bool fixed_clock = false;

  OptimizerConfig config() const {
    OptimizerConfig cfg;
    cfg.n_total = n_total;
    cfg.t_init = t_init;
    cfg.acquisition.gamma = gamma;
    cfg.acquisition.p_hybrid = p;
    cfg.acquisition.n_candidates = candidates;
    cfg.master_seed = seed;
    return cfg;
  }
};

void add_config_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--space", f.space_path, "Space definition or DCN profile (JSON)")->required();
  cmd->add_option("--store", f.store_path, "Trial store (JSON lines)")->required();
  cmd->add_option("--t-init", f.t_init, "Random trials before the first proposal")->capture_default_str();
  cmd->add_option("--gamma", f.gamma, "Quantile level of the good/bad split")->capture_default_str();
  cmd->add_option("--p", f.p, "Probability of the density-ratio branch")->capture_default_str();
  cmd->add_option("--candidates", f.candidates, "Uniform candidates scored per proposal")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Master seed")->capture_default_str();
}

std::string percent(double error) { return format_double(std::round(error * 1e6) / 1e4) + "%"; }

std::string store_dir(const std::string& store_path) {
  auto dir = std::filesystem::absolute(store_path).parent_path();
  return dir.string();
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(path + ": cannot write");
  f << text;
  if (!f) throw Error(path + ": write failed");
}

int cmd_init(const RunFlags& f, std::ostream& out) {
  const auto space = dcn::load_space_file(f.space_path);
  auto cfg = f.config();
  cfg.n_total = std::max(cfg.n_total, cfg.t_init);
  cfg.validate();
  auto store = TrialStore::create(f.store_path, make_header(space, cfg));
  out << "initialized " << f.store_path << " (space '" << space.name() << "' v" << space.version()
      << ", digest " << store.header().config_digest << ")\n";
  return 0;
}

int cmd_run(const RunFlags& f, std::ostream& out, std::ostream& err) {
  std::optional<dcn::RangeProfile> profile;
  const auto space = dcn::load_space_file(f.space_path, &profile);
  const auto cfg = f.config();
  cfg.validate();

  const std::string run_dir = f.run_dir.empty() ? store_dir(f.store_path) : f.run_dir;
  std::unique_ptr<Evaluator> base;
  bool external = false;
  if (f.evaluator == "surrogate") {
    auto surface = f.surface_path.empty() ? SurfaceSpec::random_for(space, f.surface_seed)
                                          : SurfaceSpec::from_file(f.surface_path);
    base = std::make_unique<SurrogateEvaluator>(std::move(surface));
  } else if (f.evaluator.rfind("command:", 0) == 0) {
    CommandSpec cmd;
    cmd.command = f.evaluator.substr(8);
    if (cmd.command.empty()) throw Error("--evaluator command: needs a command");
    cmd.timeout_seconds = f.timeout.value_or(24.0 * 3600.0);
    cmd.run_dir = run_dir;
    base = std::make_unique<ExternalEvaluator>(std::move(cmd));
    external = true;
  } else {
    throw Error("--evaluator must be 'surrogate' or 'command:<shell command>'");
  }

  std::unique_ptr<Evaluator> gate;
  Evaluator* evaluator = base.get();
  if (profile) {
    gate = std::make_unique<dcn::ArchitectureEvaluator>(space, *base,
                                                        external ? std::optional<std::string>(run_dir) : std::nullopt);
    evaluator = gate.get();
  }

  auto store = TrialStore::open_or_create(f.store_path, make_header(space, cfg), f.recover);
  for (const auto& w : store.warnings()) err << "warning: " << w << "\n";
  const std::size_t before = store.database().size();
  WallClock clock = f.fixed_clock ? WallClock([] { return 0.0; }) : WallClock(system_clock_seconds);
  const auto db = resume(space, *evaluator, cfg, store, clock);

  out << "trials: " << db.size() << " (" << (db.size() - before) << " new)\n";
  if (!db.empty()) {
    const auto best = best_trials(db.trials, 1).at(0);
    out << "best: trial " << best["id"].get<std::uint64_t>() << ", error " << percent(best["error"].get<double>())
        << "\n";
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sequential model-based search over conditional hyper-parameter spaces", "smbo"};
  app.require_subcommand(1);

  RunFlags init_flags;
  auto* init = app.add_subcommand("init", "Write a run header for a new store");
  add_config_flags(init, init_flags);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Run or resume an optimization");
  add_config_flags(run, run_flags);
  run->add_option("--n-total", run_flags.n_total, "Total trials in the finished run")->capture_default_str();
  run->add_option("--evaluator", run_flags.evaluator, "surrogate | command:\"<shell command>\"")
      ->capture_default_str();
  run->add_option("--surface", run_flags.surface_path, "Surrogate surface (JSON); default: random per space");
  run->add_option("--surface-seed", run_flags.surface_seed, "Seed of the default surrogate surface")
      ->capture_default_str();
  run->add_option("--timeout", run_flags.timeout, "Seconds per external evaluation (default 86400)");
  run->add_option("--run-dir", run_flags.run_dir, "RUN_DIR for external evaluators (default: store directory)");
  run->add_flag("--recover", run_flags.recover, "Drop a partial trailing record left by a crash");
  run->add_flag("--fixed-clock", run_flags.fixed_clock, "Record zero timestamps (byte-reproducible stores)");

  std::string report_store, report_out;
  std::size_t window = 10;
  bool report_recover = false;
  auto* report = app.add_subcommand("report", "Convergence curves as CSV (i,mean,std,min,branch)");
  report->add_option("--store", report_store, "Trial store")->required();
  report->add_option("--window", window, "Trailing window of the mean/std columns")->capture_default_str();
  report->add_option("--out", report_out, "Output file (default: stdout)");
  report->add_flag("--recover", report_recover, "Ignore a partial trailing record");

  std::string best_store;
  std::size_t k = 3;
  bool best_recover = false;
  auto* best = app.add_subcommand("best", "Top-k trials as JSON");
  best->add_option("--store", best_store, "Trial store")->required();
  best->add_option("-k", k, "Number of trials")->capture_default_str();
  best->add_flag("--recover", best_recover, "Ignore a partial trailing record");

  std::string export_store, export_space, export_out;
  std::uint64_t export_trial = 0;
  auto* exp = app.add_subcommand("export-arch", "Decode a trial into a trainer config");
  exp->add_option("--store", export_store, "Trial store")->required();
  exp->add_option("--space", export_space, "DCN profile the run used")->required();
  exp->add_option("--trial", export_trial, "Trial id")->required();
  exp->add_option("--out", export_out, "Output file (default: stdout)");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*init) return cmd_init(init_flags, out);
    if (*run) return cmd_run(run_flags, out, err);
    if (*report) {
      const auto db = load(report_store, LoadOptions{report_recover, std::nullopt});
      write_text(report_out, curves_to_csv(compute_curves(db.trials, window)), out);
      return 0;
    }
    if (*best) {
      const auto db = load(best_store, LoadOptions{best_recover, std::nullopt});
      out << best_trials(db.trials, k).dump(2) << "\n";
      return 0;
    }
    if (*exp) {
      std::optional<dcn::RangeProfile> profile;
      const auto space = dcn::load_space_file(export_space, &profile);
      if (!profile) throw Error(export_space + ": export-arch needs a DCN profile (\"kind\": \"dcn-profile\")");
      const auto db = load(export_store);
      if (db.header.space_name != space.name() || db.header.space_version != space.version())
        throw Error("store was written for space '" + db.header.space_name + "' v" +
                    std::to_string(db.header.space_version) + ", not '" + space.name() + "' v" +
                    std::to_string(space.version()));
      if (export_trial >= db.size()) throw Error("no trial " + std::to_string(export_trial) + " in store");
      auto decoded = dcn::decode(space, db.trials[export_trial].assignment);
      if (const auto* bad = std::get_if<dcn::InvalidArchitecture>(&decoded))
        throw Error("trial " + std::to_string(export_trial) + " is not a valid architecture: " + bad->reason);
      write_text(export_out, dcn::export_config(std::get<dcn::ArchitectureDescription>(decoded)), out);
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace smbo
