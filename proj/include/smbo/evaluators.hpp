#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "smbo/rng.hpp"
#include "smbo/search_space.hpp"
#include "smbo/trial.hpp"

namespace smbo {

struct EvaluationResult {
  double error = 1.0;  // in [0, 1]; exactly 1.0 unless status is ok
  Status status = Status::ok;
  double wall_time = 0.0;
  std::string detail;

  static EvaluationResult ok(double error, std::string detail = {});
  static EvaluationResult failed(std::string detail, Status status = Status::failed);
};

struct EvalRequest {
  std::uint64_t trial_id = 0;
  const Assignment* assignment = nullptr;
  /// Seed for any randomness the evaluator needs (e.g. surrogate noise).
  std::uint64_t seed = 0;
  /// Trainer config exported for this trial, if any.
  std::optional<std::string> config_path;
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  /// Ordinary failures come back as status failed with error 1.0. Throws
  /// HardFault only when evaluation is impossible altogether.
  virtual EvaluationResult evaluate(const EvalRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Synthetic response surfaces

/// One additive term of a surrogate surface. Numeric params contribute
/// weight * ((x - optimum) / scale)^2; discrete params contribute the penalty
/// listed for their value (0 if unlisted). An inactive param contributes
/// `inactive_penalty`.
struct SurfaceTerm {
  std::string param;
  double weight = 1.0;
  std::optional<double> optimum;
  double scale = 1.0;
  std::vector<std::pair<Value, double>> penalties;
  double inactive_penalty = 0.0;
};

struct SurfaceSpec {
  double floor = 0.0;
  double noise_sigma = 0.0;
  std::vector<SurfaceTerm> terms;

  nlohmann::json to_json() const;
  static SurfaceSpec from_json(const nlohmann::json& j);
  static SurfaceSpec from_file(const std::string& path);

  /// A surface over every param of `space` with a hidden optimum drawn from
  /// `seed`. The optimum is unique: each discrete param penalizes every
  /// non-optimal value by a positive amount and numeric bowls are strict.
  static SurfaceSpec random_for(const SearchSpace& space, std::uint64_t seed, double floor = 0.05);
};

/// floor + sum of terms (+ sigma * N(0,1) when sigma > 0 and `noise` is
/// given), clamped to [0, 1].
EvaluationResult eval_surrogate(const Assignment& a, const SurfaceSpec& surface, Rng* noise = nullptr);

class SurrogateEvaluator : public Evaluator {
 public:
  explicit SurrogateEvaluator(SurfaceSpec surface) : surface_(std::move(surface)) {}
  EvaluationResult evaluate(const EvalRequest& request) override;
  const SurfaceSpec& surface() const { return surface_; }

 private:
  SurfaceSpec surface_;
};

// ---------------------------------------------------------------------------
// External training command

struct CommandSpec {
  /// Run through /bin/sh -c.
  std::string command;
  double timeout_seconds = 24.0 * 3600.0;
  /// Exported to the child as RUN_DIR.
  std::string run_dir = ".";
};

/// The JSON document written to the child's stdin.
nlohmann::json external_request(std::uint64_t trial_id, const Assignment& a,
                                const std::optional<std::string>& config_path);

/// Spawns `cmd`, feeds it external_request() on stdin (then closes it), and
/// reads a single decimal in [0, 1] from stdout. Exit 0 with a parseable
/// number is ok; anything else (non-zero exit, signal, timeout, junk output)
/// is failed with error 1.0 and the child's stderr in `detail`. Throws
/// HardFault when the child cannot be spawned.
EvaluationResult eval_external(std::uint64_t trial_id, const Assignment& a, const CommandSpec& cmd,
                               const std::optional<std::string>& config_path = std::nullopt);

class ExternalEvaluator : public Evaluator {
 public:
  explicit ExternalEvaluator(CommandSpec cmd) : cmd_(std::move(cmd)) {}
  EvaluationResult evaluate(const EvalRequest& request) override;

 private:
  CommandSpec cmd_;
};

}  // namespace smbo
