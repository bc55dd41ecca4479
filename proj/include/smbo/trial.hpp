#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "smbo/value.hpp"

namespace smbo {

enum class Status { ok, failed, invalid_arch };
enum class Branch { random, tpe, simplified };

const char* to_string(Status s);
const char* to_string(Branch b);
Status status_from_string(const std::string& s);
Branch branch_from_string(const std::string& s);

/// One evaluated point (lambda_i, e_i) of the optimization history.
struct Trial {
  std::uint64_t id = 0;
  Assignment assignment;
  double error = 1.0;  // fraction in [0, 1]; 1.0 whenever status != ok
  Status status = Status::ok;
  Branch branch = Branch::random;
  std::uint64_t seed = 0;
  double started_at = 0.0;   // seconds since the epoch
  double finished_at = 0.0;
  double wall_time = 0.0;    // evaluator-reported seconds
  std::string detail;

  friend bool operator==(const Trial&, const Trial&) = default;
};

struct RunHeader {
  std::int64_t format_version = 1;
  std::string space_name;
  std::int64_t space_version = 0;
  std::uint64_t master_seed = 0;
  std::string config_digest;

  friend bool operator==(const RunHeader&, const RunHeader&) = default;
};

struct TrialDatabase {
  RunHeader header;
  std::vector<Trial> trials;

  std::size_t size() const { return trials.size(); }
  bool empty() const { return trials.empty(); }

  friend bool operator==(const TrialDatabase&, const TrialDatabase&) = default;
};

nlohmann::json to_json(const Trial& t);
Trial trial_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunHeader& h);
RunHeader header_from_json(const nlohmann::json& j);

}  // namespace smbo
