#include "smbo/trial.hpp"

#include "smbo/error.hpp"

namespace smbo {

const char* to_string(Status s) {
  switch (s) {
    case Status::ok: return "ok";
    case Status::failed: return "failed";
    case Status::invalid_arch: return "invalid-arch";
  }
  return "?";
}

const char* to_string(Branch b) {
  switch (b) {
    case Branch::random: return "random";
    case Branch::tpe: return "tpe";
    case Branch::simplified: return "simplified";
  }
  return "?";
}

Status status_from_string(const std::string& s) {
  if (s == "ok") return Status::ok;
  if (s == "failed") return Status::failed;
  if (s == "invalid-arch") return Status::invalid_arch;
  throw Error("unknown trial status '" + s + "'");
}

Branch branch_from_string(const std::string& s) {
  if (s == "random") return Branch::random;
  if (s == "tpe") return Branch::tpe;
  if (s == "simplified") return Branch::simplified;
  throw Error("unknown branch tag '" + s + "'");
}

nlohmann::json to_json(const Trial& t) {
  // Key order is fixed by nlohmann's sorted object map.
  return {{"id", t.id},
          {"assignment", t.assignment.to_json()},
          {"error", t.error},
          {"status", to_string(t.status)},
          {"branch", to_string(t.branch)},
          {"seed", t.seed},
          {"started_at", t.started_at},
          {"finished_at", t.finished_at},
          {"wall_time", t.wall_time},
          {"detail", t.detail}};
}

namespace {

const nlohmann::json& field(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(std::string("missing field '") + key + "'");
  return *it;
}

std::uint64_t unsigned_field(const nlohmann::json& j, const char* key) {
  const auto& v = field(j, key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw Error(std::string("field '") + key + "' must be a non-negative integer");
}

double number_field(const nlohmann::json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_number()) throw Error(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

std::string string_field(const nlohmann::json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_string()) throw Error(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

Trial trial_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("trial record must be a JSON object");
  Trial t;
  t.id = unsigned_field(j, "id");
  t.assignment = Assignment::from_json(field(j, "assignment"));
  t.error = number_field(j, "error");
  if (!(t.error >= 0.0 && t.error <= 1.0)) throw Error("trial error outside [0, 1]");
  t.status = status_from_string(string_field(j, "status"));
  if (t.status != Status::ok && t.error != 1.0) throw Error("non-ok trial must carry error 1.0");
  t.branch = branch_from_string(string_field(j, "branch"));
  t.seed = unsigned_field(j, "seed");
  t.started_at = number_field(j, "started_at");
  t.finished_at = number_field(j, "finished_at");
  t.wall_time = number_field(j, "wall_time");
  t.detail = string_field(j, "detail");
  return t;
}

nlohmann::json to_json(const RunHeader& h) {
  return {{"format_version", h.format_version},
          {"space_name", h.space_name},
          {"space_version", h.space_version},
          {"master_seed", h.master_seed},
          {"config_digest", h.config_digest}};
}

RunHeader header_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("header must be a JSON object");
  RunHeader h;
  const auto& fv = field(j, "format_version");
  if (!fv.is_number_integer()) throw Error("field 'format_version' must be an integer");
  h.format_version = fv.get<std::int64_t>();
  if (h.format_version != 1) throw Error("unsupported format_version " + std::to_string(h.format_version));
  h.space_name = string_field(j, "space_name");
  const auto& sv = field(j, "space_version");
  if (!sv.is_number_integer()) throw Error("field 'space_version' must be an integer");
  h.space_version = sv.get<std::int64_t>();
  h.master_seed = unsigned_field(j, "master_seed");
  h.config_digest = string_field(j, "config_digest");
  return h;
}

}  // namespace smbo
