#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "smbo/rng.hpp"
#include "smbo/value.hpp"

namespace smbo {

enum class ParamKind { categorical, integer, real, boolean };

const char* to_string(ParamKind kind);

/// A parameter is active only while its parent is active and holds one of
/// `values`.
struct Condition {
  std::string parent;
  std::vector<Value> values;
};

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::real;
  std::vector<Value> choices;  // categorical only
  double lo = 0.0;             // integer / real, inclusive
  double hi = 0.0;
  std::optional<Condition> condition;

  static ParamSpec categorical(std::string name, std::vector<Value> choices);
  static ParamSpec integer(std::string name, std::int64_t lo, std::int64_t hi);
  static ParamSpec real(std::string name, double lo, double hi);
  static ParamSpec boolean(std::string name);

  ParamSpec& when(std::string parent, Value equals);
  ParamSpec& when_any(std::string parent, std::vector<Value> values);

  bool is_numeric() const { return kind == ParamKind::integer || kind == ParamKind::real; }
  bool in_domain(const Value& v) const;
  /// Number of discrete values (categorical, boolean, integer).
  std::size_t cardinality() const;
  /// Index of `v` among the discrete values. Integer params index from lo.
  std::size_t choice_index(const Value& v) const;
  /// log of the uniform density over the domain (0 for a single point).
  double log_uniform() const;
  std::string domain_string() const;
};

/// Conditional mixed parameter space. Immutable once constructed.
class SearchSpace {
 public:
  /// Throws Error when names repeat, a domain is empty or inverted, a
  /// condition names an unknown parent or a value outside its domain, or
  /// conditions form a cycle.
  SearchSpace(std::string name, std::int64_t version, std::vector<ParamSpec> params);

  const std::string& name() const { return name_; }
  std::int64_t version() const { return version_; }
  const std::vector<ParamSpec>& params() const { return params_; }
  const ParamSpec& param(const std::string& name) const;
  const ParamSpec* find(const std::string& name) const;
  std::size_t index_of(const std::string& name) const;

  /// Declaration order with every parent ahead of its children.
  std::span<const std::size_t> sampling_order() const { return order_; }

  /// True if `p`'s activation condition holds under `a` (roots always).
  bool is_active(const ParamSpec& p, const Assignment& a) const;

  nlohmann::json to_json() const;
  /// Diagnostics name the offending JSON path, e.g. "params[2].hi".
  static SearchSpace from_json(const nlohmann::json& j);
  /// Parse errors report line and column.
  static SearchSpace from_file(const std::string& path);

 private:
  std::string name_;
  std::int64_t version_;
  std::vector<ParamSpec> params_;
  std::vector<std::size_t> order_;
};

nlohmann::json param_to_json(const ParamSpec& p);

/// Every violation in `a`: missing active params, inactive params present,
/// unknown names, out-of-domain values. Empty means valid.
std::vector<std::string> validate(const SearchSpace& space, const Assignment& a);

/// Throws Error listing the violations if `a` is invalid.
void require_valid(const SearchSpace& space, const Assignment& a);

Assignment sample_uniform(const SearchSpace& space, Rng& rng);

/// Keeps the in-domain values of `partial` that are still active, drops the
/// rest, and draws uniform values for active params that are missing.
Assignment complete(const SearchSpace& space, const Assignment& partial, Rng& rng);

/// Sum over active params of -log(domain size).
double log_uniform_density(const SearchSpace& space, const Assignment& a);

/// Reads a JSON document from disk, reporting parse errors with positions.
nlohmann::json read_json_file(const std::string& path);

}  // namespace smbo
