#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>

#include <json.hpp>

namespace smbo {

/// A single hyper-parameter value. Integers and reals are kept apart so that
/// categorical choices like {32, 64} and {0.5} survive a JSON round trip.
using Value = std::variant<bool, std::int64_t, double, std::string>;

std::string to_string(const Value& v);
nlohmann::json value_to_json(const Value& v);
Value value_from_json(const nlohmann::json& j);

/// One concrete point of a search space: active parameter name -> value.
class Assignment {
 public:
  using Map = std::map<std::string, Value>;

  Assignment() = default;
  explicit Assignment(Map values) : values_(std::move(values)) {}

  bool contains(const std::string& name) const { return values_.count(name) != 0; }
  const Value& at(const std::string& name) const;
  const Value* find(const std::string& name) const;
  void set(const std::string& name, Value v) { values_[name] = std::move(v); }
  void erase(const std::string& name) { values_.erase(name); }

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  const Map& values() const { return values_; }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  std::int64_t get_int(const std::string& name) const;
  double get_real(const std::string& name) const;
  bool get_bool(const std::string& name) const;
  const std::string& get_string(const std::string& name) const;

  nlohmann::json to_json() const;
  static Assignment from_json(const nlohmann::json& j);

  friend bool operator==(const Assignment&, const Assignment&) = default;

 private:
  Map values_;
};

}  // namespace smbo
