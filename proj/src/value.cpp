#include "smbo/value.hpp"

#include "smbo/error.hpp"
#include "smbo/format.hpp"

namespace smbo {

std::string to_string(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(x);
        } else {
          return x;
        }
      },
      v);
}

nlohmann::json value_to_json(const Value& v) {
  return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

Value value_from_json(const nlohmann::json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::boolean:
      return j.get<bool>();
    case nlohmann::json::value_t::number_integer:
      return j.get<std::int64_t>();
    case nlohmann::json::value_t::number_unsigned: {
      auto u = j.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(INT64_MAX)) throw Error("integer value out of range");
      return static_cast<std::int64_t>(u);
    }
    case nlohmann::json::value_t::number_float:
      return j.get<double>();
    case nlohmann::json::value_t::string:
      return j.get<std::string>();
    default:
      throw Error("expected a boolean, number or string value, got " + j.dump());
  }
}

const Value& Assignment::at(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw Error("assignment has no value for '" + name + "'");
  return it->second;
}

const Value* Assignment::find(const std::string& name) const {
  auto it = values_.find(name);
  return it == values_.end() ? nullptr : &it->second;
}

namespace {

template <typename T>
const T& get_as(const Assignment& a, const std::string& name, const char* what) {
  const auto* p = std::get_if<T>(&a.at(name));
  if (p == nullptr) throw Error("'" + name + "' is not " + what);
  return *p;
}

}  // namespace

std::int64_t Assignment::get_int(const std::string& name) const {
  return get_as<std::int64_t>(*this, name, "an integer");
}

double Assignment::get_real(const std::string& name) const {
  const Value& v = at(name);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  return get_as<double>(*this, name, "a number");
}

bool Assignment::get_bool(const std::string& name) const {
  return get_as<bool>(*this, name, "a boolean");
}

const std::string& Assignment::get_string(const std::string& name) const {
  return get_as<std::string>(*this, name, "a string");
}

nlohmann::json Assignment::to_json() const {
  auto j = nlohmann::json::object();
  for (const auto& [k, v] : values_) j[k] = value_to_json(v);
  return j;
}

Assignment Assignment::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("assignment must be a JSON object");
  Map m;
  for (const auto& [k, v] : j.items()) m.emplace(k, value_from_json(v));
  return Assignment(std::move(m));
}

}  // namespace smbo
