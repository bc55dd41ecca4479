#include "smbo/search_space.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "smbo/error.hpp"
#include "smbo/format.hpp"

namespace smbo {

const char* to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::categorical: return "categorical";
    case ParamKind::integer: return "integer";
    case ParamKind::real: return "real";
    case ParamKind::boolean: return "boolean";
  }
  return "?";
}

ParamSpec ParamSpec::categorical(std::string name, std::vector<Value> choices) {
  ParamSpec p;
  p.name = std::move(name);
  p.kind = ParamKind::categorical;
  p.choices = std::move(choices);
  return p;
}

ParamSpec ParamSpec::integer(std::string name, std::int64_t lo, std::int64_t hi) {
  ParamSpec p;
  p.name = std::move(name);
  p.kind = ParamKind::integer;
  p.lo = static_cast<double>(lo);
  p.hi = static_cast<double>(hi);
  return p;
}

ParamSpec ParamSpec::real(std::string name, double lo, double hi) {
  ParamSpec p;
  p.name = std::move(name);
  p.kind = ParamKind::real;
  p.lo = lo;
  p.hi = hi;
  return p;
}

ParamSpec ParamSpec::boolean(std::string name) {
  ParamSpec p;
  p.name = std::move(name);
  p.kind = ParamKind::boolean;
  return p;
}

ParamSpec& ParamSpec::when(std::string parent, Value equals) {
  condition = Condition{std::move(parent), {std::move(equals)}};
  return *this;
}

ParamSpec& ParamSpec::when_any(std::string parent, std::vector<Value> values) {
  condition = Condition{std::move(parent), std::move(values)};
  return *this;
}

bool ParamSpec::in_domain(const Value& v) const {
  switch (kind) {
    case ParamKind::categorical:
      return std::find(choices.begin(), choices.end(), v) != choices.end();
    case ParamKind::boolean:
      return std::holds_alternative<bool>(v);
    case ParamKind::integer: {
      const auto* x = std::get_if<std::int64_t>(&v);
      return x != nullptr && static_cast<double>(*x) >= lo && static_cast<double>(*x) <= hi;
    }
    case ParamKind::real: {
      const auto* x = std::get_if<double>(&v);
      return x != nullptr && std::isfinite(*x) && *x >= lo && *x <= hi;
    }
  }
  return false;
}

std::size_t ParamSpec::cardinality() const {
  switch (kind) {
    case ParamKind::categorical: return choices.size();
    case ParamKind::boolean: return 2;
    case ParamKind::integer: return static_cast<std::size_t>(hi - lo) + 1;
    case ParamKind::real: return 0;
  }
  return 0;
}

std::size_t ParamSpec::choice_index(const Value& v) const {
  switch (kind) {
    case ParamKind::categorical: {
      auto it = std::find(choices.begin(), choices.end(), v);
      if (it == choices.end()) break;
      return static_cast<std::size_t>(it - choices.begin());
    }
    case ParamKind::boolean:
      if (const auto* b = std::get_if<bool>(&v)) return *b ? 1 : 0;
      break;
    case ParamKind::integer:
      if (in_domain(v)) return static_cast<std::size_t>(std::get<std::int64_t>(v) - static_cast<std::int64_t>(lo));
      break;
    case ParamKind::real:
      break;
  }
  throw Error("value " + to_string(v) + " is not a discrete value of '" + name + "'");
}

double ParamSpec::log_uniform() const {
  if (kind == ParamKind::real) return hi > lo ? -std::log(hi - lo) : 0.0;
  return -std::log(static_cast<double>(cardinality()));
}

std::string ParamSpec::domain_string() const {
  switch (kind) {
    case ParamKind::categorical: {
      std::string s = "{";
      for (std::size_t i = 0; i < choices.size(); ++i) {
        if (i != 0) s += ",";
        s += to_string(choices[i]);
      }
      return s + "}";
    }
    case ParamKind::boolean:
      return "{false,true}";
    case ParamKind::integer:
      return "[" + std::to_string(static_cast<std::int64_t>(lo)) + "," +
             std::to_string(static_cast<std::int64_t>(hi)) + "]";
    case ParamKind::real:
      return "[" + format_double(lo) + "," + format_double(hi) + "]";
  }
  return "";
}

// ---------------------------------------------------------------------------

namespace {

void check_domain(const ParamSpec& p) {
  if (p.name.empty()) throw Error("parameter with empty name");
  switch (p.kind) {
    case ParamKind::categorical:
      if (p.choices.empty()) throw Error("'" + p.name + "': categorical needs at least one choice");
      for (std::size_t i = 0; i < p.choices.size(); ++i)
        for (std::size_t j = i + 1; j < p.choices.size(); ++j)
          if (p.choices[i] == p.choices[j])
            throw Error("'" + p.name + "': duplicate choice " + to_string(p.choices[i]));
      break;
    case ParamKind::integer:
      if (p.lo != std::floor(p.lo) || p.hi != std::floor(p.hi))
        throw Error("'" + p.name + "': integer bounds must be integral");
      [[fallthrough]];
    case ParamKind::real:
      if (!std::isfinite(p.lo) || !std::isfinite(p.hi))
        throw Error("'" + p.name + "': bounds must be finite");
      if (p.lo > p.hi) throw Error("'" + p.name + "': lo > hi");
      break;
    case ParamKind::boolean:
      break;
  }
}

}  // namespace

SearchSpace::SearchSpace(std::string name, std::int64_t version, std::vector<ParamSpec> params)
    : name_(std::move(name)), version_(version), params_(std::move(params)) {
  if (name_.empty()) throw Error("search space needs a name");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    check_domain(params_[i]);
    if (!index.emplace(params_[i].name, i).second)
      throw Error("duplicate parameter name '" + params_[i].name + "'");
  }
  std::vector<std::ptrdiff_t> parent(params_.size(), -1);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    if (!p.condition) continue;
    auto it = index.find(p.condition->parent);
    if (it == index.end())
      throw Error("'" + p.name + "': unknown parent '" + p.condition->parent + "'");
    if (it->second == i) throw Error("'" + p.name + "': parameter conditioned on itself");
    if (p.condition->values.empty())
      throw Error("'" + p.name + "': condition needs at least one value");
    for (const auto& v : p.condition->values)
      if (!params_[it->second].in_domain(v))
        throw Error("'" + p.name + "': condition value " + to_string(v) + " outside domain of '" +
                    p.condition->parent + "'");
    parent[i] = static_cast<std::ptrdiff_t>(it->second);
  }
  // Each param has at most one parent, so a cycle shows up as a chain longer
  // than the parameter count.
  for (std::size_t i = 0; i < params_.size(); ++i) {
    std::size_t steps = 0;
    for (auto j = parent[i]; j >= 0; j = parent[static_cast<std::size_t>(j)])
      if (++steps > params_.size())
        throw Error("conditions form a cycle through '" + params_[i].name + "'");
  }
  std::vector<bool> placed(params_.size(), false);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    std::vector<std::size_t> chain;
    for (auto j = static_cast<std::ptrdiff_t>(i); j >= 0 && !placed[static_cast<std::size_t>(j)];
         j = parent[static_cast<std::size_t>(j)])
      chain.push_back(static_cast<std::size_t>(j));
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      placed[*it] = true;
      order_.push_back(*it);
    }
  }
}

const ParamSpec* SearchSpace::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

const ParamSpec& SearchSpace::param(const std::string& name) const {
  const auto* p = find(name);
  if (p == nullptr) throw Error("unknown parameter '" + name + "'");
  return *p;
}

std::size_t SearchSpace::index_of(const std::string& name) const {
  return static_cast<std::size_t>(&param(name) - params_.data());
}

bool SearchSpace::is_active(const ParamSpec& p, const Assignment& a) const {
  const ParamSpec* cur = &p;
  while (cur->condition) {
    const Value* v = a.find(cur->condition->parent);
    if (v == nullptr) return false;
    const auto& allowed = cur->condition->values;
    if (std::find(allowed.begin(), allowed.end(), *v) == allowed.end()) return false;
    cur = &param(cur->condition->parent);
  }
  return true;
}

// ---------------------------------------------------------------------------

nlohmann::json param_to_json(const ParamSpec& p) {
  nlohmann::json j{{"name", p.name}, {"kind", to_string(p.kind)}};
  switch (p.kind) {
    case ParamKind::categorical: {
      auto c = nlohmann::json::array();
      for (const auto& v : p.choices) c.push_back(value_to_json(v));
      j["choices"] = c;
      break;
    }
    case ParamKind::integer:
      j["lo"] = static_cast<std::int64_t>(p.lo);
      j["hi"] = static_cast<std::int64_t>(p.hi);
      break;
    case ParamKind::real:
      j["lo"] = p.lo;
      j["hi"] = p.hi;
      break;
    case ParamKind::boolean:
      break;
  }
  if (p.condition) {
    nlohmann::json eq;
    if (p.condition->values.size() == 1) {
      eq = value_to_json(p.condition->values.front());
    } else {
      eq = nlohmann::json::array();
      for (const auto& v : p.condition->values) eq.push_back(value_to_json(v));
    }
    j["condition"] = {{"parent", p.condition->parent}, {"equals", eq}};
  }
  return j;
}

nlohmann::json SearchSpace::to_json() const {
  auto ps = nlohmann::json::array();
  for (const auto& p : params_) ps.push_back(param_to_json(p));
  return {{"name", name_}, {"version", version_}, {"params", ps}};
}

namespace {

class JsonPath {
 public:
  explicit JsonPath(std::string path) : path_(std::move(path)) {}
  [[noreturn]] void fail(const std::string& what) const { throw Error(path_ + ": " + what); }
  JsonPath operator/(const std::string& key) const { return JsonPath(path_ + "." + key); }
  JsonPath operator[](std::size_t i) const { return JsonPath(path_ + "[" + std::to_string(i) + "]"); }

 private:
  std::string path_;
};

const nlohmann::json& require(const nlohmann::json& obj, const std::string& key, const JsonPath& at) {
  auto it = obj.find(key);
  if (it == obj.end()) at.fail("missing required field '" + key + "'");
  return *it;
}

double number_at(const nlohmann::json& j, const JsonPath& at, bool integral) {
  if (integral && !j.is_number_integer()) at.fail("expected an integer");
  if (!j.is_number()) at.fail("expected a number");
  return j.get<double>();
}

Value value_at(const nlohmann::json& j, const JsonPath& at) {
  try {
    return value_from_json(j);
  } catch (const Error& e) {
    at.fail(e.what());
  }
}

ParamSpec param_from_json(const nlohmann::json& j, const JsonPath& at) {
  if (!j.is_object()) at.fail("expected an object");
  static const std::unordered_set<std::string> known{"name", "kind", "lo", "hi",
                                                     "choices", "condition", "description"};
  for (const auto& [k, _] : j.items())
    if (known.count(k) == 0) (at / k).fail("unknown field");

  ParamSpec p;
  const auto& name = require(j, "name", at);
  if (!name.is_string() || name.get<std::string>().empty()) (at / "name").fail("expected a non-empty string");
  p.name = name.get<std::string>();

  const auto& kind = require(j, "kind", at);
  const std::string k = kind.is_string() ? kind.get<std::string>() : "";
  if (k == "categorical") {
    p.kind = ParamKind::categorical;
  } else if (k == "integer") {
    p.kind = ParamKind::integer;
  } else if (k == "real") {
    p.kind = ParamKind::real;
  } else if (k == "boolean") {
    p.kind = ParamKind::boolean;
  } else {
    (at / "kind").fail("expected one of categorical, integer, real, boolean");
  }

  if (p.is_numeric()) {
    const bool integral = p.kind == ParamKind::integer;
    p.lo = number_at(require(j, "lo", at), at / "lo", integral);
    p.hi = number_at(require(j, "hi", at), at / "hi", integral);
    if (p.lo > p.hi) (at / "hi").fail("hi must be >= lo");
  } else {
    if (j.contains("lo")) (at / "lo").fail("only numeric kinds take bounds");
    if (j.contains("hi")) (at / "hi").fail("only numeric kinds take bounds");
  }
  if (p.kind == ParamKind::categorical) {
    const auto& choices = require(j, "choices", at);
    if (!choices.is_array() || choices.empty()) (at / "choices").fail("expected a non-empty array");
    for (std::size_t i = 0; i < choices.size(); ++i) {
      Value v = value_at(choices[i], (at / "choices")[i]);
      if (std::find(p.choices.begin(), p.choices.end(), v) != p.choices.end())
        ((at / "choices")[i]).fail("duplicate choice");
      p.choices.push_back(std::move(v));
    }
  } else if (j.contains("choices")) {
    (at / "choices").fail("only categorical params take choices");
  }

  if (auto it = j.find("condition"); it != j.end()) {
    const auto cat = at / "condition";
    if (!it->is_object()) cat.fail("expected an object");
    const auto& parent = require(*it, "parent", cat);
    if (!parent.is_string()) (cat / "parent").fail("expected a string");
    const auto& eq = require(*it, "equals", cat);
    Condition c{parent.get<std::string>(), {}};
    if (eq.is_array()) {
      if (eq.empty()) (cat / "equals").fail("expected at least one value");
      for (std::size_t i = 0; i < eq.size(); ++i) c.values.push_back(value_at(eq[i], (cat / "equals")[i]));
    } else {
      c.values.push_back(value_at(eq, cat / "equals"));
    }
    p.condition = std::move(c);
  }
  return p;
}

}  // namespace

SearchSpace SearchSpace::from_json(const nlohmann::json& j) {
  const JsonPath root("$");
  if (!j.is_object()) root.fail("expected an object");
  const auto& name = require(j, "name", root);
  if (!name.is_string()) (root / "name").fail("expected a string");
  const auto& version = require(j, "version", root);
  if (!version.is_number_integer()) (root / "version").fail("expected an integer");
  const auto& params = require(j, "params", root);
  if (!params.is_array()) (root / "params").fail("expected an array");
  std::vector<ParamSpec> specs;
  for (std::size_t i = 0; i < params.size(); ++i) specs.push_back(param_from_json(params[i], (root / "params")[i]));
  try {
    return SearchSpace(name.get<std::string>(), version.get<std::int64_t>(), std::move(specs));
  } catch (const Error& e) {
    (root / "params").fail(e.what());
  }
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(path + ": " + e.what());
  }
}

SearchSpace SearchSpace::from_file(const std::string& path) {
  auto j = read_json_file(path);
  try {
    return from_json(j);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

std::vector<std::string> validate(const SearchSpace& space, const Assignment& a) {
  std::vector<std::string> out;
  for (const auto& [name, _] : a)
    if (space.find(name) == nullptr) out.push_back(name + " unknown parameter");
  for (const auto& p : space.params()) {
    const bool active = space.is_active(p, a);
    const Value* v = a.find(p.name);
    if (active && v == nullptr) {
      out.push_back(p.name + " active but missing");
    } else if (!active && v != nullptr) {
      out.push_back(p.name + " inactive but present");
    } else if (v != nullptr && !p.in_domain(*v)) {
      out.push_back(p.name + " out of domain " + p.domain_string() + ": " + to_string(*v));
    }
  }
  return out;
}

void require_valid(const SearchSpace& space, const Assignment& a) {
  auto violations = validate(space, a);
  if (violations.empty()) return;
  std::string msg = "invalid assignment for space '" + space.name() + "':";
  for (const auto& v : violations) msg += " " + v + ";";
  throw Error(msg);
}

namespace {

Value draw(const ParamSpec& p, Rng& rng) {
  switch (p.kind) {
    case ParamKind::categorical:
      return p.choices[rng.index(p.choices.size())];
    case ParamKind::boolean:
      return rng.index(2) == 1;
    case ParamKind::integer:
      return rng.uniform_int(static_cast<std::int64_t>(p.lo), static_cast<std::int64_t>(p.hi));
    case ParamKind::real: {
      if (!(p.hi > p.lo)) return p.lo;
      double x = p.lo + (p.hi - p.lo) * rng.uniform01();
      if (x >= p.hi) x = std::nextafter(p.hi, p.lo);
      return x;
    }
  }
  return false;
}

}  // namespace

Assignment sample_uniform(const SearchSpace& space, Rng& rng) {
  Assignment a;
  for (auto i : space.sampling_order()) {
    const auto& p = space.params()[i];
    if (space.is_active(p, a)) a.set(p.name, draw(p, rng));
  }
  return a;
}

Assignment complete(const SearchSpace& space, const Assignment& partial, Rng& rng) {
  Assignment a;
  for (auto i : space.sampling_order()) {
    const auto& p = space.params()[i];
    if (!space.is_active(p, a)) continue;
    const Value* v = partial.find(p.name);
    a.set(p.name, v != nullptr && p.in_domain(*v) ? *v : draw(p, rng));
  }
  return a;
}

double log_uniform_density(const SearchSpace& space, const Assignment& a) {
  require_valid(space, a);
  double total = 0.0;
  for (const auto& p : space.params())
    if (a.contains(p.name)) total += p.log_uniform();
  return total;
}

}  // namespace smbo
