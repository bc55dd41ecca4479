#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "smbo/dcn_space.hpp"
#include "smbo/search_space.hpp"

namespace smbo::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("smbo_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

/// {b: boolean; s: integer [1,3] when b = true}
inline SearchSpace gated_space() {
  return SearchSpace("gated", 1, {ParamSpec::boolean("b"), ParamSpec::integer("s", 1, 3).when("b", true)});
}

/// A 48-point space: 6 integers x 8 categories.
inline SearchSpace grid48_space() {
  return SearchSpace("grid48", 1,
                     {ParamSpec::integer("x", 0, 5),
                      ParamSpec::categorical("c", {Value(std::string("a")), Value(std::string("b")),
                                                   Value(std::string("c")), Value(std::string("d")),
                                                   Value(std::string("e")), Value(std::string("f")),
                                                   Value(std::string("g")), Value(std::string("h"))})});
}

/// Random valid space: a mix of kinds, some params conditioned on earlier
/// discrete params.
inline SearchSpace random_space(std::uint64_t seed) {
  std::mt19937_64 g(seed);
  auto pick = [&](int n) { return static_cast<int>(g() % static_cast<std::uint64_t>(n)); };
  std::vector<ParamSpec> ps;
  const int n = 1 + pick(7);
  for (int i = 0; i < n; ++i) {
    const std::string name = "p" + std::to_string(i);
    ParamSpec p;
    switch (pick(4)) {
      case 0: {
        std::vector<Value> choices;
        const int k = 1 + pick(5);
        for (int c = 0; c < k; ++c) choices.emplace_back(std::string(1, static_cast<char>('a' + c)));
        p = ParamSpec::categorical(name, choices);
        break;
      }
      case 1: {
        const std::int64_t lo = pick(10) - 5;
        p = ParamSpec::integer(name, lo, lo + pick(20));
        break;
      }
      case 2: {
        const double lo = pick(100) / 10.0 - 5.0;
        p = ParamSpec::real(name, lo, lo + 0.5 + pick(100) / 7.0);
        break;
      }
      default:
        p = ParamSpec::boolean(name);
    }
    // Condition on an earlier discrete param half the time.
    if (i > 0 && pick(2) == 0) {
      const auto& parent = ps[static_cast<std::size_t>(pick(i))];
      if (parent.kind == ParamKind::boolean) {
        p.when(parent.name, pick(2) == 0);
      } else if (parent.kind == ParamKind::categorical) {
        p.when(parent.name, parent.choices[static_cast<std::size_t>(pick(static_cast<int>(parent.choices.size())))]);
      } else if (parent.kind == ParamKind::integer) {
        p.when_any(parent.name, {Value(static_cast<std::int64_t>(parent.lo)), Value(static_cast<std::int64_t>(parent.hi))});
      }
    }
    ps.push_back(std::move(p));
  }
  return SearchSpace("random" + std::to_string(seed), 1, std::move(ps));
}

// ---------------------------------------------------------------------------
// Reference DCNs with known parameter budgets (32x32 RGB input, 10 classes).
// Blank pooling entries mean no pooling; normalization size 3 throughout.

inline dcn::ConvBlockSpec conv(std::int64_t filters, std::int64_t k, std::int64_t stride, std::int64_t pad,
                               bool norm = false) {
  dcn::ConvBlockSpec b;
  b.num_filters = filters;
  b.filter_size = k;
  b.stride = stride;
  b.padding = pad;
  b.has_norm = norm;
  b.norm_size = norm ? 3 : 0;
  return b;
}

inline dcn::ConvBlockSpec pooled(dcn::ConvBlockSpec b, std::int64_t size, std::int64_t stride) {
  b.has_pool = true;
  b.pool_size = size;
  b.pool_stride = stride;
  b.pool_type = dcn::PoolType::max;
  return b;
}

inline std::vector<dcn::ConvBlockSpec> dcn1_blocks() {
  return {conv(64, 3, 1, 0),          pooled(conv(256, 3, 1, 0), 2, 2), conv(256, 3, 2, 1),
          conv(256, 3, 2, 1),         conv(256, 3, 1, 0, true),         conv(256, 3, 2, 1),
          conv(256, 3, 2, 1, true),   conv(256, 11, 10, 9, true)};
}

inline std::vector<dcn::HiddenLayerSpec> dcn1_hidden() { return {{3314, 0.5}, {4951, 0.5}}; }

inline std::vector<dcn::ConvBlockSpec> dcn2_blocks() {
  return {conv(128, 3, 1, 0), conv(128, 3, 2, 1, true), conv(128, 3, 1, 0),
          conv(256, 3, 1, 0), conv(256, 3, 1, 0, true), conv(256, 7, 2, 1, true)};
}

inline std::vector<dcn::ConvBlockSpec> dcn3_blocks() {
  return {conv(256, 3, 1, 0, true), conv(128, 3, 2, 1), conv(256, 3, 1, 0),
          conv(256, 3, 1, 0),       conv(256, 3, 2, 1), conv(128, 7, 5, 2)};
}

inline dcn::ArchitectureDescription must_build(std::vector<dcn::ConvBlockSpec> blocks,
                                               std::vector<dcn::HiddenLayerSpec> hidden = {}) {
  auto r = dcn::make_architecture(std::move(blocks), std::move(hidden));
  if (auto* bad = std::get_if<dcn::InvalidArchitecture>(&r)) throw std::runtime_error(bad->reason);
  return std::get<dcn::ArchitectureDescription>(r);
}

inline dcn::ArchitectureDescription dcn1() { return must_build(dcn1_blocks(), dcn1_hidden()); }
inline dcn::ArchitectureDescription dcn2() { return must_build(dcn2_blocks()); }
inline dcn::ArchitectureDescription dcn3() { return must_build(dcn3_blocks()); }

}  // namespace smbo::testing
