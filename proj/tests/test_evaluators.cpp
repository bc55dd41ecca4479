#include <doctest.h>

#include <chrono>
#include <cmath>
#include <thread>

#include "smbo/error.hpp"
#include "smbo/evaluators.hpp"
#include "support.hpp"

using namespace smbo;
using smbo::testing::TempDir;

namespace {

CommandSpec shell(std::string command, double timeout = 10.0) {
  CommandSpec c;
  c.command = std::move(command);
  c.timeout_seconds = timeout;
  return c;
}

std::string quoted(const std::string& s) { return "'" + s + "'"; }

const Assignment& sample_point() {
  static const Assignment a = [] {
    Assignment x;
    x.set("c", std::string("d"));
    x.set("x", std::int64_t{3});
    return x;
  }();
  return a;
}

}  // namespace

TEST_CASE("surrogate at its optimum returns the floor") {
  SurfaceSpec s;
  s.floor = 0.07;
  SurfaceTerm num;
  num.param = "x";
  num.weight = 0.4;
  num.optimum = 2.0;
  num.scale = 5.0;
  SurfaceTerm cat;
  cat.param = "c";
  cat.weight = 1.0;
  cat.penalties = {{Value(std::string("a")), 0.0}, {Value(std::string("b")), 0.2}};
  s.terms = {num, cat};
  Assignment a;
  a.set("x", std::int64_t{2});
  a.set("c", std::string("a"));
  CHECK(eval_surrogate(a, s).error == 0.07);
  a.set("x", std::int64_t{4});
  a.set("c", std::string("b"));
  CHECK(eval_surrogate(a, s).error == doctest::Approx(0.07 + 0.4 * 0.16 + 0.2).epsilon(1e-15));
  // Clamped into [0, 1].
  s.floor = 0.95;
  CHECK(eval_surrogate(a, s).error == 1.0);
}

TEST_CASE("one-boolean surface takes two values") {
  SurfaceSpec s;
  s.floor = 0.1;
  SurfaceTerm t;
  t.param = "b";
  t.penalties = {{Value(true), 0.3}};
  s.terms = {t};
  Assignment a;
  a.set("b", false);
  CHECK(eval_surrogate(a, s).error == 0.1);
  a.set("b", true);
  CHECK(eval_surrogate(a, s).error == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("48-point surface matches direct evaluation and has a unique minimum") {
  const auto space = smbo::testing::grid48_space();
  const auto surface = SurfaceSpec::random_for(space, 7, 0.05);
  const auto& xt = surface.terms[0].param == "x" ? surface.terms[0] : surface.terms[1];
  const auto& ct = surface.terms[0].param == "c" ? surface.terms[0] : surface.terms[1];
  double best = 2.0;
  int n_best = 0, points = 0;
  for (std::int64_t x = 0; x <= 5; ++x)
    for (const auto& c : space.param("c").choices) {
      ++points;
      Assignment a;
      a.set("x", x);
      a.set("c", c);
      const double z = (static_cast<double>(x) - *xt.optimum) / xt.scale;
      double penalty = 0.0;
      for (const auto& [v, p] : ct.penalties)
        if (v == c) penalty = p;
      const double oracle = std::clamp(0.05 + xt.weight * z * z + penalty, 0.0, 1.0);
      const double e = eval_surrogate(a, surface).error;
      CHECK(e == doctest::Approx(oracle).epsilon(1e-15));
      if (e < best) {
        best = e;
        n_best = 1;
      } else if (e == best) {
        ++n_best;
      }
    }
  CHECK(points == 48);
  CHECK(n_best == 1);
  CHECK(best == 0.05);
}

TEST_CASE("surrogate determinism and seeded noise") {
  const auto space = smbo::testing::random_space(30);
  auto surface = SurfaceSpec::random_for(space, 30);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto a = sample_uniform(space, rng);
    CHECK(eval_surrogate(a, surface).error == eval_surrogate(a, surface).error);
  }
  surface.noise_sigma = 0.05;
  SurrogateEvaluator ev(surface);
  const auto a = sample_uniform(space, rng);
  EvalRequest r;
  r.assignment = &a;
  r.seed = 11;
  const double first = ev.evaluate(r).error;
  CHECK(ev.evaluate(r).error == first);
  bool differs = false;
  for (std::uint64_t s = 12; s < 20; ++s) {
    r.seed = s;
    differs = differs || ev.evaluate(r).error != first;
  }
  CHECK(differs);
}

TEST_CASE("surface specs round-trip through JSON") {
  const auto space = smbo::testing::random_space(2);
  auto s = SurfaceSpec::random_for(space, 2);
  s.noise_sigma = 0.01;
  const auto j = s.to_json();
  CHECK(SurfaceSpec::from_json(j).to_json() == j);
  CHECK_THROWS_AS(SurfaceSpec::from_json(nlohmann::json::parse(R"({"terms": 3})")), Error);
}

TEST_CASE("property: every evaluator result stays in range") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto space = smbo::testing::random_space(seed);
    auto surface = SurfaceSpec::random_for(space, seed);
    surface.noise_sigma = 0.5;
    SurrogateEvaluator ev(surface);
    Rng rng(seed);
    for (int i = 0; i < 40; ++i) {
      const auto a = sample_uniform(space, rng);
      EvalRequest r;
      r.assignment = &a;
      r.seed = static_cast<std::uint64_t>(i);
      const auto res = ev.evaluate(r);
      CHECK(res.error >= 0.0);
      CHECK(res.error <= 1.0);
    }
  }
}

TEST_CASE("external: a printed decimal is the error") {
  const auto r = eval_external(0, sample_point(), shell("echo 0.5"));
  CHECK(r.status == Status::ok);
  CHECK(r.error == 0.5);
  CHECK(r.wall_time >= 0.0);
  CHECK(eval_external(0, sample_point(), shell("printf ' 0.125\\n\\n'")).error == 0.125);
  CHECK(eval_external(0, sample_point(), shell("echo 0")).error == 0.0);
}

TEST_CASE("external: non-zero exit is a failure with captured stderr") {
  const auto r = eval_external(0, sample_point(), shell("echo 0.2; echo boom >&2; exit 3"));
  CHECK(r.status == Status::failed);
  CHECK(r.error == 1.0);
  CHECK(r.detail.find("exit status 3") != std::string::npos);
  CHECK(r.detail.find("boom") != std::string::npos);
}

TEST_CASE("external: unparseable or out-of-range output fails") {
  for (const char* cmd : {"echo abc", "echo", "echo 1.5", "echo -0.1", "echo 0.5 0.6", "echo nan", "echo inf"}) {
    const auto r = eval_external(0, sample_point(), shell(cmd));
    CHECK_MESSAGE(r.status == Status::failed, cmd);
    CHECK(r.error == 1.0);
  }
}

TEST_CASE("external: a timeout kills the process group") {
  TempDir dir;
  const auto marker = dir.file("late");
  const auto start = std::chrono::steady_clock::now();
  const auto r = eval_external(0, sample_point(),
                               shell("(sleep 1; touch " + quoted(marker) + ") & sleep 30", 0.3));
  const double took = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(r.status == Status::failed);
  CHECK(r.error == 1.0);
  CHECK(r.detail.find("timed out") != std::string::npos);
  CHECK(took < 5.0);
  std::this_thread::sleep_for(std::chrono::milliseconds(1300));
  CHECK(!std::filesystem::exists(marker));
}

TEST_CASE("external: a child ignoring stdin does not break the parent") {
  Assignment big;
  for (int i = 0; i < 20000; ++i) big.set("p" + std::to_string(i), std::int64_t{i});
  const auto r = eval_external(0, big, shell("exec 0<&-; echo 0.3"));
  CHECK(r.status == Status::ok);
  CHECK(r.error == 0.3);
}

TEST_CASE("external: a missing command is a hard fault") {
  CHECK_THROWS_AS(eval_external(0, sample_point(), shell("/nonexistent/trainer --go")), HardFault);
}

TEST_CASE("external: request and environment reach the child") {
  TempDir dir;
  const auto out = dir.file("echo.json");
  const auto space = smbo::testing::random_space(19);
  Rng rng(19);
  for (int i = 0; i < 20; ++i) {
    const auto a = sample_uniform(space, rng);
    CommandSpec cmd = shell(quoted(EVAL_CHILD) + " echo " + quoted(out));
    cmd.run_dir = dir.path().string();
    const std::optional<std::string> cfg = i % 2 ? std::optional<std::string>(dir.file("t.cfg")) : std::nullopt;
    const auto r = eval_external(static_cast<std::uint64_t>(40 + i), a, cmd, cfg);
    REQUIRE(r.status == Status::ok);
    const auto seen = nlohmann::json::parse(smbo::testing::slurp(out));
    CHECK(Assignment::from_json(seen["request"]["assignment"]) == a);
    CHECK(seen["request"]["trial_id"] == 40 + i);
    CHECK(seen["TRIAL_ID"] == std::to_string(40 + i));
    CHECK(seen["RUN_DIR"] == dir.path().string());
    if (cfg) CHECK(seen["request"]["config_path"] == *cfg);
    else CHECK(seen["request"]["config_path"].is_null());
  }
}

TEST_CASE("external surrogate child agrees with the in-process surrogate") {
  TempDir dir;
  const auto space = smbo::testing::random_space(55);
  const auto surface = SurfaceSpec::random_for(space, 55);
  const auto surf_path = dir.file("surface.json");
  smbo::testing::spit(surf_path, surface.to_json().dump());
  ExternalEvaluator ev(shell(quoted(EVAL_CHILD) + " surrogate " + quoted(surf_path)));
  Rng rng(55);
  for (int i = 0; i < 100; ++i) {
    const auto a = sample_uniform(space, rng);
    EvalRequest r;
    r.trial_id = static_cast<std::uint64_t>(i);
    r.assignment = &a;
    const auto res = ev.evaluate(r);
    REQUIRE(res.status == Status::ok);
    CHECK(res.error == eval_surrogate(a, surface).error);
  }
}
