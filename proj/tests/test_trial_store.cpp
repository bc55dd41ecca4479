#include <doctest.h>

#include <filesystem>

#include "smbo/error.hpp"
#include "smbo/trial_store.hpp"
#include "support.hpp"

using namespace smbo;
using smbo::testing::slurp;
using smbo::testing::spit;
using smbo::testing::TempDir;

namespace {

RunHeader header() {
  RunHeader h;
  h.space_name = "store-test";
  h.space_version = 3;
  h.master_seed = 18446744073709551615ULL;
  h.config_digest = "00ff00ff00ff00ff";
  return h;
}

Trial random_trial(std::uint64_t id, Rng& rng) {
  static const std::vector<std::string> details{"", "ok", "résumé", "日本語の詳細", "emoji \xF0\x9F\x8E\x89",
                                                "quote \" backslash \\ tab \t newline \n end"};
  Trial t;
  t.id = id;
  const auto n = rng.index(6);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string key = "k" + std::to_string(rng.index(10));
    switch (rng.index(4)) {
      case 0: t.assignment.set(key, rng.uniform01() < 0.5); break;
      case 1: t.assignment.set(key, static_cast<std::int64_t>(rng.next()) >> rng.index(60)); break;
      case 2: t.assignment.set(key, (rng.uniform01() - 0.5) * std::pow(10.0, static_cast<double>(rng.index(30)) - 15)); break;
      default: t.assignment.set(key, details[rng.index(details.size())]);
    }
  }
  t.status = std::array<Status, 3>{Status::ok, Status::failed, Status::invalid_arch}[rng.index(3)];
  t.error = t.status == Status::ok ? rng.uniform01() : 1.0;
  t.branch = std::array<Branch, 3>{Branch::random, Branch::tpe, Branch::simplified}[rng.index(3)];
  t.seed = rng.next();
  t.started_at = 1.7e9 + rng.uniform01() * 1e6;
  t.finished_at = t.started_at + rng.uniform01() * 100;
  t.wall_time = rng.uniform01() * 100;
  t.detail = details[rng.index(details.size())];
  return t;
}

}  // namespace

TEST_CASE("appends are visible to a later load in order") {
  TempDir dir;
  const auto path = dir.file("s.jsonl");
  Rng rng(1);
  {
    auto store = TrialStore::create(path, header());
    for (std::uint64_t i = 0; i < 3; ++i) store.append(random_trial(i, rng));
    CHECK(store.database().size() == 3);
  }
  const auto db = load(path);
  REQUIRE(db.size() == 3);
  for (std::uint64_t i = 0; i < 3; ++i) CHECK(db.trials[i].id == i);
  CHECK(db.header == header());
}

TEST_CASE("id gaps and duplicates are rejected") {
  TempDir dir;
  Rng rng(2);
  auto store = TrialStore::create(dir.file("s.jsonl"), header());
  for (std::uint64_t i = 0; i < 3; ++i) store.append(random_trial(i, rng));
  CHECK_THROWS_AS(store.append(random_trial(5, rng)), Error);
  CHECK_THROWS_AS(store.append(random_trial(2, rng)), Error);
  CHECK(load(dir.file("s.jsonl")).size() == 3);
}

TEST_CASE("property: write then load is the identity over 1000 random trials") {
  TempDir dir;
  const auto path = dir.file("s.jsonl");
  Rng rng(3);
  std::vector<Trial> expected;
  {
    auto store = TrialStore::create(path, header());
    for (std::uint64_t i = 0; i < 1000; ++i) {
      expected.push_back(random_trial(i, rng));
      store.append(expected.back());
    }
    CHECK(store.database().trials == expected);
  }
  const auto db = load(path);
  CHECK(db.header == header());
  CHECK(db.trials == expected);
  const auto text = slurp(path);
  CHECK(text.find('\r') == std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1001);
}

TEST_CASE("load errors and edge cases") {
  TempDir dir;
  const auto path = dir.file("s.jsonl");
  spit(path, "");
  try {
    load(path);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("missing header") != std::string::npos);
  }
  CHECK_THROWS_AS(load(dir.file("absent.jsonl")), Error);

  spit(path, serialize_header(header()));
  CHECK(load(path).empty());

  spit(path, "{\"format_version\": 2}\n");
  CHECK_THROWS_AS(load(path), Error);

  auto other = header();
  other.config_digest = "1111111111111111";
  spit(path, serialize_header(header()));
  CHECK_THROWS_AS(load(path, LoadOptions{false, other}), Error);
  CHECK_NOTHROW(load(path, LoadOptions{false, header()}));
}

TEST_CASE("a truncated last record is dropped only with recover") {
  TempDir dir;
  const auto path = dir.file("s.jsonl");
  Rng rng(4);
  std::string text = serialize_header(header());
  for (std::uint64_t i = 0; i < 5; ++i) text += serialize_trial(random_trial(i, rng));
  const auto cut = text.substr(0, text.size() - 20);
  spit(path, cut);

  try {
    load(path);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(":6:") != std::string::npos);
  }
  const auto r = load_store(path, LoadOptions{true, std::nullopt});
  CHECK(r.db.size() == 4);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find(":6:") != std::string::npos);
}

TEST_CASE("a malformed middle line is a hard error naming its line") {
  TempDir dir;
  const auto path = dir.file("s.jsonl");
  Rng rng(5);
  std::string text = serialize_header(header());
  text += serialize_trial(random_trial(0, rng));
  text += "{not json}\n";
  text += serialize_trial(random_trial(1, rng));
  spit(path, text);
  for (bool recover : {false, true}) {
    try {
      load(path, LoadOptions{recover, std::nullopt});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
  }
}

TEST_CASE("out-of-sequence ids in a file are rejected") {
  TempDir dir;
  const auto path = dir.file("s.jsonl");
  Rng rng(6);
  spit(path, serialize_header(header()) + serialize_trial(random_trial(0, rng)) + serialize_trial(random_trial(2, rng)));
  CHECK_THROWS_AS(load(path), Error);
}

TEST_CASE("property: a crash at any byte boundary leaves a recoverable store") {
  TempDir dir;
  const auto path = dir.file("s.jsonl");
  Rng rng(7);
  const auto head = serialize_header(header());
  std::string text = head;
  std::vector<std::size_t> ends;  // byte offset after each complete record
  std::vector<Trial> trials;
  for (std::uint64_t i = 0; i < 6; ++i) {
    trials.push_back(random_trial(i, rng));
    text += serialize_trial(trials.back());
    ends.push_back(text.size());
  }
  for (std::size_t cut = head.size(); cut <= text.size(); ++cut) {
    spit(path, text.substr(0, cut));
    // Records fully present, counting one that only lacks its final LF.
    std::size_t complete = 0;
    while (complete < ends.size() && ends[complete] - 1 <= cut) ++complete;
    bool clean = cut == head.size();
    for (auto e : ends) clean = clean || cut == e || cut + 1 == e;
    bool direct = true;
    std::size_t loaded = 0;
    try {
      loaded = load(path).size();
    } catch (const Error&) {
      direct = false;
    }
    if (direct) CHECK(loaded == complete);
    if (!direct) {
      const auto r = load_store(path, LoadOptions{true, std::nullopt});
      CHECK(r.db.size() == complete);
      CHECK(r.warnings.size() == 1);
    }
    CHECK(direct == clean);

    // Reopening repairs the file and appends continue at the next id.
    auto store = TrialStore::open(path, LoadOptions{true, std::nullopt});
    CHECK(store.database().size() == complete);
    store.append(trials.size() > complete ? trials[complete] : random_trial(complete, rng));
    CHECK(load(path).size() == complete + 1);
  }
}

TEST_CASE("open with recover truncates the partial record on disk") {
  TempDir dir;
  const auto path = dir.file("s.jsonl");
  Rng rng(8);
  std::string text = serialize_header(header());
  for (std::uint64_t i = 0; i < 3; ++i) text += serialize_trial(random_trial(i, rng));
  const auto full = text.size();
  text += serialize_trial(random_trial(3, rng)).substr(0, 30);
  spit(path, text);
  CHECK_THROWS_AS(TrialStore::open(path), Error);
  {
    auto store = TrialStore::open(path, LoadOptions{true, std::nullopt});
    CHECK(store.warnings().size() == 1);
    CHECK(std::filesystem::file_size(path) == full);
  }
  CHECK(load(path).size() == 3);
}

TEST_CASE("create refuses to overwrite an existing store") {
  TempDir dir;
  const auto path = dir.file("s.jsonl");
  { auto s = TrialStore::create(path, header()); }
  CHECK_THROWS_AS(TrialStore::create(path, header()), Error);
  auto s = TrialStore::open_or_create(path, header());
  CHECK(s.database().empty());
  auto other = header();
  other.space_version = 4;
  CHECK_THROWS_AS(TrialStore::open_or_create(path, other), Error);
}
