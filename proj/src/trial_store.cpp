#include "smbo/trial_store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "smbo/error.hpp"

namespace smbo {

namespace {

std::string dump_line(const nlohmann::json& j) {
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path + ": cannot open store");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string describe_mismatch(const RunHeader& got, const RunHeader& want) {
  std::string s;
  if (got.space_name != want.space_name)
    s += " space_name '" + got.space_name + "' != '" + want.space_name + "';";
  if (got.space_version != want.space_version)
    s += " space_version " + std::to_string(got.space_version) + " != " + std::to_string(want.space_version) + ";";
  if (got.master_seed != want.master_seed)
    s += " master_seed " + std::to_string(got.master_seed) + " != " + std::to_string(want.master_seed) + ";";
  if (got.config_digest != want.config_digest)
    s += " config_digest " + got.config_digest + " != " + want.config_digest + ";";
  if (got.format_version != want.format_version) s += " format_version differs;";
  return s;
}

[[noreturn]] void io_fail(const std::string& path, const char* what) {
  throw Error(path + ": " + what + ": " + std::strerror(errno));
}

void fsync_parent(const std::string& path) {
  auto dir = std::filesystem::absolute(path).parent_path();
  int dfd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (dfd < 0) return;
  ::fsync(dfd);
  ::close(dfd);
}

}  // namespace

std::string serialize_header(const RunHeader& header) { return dump_line(to_json(header)); }
std::string serialize_trial(const Trial& trial) { return dump_line(to_json(trial)); }

LoadResult load_store(const std::string& path, const LoadOptions& opts) {
  const std::string content = read_all(path);
  if (content.empty()) throw Error(path + ": missing header");

  struct Line {
    std::size_t begin, end;
    bool terminated;
  };
  std::vector<Line> lines;
  for (std::size_t pos = 0; pos < content.size();) {
    auto nl = content.find('\n', pos);
    if (nl == std::string::npos) {
      lines.push_back({pos, content.size(), false});
      break;
    }
    lines.push_back({pos, nl, true});
    pos = nl + 1;
  }

  LoadResult out;
  auto text = [&](const Line& l) { return std::string_view(content).substr(l.begin, l.end - l.begin); };

  try {
    out.db.header = header_from_json(nlohmann::json::parse(text(lines[0])));
  } catch (const std::exception& e) {
    throw Error(path + ":1: malformed header: " + e.what());
  }
  if (opts.expect && out.db.header != *opts.expect)
    throw Error(path + ": run header does not match this configuration:" +
                describe_mismatch(out.db.header, *opts.expect));
  out.valid_bytes = lines[0].terminated ? lines[0].end + 1 : lines[0].end;
  out.missing_final_newline = !lines[0].terminated;

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    const std::string where = path + ":" + std::to_string(i + 1);
    try {
      Trial t = trial_from_json(nlohmann::json::parse(text(line)));
      if (t.id != out.db.trials.size())
        throw Error("trial id " + std::to_string(t.id) + " out of sequence (expected " +
                    std::to_string(out.db.trials.size()) + ")");
      out.db.trials.push_back(std::move(t));
    } catch (const std::exception& e) {
      if (line.terminated) throw Error(where + ": malformed record: " + e.what());
      // Unterminated last line: an interrupted append.
      if (!opts.recover)
        throw Error(where + ": partial trailing record (load with recover to drop it): " + e.what());
      out.warnings.push_back(where + ": dropped partial trailing record");
      break;
    }
    out.valid_bytes = line.terminated ? line.end + 1 : line.end;
    out.missing_final_newline = !line.terminated;
  }
  return out;
}

TrialDatabase load(const std::string& path, const LoadOptions& opts) { return load_store(path, opts).db; }

// ---------------------------------------------------------------------------

TrialStore::TrialStore(std::string path, int fd, TrialDatabase db)
    : path_(std::move(path)), fd_(fd), db_(std::move(db)) {}

TrialStore::TrialStore(TrialStore&& other) noexcept
    : path_(std::move(other.path_)),
      fd_(std::exchange(other.fd_, -1)),
      db_(std::move(other.db_)),
      warnings_(std::move(other.warnings_)) {}

TrialStore& TrialStore::operator=(TrialStore&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    path_ = std::move(other.path_);
    fd_ = std::exchange(other.fd_, -1);
    db_ = std::move(other.db_);
    warnings_ = std::move(other.warnings_);
  }
  return *this;
}

TrialStore::~TrialStore() {
  if (fd_ >= 0) ::close(fd_);
}

TrialStore TrialStore::create(const std::string& path, const RunHeader& header) {
  std::error_code ec;
  if (std::filesystem::exists(path, ec) && std::filesystem::file_size(path, ec) > 0)
    throw Error(path + ": store already exists");
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) io_fail(path, "cannot create store");
  TrialDatabase db;
  db.header = header;
  TrialStore store(path, fd, std::move(db));
  store.write_line(serialize_header(header));
  fsync_parent(path);
  return store;
}

TrialStore TrialStore::open(const std::string& path, const LoadOptions& opts) {
  auto loaded = load_store(path, opts);
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw Error(path + ": " + ec.message());
  if (loaded.valid_bytes < size) {
    if (::truncate(path.c_str(), static_cast<off_t>(loaded.valid_bytes)) != 0)
      io_fail(path, "cannot truncate partial record");
  }
  int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
  if (fd < 0) io_fail(path, "cannot open store for appending");
  TrialStore store(path, fd, std::move(loaded.db));
  store.warnings_ = std::move(loaded.warnings);
  if (loaded.missing_final_newline) store.write_line("\n");
  return store;
}

TrialStore TrialStore::open_or_create(const std::string& path, const RunHeader& header, bool recover) {
  std::error_code ec;
  if (std::filesystem::exists(path, ec) && std::filesystem::file_size(path, ec) > 0)
    return open(path, LoadOptions{recover, header});
  return create(path, header);
}

void TrialStore::write_line(const std::string& line) {
  std::size_t done = 0;
  while (done < line.size()) {
    ssize_t n = ::write(fd_, line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      io_fail(path_, "write failed");
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd_) != 0) io_fail(path_, "fsync failed");
}

void TrialStore::append(const Trial& trial) {
  if (trial.id != db_.trials.size())
    throw Error(path_ + ": cannot append trial id " + std::to_string(trial.id) + " to a store of " +
                std::to_string(db_.trials.size()) + " trials");
  const std::string line = serialize_trial(trial);
  write_line(line);
  // Re-read what was written so the in-memory copy matches a later load even
  // when invalid UTF-8 in `detail` was replaced.
  db_.trials.push_back(trial_from_json(nlohmann::json::parse(line)));
}

}  // namespace smbo
