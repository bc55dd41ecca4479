#pragma once

#include <optional>
#include <string>
#include <vector>

#include "smbo/trial.hpp"

namespace smbo {

struct LoadOptions {
  /// Drop a trailing partial record (crash artifact) instead of failing.
  bool recover = false;
  /// When set, the file's header must equal this one.
  std::optional<RunHeader> expect;
};

struct LoadResult {
  TrialDatabase db;
  std::vector<std::string> warnings;
  /// Byte length of the well-formed prefix (header plus complete records).
  std::size_t valid_bytes = 0;
  /// The well-formed prefix lacks a final LF (last record cut right before it).
  bool missing_final_newline = false;
};

/// Parses a store file: header line, then one trial per line.
///
/// A malformed line that is not the last one is a hard error naming the line.
/// A malformed last line is a partial write; it is an error unless
/// `opts.recover` is set, in which case it is dropped with a warning.
LoadResult load_store(const std::string& path, const LoadOptions& opts = {});

/// Convenience wrapper returning only the database.
TrialDatabase load(const std::string& path, const LoadOptions& opts = {});

/// Single writer for an append-only trial log (line-delimited JSON). Every
/// append is flushed to stable storage before it returns.
class TrialStore {
 public:
  /// Starts a new store. Fails if `path` exists and is non-empty.
  static TrialStore create(const std::string& path, const RunHeader& header);
  /// Opens an existing store for appending. With `opts.recover`, a partial
  /// trailing record is cut off the file before further appends.
  static TrialStore open(const std::string& path, const LoadOptions& opts = {});
  /// open() if the file exists and is non-empty, create() otherwise.
  static TrialStore open_or_create(const std::string& path, const RunHeader& header, bool recover = false);

  TrialStore(TrialStore&& other) noexcept;
  TrialStore& operator=(TrialStore&& other) noexcept;
  TrialStore(const TrialStore&) = delete;
  TrialStore& operator=(const TrialStore&) = delete;
  ~TrialStore();

  /// Rejects ids other than the current count.
  void append(const Trial& trial);

  const TrialDatabase& database() const { return db_; }
  const RunHeader& header() const { return db_.header; }
  const std::string& path() const { return path_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  TrialStore(std::string path, int fd, TrialDatabase db);
  void write_line(const std::string& line);

  std::string path_;
  int fd_ = -1;
  TrialDatabase db_;
  std::vector<std::string> warnings_;
};

std::string serialize_header(const RunHeader& header);
std::string serialize_trial(const Trial& trial);

}  // namespace smbo
