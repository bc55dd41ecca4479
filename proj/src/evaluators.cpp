#include "smbo/evaluators.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <thread>

#include "smbo/error.hpp"
#include "smbo/format.hpp"

extern char** environ;

namespace smbo {

EvaluationResult EvaluationResult::ok(double error, std::string detail) {
  return EvaluationResult{error, Status::ok, 0.0, std::move(detail)};
}

EvaluationResult EvaluationResult::failed(std::string detail, Status status) {
  return EvaluationResult{1.0, status, 0.0, std::move(detail)};
}

// ---------------------------------------------------------------------------

nlohmann::json SurfaceSpec::to_json() const {
  auto terms_json = nlohmann::json::array();
  for (const auto& t : terms) {
    nlohmann::json j{{"param", t.param}, {"weight", t.weight}};
    if (t.optimum) {
      j["optimum"] = *t.optimum;
      j["scale"] = t.scale;
    }
    if (!t.penalties.empty()) {
      auto pen = nlohmann::json::array();
      for (const auto& [v, p] : t.penalties) pen.push_back({{"value", value_to_json(v)}, {"penalty", p}});
      j["penalties"] = pen;
    }
    if (t.inactive_penalty != 0.0) j["inactive_penalty"] = t.inactive_penalty;
    terms_json.push_back(j);
  }
  return {{"floor", floor}, {"noise_sigma", noise_sigma}, {"terms", terms_json}};
}

SurfaceSpec SurfaceSpec::from_json(const nlohmann::json& j) {
  try {
    SurfaceSpec s;
    s.floor = j.value("floor", 0.0);
    s.noise_sigma = j.value("noise_sigma", 0.0);
    if (s.noise_sigma < 0.0) throw Error("noise_sigma must be >= 0");
    for (const auto& tj : j.at("terms")) {
      SurfaceTerm t;
      t.param = tj.at("param").get<std::string>();
      t.weight = tj.value("weight", 1.0);
      if (tj.contains("optimum")) {
        t.optimum = tj.at("optimum").get<double>();
        t.scale = tj.value("scale", 1.0);
        if (!(t.scale > 0.0)) throw Error("term '" + t.param + "': scale must be > 0");
      }
      if (tj.contains("penalties"))
        for (const auto& pj : tj.at("penalties"))
          t.penalties.emplace_back(value_from_json(pj.at("value")), pj.at("penalty").get<double>());
      t.inactive_penalty = tj.value("inactive_penalty", 0.0);
      s.terms.push_back(std::move(t));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("surface: ") + e.what());
  }
}

SurfaceSpec SurfaceSpec::from_file(const std::string& path) {
  try {
    return from_json(read_json_file(path));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

SurfaceSpec SurfaceSpec::random_for(const SearchSpace& space, std::uint64_t seed, double floor) {
  Rng rng(seed);
  SurfaceSpec s;
  s.floor = floor;
  const double per_term = (0.9 - floor) / static_cast<double>(std::max<std::size_t>(space.params().size(), 1));
  for (const auto& p : space.params()) {
    SurfaceTerm t;
    t.param = p.name;
    t.weight = per_term * (0.5 + rng.uniform01());
    switch (p.kind) {
      case ParamKind::integer:
        t.optimum = static_cast<double>(rng.uniform_int(static_cast<std::int64_t>(p.lo), static_cast<std::int64_t>(p.hi)));
        t.scale = std::max(p.hi - p.lo, 1.0);
        break;
      case ParamKind::real:
        t.optimum = p.lo + (p.hi - p.lo) * rng.uniform01();
        t.scale = p.hi > p.lo ? p.hi - p.lo : 1.0;
        break;
      case ParamKind::categorical:
      case ParamKind::boolean: {
        std::vector<Value> values = p.kind == ParamKind::boolean ? std::vector<Value>{false, true} : p.choices;
        const std::size_t best = rng.index(values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
          t.penalties.emplace_back(values[i], i == best ? 0.0 : t.weight * (0.2 + 0.8 * rng.uniform01()));
        break;
      }
    }
    s.terms.push_back(std::move(t));
  }
  return s;
}

EvaluationResult eval_surrogate(const Assignment& a, const SurfaceSpec& surface, Rng* noise) {
  double e = surface.floor;
  for (const auto& t : surface.terms) {
    const Value* v = a.find(t.param);
    if (v == nullptr) {
      e += t.inactive_penalty;
      continue;
    }
    if (t.optimum) {
      double x = 0.0;
      if (const auto* i = std::get_if<std::int64_t>(v)) {
        x = static_cast<double>(*i);
      } else if (const auto* d = std::get_if<double>(v)) {
        x = *d;
      } else {
        continue;
      }
      const double z = (x - *t.optimum) / t.scale;
      e += t.weight * z * z;
    } else {
      for (const auto& [value, penalty] : t.penalties)
        if (value == *v) {
          e += penalty;
          break;
        }
    }
  }
  if (surface.noise_sigma > 0.0 && noise != nullptr) e += surface.noise_sigma * noise->normal();
  return EvaluationResult::ok(std::clamp(e, 0.0, 1.0));
}

EvaluationResult SurrogateEvaluator::evaluate(const EvalRequest& request) {
  Rng noise(request.seed);
  return eval_surrogate(*request.assignment, surface_, &noise);
}

// ---------------------------------------------------------------------------

nlohmann::json external_request(std::uint64_t trial_id, const Assignment& a,
                                const std::optional<std::string>& config_path) {
  return {{"trial_id", trial_id},
          {"assignment", a.to_json()},
          {"config_path", config_path ? nlohmann::json(*config_path) : nlohmann::json(nullptr)}};
}

namespace {

constexpr std::size_t kMaxCapture = 1 << 20;

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    reset();
    fd_ = std::exchange(o.fd_, -1);
    return *this;
  }
  ~Fd() { reset(); }
  int get() const { return fd_; }
  explicit operator bool() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

struct Pipe {
  Fd read, write;
};

Pipe make_pipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) throw HardFault(std::string("pipe failed: ") + std::strerror(errno));
  return {Fd(fds[0]), Fd(fds[1])};
}

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

/// Blocks SIGPIPE on this thread for the scope, discarding any that arrived.
class SigpipeGuard {
 public:
  SigpipeGuard() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGPIPE);
    pthread_sigmask(SIG_BLOCK, &set, &old_);
  }
  ~SigpipeGuard() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGPIPE);
    const timespec zero{0, 0};
    while (sigtimedwait(&set, nullptr, &zero) > 0) {
    }
    pthread_sigmask(SIG_SETMASK, &old_, nullptr);
  }

 private:
  sigset_t old_;
};

std::string tail(const std::string& s, std::size_t n = 4096) {
  return s.size() <= n ? s : s.substr(s.size() - n);
}

}  // namespace

EvaluationResult eval_external(std::uint64_t trial_id, const Assignment& a, const CommandSpec& cmd,
                               const std::optional<std::string>& config_path) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const auto deadline = start + std::chrono::duration_cast<Clock::duration>(
                                    std::chrono::duration<double>(cmd.timeout_seconds));
  const std::string input = external_request(trial_id, a, config_path).dump();

  std::vector<std::string> env_strings;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    std::string_view entry(*e);
    if (entry.starts_with("TRIAL_ID=") || entry.starts_with("RUN_DIR=")) continue;
    env_strings.emplace_back(entry);
  }
  env_strings.push_back("TRIAL_ID=" + std::to_string(trial_id));
  env_strings.push_back("RUN_DIR=" + cmd.run_dir);
  std::vector<char*> envp;
  for (auto& s : env_strings) envp.push_back(s.data());
  envp.push_back(nullptr);
  std::string sh = "sh", dash_c = "-c", command = cmd.command;
  char* argv[] = {sh.data(), dash_c.data(), command.data(), nullptr};

  Pipe in = make_pipe(), out = make_pipe(), err = make_pipe();
  SigpipeGuard sigpipe_guard;

  const pid_t pid = ::fork();
  if (pid < 0) throw HardFault(std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(in.read.get(), STDIN_FILENO);
    ::dup2(out.write.get(), STDOUT_FILENO);
    ::dup2(err.write.get(), STDERR_FILENO);
    sigset_t none;
    sigemptyset(&none);
    pthread_sigmask(SIG_SETMASK, &none, nullptr);
    ::execve("/bin/sh", argv, envp.data());
    _exit(127);
  }
  ::setpgid(pid, pid);
  in.read.reset();
  out.write.reset();
  err.write.reset();
  set_nonblocking(in.write.get());
  set_nonblocking(out.read.get());
  set_nonblocking(err.read.get());

  std::string stdout_text, stderr_text;
  std::size_t written = 0;
  bool timed_out = false;
  if (input.empty()) in.write.reset();

  auto remaining_ms = [&] {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    return static_cast<int>(std::clamp<long long>(left, 0, 1000));
  };

  while (out.read || err.read || in.write) {
    if (Clock::now() >= deadline) {
      timed_out = true;
      break;
    }
    std::vector<pollfd> fds;
    if (in.write) fds.push_back({in.write.get(), POLLOUT, 0});
    if (out.read) fds.push_back({out.read.get(), POLLIN, 0});
    if (err.read) fds.push_back({err.read.get(), POLLIN, 0});
    int rc = ::poll(fds.data(), fds.size(), remaining_ms());
    if (rc < 0 && errno != EINTR) break;
    if (rc <= 0) continue;
    for (const auto& p : fds) {
      if (p.revents == 0) continue;
      if (in.write && p.fd == in.write.get()) {
        ssize_t n = ::write(p.fd, input.data() + written, input.size() - written);
        if (n > 0) written += static_cast<std::size_t>(n);
        if ((n < 0 && errno != EAGAIN && errno != EINTR) || written == input.size() ||
            (p.revents & (POLLERR | POLLHUP)) != 0)
          in.write.reset();
        continue;
      }
      Fd& src = (out.read && p.fd == out.read.get()) ? out.read : err.read;
      std::string& dst = (&src == &out.read) ? stdout_text : stderr_text;
      char buf[4096];
      ssize_t n = ::read(p.fd, buf, sizeof buf);
      if (n > 0) {
        if (dst.size() < kMaxCapture) dst.append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || (errno != EAGAIN && errno != EINTR)) {
        src.reset();
      }
    }
  }

  int wstatus = 0;
  while (!timed_out) {
    pid_t r = ::waitpid(pid, &wstatus, WNOHANG);
    if (r == pid) break;
    if (r < 0 && errno != EINTR) break;
    if (Clock::now() >= deadline) {
      timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (timed_out) {
    ::kill(-pid, SIGKILL);
    ::kill(pid, SIGKILL);
    while (::waitpid(pid, &wstatus, 0) < 0 && errno == EINTR) {
    }
  }

  const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
  auto finish = [&](EvaluationResult r) {
    r.wall_time = elapsed;
    return r;
  };

  if (timed_out)
    return finish(EvaluationResult::failed("timed out after " + format_double(cmd.timeout_seconds) +
                                           " s; stderr: " + tail(stderr_text)));
  if (WIFSIGNALED(wstatus))
    return finish(EvaluationResult::failed("killed by signal " + std::to_string(WTERMSIG(wstatus)) +
                                           "; stderr: " + tail(stderr_text)));
  const int code = WIFEXITED(wstatus) ? WEXITSTATUS(wstatus) : -1;
  if (code == 126 || code == 127)
    throw HardFault("cannot run evaluator command '" + cmd.command + "' (exit " + std::to_string(code) +
                    "): " + tail(stderr_text));
  if (code != 0)
    return finish(EvaluationResult::failed("exit status " + std::to_string(code) + "; stderr: " + tail(stderr_text)));
  auto value = parse_double(stdout_text);
  if (!value || *value < 0.0 || *value > 1.0)
    return finish(EvaluationResult::failed("expected one decimal in [0,1] on stdout, got '" + tail(stdout_text, 200) +
                                           "'; stderr: " + tail(stderr_text)));
  return finish(EvaluationResult::ok(*value));
}

EvaluationResult ExternalEvaluator::evaluate(const EvalRequest& request) {
  return eval_external(request.trial_id, *request.assignment, cmd_, request.config_path);
}

}  // namespace smbo
