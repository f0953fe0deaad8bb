#include "sassopt/backend.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <fstream>
#include <regex>

#include "sassopt/text.hpp"

namespace sassopt {

std::string_view to_string(TimeUnit u) { return u == TimeUnit::Cycles ? "cycles" : "ms"; }

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of no values");
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

CostSample SimulatorBackend::measure(const Kernel& k, int /*reps*/) {
  double t = static_cast<double>(simulate(k, cfg_).total_cycles);
  return CostSample{t, TimeUnit::Cycles, 1, {t}};
}

void BackendDescriptor::validate() const {
  if (kind != Kind::External) return;
  if (command.find(kPlaceholder) == std::string::npos)
    throw std::invalid_argument("external backend command must contain {schedule_file}");
  if (!(timeout_seconds > 0)) throw std::invalid_argument("backend timeout must be positive");
}

double parse_time_ms(std::string_view out) {
  static const std::regex line_re(R"(^\{"time_ms": ([0-9]+(\.[0-9]+)?([eE][+-]?[0-9]+)?)\}$)");
  std::optional<double> found;
  int matches = 0;
  std::size_t start = 0;
  while (start <= out.size()) {
    auto nl = out.find('\n', start);
    std::string line(out.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (std::regex_match(line, m, line_re)) {
      ++matches;
      found = std::stod(m[1].str());
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  if (matches != 1)
    throw MeasurementFailed("expected exactly one {\"time_ms\": <float>} line on stdout, found " +
                            std::to_string(matches));
  return *found;
}

std::string shell_quote(std::string_view s) {
  std::string q = "'";
  for (char c : s) {
    if (c == '\'') q += "'\\''";
    else q += c;
  }
  q += '\'';
  return q;
}

CommandResult run_command(const std::string& command, double timeout_seconds,
                          const std::filesystem::path& cwd) {
  CommandResult res;
  int pipefd[2];
  if (pipe(pipefd) != 0) throw MeasurementFailed("pipe() failed");

  pid_t pid = fork();
  if (pid < 0) {
    close(pipefd[0]);
    close(pipefd[1]);
    throw MeasurementFailed("fork() failed");
  }
  if (pid == 0) {
    setpgid(0, 0);
    int devnull = open("/dev/null", O_RDONLY);
    if (devnull >= 0) dup2(devnull, STDIN_FILENO);
    dup2(pipefd[1], STDOUT_FILENO);
    close(pipefd[0]);
    close(pipefd[1]);
    if (!cwd.empty() && chdir(cwd.c_str()) != 0) _exit(127);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(pipefd[1]);

  using clock = std::chrono::steady_clock;
  auto deadline = clock::now() + std::chrono::duration<double>(timeout_seconds);
  char buf[4096];
  for (;;) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
    if (left <= 0) {
      res.timed_out = true;
      break;
    }
    pollfd pfd{pipefd[0], POLLIN, 0};
    int r = poll(&pfd, 1, static_cast<int>(std::min<long long>(left, 1000)));
    if (r < 0 && errno != EINTR) break;
    if (r <= 0) continue;
    ssize_t n = read(pipefd[0], buf, sizeof buf);
    if (n <= 0) break;
    res.stdout_text.append(buf, static_cast<std::size_t>(n));
  }
  close(pipefd[0]);
  if (res.timed_out) kill(-pid, SIGKILL);

  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (!res.timed_out) res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return res;
}

ExternalBackend::ExternalBackend(BackendDescriptor d) : desc_(std::move(d)) {
  desc_.kind = BackendDescriptor::Kind::External;
  desc_.validate();
}

double ExternalBackend::run_once(const std::filesystem::path& schedule_file) {
  std::string cmd = desc_.command;
  const std::string quoted = shell_quote(schedule_file.string());
  for (auto pos = cmd.find(BackendDescriptor::kPlaceholder); pos != std::string::npos;
       pos = cmd.find(BackendDescriptor::kPlaceholder, pos + quoted.size()))
    cmd.replace(pos, BackendDescriptor::kPlaceholder.size(), quoted);

  CommandResult r = run_command(cmd, desc_.timeout_seconds, desc_.working_directory);
  if (r.timed_out)
    throw MeasurementFailed("adapter timed out after " + std::to_string(desc_.timeout_seconds) + " s");
  if (r.exit_code != 0)
    throw MeasurementFailed("adapter exited with status " + std::to_string(r.exit_code));
  return parse_time_ms(r.stdout_text);
}

CostSample ExternalBackend::measure(const Kernel& k, int reps) {
  std::unique_lock<std::mutex> lock(mu_, std::defer_lock);
  if (!desc_.concurrency_safe) lock.lock();

  static std::atomic<unsigned> counter{0};
  std::filesystem::path dir = desc_.working_directory.empty()
                                  ? std::filesystem::temp_directory_path()
                                  : desc_.working_directory;
  std::filesystem::path file =
      dir / ("sassopt-" + std::to_string(getpid()) + "-" + std::to_string(counter++) + ".sass");
  {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw MeasurementFailed("cannot write " + file.string());
    out << serialize_kernel(k);
  }

  CostSample s;
  s.unit = TimeUnit::Milliseconds;
  s.reps = std::max(1, reps);
  try {
    for (int i = 0; i < s.reps; ++i) s.raw.push_back(run_once(file));
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(file, ec);
    throw;
  }
  std::error_code ec;
  std::filesystem::remove(file, ec);
  s.time = median(s.raw);
  return s;
}

std::unique_ptr<CostBackend> make_backend(const BackendDescriptor& d, const MachineConfig& cfg) {
  d.validate();
  if (d.kind == BackendDescriptor::Kind::External) return std::make_unique<ExternalBackend>(d);
  return std::make_unique<SimulatorBackend>(cfg);
}

CostSample measure(const Kernel& k, const BackendDescriptor& d, int reps, const MachineConfig& cfg) {
  return make_backend(d, cfg)->measure(k, reps);
}

}  // namespace sassopt
