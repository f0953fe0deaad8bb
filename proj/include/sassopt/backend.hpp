#pragma once

// Cost backends: how a candidate schedule's runtime is obtained.

#include <filesystem>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sassopt/ir.hpp"
#include "sassopt/machine.hpp"

namespace sassopt {

enum class TimeUnit { Cycles, Milliseconds };

std::string_view to_string(TimeUnit u);

struct CostSample {
  double time = 0.0;  // median over raw
  TimeUnit unit = TimeUnit::Cycles;
  int reps = 1;
  std::vector<double> raw;
};

class MeasurementFailed : public std::runtime_error {
 public:
  explicit MeasurementFailed(const std::string& detail)
      : std::runtime_error("measurement failed: " + detail) {}
};

class CostBackend {
 public:
  virtual ~CostBackend() = default;
  /// Throws MeasurementFailed.
  virtual CostSample measure(const Kernel& k, int reps) = 0;
  virtual bool concurrency_safe() const = 0;
  virtual std::string name() const = 0;
};

/// Deterministic scoreboard timing; reps collapse to one.
class SimulatorBackend final : public CostBackend {
 public:
  explicit SimulatorBackend(MachineConfig cfg = {}) : cfg_(std::move(cfg)) { cfg_.validate(); }
  CostSample measure(const Kernel& k, int reps) override;
  bool concurrency_safe() const override { return true; }
  std::string name() const override { return "sim"; }

 private:
  MachineConfig cfg_;
};

struct BackendDescriptor {
  enum class Kind { Simulator, External };
  static constexpr std::string_view kPlaceholder = "{schedule_file}";

  Kind kind = Kind::Simulator;
  std::string command;  // external: run with /bin/sh -c after substitution
  double timeout_seconds = 60.0;
  std::filesystem::path working_directory;  // empty: system temp dir
  bool concurrency_safe = false;

  /// Throws std::invalid_argument when an external command lacks the
  /// placeholder or the timeout is not positive.
  void validate() const;
};

/// Runs an adapter command per repetition. The schedule is written to a
/// fresh temporary file whose path replaces `{schedule_file}`; the command's
/// stdout must contain exactly one line `{"time_ms": <float>}` and it must
/// exit with status 0.
class ExternalBackend final : public CostBackend {
 public:
  explicit ExternalBackend(BackendDescriptor d);
  CostSample measure(const Kernel& k, int reps) override;
  bool concurrency_safe() const override { return desc_.concurrency_safe; }
  std::string name() const override { return "external"; }

 private:
  double run_once(const std::filesystem::path& schedule_file);

  BackendDescriptor desc_;
  std::mutex mu_;
};

std::unique_ptr<CostBackend> make_backend(const BackendDescriptor& d, const MachineConfig& cfg = {});

/// One-shot convenience over make_backend.
CostSample measure(const Kernel& k, const BackendDescriptor& d, int reps,
                   const MachineConfig& cfg = {});

/// Extracts the time from adapter stdout. Throws MeasurementFailed unless
/// exactly one line matches the protocol.
double parse_time_ms(std::string_view stdout_text);

double median(std::vector<double> values);

struct CommandResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string stdout_text;
};

/// Runs `/bin/sh -c command` with stdin closed, capturing stdout.
CommandResult run_command(const std::string& command, double timeout_seconds,
                          const std::filesystem::path& cwd = {});

/// Single-quotes `s` for /bin/sh.
std::string shell_quote(std::string_view s);

}  // namespace sassopt
