#pragma once

// Simulated-annealing search over schedules.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sassopt/backend.hpp"
#include "sassopt/ir.hpp"
#include "sassopt/perturb.hpp"
#include "sassopt/random.hpp"

namespace sassopt {

class InvalidBaseline : public std::invalid_argument {
 public:
  explicit InvalidBaseline(double t0)
      : std::invalid_argument("baseline runtime must be positive, got " + std::to_string(t0)) {}
};

/// Relative improvement of one step: (t_prev - t_curr) / t0.
double feedback(double t0, double t_prev, double t_curr);

/// Metropolis rule. `draw` supplies r in [0, 1) and is only called for
/// delta_e >= 0.
bool accept_move(double delta_e, double temperature, const std::function<double()>& draw);

struct AnnealConfig {
  double t_max = 1.0;
  double t_min = 0.01;
  double cooling = 1.05;  // T <- T / cooling each iteration
  std::uint64_t seed = 1;
  int measure_reps = 5;
  std::uint64_t tests_per_step = 0;
  bool unsafe_moves = false;
  int max_consecutive_failures = 10;  // measurement failures before aborting

  /// Throws std::invalid_argument.
  void validate() const;
  /// ceil(log(t_max / t_min) / log(cooling)); 0 when t_max == t_min.
  std::size_t iterations() const;
  double temperature_at(std::size_t iteration) const;
};

enum class StepOutcome { Accepted, Rejected, IllegalMove, TestFailed, MeasureFailed };

std::string_view to_string(StepOutcome o);

struct StepRecord {
  std::size_t iteration = 0;
  Action action;
  double temperature = 0.0;
  std::optional<double> energy;  // of the proposed schedule, when measured
  double current_energy = 1.0;   // after the step
  double best_energy = 1.0;      // after the step
  double feedback = 0.0;
  bool accepted = false;
  StepOutcome outcome = StepOutcome::Rejected;

  std::string to_json() const;
};

struct AnnealState {
  Kernel current;
  Kernel best;
  double temperature = 0.0;
  double t0 = 0.0;
  double current_time = 0.0;
  double best_time = 0.0;
  TimeUnit unit = TimeUnit::Cycles;
  std::vector<StepRecord> history;
  bool aborted = false;
  std::string abort_reason;

  std::size_t accepted_count() const;
  /// One JSON object per line, one line per iteration.
  std::string history_jsonl() const;
};

/// True when the proposed schedule may be kept. Empty: no testing.
using StepTester = std::function<bool(const Kernel&)>;

/// Runs one chain. Throws NoCandidates, and MeasurementFailed or
/// InvalidBaseline when `k0` itself cannot be measured. Later backend
/// failures end the run early with `aborted` set and history kept.
AnnealState anneal(const Kernel& k0, CostBackend& backend, const StepTester& tester,
                   const AnnealConfig& cfg);

}  // namespace sassopt
