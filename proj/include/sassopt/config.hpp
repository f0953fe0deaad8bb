#pragma once

// Run configuration: one key = value file covering the search, the machine
// model, the test plan and the cost backend.
//
//   anneal.t_max = 1.0            anneal.t_min = 0.01
//   anneal.cooling = 1.05         anneal.seed = 1
//   anneal.measure_reps = 5       anneal.tests_per_step = 0
//   anneal.unsafe_moves = false   anneal.max_consecutive_failures = 10
//   chains = 1
//   machine.global_mem_latency = 400
//   machine.barrier_count = 6
//   machine.cpi.<MNEMONIC-PREFIX> = <cycles>
//   machine.latency.<InstrClass> = <cycles>
//   test.ret_ptr = 0              test.samples = 1000
//   test.seed = 0                 test.threads = 1
//   test.fail_fast = false        test.strict = true
//   test.buffer.<arg> = <int32|int8> <length> [uniform | range:<lo>:<hi>]
//   backend = sim | external
//   backend.command = ./adapter {schedule_file}
//   backend.timeout = 60          backend.workdir = <dir>
//   backend.concurrency_safe = false
//
// `#` starts a comment. Unknown keys are errors.

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sassopt/anneal.hpp"
#include "sassopt/backend.hpp"
#include "sassopt/machine.hpp"
#include "sassopt/testing.hpp"

namespace sassopt {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  AnnealConfig anneal;
  MachineConfig machine;
  std::optional<TestPlan> plan;  // present once any test.buffer is declared
  BackendDescriptor backend;
  int chains = 1;
};

/// Parses `key = value` lines. Throws ConfigError with the line number.
std::map<std::string, std::string> parse_key_values(std::string_view text);

/// Applies `kv` on top of `base`. Throws ConfigError.
RunConfig apply_config(const std::map<std::string, std::string>& kv, RunConfig base = {});

RunConfig load_config(const std::filesystem::path& file, RunConfig base = {});

/// "sim" or "external:<command>".
BackendDescriptor parse_backend_flag(std::string_view flag, BackendDescriptor base = {});

}  // namespace sassopt
