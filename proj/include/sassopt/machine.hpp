#pragma once

// Reference machine model: a timing-only scoreboard simulator and a
// value-only interpreter. The simulator never looks at data values and the
// interpreter never looks at control codes, so a dependency-legal
// reordering can change the former but never the latter.

#include <array>
#include <bitset>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sassopt/ir.hpp"

namespace sassopt {

struct MachineConfig {
  /// Issue-to-result latency by mnemonic prefix; the longest matching
  /// prefix wins.
  std::map<std::string, int> cpi_table = {{"FFMA", 4}, {"IMAD", 5}, {"POPC", 15}};
  /// Fallback latency per instruction class. Global-memory classes use
  /// global_mem_latency instead.
  std::array<int, kNumInstrClasses> class_latency = {
      400,  // GlobalLoad
      400,  // GlobalStore
      400,  // GlobalAsyncCopy
      30,   // SharedLoad
      30,   // SharedStore
      4,    // Compute
      1,    // Barrier
      1,    // ControlFlow
      4,    // Other
  };
  int global_mem_latency = 400;
  int barrier_count = kNumBarriers;
  int issue_width = 1;

  /// Throws std::invalid_argument on latencies < 1, barrier_count outside
  /// 1..6 or issue_width != 1.
  void validate() const;
  int latency(const Instruction& instr) const;
};

struct SimReport {
  std::int64_t total_cycles = 0;
  /// Instructions that issued later than in-order issue alone would allow.
  std::vector<std::pair<std::size_t, std::int64_t>> stalls;
  /// Cycles of delay attributed to waiting on each barrier.
  std::array<std::int64_t, kNumBarriers> barrier_waits{};
  std::vector<std::int64_t> issue_cycles;

  std::string to_json() const;
};

/// Single-warp, in-order, single-issue timing. Instruction i issues at the
/// latest of:
///   - issue(i-1) + max(1, stall count of i-1)  (1 without a control code)
///   - the ready time of every register it reads or writes
///   - the clear time of every barrier in its wait mask
/// Results become ready `latency` cycles after issue; a read or write
/// barrier set by i clears at the same time. total_cycles is the time the
/// last result lands (at least last issue + 1).
SimReport simulate(const Kernel& k, const MachineConfig& cfg);

// --- functional interpreter -------------------------------------------------

/// Argument index -> buffer bytes.
using BufferMap = std::map<int, std::vector<std::uint8_t>>;

class UnsupportedInstruction : public std::runtime_error {
 public:
  explicit UnsupportedInstruction(std::string mnemonic)
      : std::runtime_error("instruction not supported by the interpreter: " + mnemonic),
        mnemonic_(std::move(mnemonic)) {}
  const std::string& mnemonic() const { return mnemonic_; }

 private:
  std::string mnemonic_;
};

class OutOfBoundsAccess : public std::runtime_error {
 public:
  OutOfBoundsAccess(std::size_t index, std::uint64_t address)
      : std::runtime_error("out-of-bounds memory access by instruction " +
                           std::to_string(index)),
        index_(index),
        address_(address) {}
  std::size_t index() const { return index_; }
  std::uint64_t address() const { return address_; }

 private:
  std::size_t index_;
  std::uint64_t address_;
};

class UninitializedRead : public std::runtime_error {
 public:
  UninitializedRead(std::size_t index, const Reg& r)
      : std::runtime_error("instruction " + std::to_string(index) +
                           " reads never-written register " + r.str()) {}
};

struct InterpretOptions {
  bool strict = true;               // reading a never-written register throws
  std::uint32_t param_base = 0x160; // c[0x0][param_base + 8*arg] holds arg's address
  std::size_t shared_bytes = 48 * 1024;
};

/// Device address at which buffer `arg` is mapped.
std::uint64_t buffer_address(int arg);

/// Architectural state of one thread.
struct MachineState {
  std::array<std::uint32_t, 256> gpr{};
  std::bitset<256> gpr_valid;
  std::array<std::uint32_t, 64> ugpr{};
  std::bitset<64> ugpr_valid;
  std::array<bool, 8> pred{};
  std::array<bool, 8> upred{};
  BufferMap global;  // by argument index, mapped at buffer_address(arg)
  std::vector<std::uint8_t> shared;
};

/// First mnemonic in `k` the interpreter cannot execute, if any.
std::optional<std::string> find_unsupported(const Kernel& k);

/// Runs `k` as a single thread over `inputs` and returns the final contents
/// of buffer `ret_ptr`. Throws UnsupportedInstruction, OutOfBoundsAccess,
/// UninitializedRead (strict mode) or std::invalid_argument when `ret_ptr`
/// names no buffer.
std::vector<std::uint8_t> interpret(const Kernel& k, const BufferMap& inputs, int ret_ptr,
                                    const InterpretOptions& opts = {});

}  // namespace sassopt
