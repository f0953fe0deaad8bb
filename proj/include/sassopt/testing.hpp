#pragma once

// Differential testing of a reordered kernel against its reference on
// seeded random inputs. Passing is evidence of equivalence, not proof.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sassopt/ir.hpp"
#include "sassopt/machine.hpp"

namespace sassopt {

enum class ElementKind { Int32, Int8 };

std::string_view to_string(ElementKind k);
std::size_t element_size(ElementKind k);

struct BufferSpec {
  int arg = 0;
  std::size_t length = 0;  // elements
  ElementKind kind = ElementKind::Int32;
  /// Inclusive value range; nullopt means uniform over the full element range.
  std::optional<std::pair<std::int64_t, std::int64_t>> range;
};

struct TestPlan {
  int ret_ptr = 0;
  std::vector<BufferSpec> buffers;
  std::uint64_t sample_count = 1000;
  std::uint64_t seed = 0;
  bool fail_fast = false;
  unsigned threads = 1;
  InterpretOptions interp;

  /// Throws std::invalid_argument.
  void validate() const;
  const BufferSpec& output() const;
};

struct Mismatch {
  std::uint64_t sample = 0;
  std::optional<std::size_t> cell;  // element index; absent when the mutant faulted
  std::int64_t expected = 0;
  std::int64_t actual = 0;
  std::string detail;
};

struct TestVerdict {
  std::uint64_t passed = 0;
  std::uint64_t failed = 0;
  std::optional<Mismatch> first_failure;
  bool inconclusive = false;
  std::string inconclusive_reason;

  bool ok() const { return !inconclusive && failed == 0; }
  std::string to_json() const;
};

/// Inputs for one sample: a pure function of (plan.seed, sample).
BufferMap generate_inputs(const TestPlan& plan, std::uint64_t sample);

/// Runs plan.sample_count samples (stopping at the first failure when
/// plan.fail_fast). A fault in the mutant (out-of-bounds, uninitialized
/// read) is a failure; an instruction outside the interpreter subset, or a
/// fault in the reference, makes the verdict inconclusive.
TestVerdict run_tests(const Kernel& reference, const Kernel& mutant, const TestPlan& plan);

/// Same, over samples [first, first + count).
TestVerdict run_tests_range(const Kernel& reference, const Kernel& mutant, const TestPlan& plan,
                            std::uint64_t first, std::uint64_t count);

/// For each budget b: mutants with no failure among samples [0, b). All
/// mutants see the same sample stream, so the counts never increase.
std::vector<std::pair<std::uint64_t, std::size_t>> pass_curve(
    const Kernel& reference, const std::vector<Kernel>& mutants,
    const std::vector<std::uint64_t>& budgets, const TestPlan& plan);

}  // namespace sassopt
