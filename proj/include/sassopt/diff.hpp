#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sassopt/ir.hpp"

namespace sassopt {

/// Exchange of the instructions at `position` and `position + 1`.
struct SwapStep {
  std::size_t position = 0;
  std::string moved_up;    // text of the instruction that ends at `position`
  std::string moved_down;  // text of the instruction that ends at `position + 1`
};

/// Shortest sequence of adjacent exchanges turning the schedule of `a` into
/// that of `b`. Identical instruction lines are matched in order of
/// appearance. Throws std::invalid_argument when the two schedules are not
/// permutations of each other.
std::vector<SwapStep> schedule_diff(const Kernel& a, const Kernel& b);

}  // namespace sassopt
