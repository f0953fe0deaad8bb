#pragma once

// Search space and mutation policy: only global-memory instructions move,
// and each move exchanges one of them with its immediate neighbour.

#include <cstddef>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

#include "sassopt/depgraph.hpp"
#include "sassopt/ir.hpp"
#include "sassopt/random.hpp"

namespace sassopt {

/// Positions of GlobalLoad / GlobalStore / GlobalAsyncCopy instructions,
/// ascending.
struct CandidateSet {
  std::vector<std::size_t> positions;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
};

enum class Direction { Up, Down };

std::string_view to_string(Direction d);

/// Which candidate to move (index into the CandidateSet) and where.
struct Action {
  std::size_t candidate = 0;
  Direction direction = Direction::Up;

  friend bool operator==(const Action&, const Action&) = default;
};

class NoCandidates : public std::runtime_error {
 public:
  NoCandidates() : std::runtime_error("kernel has no global-memory instructions to move") {}
};

struct MoveRejected {
  enum class Reason { Boundary, Dependency };
  Reason reason;
};

std::string_view to_string(MoveRejected::Reason r);

struct MoveOptions {
  /// Ignore register, barrier and memory dependencies; only block fences
  /// and the schedule ends still stop a move.
  bool unsafe_moves = false;
};

CandidateSet candidates(const Kernel& k);

/// Uniform over candidate x direction. Throws NoCandidates when `cs` is empty.
Action sample_action(const CandidateSet& cs, Rng& rng);

using MoveResult = std::variant<Kernel, MoveRejected>;

/// Exchanges the chosen candidate with its neighbour. `g` must be the
/// dependency graph of `k`.
MoveResult apply(const Kernel& k, const DepGraph& g, Action a, const MoveOptions& opts = {});

}  // namespace sassopt
