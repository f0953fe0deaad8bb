#include "sassopt/perturb.hpp"

namespace sassopt {

std::string_view to_string(Direction d) { return d == Direction::Up ? "up" : "down"; }

std::string_view to_string(MoveRejected::Reason r) {
  return r == MoveRejected::Reason::Boundary ? "boundary" : "dependency";
}

CandidateSet candidates(const Kernel& k) {
  CandidateSet cs;
  for (std::size_t i = 0; i < k.size(); ++i)
    if (is_global_memory(k[i].klass())) cs.positions.push_back(i);
  return cs;
}

Action sample_action(const CandidateSet& cs, Rng& rng) {
  if (cs.empty()) throw NoCandidates();
  std::uint64_t draw = uniform_index(rng, 2 * cs.size());
  return Action{static_cast<std::size_t>(draw / 2), draw % 2 == 0 ? Direction::Up : Direction::Down};
}

MoveResult apply(const Kernel& k, const DepGraph& g, Action a, const MoveOptions& opts) {
  CandidateSet cs = candidates(k);
  if (a.candidate >= cs.size()) throw std::out_of_range("action candidate out of range");
  const std::size_t pos = cs.positions[a.candidate];

  std::size_t upper;  // the swap exchanges upper and upper + 1
  if (a.direction == Direction::Up) {
    if (pos == 0) return MoveRejected{MoveRejected::Reason::Boundary};
    upper = pos - 1;
  } else {
    if (pos + 1 >= k.size()) return MoveRejected{MoveRejected::Reason::Boundary};
    upper = pos;
  }
  if (k.boundary_between(upper) || g.has_edge(upper, upper + 1, DepKind::BlockFence))
    return MoveRejected{MoveRejected::Reason::Boundary};
  if (!opts.unsafe_moves && !swap_legal(g, k, upper))
    return MoveRejected{MoveRejected::Reason::Dependency};
  return k.with_swapped(upper);
}

}  // namespace sassopt
