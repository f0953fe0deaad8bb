#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "sassopt/ir.hpp"

namespace sassopt {

enum class DepKind : std::uint8_t { RegRAW, RegWAR, RegWAW, BarrierPair, MemOrder, BlockFence };

std::string_view to_string(DepKind k);

struct DepEdge {
  std::size_t from = 0;  // from < to
  std::size_t to = 0;
  DepKind kind = DepKind::RegRAW;

  friend auto operator<=>(const DepEdge&, const DepEdge&) = default;
};

struct DepGraphOptions {
  /// Number of preceding memory instructions each memory instruction is
  /// checked against for aliasing.
  std::size_t alias_window = 64;
};

/// Dependency edges over schedule positions. Edges always point forward, so
/// the graph is acyclic.
class DepGraph {
 public:
  DepGraph() = default;

  std::size_t size() const { return n_; }
  const std::vector<DepEdge>& edges() const { return edges_; }
  bool has_edge(std::size_t from, std::size_t to) const;
  bool has_edge(std::size_t from, std::size_t to, DepKind kind) const;
  /// Any edge at all between two positions (either direction).
  bool connected(std::size_t a, std::size_t b) const;

  void write_dot(std::ostream& os, const Kernel& k) const;

 private:
  friend DepGraph build(const Kernel& k, const DepGraphOptions& opts);
  void add(std::size_t from, std::size_t to, DepKind kind);

  std::size_t n_ = 0;
  std::vector<DepEdge> edges_;
  std::unordered_set<std::uint64_t> pairs_;
  std::unordered_set<std::uint64_t> typed_;
};

DepGraph build(const Kernel& k, const DepGraphOptions& opts = {});

/// True when schedule[pos] and schedule[pos + 1] may exchange places: no
/// edge joins them and no block boundary separates them.
bool swap_legal(const DepGraph& g, const Kernel& k, std::size_t pos);

/// Conservative aliasing test for two memory accesses. `same_base_version`
/// says whether the base registers hold the same value at both points.
bool may_alias(const MemAccess& a, const MemAccess& b, bool same_base_version);

}  // namespace sassopt
