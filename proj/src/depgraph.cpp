#include "sassopt/depgraph.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <map>
#include <optional>
#include <ostream>

namespace sassopt {

std::string_view to_string(DepKind k) {
  switch (k) {
    case DepKind::RegRAW: return "RegRAW";
    case DepKind::RegWAR: return "RegWAR";
    case DepKind::RegWAW: return "RegWAW";
    case DepKind::BarrierPair: return "BarrierPair";
    case DepKind::MemOrder: return "MemOrder";
    case DepKind::BlockFence: return "BlockFence";
  }
  return "?";
}

namespace {

std::uint64_t pair_key(std::size_t from, std::size_t to) {
  return (static_cast<std::uint64_t>(from) << 32) | static_cast<std::uint64_t>(to);
}

std::uint64_t typed_key(std::size_t from, std::size_t to, DepKind kind) {
  return (static_cast<std::uint64_t>(from) << 34) | (static_cast<std::uint64_t>(to) << 3) |
         static_cast<std::uint64_t>(kind);
}

}  // namespace

void DepGraph::add(std::size_t from, std::size_t to, DepKind kind) {
  if (from >= to) return;
  if (!typed_.insert(typed_key(from, to, kind)).second) return;
  pairs_.insert(pair_key(from, to));
  edges_.push_back({from, to, kind});
}

bool DepGraph::has_edge(std::size_t from, std::size_t to) const {
  return pairs_.contains(pair_key(from, to));
}

bool DepGraph::has_edge(std::size_t from, std::size_t to, DepKind kind) const {
  return typed_.contains(typed_key(from, to, kind));
}

bool DepGraph::connected(std::size_t a, std::size_t b) const {
  return a < b ? has_edge(a, b) : has_edge(b, a);
}

void DepGraph::write_dot(std::ostream& os, const Kernel& k) const {
  os << "digraph deps {\n  node [shape=box, fontname=monospace];\n";
  for (std::size_t i = 0; i < k.size(); ++i) {
    std::string label = k[i].body();
    std::string escaped;
    for (char c : label) {
      if (c == '"' || c == '\\') escaped += '\\';
      escaped += c;
    }
    os << "  n" << i << " [label=\"" << i << ": " << escaped << "\"];\n";
  }
  for (const auto& e : edges_)
    os << "  n" << e.from << " -> n" << e.to << " [label=\"" << to_string(e.kind) << "\"];\n";
  os << "}\n";
}

bool may_alias(const MemAccess& a, const MemAccess& b, bool same_base_version) {
  if (a.space != b.space && a.space != MemSpace::Generic && b.space != MemSpace::Generic)
    return false;
  if (same_base_version && a.ref.base == b.ref.base &&
      a.ref.uniform_offset == b.ref.uniform_offset) {
    std::int64_t a_lo = a.ref.offset, a_hi = a.ref.offset + a.width_bytes;
    std::int64_t b_lo = b.ref.offset, b_hi = b.ref.offset + b.width_bytes;
    return a_lo < b_hi && b_lo < a_hi;
  }
  return true;
}

namespace {

struct RegState {
  std::optional<std::size_t> last_writer;
  std::vector<std::size_t> readers;  // since last write
  std::uint64_t version = 0;
};

struct MemRecord {
  std::size_t index;
  std::vector<MemAccess> accesses;
  std::vector<std::uint64_t> base_versions;  // per access: base + uniform offset
};

}  // namespace

DepGraph build(const Kernel& k, const DepGraphOptions& opts) {
  DepGraph g;
  g.n_ = k.size();
  std::map<Reg, RegState> regs;
  std::array<std::optional<std::size_t>, kNumBarriers> last_setter{};
  std::deque<MemRecord> recent;

  auto version_of = [&](const MemRef& m) {
    std::uint64_t v = regs[m.base].version;
    if (m.uniform_offset) v = v * 1000003ULL + regs[*m.uniform_offset].version;
    return v;
  };

  for (std::size_t j = 0; j < k.size(); ++j) {
    const Instruction& ins = k[j];

    for (const Reg& r : ins.reads()) {
      auto it = regs.find(r);
      if (it != regs.end() && it->second.last_writer) g.add(*it->second.last_writer, j, DepKind::RegRAW);
    }
    for (const Reg& r : ins.writes()) {
      RegState& st = regs[r];
      if (st.last_writer) g.add(*st.last_writer, j, DepKind::RegWAW);
      for (std::size_t reader : st.readers) g.add(reader, j, DepKind::RegWAR);
    }

    if (const auto& cc = ins.control()) {
      for (int b = 0; b < kNumBarriers; ++b)
        if (cc->waits_on(b) && last_setter[b]) g.add(*last_setter[b], j, DepKind::BarrierPair);
    }

    if (!ins.memory().empty()) {
      MemRecord rec{j, ins.memory(), {}};
      for (const auto& a : rec.accesses) rec.base_versions.push_back(version_of(a.ref));
      for (const MemRecord& prev : recent) {
        bool dep = false;
        for (std::size_t x = 0; x < prev.accesses.size() && !dep; ++x)
          for (std::size_t y = 0; y < rec.accesses.size() && !dep; ++y) {
            const MemAccess& a = prev.accesses[x];
            const MemAccess& b = rec.accesses[y];
            if (!a.is_write && !b.is_write) continue;
            bool same = prev.base_versions[x] == rec.base_versions[y];
            dep = may_alias(a, b, same);
          }
        if (dep) g.add(prev.index, j, DepKind::MemOrder);
      }
      recent.push_back(std::move(rec));
      if (recent.size() > opts.alias_window) recent.pop_front();
    }

    // Register state after this instruction.
    for (const Reg& r : ins.writes()) {
      RegState& st = regs[r];
      st.last_writer = j;
      st.readers.clear();
      ++st.version;
    }
    for (const Reg& r : ins.reads()) {
      if (std::binary_search(ins.writes().begin(), ins.writes().end(), r)) continue;
      regs[r].readers.push_back(j);
    }
    if (const auto& cc = ins.control()) {
      if (cc->read_barrier()) last_setter[*cc->read_barrier()] = j;
      if (cc->write_barrier()) last_setter[*cc->write_barrier()] = j;
    }
  }

  // Fences pin themselves against every instruction in their label-delimited block.
  std::vector<std::size_t> block_start(k.size() + 1, 0);
  const auto& gaps = k.interleaved_text();
  std::size_t start = 0;
  for (std::size_t i = 0; i <= k.size(); ++i) {
    for (const auto& line : gaps[i])
      if (is_label_line(line)) {
        start = i;
        break;
      }
    block_start[i] = start;
  }
  for (std::size_t p = 0; p < k.size(); ++p) {
    InstrClass c = k[p].klass();
    if (c != InstrClass::ControlFlow && c != InstrClass::Barrier) continue;
    for (std::size_t j = block_start[p]; j < p; ++j) g.add(j, p, DepKind::BlockFence);
    for (std::size_t j = p + 1; j < k.size() && block_start[j] == block_start[p]; ++j)
      g.add(p, j, DepKind::BlockFence);
  }

  std::sort(g.edges_.begin(), g.edges_.end());
  return g;
}

bool swap_legal(const DepGraph& g, const Kernel& k, std::size_t pos) {
  if (pos + 1 >= k.size()) return false;
  if (k.boundary_between(pos)) return false;
  return !g.connected(pos, pos + 1);
}

}  // namespace sassopt
