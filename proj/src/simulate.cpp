#include <algorithm>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "sassopt/machine.hpp"

namespace sassopt {

void MachineConfig::validate() const {
  for (const auto& [prefix, lat] : cpi_table)
    if (lat < 1) throw std::invalid_argument("latency for " + prefix + " must be >= 1");
  for (std::size_t c = 0; c < class_latency.size(); ++c)
    if (class_latency[c] < 1)
      throw std::invalid_argument("latency for class " +
                                  std::string(to_string(static_cast<InstrClass>(c))) +
                                  " must be >= 1");
  if (global_mem_latency < 1) throw std::invalid_argument("global_mem_latency must be >= 1");
  if (barrier_count < 1 || barrier_count > kNumBarriers)
    throw std::invalid_argument("barrier_count must be in 1..6");
  if (issue_width != 1) throw std::invalid_argument("only issue_width 1 is modelled");
}

int MachineConfig::latency(const Instruction& instr) const {
  const std::string& m = instr.mnemonic();
  const std::string* best = nullptr;
  int lat = 0;
  for (const auto& [prefix, value] : cpi_table) {
    if (m.starts_with(prefix) && (!best || prefix.size() > best->size())) {
      best = &prefix;
      lat = value;
    }
  }
  if (best) return lat;
  if (is_global_memory(instr.klass())) return global_mem_latency;
  return class_latency[static_cast<std::size_t>(instr.klass())];
}

namespace {

std::size_t slot(const Reg& r) {
  switch (r.file) {
    case RegFile::Gpr: return r.index;
    case RegFile::Uniform: return 256 + r.index;
    case RegFile::Predicate: return 320 + r.index;
    case RegFile::UniformPredicate: return 328 + r.index;
  }
  return 0;
}

}  // namespace

SimReport simulate(const Kernel& k, const MachineConfig& cfg) {
  SimReport rep;
  if (k.empty()) return rep;

  std::array<std::int64_t, 336> reg_ready{};
  std::array<std::int64_t, kNumBarriers> barrier_clear{};
  std::int64_t next_issue = 0;
  std::int64_t last_issue = 0;
  std::int64_t finish = 0;
  rep.issue_cycles.reserve(k.size());

  for (std::size_t i = 0; i < k.size(); ++i) {
    const Instruction& ins = k[i];
    const auto& cc = ins.control();
    const std::int64_t base = next_issue;
    std::int64_t issue = base;

    for (const Reg& r : ins.reads()) issue = std::max(issue, reg_ready[slot(r)]);
    for (const Reg& r : ins.writes()) issue = std::max(issue, reg_ready[slot(r)]);
    if (cc) {
      for (int b = 0; b < cfg.barrier_count; ++b) {
        if (!cc->waits_on(b)) continue;
        rep.barrier_waits[b] += std::max<std::int64_t>(0, barrier_clear[b] - base);
        issue = std::max(issue, barrier_clear[b]);
      }
    }

    const std::int64_t done = issue + cfg.latency(ins);
    for (const Reg& r : ins.writes()) reg_ready[slot(r)] = done;
    if (cc) {
      if (auto b = cc->read_barrier(); b && *b < cfg.barrier_count)
        barrier_clear[*b] = std::max(barrier_clear[*b], done);
      if (auto b = cc->write_barrier(); b && *b < cfg.barrier_count)
        barrier_clear[*b] = std::max(barrier_clear[*b], done);
    }

    if (issue > base) rep.stalls.emplace_back(i, issue - base);
    rep.issue_cycles.push_back(issue);
    last_issue = issue;
    finish = std::max(finish, done);
    next_issue = issue + std::max(1, cc ? cc->stall_cycles() : 1);
  }

  rep.total_cycles = std::max(finish, last_issue + 1);
  return rep;
}

std::string SimReport::to_json() const {
  nlohmann::ordered_json j;
  j["total_cycles"] = total_cycles;
  auto stalls_json = nlohmann::ordered_json::array();
  for (const auto& [idx, cyc] : stalls) stalls_json.push_back({{"index", idx}, {"cycles", cyc}});
  j["stalls"] = std::move(stalls_json);
  j["barrier_waits"] = barrier_waits;
  return j.dump(2);
}

}  // namespace sassopt
