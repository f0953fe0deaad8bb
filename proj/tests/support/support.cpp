#include "support.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "sassopt/config.hpp"
#include "sassopt/depgraph.hpp"
#include "sassopt/text.hpp"

#ifndef SASSOPT_CORPUS_DIR
#error "SASSOPT_CORPUS_DIR must be defined"
#endif

namespace sassopt::test {

namespace fs = std::filesystem;

fs::path corpus_dir() { return fs::path(SASSOPT_CORPUS_DIR); }

std::vector<fs::path> corpus_files() {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(corpus_dir()))
    if (e.path().extension() == ".sass") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Kernel parse_or_die(std::string_view text, std::string name) {
  ParseResult r = parse_kernel(text, std::move(name));
  if (!r.ok()) {
    std::string msg = "test fixture failed to parse:";
    for (const auto& d : r.diagnostics) msg += "\n  " + d.str();
    throw std::runtime_error(msg);
  }
  return std::move(*r.kernel);
}

Kernel load_kernel(const fs::path& p) { return parse_or_die(slurp(p), p.stem().string()); }

std::vector<CorpusCase> interpretable_corpus() {
  std::vector<CorpusCase> out;
  for (const auto& f : corpus_files()) {
    fs::path conf = f;
    conf.replace_extension(".conf");
    if (!fs::exists(conf)) continue;
    RunConfig cfg = load_config(conf);
    out.push_back({f.stem().string(), load_kernel(f), *cfg.plan});
  }
  return out;
}

namespace {

std::string hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string ctrl(int stall, const char* wait = "------", const char* wb = "-") {
  char buf[64];
  std::snprintf(buf, sizeof buf, "[B%s:R-:W%s:-:S%02d] ", wait, wb, stall);
  return buf;
}

std::string reg(int r) { return "R" + std::to_string(r); }

const char* kAddressPrologue =
    "[B------:R-:W-:-:S01] MOV R2, c[0x0][0x160] ;\n"
    "[B------:R-:W-:-:S01] MOV R3, c[0x0][0x164] ;\n"
    "[B------:R-:W-:-:S01] MOV R4, c[0x0][0x168] ;\n"
    "[B------:R-:W-:-:S01] MOV R5, c[0x0][0x16c] ;\n";

}  // namespace

// --- latency hiding ---------------------------------------------------------

std::string latency_hiding_text(int m, int stall, int hoists) {
  if (hoists < 0 || hoists > m) throw std::invalid_argument("hoists out of range");
  std::string s = kAddressPrologue;
  std::vector<std::string> imads;
  for (int j = 0; j < m; ++j)
    imads.push_back(ctrl(stall) + "IMAD " + reg(10 + j) + ", RZ, RZ, " + hex(j + 1) + " ;\n");
  const std::string ldg = ctrl(1, "------", "0") + "LDG.E R0, [R2.64] ;\n";
  for (int j = 0; j < m - hoists; ++j) s += imads[j];
  s += ldg;
  for (int j = m - hoists; j < m; ++j) s += imads[j];
  s += ctrl(1, "0-----") + "IADD3 R6, R0, 0x1, RZ ;\n";
  s += ctrl(1) + "STG.E [R4.64], R6 ;\n";
  if (m > 0) s += ctrl(1) + "STG.E [R4.64+0x4], " + reg(10 + m - 1) + " ;\n";
  s += ctrl(1) + "EXIT ;\n";
  return s;
}

TestPlan latency_hiding_plan() {
  TestPlan p;
  p.ret_ptr = 1;
  p.buffers = {{0, 1, ElementKind::Int32, std::nullopt}, {1, 2, ElementKind::Int32, std::nullopt}};
  p.sample_count = 64;
  return p;
}

std::int64_t latency_hiding_cycles(int m, int stall, int hoists) {
  // MOVs issue at 0..3 with latency 4, so R3 is ready at 5. The IMADs left
  // above the load issue every `stall` cycles from 4. The load issues once
  // R2:R3 is ready; its consumer waits 400 cycles on B0; the first store
  // issues 4 cycles after the consumer (IADD3 latency) and lands 400 later;
  // the second store issues one cycle after the first.
  const std::int64_t t_load = std::max<std::int64_t>(4 + static_cast<std::int64_t>(m - hoists) * stall, 5);
  const std::int64_t t_consumer = t_load + 400;
  return t_consumer + 4 + 400 + (m > 0 ? 1 : 0);
}

// --- random programs --------------------------------------------------------

TestPlan RandomProgram::plan() const {
  TestPlan p;
  p.ret_ptr = 1;
  p.buffers = {{0, kInputs, ElementKind::Int32, std::nullopt},
               {1, outputs.size(), ElementKind::Int32, std::nullopt}};
  p.sample_count = 100;
  return p;
}

RandomProgram random_program(std::uint64_t seed, int length) {
  Rng rng(seed);
  auto pick = [&](std::uint64_t n) { return static_cast<int>(uniform_index(rng, n)); };
  RandomProgram p;
  std::string& s = p.text;
  s = kAddressPrologue;
  s += "[B------:R-:W-:-:S01] LDG.E.128 R8, [R2.64] ;\n";
  s += "[B------:R-:W-:-:S01] LDG.E.128 R12, [R2.64+0x10] ;\n";

  std::vector<int> defined;
  for (int r = 8; r < 16; ++r) defined.push_back(r);
  auto src = [&] { return defined[static_cast<std::size_t>(pick(defined.size()))]; };
  const char* cmp_names[] = {"LT", "GE", "EQ", "NE"};

  int emitted = 0;
  while (emitted < length) {
    RefOp op{};
    op.kind = static_cast<OpKind>(pick(13));
    op.dst = 16 + pick(32);
    op.a = src();
    op.b = src();
    op.c = src();
    const std::string d = reg(op.dst), a = reg(op.a), b = reg(op.b), c = reg(op.c);
    std::string line;
    switch (op.kind) {
      case OpKind::Iadd3:
        if (pick(3) == 0) {
          op.c = -1;
          op.imm = static_cast<std::uint32_t>(rng());
          line = "IADD3 " + d + ", " + a + ", " + b + ", " + hex(op.imm);
        } else {
          line = "IADD3 " + d + ", " + a + ", " + b + ", " + c;
        }
        break;
      case OpKind::Imad: line = "IMAD " + d + ", " + a + ", " + b + ", " + c; break;
      case OpKind::Lop3:
        op.imm = static_cast<std::uint32_t>(pick(256));
        line = "LOP3.LUT " + d + ", " + a + ", " + b + ", " + c + ", " + hex(op.imm) + ", !PT";
        break;
      case OpKind::Shl:
        op.imm = static_cast<std::uint32_t>(pick(32));
        line = "SHF.L.U32 " + d + ", " + a + ", " + hex(op.imm) + ", RZ";
        break;
      case OpKind::Shr:
        op.imm = static_cast<std::uint32_t>(pick(32));
        line = "SHF.R.U32.HI " + d + ", RZ, " + hex(op.imm) + ", " + a;
        break;
      case OpKind::Min: line = "IMNMX " + d + ", " + a + ", " + b + ", PT"; break;
      case OpKind::Max: line = "IMNMX " + d + ", " + a + ", " + b + ", !PT"; break;
      case OpKind::Popc: line = "POPC " + d + ", " + a; break;
      case OpKind::Brev: line = "BREV " + d + ", " + a; break;
      case OpKind::Iabs: line = "IABS " + d + ", " + a; break;
      case OpKind::Prmt:
        op.imm = static_cast<std::uint32_t>(rng() & 0xffff);
        line = "PRMT " + d + ", " + a + ", " + hex(op.imm) + ", " + b;
        break;
      case OpKind::Lea:
        op.imm = static_cast<std::uint32_t>(pick(32));
        line = "LEA " + d + ", " + a + ", " + b + ", " + hex(op.imm);
        break;
      case OpKind::SetSel:
        op.cmp = pick(4);
        op.pred = pick(6);
        s += ctrl(1) + "ISETP." + cmp_names[op.cmp] + ".AND P" + std::to_string(op.pred) + ", PT, " + a + ", " +
             b + ", PT ;\n";
        ++emitted;
        line = "SEL " + d + ", " + c + ", " + a + ", P" + std::to_string(op.pred);
        break;
    }
    s += ctrl(1 + pick(4)) + line + " ;\n";
    ++emitted;
    p.ops.push_back(op);
    if (std::find(defined.begin(), defined.end(), op.dst) == defined.end()) defined.push_back(op.dst);
  }

  for (int k = 0; k < 8; ++k) {
    int r = src();
    p.outputs.push_back(r);
    s += ctrl(1) + "STG.E [R4.64+" + hex(4 * k) + "], " + reg(r) + " ;\n";
  }
  s += ctrl(1) + "EXIT ;\n";
  return p;
}

std::vector<std::uint32_t> reference_evaluate(const RandomProgram& p, const std::vector<std::uint32_t>& in) {
  std::map<int, std::uint32_t> r;
  for (int i = 0; i < RandomProgram::kInputs; ++i) r[8 + i] = in.at(static_cast<std::size_t>(i));
  auto sgn = [](std::uint32_t v) { return static_cast<std::int32_t>(v); };
  for (const RefOp& op : p.ops) {
    const std::uint32_t a = r.at(op.a), b = r.at(op.b);
    const std::uint32_t c = op.c >= 0 ? r.at(op.c) : op.imm;
    std::uint32_t v = 0;
    switch (op.kind) {
      case OpKind::Iadd3: v = a + b + c; break;
      case OpKind::Imad: v = a * b + c; break;
      case OpKind::Lop3:
        for (int bit = 0; bit < 32; ++bit) {
          unsigned idx = (((a >> bit) & 1U) << 2) | (((b >> bit) & 1U) << 1) | ((c >> bit) & 1U);
          v |= ((op.imm >> idx) & 1U) << bit;
        }
        break;
      case OpKind::Shl: v = a << op.imm; break;
      case OpKind::Shr: v = a >> op.imm; break;
      case OpKind::Min: v = sgn(a) < sgn(b) ? a : b; break;
      case OpKind::Max: v = sgn(a) > sgn(b) ? a : b; break;
      case OpKind::Popc:
        for (std::uint32_t x = a; x; x &= x - 1) ++v;
        break;
      case OpKind::Brev:
        for (int bit = 0; bit < 32; ++bit)
          if (a & (1U << bit)) v |= 1U << (31 - bit);
        break;
      case OpKind::Iabs: v = sgn(a) < 0 ? 0U - a : a; break;
      case OpKind::Prmt: {
        std::uint8_t bytes[8];
        for (int i = 0; i < 4; ++i) {
          bytes[i] = static_cast<std::uint8_t>(a >> (8 * i));
          bytes[4 + i] = static_cast<std::uint8_t>(b >> (8 * i));
        }
        for (int i = 0; i < 4; ++i) {
          unsigned nib = (op.imm >> (4 * i)) & 0xfU;
          std::uint8_t byte = bytes[nib & 7U];
          if (nib & 8U) byte = (byte & 0x80U) ? 0xff : 0x00;
          v |= static_cast<std::uint32_t>(byte) << (8 * i);
        }
        break;
      }
      case OpKind::Lea: v = (a << op.imm) + b; break;
      case OpKind::SetSel: {
        bool t = op.cmp == 0   ? sgn(a) < sgn(b)
                 : op.cmp == 1 ? sgn(a) >= sgn(b)
                 : op.cmp == 2 ? a == b
                               : a != b;
        v = t ? c : a;
        break;
      }
    }
    r[op.dst] = v;
  }
  std::vector<std::uint32_t> out;
  for (int o : p.outputs) out.push_back(r.at(o));
  return out;
}

// --- synthetic search kernels -------------------------------------------------

Kernel synthetic_kernel(std::uint64_t seed) {
  Rng rng(splitmix64(seed));
  auto pick = [&](std::uint64_t lo, std::uint64_t hi) { return static_cast<int>(lo + uniform_index(rng, hi - lo + 1)); };
  const int loads = pick(2, 4);
  const int stores = pick(1, std::min({3, 7 - loads, loads}));
  std::vector<bool> store_after(static_cast<std::size_t>(loads), false);
  for (int s = 0, placed = 0; placed < stores; s = (s + 1) % loads)
    if (!store_after[static_cast<std::size_t>(s)] && uniform_index(rng, 2)) {
      store_after[static_cast<std::size_t>(s)] = true;
      ++placed;
    }

  std::string t = kAddressPrologue;
  int next_reg = 40;
  int store_slot = 0;
  for (int i = 0; i < loads; ++i) {
    const int fillers = pick(1, 4);
    int last = -1;
    for (int f = 0; f < fillers; ++f) {
      int d = next_reg++;
      std::string a = (last >= 0 && uniform_index(rng, 2)) ? reg(last) : "RZ";
      t += ctrl(pick(1, 6)) + "IMAD " + reg(d) + ", " + a + ", " + hex(pick(2, 9)) + ", " + hex(pick(1, 99)) + " ;\n";
      last = d;
    }
    const std::string barrier = std::to_string(i);
    std::string wait = "------";
    wait[static_cast<std::size_t>(i)] = static_cast<char>('0' + i);
    t += ctrl(1, "------", barrier.c_str()) + "LDG.E " + reg(10 + i) + ", [R2.64+" + hex(4 * i) + "] ;\n";
    t += ctrl(pick(1, 3), wait.c_str()) + "IADD3 " + reg(20 + i) + ", " + reg(10 + i) + ", " + reg(last) + ", RZ ;\n";
    if (store_after[static_cast<std::size_t>(i)])
      t += ctrl(1) + "STG.E [R4.64+" + hex(4 * store_slot++) + "], " + reg(20 + i) + " ;\n";
  }
  t += ctrl(1) + "EXIT ;\n";
  return parse_or_die(t, "synthetic_" + std::to_string(seed));
}

std::int64_t brute_force_optimum(const Kernel& k, int window, const MachineConfig& cfg,
                                 std::size_t* states_visited) {
  const std::size_t n = k.size();
  if (n > 255) throw std::invalid_argument("kernel too large for brute force");
  std::vector<bool> movable(n, false);
  for (std::size_t p : candidates(k).positions) movable[p] = true;

  // legal[a][b]: instruction a directly above b may trade places with it.
  std::vector<std::vector<signed char>> legal(n, std::vector<signed char>(n, -1));
  auto can_swap = [&](std::size_t a, std::size_t b) {
    signed char& c = legal[a][b];
    if (c < 0) {
      std::vector<Instruction> pair = {k[a], k[b]};
      Kernel pk = Kernel::from_instructions(std::move(pair));
      c = swap_legal(build(pk), pk, 0) ? 1 : 0;
    }
    return c == 1;
  };

  using State = std::vector<std::uint8_t>;
  State start(n);
  for (std::size_t i = 0; i < n; ++i) start[i] = static_cast<std::uint8_t>(i);
  auto key = [](const State& s) { return std::string(s.begin(), s.end()); };

  std::unordered_set<std::string> seen{key(start)};
  std::vector<State> frontier{start};
  std::int64_t best = simulate(k, cfg).total_cycles;
  std::vector<std::size_t> order(n);
  while (!frontier.empty()) {
    std::vector<State> next;
    for (const State& s : frontier) {
      for (std::size_t pos = 0; pos + 1 < n; ++pos) {
        const std::uint8_t a = s[pos], b = s[pos + 1];
        if (!movable[a] && !movable[b]) continue;
        if (!can_swap(a, b)) continue;
        auto displaced = [&](std::uint8_t id, std::size_t newpos) {
          return movable[id] && std::abs(static_cast<long>(newpos) - static_cast<long>(id)) > window;
        };
        if (displaced(a, pos + 1) || displaced(b, pos)) continue;
        State t = s;
        std::swap(t[pos], t[pos + 1]);
        if (!seen.insert(key(t)).second) continue;
        for (std::size_t i = 0; i < n; ++i) order[i] = t[i];
        best = std::min(best, simulate(k.with_order(order), cfg).total_cycles);
        next.push_back(std::move(t));
      }
    }
    frontier = std::move(next);
  }
  if (states_visited) *states_visited = seen.size();
  return best;
}

// --- mutant corpus ------------------------------------------------------------

Kernel random_legal_walk(const Kernel& k, Rng& rng, int steps) {
  Kernel cur = k;
  DepGraph g = build(cur);
  CandidateSet cs = candidates(cur);
  for (int i = 0; i < steps; ++i) {
    MoveResult r = apply(cur, g, sample_action(cs, rng));
    if (auto* nk = std::get_if<Kernel>(&r)) {
      cur = std::move(*nk);
      g = build(cur);
      cs = candidates(cur);
    }
  }
  return cur;
}

MutantCorpus mutant_corpus(std::uint64_t seed, std::size_t n_equivalent) {
  const int popcounts[10] = {0, 1, 2, 3, 4, 6, 8, 10, 11, 12};
  MutantCorpus mc;
  std::string t = kAddressPrologue;
  std::vector<std::size_t> late_load;  // schedule index of each block's late LDG
  std::size_t idx = 4;
  for (int i = 0; i < 10; ++i) {
    const int x = 20 + 3 * i, y = x + 1, z = x + 2, m = 60 + i, s = 80 + i;
    const std::uint32_t mask = popcounts[i] == 0 ? 0U : (0xffffffffU >> (32 - popcounts[i])) << (i % 4);
    const std::uint64_t off = 12 * static_cast<std::uint64_t>(i);
    t += ctrl(1) + "LDG.E " + reg(x) + ", [R2.64+" + hex(off) + "] ;\n";
    t += ctrl(1) + "LDG.E " + reg(y) + ", [R2.64+" + hex(off + 4) + "] ;\n";
    t += ctrl(1) + "IADD3 " + reg(z) + ", " + reg(y) + ", 0x1, RZ ;\n";
    t += ctrl(1) + "LOP3.LUT " + reg(m) + ", " + reg(x) + ", " + hex(mask) + ", RZ, 0xc0, !PT ;\n";
    t += ctrl(1) + "ISETP.EQ.AND P0, PT, " + reg(m) + ", RZ, PT ;\n";
    t += ctrl(1) + "LDG.E " + reg(z) + ", [R2.64+" + hex(off + 8) + "] ;\n";
    t += ctrl(1) + "SEL " + reg(s) + ", " + reg(z) + ", " + reg(y) + ", P0 ;\n";
    t += ctrl(1) + "STG.E [R4.64+" + hex(4 * i) + "], " + reg(s) + " ;\n";
    late_load.push_back(idx + 5);
    idx += 8;
  }
  t += ctrl(1) + "EXIT ;\n";
  mc.reference = parse_or_die(t, "masked_select");

  mc.plan.ret_ptr = 1;
  mc.plan.buffers = {{0, 30, ElementKind::Int32, std::nullopt}, {1, 10, ElementKind::Int32, std::nullopt}};
  mc.plan.seed = seed;

  for (int i = 0; i < 10; ++i) {
    mc.violating.push_back(mc.reference.with_swapped(late_load[static_cast<std::size_t>(i)]));
    mc.violating_popcounts.push_back(popcounts[i]);
  }

  Rng rng(splitmix64(seed ^ 0x5eedULL));
  std::set<std::string> seen{serialize_kernel(mc.reference)};
  for (int attempt = 0; mc.equivalent.size() < n_equivalent && attempt < 1000; ++attempt) {
    Kernel e = random_legal_walk(mc.reference, rng, 10 + static_cast<int>(uniform_index(rng, 30)));
    if (seen.insert(serialize_kernel(e)).second) mc.equivalent.push_back(std::move(e));
  }
  if (mc.equivalent.size() < n_equivalent) throw std::runtime_error("could not build equivalent mutants");
  return mc;
}

}  // namespace sassopt::test
