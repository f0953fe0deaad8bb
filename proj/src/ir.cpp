#include "sassopt/ir.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <stdexcept>

namespace sassopt {

// ---------------------------------------------------------------------------
// ControlCode

ControlCode::ControlCode(std::uint8_t wait_mask, std::optional<int> read_barrier,
                         std::optional<int> write_barrier, bool yield, int stall_cycles)
    : wait_mask_(wait_mask),
      read_barrier_(read_barrier),
      write_barrier_(write_barrier),
      yield_(yield),
      stall_cycles_(stall_cycles) {
  if (wait_mask >> kNumBarriers)
    throw std::invalid_argument("wait mask names a barrier above 5");
  auto check = [](std::optional<int> b, const char* what) {
    if (b && (*b < 0 || *b >= kNumBarriers))
      throw std::invalid_argument(std::string(what) + " barrier out of range 0..5");
  };
  check(read_barrier, "read");
  check(write_barrier, "write");
  if (stall_cycles < 0 || stall_cycles > kMaxStall)
    throw std::invalid_argument("stall count out of range 0..15");
}

namespace {

bool fail(std::string* error, std::string msg) {
  if (error) *error = std::move(msg);
  return false;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

bool parse_barrier_field(std::string_view f, char tag, std::optional<int>& out,
                         std::string* error) {
  if (f.size() != 2 || f[0] != tag)
    return fail(error, std::string("malformed ") + tag + " field '" + std::string(f) + "'");
  if (f[1] == '-') {
    out.reset();
    return true;
  }
  if (f[1] < '0' || f[1] > '5')
    return fail(error, std::string(1, tag) + " barrier index out of range 0..5");
  out = f[1] - '0';
  return true;
}

}  // namespace

std::optional<ControlCode> ControlCode::parse(std::string_view text, std::string* error) {
  if (text.size() < 2 || text.front() != '[' || text.back() != ']') {
    fail(error, "control code must be enclosed in brackets");
    return std::nullopt;
  }
  auto fields = split(text.substr(1, text.size() - 2), ':');
  if (fields.size() != 5) {
    fail(error, "control code has " + std::to_string(fields.size()) + " fields, expected 5");
    return std::nullopt;
  }

  std::string_view wait = fields[0];
  if (wait.size() != 1 + kNumBarriers || wait[0] != 'B') {
    fail(error, "malformed wait mask '" + std::string(wait) + "'");
    return std::nullopt;
  }
  std::uint8_t mask = 0;
  for (int b = 0; b < kNumBarriers; ++b) {
    char c = wait[1 + b];
    if (c == '-') continue;
    if (c != static_cast<char>('0' + b)) {
      fail(error, "wait mask position " + std::to_string(b) + " must be '-' or '" +
                      std::to_string(b) + "'");
      return std::nullopt;
    }
    mask |= static_cast<std::uint8_t>(1U << b);
  }

  std::optional<int> rd, wr;
  if (!parse_barrier_field(fields[1], 'R', rd, error)) return std::nullopt;
  if (!parse_barrier_field(fields[2], 'W', wr, error)) return std::nullopt;

  bool yield = false;
  if (fields[3] == "Y") {
    yield = true;
  } else if (fields[3] != "-") {
    fail(error, "yield field must be '-' or 'Y'");
    return std::nullopt;
  }

  std::string_view st = fields[4];
  if (st.size() != 3 || st[0] != 'S' || !std::isdigit(static_cast<unsigned char>(st[1])) ||
      !std::isdigit(static_cast<unsigned char>(st[2]))) {
    fail(error, "malformed stall field '" + std::string(st) + "'");
    return std::nullopt;
  }
  int stall = (st[1] - '0') * 10 + (st[2] - '0');
  if (stall > kMaxStall) {
    fail(error, "stall count " + std::to_string(stall) + " exceeds 15");
    return std::nullopt;
  }
  return ControlCode(mask, rd, wr, yield, stall);
}

std::string ControlCode::str() const {
  std::string s = "[B";
  for (int b = 0; b < kNumBarriers; ++b) s += waits_on(b) ? static_cast<char>('0' + b) : '-';
  s += ":R";
  s += read_barrier_ ? static_cast<char>('0' + *read_barrier_) : '-';
  s += ":W";
  s += write_barrier_ ? static_cast<char>('0' + *write_barrier_) : '-';
  s += yield_ ? ":Y:S" : ":-:S";
  s += static_cast<char>('0' + stall_cycles_ / 10);
  s += static_cast<char>('0' + stall_cycles_ % 10);
  s += ']';
  return s;
}

// ---------------------------------------------------------------------------
// Registers and operands

bool Reg::is_constant() const {
  switch (file) {
    case RegFile::Gpr: return index == kRZ;
    case RegFile::Uniform: return index == kURZ;
    case RegFile::Predicate:
    case RegFile::UniformPredicate: return index == kPT;
  }
  return false;
}

std::string Reg::str() const {
  switch (file) {
    case RegFile::Gpr: return index == kRZ ? "RZ" : "R" + std::to_string(index);
    case RegFile::Uniform: return index == kURZ ? "URZ" : "UR" + std::to_string(index);
    case RegFile::Predicate: return index == kPT ? "PT" : "P" + std::to_string(index);
    case RegFile::UniformPredicate: return index == kPT ? "UPT" : "UP" + std::to_string(index);
  }
  return "?";
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool all_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

// Parses a register name at the start of `s`; on success advances `s` past it.
std::optional<Reg> take_register(std::string_view& s) {
  auto take_index = [&](std::size_t prefix, RegFile file, std::uint16_t zero_index,
                        std::string_view zero_name, int max_index) -> std::optional<Reg> {
    if (s.substr(prefix).starts_with(zero_name.substr(prefix))) {
      std::size_t len = zero_name.size();
      if (len == s.size() || !std::isalnum(static_cast<unsigned char>(s[len]))) {
        s.remove_prefix(len);
        return Reg{file, zero_index};
      }
    }
    std::size_t i = prefix;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i == prefix) return std::nullopt;
    if (i < s.size() && (std::isalpha(static_cast<unsigned char>(s[i])) || s[i] == '_'))
      return std::nullopt;
    int idx = 0;
    std::from_chars(s.data() + prefix, s.data() + i, idx);
    if (idx > max_index) return std::nullopt;
    s.remove_prefix(i);
    return Reg{file, static_cast<std::uint16_t>(idx)};
  };
  if (s.starts_with("UR")) return take_index(2, RegFile::Uniform, Reg::kURZ, "URZ", 62);
  if (s.starts_with("UP")) return take_index(2, RegFile::UniformPredicate, Reg::kPT, "UPT", 6);
  if (s.starts_with("R")) return take_index(1, RegFile::Gpr, Reg::kRZ, "RZ", 254);
  if (s.starts_with("P")) return take_index(1, RegFile::Predicate, Reg::kPT, "PT", 6);
  return std::nullopt;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  bool neg = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    neg = s[0] == '-';
    s.remove_prefix(1);
  }
  std::uint64_t v = 0;
  std::from_chars_result r{};
  if (s.starts_with("0x") || s.starts_with("0X")) {
    if (s.size() == 2) return std::nullopt;
    r = std::from_chars(s.data() + 2, s.data() + s.size(), v, 16);
  } else {
    if (!all_digits(s)) return std::nullopt;
    r = std::from_chars(s.data(), s.data() + s.size(), v, 10);
  }
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
  auto sv = static_cast<std::int64_t>(v);
  return neg ? -sv : sv;
}

// Address expression inside brackets: terms joined by '+', e.g. `R2.64+0x10`,
// `R219+0x4000`, `UR4`, `R1+-0x8`.
bool parse_address(std::string_view s, MemRef& m) {
  s = trim(s);
  if (s.empty()) return false;
  bool have_base = false;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = i;
    if (s[j] == '-') ++j;
    while (j < s.size() && s[j] != '+' && s[j] != '-') ++j;
    std::string_view term = trim(s.substr(i, j - i));
    i = j < s.size() && s[j] == '+' ? j + 1 : j;
    if (term.empty()) return false;
    if (auto v = parse_int(term)) {
      m.offset += *v;
      continue;
    }
    std::string_view rest = term;
    auto r = take_register(rest);
    if (!r) return false;
    // Width / type tags on the address register: .64, .U32, .X4, ...
    bool wide = false;
    while (!rest.empty() && rest[0] == '.') {
      std::size_t k = 1;
      while (k < rest.size() && std::isalnum(static_cast<unsigned char>(rest[k]))) ++k;
      if (rest.substr(0, k) == ".64") wide = true;
      rest.remove_prefix(k);
    }
    if (!rest.empty()) return false;
    if (r->file == RegFile::Gpr && !have_base) {
      m.base = *r;
      m.wide = wide;
      have_base = true;
    } else if (r->file == RegFile::Uniform) {
      if (!have_base && !m.uniform_offset) {
        m.uniform_offset = *r;
      } else if (!m.uniform_offset) {
        m.uniform_offset = *r;
      } else {
        return false;
      }
    } else {
      return false;
    }
  }
  return true;
}

bool is_float_literal(std::string_view s) {
  if (s.empty()) return false;
  std::string_view t = s;
  if (t[0] == '+' || t[0] == '-') t.remove_prefix(1);
  if (t == "INF" || t == "QNAN" || t == "NAN") return true;
  bool digit = false, dot = false, exp = false;
  for (std::size_t i = 0; i < t.size(); ++i) {
    char c = t[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digit = true;
    } else if (c == '.' && !dot && !exp) {
      dot = true;
    } else if ((c == 'e' || c == 'E') && digit && !exp) {
      exp = true;
      if (i + 1 < t.size() && (t[i + 1] == '+' || t[i + 1] == '-')) ++i;
    } else {
      return false;
    }
  }
  return digit && (dot || exp);
}

}  // namespace

Operand Operand::parse(std::string_view text) {
  Operand op;
  std::string_view s = trim(text);
  op.raw = std::string(s);
  if (s.empty()) return op;

  if (s[0] == '`') {
    op.kind = OperandKind::Target;
    return op;
  }

  if (s.starts_with("desc[")) {
    auto close = s.find(']');
    if (close != std::string_view::npos) {
      std::string_view inner = s.substr(5, close - 5);
      std::string_view after = s.substr(close + 1);
      auto r = take_register(inner);
      if (r && inner.empty() && r->file == RegFile::Uniform && after.size() >= 2 &&
          after.front() == '[' && after.back() == ']' &&
          parse_address(after.substr(1, after.size() - 2), op.mem)) {
        op.mem.descriptor = *r;
        op.kind = OperandKind::Memory;
        return op;
      }
    }
    return op;
  }

  if (s.front() == '[') {
    if (s.back() == ']' && parse_address(s.substr(1, s.size() - 2), op.mem))
      op.kind = OperandKind::Memory;
    return op;
  }

  if (s.starts_with("c[")) {
    auto close = s.find(']');
    if (close != std::string_view::npos && close + 1 < s.size() && s[close + 1] == '[' &&
        s.back() == ']') {
      auto bank = parse_int(s.substr(2, close - 2));
      MemRef addr;
      if (bank && parse_address(s.substr(close + 2, s.size() - close - 3), addr)) {
        op.kind = OperandKind::ConstBank;
        op.bank = static_cast<int>(*bank);
        op.bank_offset = addr.offset;
        if (!addr.base.is_constant()) op.bank_reg = addr.base;
        else if (addr.uniform_offset) op.bank_reg = addr.uniform_offset;
      }
    }
    return op;
  }

  if (auto v = parse_int(s)) {
    op.kind = OperandKind::Immediate;
    op.imm = static_cast<std::uint64_t>(*v);
    return op;
  }
  if (is_float_literal(s)) {
    op.kind = OperandKind::Immediate;
    op.imm_is_float = true;
    op.fimm = std::strtod(std::string(s).c_str(), nullptr);
    return op;
  }

  std::string_view t = s;
  if (t.size() >= 2 && t.front() == '|' && t.back() == '|') {
    op.absolute = true;
    t = t.substr(1, t.size() - 2);
  }
  if (!t.empty() && t[0] == '-') {
    op.negate = true;
    t.remove_prefix(1);
  }
  if (!t.empty() && (t[0] == '!' || t[0] == '~')) {
    op.invert = true;
    t.remove_prefix(1);
  }
  if (t.size() >= 2 && t.front() == '|' && t.back() == '|') {
    op.absolute = true;
    t = t.substr(1, t.size() - 2);
  }

  if (t.starts_with("SR_") || t == "SRZ") {
    op.kind = OperandKind::Special;
    return op;
  }
  // Convergence barriers (BSSY B0, ...) and scoreboards (DEPBAR.LE SB0, ...).
  if ((t.size() >= 2 && t[0] == 'B' && all_digits(t.substr(1))) ||
      (t.size() >= 3 && t.starts_with("SB") && all_digits(t.substr(2)))) {
    op.kind = OperandKind::Special;
    return op;
  }

  std::string_view rest = t;
  if (auto r = take_register(rest)) {
    if (rest.empty() || rest[0] == '.') {
      op.reg = *r;
      op.suffix = std::string(rest);
      switch (r->file) {
        case RegFile::Gpr: op.kind = OperandKind::Gpr; break;
        case RegFile::Uniform: op.kind = OperandKind::Uniform; break;
        case RegFile::Predicate:
        case RegFile::UniformPredicate: op.kind = OperandKind::Predicate; break;
      }
      return op;
    }
  }
  op.negate = op.invert = op.absolute = false;
  return op;
}

// ---------------------------------------------------------------------------
// Classification

namespace {

std::string_view opcode_of(std::string_view mnemonic) {
  return mnemonic.substr(0, mnemonic.find('.'));
}

template <std::size_t N>
bool one_of(std::string_view s, const std::string_view (&set)[N]) {
  return std::find(std::begin(set), std::end(set), s) != std::end(set);
}

constexpr std::string_view kBarrierOps[] = {
    "BAR", "DEPBAR", "LDGDEPBAR", "MEMBAR", "ERRBAR", "WARPSYNC",
    "BSSY", "BSYNC", "ARRIVES", "SYNCS", "CCTL", "FENCE"};

constexpr std::string_view kControlFlowOps[] = {
    "BRA", "BRX", "BRXU", "JMP", "JMX", "JMXU", "EXIT", "RET", "CALL",
    "BREAK", "BPT", "KILL", "CONT", "SSY", "PBK", "BRK", "SYNC", "RTT"};

constexpr std::string_view kComputeOps[] = {
    "IMAD", "IMADSP", "IMUL", "IADD", "IADD3", "IADD32I", "IMNMX", "IABS", "ISCADD",
    "ISETP", "ICMP", "LOP", "LOP3", "LOP32I", "SHF", "SHL", "SHR", "LEA", "SEL",
    "MOV", "MOV32I", "PRMT", "POPC", "FLO", "BREV", "BMSK", "SGXT", "XMAD", "IDP",
    "IDP4A", "VABSDIFF", "VABSDIFF4", "FFMA", "FFMA32I", "FADD", "FADD32I", "FMUL",
    "FMUL32I", "FMNMX", "FSEL", "FSET", "FSETP", "FCHK", "FRND", "FSWZADD", "MUFU",
    "HFMA2", "HADD2", "HMUL2", "HMNMX2", "HSET2", "HSETP2", "HMMA", "IMMA", "BMMA",
    "DMMA", "HGMMA", "DFMA", "DADD", "DMUL", "DSETP", "DMNMX", "I2F", "F2I", "F2F",
    "I2I", "F2FP", "I2IP", "FRND", "S2R", "CS2R", "S2UR", "R2UR", "UMOV", "UIADD3",
    "UIMAD", "ULOP3", "USHF", "ULEA", "USEL", "UISETP", "UPOPC", "UFLO", "UPRMT",
    "ULDC", "PSETP", "PLOP3", "P2R", "R2P", "SHFL", "VOTE", "VOTEU", "MATCH", "REDUX"};

}  // namespace

InstrClass classify(std::string_view mnemonic) {
  std::string_view op = opcode_of(mnemonic);
  if (op == "LDG") return InstrClass::GlobalLoad;
  if (op == "STG") return InstrClass::GlobalStore;
  if (op == "LDGSTS") return InstrClass::GlobalAsyncCopy;
  if (op == "LDS" || op == "LDSM") return InstrClass::SharedLoad;
  if (op == "STS") return InstrClass::SharedStore;
  if (one_of(op, kBarrierOps)) return InstrClass::Barrier;
  if (one_of(op, kControlFlowOps)) return InstrClass::ControlFlow;
  if (one_of(op, kComputeOps)) return InstrClass::Compute;
  return InstrClass::Other;
}

bool is_global_memory(InstrClass c) {
  return c == InstrClass::GlobalLoad || c == InstrClass::GlobalStore ||
         c == InstrClass::GlobalAsyncCopy;
}

namespace {
constexpr std::array<std::string_view, kNumInstrClasses> kClassNames = {
    "GlobalLoad", "GlobalStore", "GlobalAsyncCopy", "SharedLoad", "SharedStore",
    "Compute",    "Barrier",     "ControlFlow",     "Other"};
}

std::string_view to_string(InstrClass c) { return kClassNames[static_cast<std::size_t>(c)]; }

std::optional<InstrClass> instr_class_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kClassNames.size(); ++i)
    if (kClassNames[i] == s) return static_cast<InstrClass>(i);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Instruction

Instruction::Instruction(std::optional<ControlCode> control, std::optional<Predicate> predicate,
                         std::string mnemonic, std::vector<Operand> operands,
                         std::string source_text, int source_line)
    : control_(control),
      predicate_(predicate),
      mnemonic_(std::move(mnemonic)),
      operands_(std::move(operands)),
      source_text_(std::move(source_text)),
      source_line_(source_line) {
  if (mnemonic_.empty()) throw std::invalid_argument("instruction mnemonic is empty");
  klass_ = classify(mnemonic_);
  compute_effects();
}

std::string_view Instruction::opcode() const { return opcode_of(mnemonic_); }

bool Instruction::has_modifier(std::string_view mod) const {
  std::string_view m = mnemonic_;
  for (auto dot = m.find('.'); dot != std::string_view::npos;) {
    m.remove_prefix(dot + 1);
    dot = m.find('.');
    if (m.substr(0, dot) == mod) return true;
  }
  return false;
}

std::span<const Operand> Instruction::dests() const {
  return std::span<const Operand>(operands_).first(num_dests_);
}

std::span<const Operand> Instruction::srcs() const {
  return std::span<const Operand>(operands_).subspan(num_dests_);
}

int Instruction::access_width() const {
  if (has_modifier("U8") || has_modifier("S8")) return 1;
  if (has_modifier("U16") || has_modifier("S16")) return 2;
  if (has_modifier("64")) return 8;
  if (has_modifier("128")) return 16;
  return 4;
}

int Instruction::data_register_count() const {
  int w = access_width();
  return w <= 4 ? 1 : w / 4;
}

namespace {

constexpr std::string_view kNoDestOps[] = {
    "STG", "STS", "STL", "ST", "RED", "LDGSTS", "BAR", "LDGDEPBAR", "DEPBAR", "BRA", "BRX",
    "JMP", "JMX", "EXIT", "RET", "CALL", "NOP", "BSYNC", "BSSY", "WARPSYNC", "MEMBAR",
    "ERRBAR", "YIELD"};

void push_expanded(std::vector<Reg>& out, Reg r, int count) {
  if (r.is_constant()) return;
  for (int k = 0; k < count; ++k) {
    int idx = r.index + k;
    int limit = r.file == RegFile::Gpr ? 254 : r.file == RegFile::Uniform ? 62 : 6;
    if (idx > limit) break;
    out.push_back(Reg{r.file, static_cast<std::uint16_t>(idx)});
  }
}

void push_address(std::vector<Reg>& out, const MemRef& m) {
  push_expanded(out, m.base, m.wide ? 2 : 1);
  if (m.uniform_offset) push_expanded(out, *m.uniform_offset, 1);
  if (m.descriptor) push_expanded(out, *m.descriptor, 2);
}

// Register tokens found in text we could not parse.
void scan_registers(std::string_view text, std::vector<Reg>& out) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (i > 0 && (std::isalnum(static_cast<unsigned char>(text[i - 1])) || text[i - 1] == '_'))
      continue;
    std::string_view rest = text.substr(i);
    if (auto r = take_register(rest)) push_expanded(out, *r, 1);
  }
}

void normalize(std::vector<Reg>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

void Instruction::compute_effects() {
  std::string_view op = opcode();
  const std::size_t n = operands_.size();

  if (n == 0 || one_of(op, kNoDestOps) ||
      (n > 0 && operands_[0].kind == OperandKind::Memory)) {
    num_dests_ = 0;
  } else if (op == "PLOP3" || op == "UPLOP3") {
    num_dests_ = std::min<std::size_t>(2, n);
  } else {
    num_dests_ = 1;
    while (num_dests_ + 1 < n && operands_[num_dests_].kind == OperandKind::Predicate &&
           !operands_[num_dests_].invert)
      ++num_dests_;
  }

  // Registers per GPR operand.
  const bool mma = op.find("MMA") != std::string_view::npos;
  const bool wide_arith = op.starts_with("D") && klass_ == InstrClass::Compute;
  const bool wide_mod = has_modifier("64") || has_modifier("U64") || has_modifier("S64") ||
                        has_modifier("F64");
  const bool memory_op = klass_ == InstrClass::GlobalLoad || klass_ == InstrClass::GlobalStore ||
                         klass_ == InstrClass::SharedLoad || klass_ == InstrClass::SharedStore ||
                         op == "LD" || op == "ST" || op == "LDL" || op == "STL" ||
                         op == "ATOM" || op == "ATOMG" || op == "ATOMS" || op == "RED";
  const bool imad_wide = (op == "IMAD" || op == "UIMAD") && has_modifier("WIDE");

  auto gpr_width = [&](std::size_t idx) -> int {
    if (mma) return 8;
    if (op == "LDSM") return idx > 0 ? 1 : has_modifier("4") ? 4 : has_modifier("2") ? 2 : 1;
    if (memory_op) return data_register_count();
    if (imad_wide) return (idx == 0 || idx == 3) ? 2 : 1;
    if (wide_arith || wide_mod) return 2;
    return 1;
  };

  if (predicate_) push_expanded(reads_, predicate_->reg, 1);

  const bool unknown = klass_ == InstrClass::Other && !memory_op;
  for (std::size_t i = 0; i < n; ++i) {
    const Operand& o = operands_[i];
    const bool dest = i < num_dests_;
    switch (o.kind) {
      case OperandKind::Gpr:
      case OperandKind::Uniform:
      case OperandKind::Predicate: {
        int w = o.kind == OperandKind::Predicate ? 1 : gpr_width(i);
        if (unknown) {
          push_expanded(reads_, *o.reg, w);
          push_expanded(writes_, *o.reg, w);
        } else {
          push_expanded(dest ? writes_ : reads_, *o.reg, w);
        }
        break;
      }
      case OperandKind::Memory: push_address(reads_, o.mem); break;
      case OperandKind::ConstBank:
        if (o.bank_reg) push_expanded(reads_, *o.bank_reg, 1);
        break;
      case OperandKind::Opaque:
        scan_registers(o.raw, reads_);
        scan_registers(o.raw, writes_);
        break;
      default: break;
    }
  }
  normalize(reads_);
  normalize(writes_);

  auto access = [&](MemSpace space, const Operand& o, bool write) {
    memory_.push_back(MemAccess{space, o.mem, access_width(), write});
  };
  std::vector<const Operand*> mems;
  for (const auto& o : operands_)
    if (o.kind == OperandKind::Memory) mems.push_back(&o);
  if (mems.empty()) return;

  if (op == "LDGSTS" && mems.size() >= 2) {
    access(MemSpace::Shared, *mems[0], true);
    access(MemSpace::Global, *mems[1], false);
  } else if (op == "LDG") {
    access(MemSpace::Global, *mems[0], false);
  } else if (op == "STG") {
    access(MemSpace::Global, *mems[0], true);
  } else if (op == "LDS" || op == "LDSM") {
    access(MemSpace::Shared, *mems[0], false);
  } else if (op == "STS") {
    access(MemSpace::Shared, *mems[0], true);
  } else if (op == "LDL") {
    access(MemSpace::Local, *mems[0], false);
  } else if (op == "STL") {
    access(MemSpace::Local, *mems[0], true);
  } else if (op == "LD") {
    access(MemSpace::Generic, *mems[0], false);
  } else if (op == "ST") {
    access(MemSpace::Generic, *mems[0], true);
  } else {
    // Atomics, reductions and anything unknown: read and write.
    MemSpace space = op == "ATOMG" || op == "RED" ? MemSpace::Global
                     : op == "ATOMS"              ? MemSpace::Shared
                                                  : MemSpace::Generic;
    for (const Operand* m : mems) {
      access(space, *m, false);
      access(space, *m, true);
    }
  }
}

std::string Instruction::body() const {
  std::string s;
  if (predicate_) {
    s += '@';
    if (predicate_->negated) s += '!';
    s += predicate_->reg.str();
    s += ' ';
  }
  s += mnemonic_;
  for (std::size_t i = 0; i < operands_.size(); ++i) {
    s += i == 0 ? " " : ", ";
    s += operands_[i].raw;
  }
  s += " ;";
  return s;
}

std::string Instruction::canonical_text() const {
  return control_ ? control_->str() + " " + body() : body();
}

std::string Instruction::text() const {
  return source_text_.empty() ? canonical_text() : source_text_;
}

RegisterSets reads_writes(const Instruction& instr) { return {instr.reads(), instr.writes()}; }

// ---------------------------------------------------------------------------
// Kernel

bool is_label_line(std::string_view line) {
  std::string_view s = trim(line);
  if (s.size() < 2 || s.back() != ':') return false;
  s.remove_suffix(1);
  if (s[0] == '.') s.remove_prefix(1);
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_' || s[0] == '$'))
    return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$';
  });
}

Kernel::Kernel(std::string name, std::vector<InstrPtr> schedule,
               std::vector<std::vector<std::string>> gaps, bool trailing_newline)
    : name_(std::move(name)),
      schedule_(std::move(schedule)),
      gaps_(std::move(gaps)),
      trailing_newline_(trailing_newline) {
  if (gaps_.size() != schedule_.size() + 1)
    throw std::invalid_argument("kernel needs one text gap per instruction plus one");
  compute_boundaries();
}

Kernel Kernel::from_instructions(std::vector<Instruction> instrs, std::string name) {
  std::vector<InstrPtr> sched;
  sched.reserve(instrs.size());
  for (auto& i : instrs) sched.push_back(std::make_shared<const Instruction>(std::move(i)));
  std::vector<std::vector<std::string>> gaps(sched.size() + 1);
  return Kernel(std::move(name), std::move(sched), std::move(gaps));
}

void Kernel::compute_boundaries() {
  boundaries_.clear();
  for (std::size_t g = 0; g < gaps_.size(); ++g)
    for (const auto& line : gaps_[g])
      if (is_label_line(line)) {
        boundaries_.push_back(g);
        break;
      }
  for (std::size_t i = 0; i < schedule_.size(); ++i) {
    if (schedule_[i]->klass() == InstrClass::ControlFlow) {
      boundaries_.push_back(i);
      boundaries_.push_back(i + 1);
    }
  }
  std::sort(boundaries_.begin(), boundaries_.end());
  boundaries_.erase(std::unique(boundaries_.begin(), boundaries_.end()), boundaries_.end());
}

bool Kernel::boundary_between(std::size_t pos) const {
  return std::binary_search(boundaries_.begin(), boundaries_.end(), pos + 1);
}

Kernel Kernel::with_swapped(std::size_t pos) const {
  if (pos + 1 >= schedule_.size()) throw std::out_of_range("swap position past end");
  Kernel k = *this;
  std::swap(k.schedule_[pos], k.schedule_[pos + 1]);
  k.compute_boundaries();
  return k;
}

Kernel Kernel::with_order(const std::vector<std::size_t>& order) const {
  if (order.size() != schedule_.size()) throw std::invalid_argument("order has wrong length");
  std::vector<InstrPtr> sched;
  sched.reserve(order.size());
  for (auto i : order) sched.push_back(schedule_.at(i));
  return Kernel(name_, std::move(sched), gaps_, trailing_newline_);
}

bool operator==(const Kernel& a, const Kernel& b) {
  if (a.size() != b.size() || a.gaps_ != b.gaps_) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.schedule_[i] != b.schedule_[i] && a[i].text() != b[i].text()) return false;
  return true;
}

}  // namespace sassopt
