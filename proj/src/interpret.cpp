#include <bit>
#include <cstring>

#include "sassopt/machine.hpp"

namespace sassopt {

std::uint64_t buffer_address(int arg) {
  return 0x7f0000000000ULL + static_cast<std::uint64_t>(arg) * 0x100000000ULL;
}

namespace {

bool is_one_of(std::string_view s, std::initializer_list<std::string_view> set) {
  for (auto x : set)
    if (x == s) return true;
  return false;
}

bool supported(const Instruction& ins) {
  std::string_view op = ins.opcode();
  if (is_one_of(op, {"MOV", "MOV32I", "UMOV", "ULDC", "S2R", "CS2R", "IADD3", "IMAD", "LOP3",
                     "SHF", "LEA", "ISETP", "SEL", "IMNMX", "IABS", "POPC", "BREV", "PRMT",
                     "NOP", "EXIT", "LDG", "STG", "LDS", "STS", "BAR", "DEPBAR", "LDGDEPBAR",
                     "MEMBAR", "WARPSYNC"}))
    return !(op == "IMAD" && ins.has_modifier("X")) && !(op == "ISETP" && ins.has_modifier("EX"));
  return false;
}

class Machine {
 public:
  Machine(const Kernel& k, const BufferMap& inputs, const InterpretOptions& opts)
      : k_(k), opts_(opts) {
    st_.global = inputs;
    st_.pred[Reg::kPT] = true;
    st_.upred[Reg::kPT] = true;
  }

  void run() {
    for (idx_ = 0; idx_ < k_.size(); ++idx_) {
      const Instruction& ins = k_[idx_];
      if (const auto& p = ins.predicate()) {
        if (read_pred(p->reg) == p->negated) continue;
      }
      if (ins.opcode() == "EXIT") return;
      execute(ins);
    }
  }

  MachineState& state() { return st_; }

 private:
  // --- register access --------------------------------------------------
  std::uint32_t read_reg(const Reg& r) {
    if (r.is_constant()) return 0;
    if (r.file == RegFile::Gpr) {
      if (opts_.strict && !st_.gpr_valid[r.index]) throw UninitializedRead(idx_, r);
      return st_.gpr[r.index];
    }
    if (r.file == RegFile::Uniform) {
      if (opts_.strict && !st_.ugpr_valid[r.index]) throw UninitializedRead(idx_, r);
      return st_.ugpr[r.index];
    }
    throw UnsupportedInstruction(k_[idx_].mnemonic());
  }

  void write_reg(const Reg& r, std::uint32_t v) {
    if (r.is_constant()) return;
    if (r.file == RegFile::Gpr) {
      st_.gpr[r.index] = v;
      st_.gpr_valid.set(r.index);
    } else if (r.file == RegFile::Uniform) {
      st_.ugpr[r.index] = v;
      st_.ugpr_valid.set(r.index);
    } else {
      throw UnsupportedInstruction(k_[idx_].mnemonic());
    }
  }

  Reg next(const Reg& r, int k) const {
    if (r.is_constant()) return r;
    return Reg{r.file, static_cast<std::uint16_t>(r.index + k)};
  }

  bool read_pred(const Reg& r) const {
    return r.file == RegFile::UniformPredicate ? st_.upred[r.index] : st_.pred[r.index];
  }

  void write_pred(const Reg& r, bool v) {
    if (r.is_constant()) return;
    (r.file == RegFile::UniformPredicate ? st_.upred : st_.pred)[r.index] = v;
  }

  std::uint32_t cbank(int bank, std::int64_t offset) const {
    if (bank != 0 || offset < opts_.param_base) return 0;
    auto rel = static_cast<std::uint64_t>(offset - opts_.param_base);
    int arg = static_cast<int>(rel / 8);
    if (!st_.global.contains(arg)) return 0;
    std::uint64_t addr = buffer_address(arg);
    return rel % 8 < 4 ? static_cast<std::uint32_t>(addr) : static_cast<std::uint32_t>(addr >> 32);
  }

  // Value of a 32-bit source operand, modifiers applied.
  std::uint32_t value(const Operand& o, int word = 0) {
    std::uint32_t v = 0;
    switch (o.kind) {
      case OperandKind::Gpr:
      case OperandKind::Uniform: v = read_reg(next(*o.reg, word)); break;
      case OperandKind::Immediate:
        if (o.imm_is_float) v = std::bit_cast<std::uint32_t>(static_cast<float>(o.fimm));
        else if (word > 0) v = static_cast<std::int64_t>(o.imm) < 0 ? 0xffffffffU : 0U;
        else v = static_cast<std::uint32_t>(o.imm);
        break;
      case OperandKind::ConstBank:
        if (o.bank_reg) throw UnsupportedInstruction(k_[idx_].mnemonic());
        v = cbank(o.bank, o.bank_offset + 4 * word);
        break;
      case OperandKind::Special: v = 0; break;
      default: throw UnsupportedInstruction(k_[idx_].mnemonic());
    }
    if (o.absolute) v = static_cast<std::uint32_t>(std::abs(static_cast<std::int32_t>(v)));
    if (o.negate) v = 0U - v;
    if (o.invert) v = ~v;
    return v;
  }

  bool pred_value(const Operand& o) const {
    if (o.kind != OperandKind::Predicate) throw UnsupportedInstruction(k_[idx_].mnemonic());
    bool v = read_pred(*o.reg);
    return o.invert ? !v : v;
  }

  const Operand& operand(const Instruction& ins, std::size_t i) const {
    if (i >= ins.operands().size()) throw UnsupportedInstruction(ins.mnemonic());
    return ins.operands()[i];
  }

  void set_dest(const Instruction& ins, std::uint32_t v, int word = 0) {
    const Operand& d = operand(ins, 0);
    if (d.kind != OperandKind::Gpr && d.kind != OperandKind::Uniform)
      throw UnsupportedInstruction(ins.mnemonic());
    write_reg(next(*d.reg, word), v);
  }

  // --- memory -----------------------------------------------------------
  std::uint64_t address(const MemRef& m) {
    std::uint64_t a = 0;
    if (!m.base.is_constant()) {
      a = read_reg(m.base);
      if (m.wide) a |= static_cast<std::uint64_t>(read_reg(next(m.base, 1))) << 32;
    }
    if (m.uniform_offset && !m.uniform_offset->is_constant()) a += read_reg(*m.uniform_offset);
    return a + static_cast<std::uint64_t>(m.offset);
  }

  std::uint8_t* global_bytes(std::uint64_t addr, int width) {
    for (auto& [arg, buf] : st_.global) {
      std::uint64_t base = buffer_address(arg);
      if (addr >= base && addr + width <= base + buf.size()) return buf.data() + (addr - base);
    }
    throw OutOfBoundsAccess(idx_, addr);
  }

  std::uint8_t* shared_bytes(std::uint64_t addr, int width) {
    if (st_.shared.empty()) st_.shared.assign(opts_.shared_bytes, 0);
    if (addr + width > st_.shared.size()) throw OutOfBoundsAccess(idx_, addr);
    return st_.shared.data() + addr;
  }

  void load(const Instruction& ins, std::uint8_t* src) {
    int width = ins.access_width();
    if (width >= 4) {
      for (int w = 0; w < width / 4; ++w) {
        std::uint32_t v;
        std::memcpy(&v, src + 4 * w, 4);
        set_dest(ins, v, w);
      }
      return;
    }
    std::uint32_t v = 0;
    std::memcpy(&v, src, width);
    bool sign = ins.has_modifier("S8") || ins.has_modifier("S16");
    if (sign) {
      int shift = 32 - 8 * width;
      v = static_cast<std::uint32_t>(static_cast<std::int32_t>(v << shift) >> shift);
    }
    set_dest(ins, v);
  }

  void store(const Instruction& ins, std::uint8_t* dst, const Operand& data) {
    int width = ins.access_width();
    if (width >= 4) {
      for (int w = 0; w < width / 4; ++w) {
        std::uint32_t v = value(data, w);
        std::memcpy(dst + 4 * w, &v, 4);
      }
      return;
    }
    std::uint32_t v = value(data);
    std::memcpy(dst, &v, width);
  }

  // --- execution --------------------------------------------------------
  static bool compare(std::string_view cmp, std::uint32_t a, std::uint32_t b, bool is_unsigned) {
    auto sa = static_cast<std::int32_t>(a), sb = static_cast<std::int32_t>(b);
    if (cmp == "EQ") return a == b;
    if (cmp == "NE") return a != b;
    if (cmp == "LT") return is_unsigned ? a < b : sa < sb;
    if (cmp == "LE") return is_unsigned ? a <= b : sa <= sb;
    if (cmp == "GT") return is_unsigned ? a > b : sa > sb;
    if (cmp == "GE") return is_unsigned ? a >= b : sa >= sb;
    return false;
  }

  static bool combine(std::string_view op, bool a, bool b) {
    if (op == "OR") return a || b;
    if (op == "XOR") return a != b;
    return a && b;
  }

  void execute(const Instruction& ins) {
    std::string_view op = ins.opcode();
    const auto& ops = ins.operands();
    const bool u32 = ins.has_modifier("U32");

    if (op == "NOP" || ins.klass() == InstrClass::Barrier) return;

    if (op == "MOV" || op == "MOV32I" || op == "UMOV") {
      set_dest(ins, value(operand(ins, 1)));
    } else if (op == "ULDC") {
      int words = ins.has_modifier("64") ? 2 : 1;
      for (int w = 0; w < words; ++w) set_dest(ins, value(operand(ins, 1), w), w);
    } else if (op == "S2R") {
      set_dest(ins, 0);
    } else if (op == "CS2R") {
      const Operand& src = operand(ins, 1);
      if (src.raw != "SRZ") throw UnsupportedInstruction(ins.mnemonic());
      int words = ins.has_modifier("32") ? 1 : 2;
      for (int w = 0; w < words; ++w) set_dest(ins, 0, w);
    } else if (op == "IADD3") {
      exec_iadd3(ins);
    } else if (op == "IMAD") {
      exec_imad(ins);
    } else if (op == "LOP3") {
      if (ops.size() < 5 || ops[0].kind != OperandKind::Gpr) throw UnsupportedInstruction(ins.mnemonic());
      std::uint32_t a = value(ops[1]), b = value(ops[2]), c = value(ops[3]);
      auto lut = static_cast<std::uint32_t>(value(ops[4]) & 0xff);
      std::uint32_t r = 0;
      for (int i = 0; i < 8; ++i) {
        if (!((lut >> i) & 1U)) continue;
        r |= ((i & 4) ? a : ~a) & ((i & 2) ? b : ~b) & ((i & 1) ? c : ~c);
      }
      set_dest(ins, r);
    } else if (op == "SHF") {
      exec_shf(ins);
    } else if (op == "LEA") {
      exec_lea(ins);
    } else if (op == "ISETP") {
      if (ops.size() != 5 || ins.num_dests() != 2) throw UnsupportedInstruction(ins.mnemonic());
      std::string_view cmp = "EQ";
      for (auto c : {"LT", "LE", "GT", "GE", "EQ", "NE"})
        if (ins.has_modifier(c)) cmp = c;
      std::string_view comb = "AND";
      for (auto c : {"AND", "OR", "XOR"})
        if (ins.has_modifier(c)) comb = c;
      bool r = compare(cmp, value(ops[2]), value(ops[3]), u32);
      bool c = pred_value(ops[4]);
      write_pred(*ops[0].reg, combine(comb, r, c));
      write_pred(*ops[1].reg, combine(comb, !r, c));
    } else if (op == "SEL") {
      set_dest(ins, pred_value(operand(ins, 3)) ? value(ops[1]) : value(ops[2]));
    } else if (op == "IMNMX") {
      std::uint32_t a = value(operand(ins, 1)), b = value(operand(ins, 2));
      bool take_min = pred_value(operand(ins, 3));
      bool a_less = u32 ? a < b : static_cast<std::int32_t>(a) < static_cast<std::int32_t>(b);
      set_dest(ins, take_min == a_less ? a : b);
    } else if (op == "IABS") {
      auto a = static_cast<std::int32_t>(value(operand(ins, 1)));
      set_dest(ins, a < 0 ? 0U - static_cast<std::uint32_t>(a) : static_cast<std::uint32_t>(a));
    } else if (op == "POPC") {
      set_dest(ins, static_cast<std::uint32_t>(std::popcount(value(operand(ins, 1)))));
    } else if (op == "BREV") {
      std::uint32_t a = value(operand(ins, 1)), r = 0;
      for (int i = 0; i < 32; ++i) r |= ((a >> i) & 1U) << (31 - i);
      set_dest(ins, r);
    } else if (op == "PRMT") {
      std::uint64_t src = value(operand(ins, 1)) |
                          (static_cast<std::uint64_t>(value(operand(ins, 3))) << 32);
      std::uint32_t sel = value(operand(ins, 2)), r = 0;
      for (int i = 0; i < 4; ++i) {
        std::uint32_t s = (sel >> (4 * i)) & 0xf;
        std::uint32_t byte = (src >> (8 * (s & 7))) & 0xff;
        if (s & 8) byte = (byte & 0x80) ? 0xff : 0;
        r |= byte << (8 * i);
      }
      set_dest(ins, r);
    } else if (op == "LDG") {
      const Operand& m = operand(ins, 1);
      if (m.kind != OperandKind::Memory) throw UnsupportedInstruction(ins.mnemonic());
      load(ins, global_bytes(address(m.mem), ins.access_width()));
    } else if (op == "STG") {
      const Operand& m = operand(ins, 0);
      if (m.kind != OperandKind::Memory) throw UnsupportedInstruction(ins.mnemonic());
      store(ins, global_bytes(address(m.mem), ins.access_width()), operand(ins, 1));
    } else if (op == "LDS") {
      const Operand& m = operand(ins, 1);
      if (m.kind != OperandKind::Memory) throw UnsupportedInstruction(ins.mnemonic());
      load(ins, shared_bytes(address(m.mem), ins.access_width()));
    } else if (op == "STS") {
      const Operand& m = operand(ins, 0);
      if (m.kind != OperandKind::Memory) throw UnsupportedInstruction(ins.mnemonic());
      store(ins, shared_bytes(address(m.mem), ins.access_width()), operand(ins, 1));
    } else {
      throw UnsupportedInstruction(ins.mnemonic());
    }
  }

  void exec_iadd3(const Instruction& ins) {
    const auto& ops = ins.operands();
    const std::size_t nd = ins.num_dests();  // R, then optional carry-out predicates
    if (ops.size() < nd + 3) throw UnsupportedInstruction(ins.mnemonic());
    std::uint64_t sum = 0;
    bool negated = false;
    for (std::size_t i = nd; i < nd + 3; ++i) {
      sum += value(ops[i]);
      negated |= ops[i].negate || ops[i].invert;
    }
    if (ins.has_modifier("X")) {
      for (std::size_t i = nd + 3; i < ops.size(); ++i) sum += pred_value(ops[i]) ? 1 : 0;
    } else if (ops.size() != nd + 3) {
      throw UnsupportedInstruction(ins.mnemonic());
    }
    if (nd > 1) {
      if (negated) throw UnsupportedInstruction(ins.mnemonic());
      write_pred(*ops[1].reg, (sum >> 32) & 1U);
      if (nd > 2) write_pred(*ops[2].reg, (sum >> 33) & 1U);
    }
    set_dest(ins, static_cast<std::uint32_t>(sum));
  }

  void exec_imad(const Instruction& ins) {
    const auto& ops = ins.operands();
    if (ops.size() != 4 || ins.num_dests() != 1) throw UnsupportedInstruction(ins.mnemonic());
    const bool u32 = ins.has_modifier("U32");
    std::uint32_t a = value(ops[1]), b = value(ops[2]);
    if (ins.has_modifier("WIDE")) {
      std::uint64_t c = value(ops[3], 0) | (static_cast<std::uint64_t>(value(ops[3], 1)) << 32);
      std::uint64_t prod = u32 ? static_cast<std::uint64_t>(a) * b
                               : static_cast<std::uint64_t>(static_cast<std::int64_t>(static_cast<std::int32_t>(a)) *
                                                            static_cast<std::int32_t>(b));
      std::uint64_t r = prod + c;
      set_dest(ins, static_cast<std::uint32_t>(r), 0);
      set_dest(ins, static_cast<std::uint32_t>(r >> 32), 1);
    } else if (ins.has_modifier("HI")) {
      std::uint64_t prod = u32 ? static_cast<std::uint64_t>(a) * b
                               : static_cast<std::uint64_t>(static_cast<std::int64_t>(static_cast<std::int32_t>(a)) *
                                                            static_cast<std::int32_t>(b));
      set_dest(ins, static_cast<std::uint32_t>(prod >> 32) + value(ops[3]));
    } else {
      set_dest(ins, a * b + value(ops[3]));
    }
  }

  // SHF.{L,R}.{U32,S32,U64,S64}[.HI] d, lo, shift, hi: funnel shift of the
  // 64-bit value hi:lo, keeping the low word (or high word with .HI).
  void exec_shf(const Instruction& ins) {
    const auto& ops = ins.operands();
    if (ops.size() != 4) throw UnsupportedInstruction(ins.mnemonic());
    std::uint64_t v = value(ops[1]) | (static_cast<std::uint64_t>(value(ops[3])) << 32);
    std::uint32_t sh = value(ops[2]);
    const bool is64 = ins.has_modifier("U64") || ins.has_modifier("S64");
    sh = is64 ? (sh & 63U) : std::min<std::uint32_t>(sh, 32U);
    std::uint64_t r;
    if (ins.has_modifier("L")) {
      r = v << sh;
    } else if (ins.has_modifier("R")) {
      if (ins.has_modifier("S32") || ins.has_modifier("S64"))
        r = static_cast<std::uint64_t>(static_cast<std::int64_t>(v) >> sh);
      else
        r = v >> sh;
    } else {
      throw UnsupportedInstruction(ins.mnemonic());
    }
    set_dest(ins, static_cast<std::uint32_t>(ins.has_modifier("HI") ? r >> 32 : r));
  }

  // LEA d, [P,] a, b, s          d = (a << s) + b, P = carry out
  // LEA.HI[.X] d, a, b, c, s[, P] d = hi32((c:a) << s) + b (+ carry in)
  void exec_lea(const Instruction& ins) {
    const auto& ops = ins.operands();
    const std::size_t nd = ins.num_dests();
    if (ins.has_modifier("HI")) {
      if (nd != 1 || ops.size() < 5) throw UnsupportedInstruction(ins.mnemonic());
      std::uint64_t v = value(ops[1]) | (static_cast<std::uint64_t>(value(ops[3])) << 32);
      std::uint32_t sh = value(ops[4]) & 63U;
      std::uint64_t r = static_cast<std::uint32_t>((v << sh) >> 32);
      r += value(ops[2]);
      if (ins.has_modifier("X")) {
        if (ops.size() != 6) throw UnsupportedInstruction(ins.mnemonic());
        r += pred_value(ops[5]) ? 1 : 0;
      } else if (ops.size() != 5) {
        throw UnsupportedInstruction(ins.mnemonic());
      }
      set_dest(ins, static_cast<std::uint32_t>(r));
      return;
    }
    if (ops.size() != nd + 3 || ins.has_modifier("X")) throw UnsupportedInstruction(ins.mnemonic());
    std::uint32_t a = value(ops[nd]), b = value(ops[nd + 1]);
    std::uint32_t sh = value(ops[nd + 2]) & 31U;
    std::uint64_t sum = static_cast<std::uint64_t>(static_cast<std::uint32_t>(a << sh)) + b;
    if (nd > 1) write_pred(*ops[1].reg, (sum >> 32) & 1U);
    set_dest(ins, static_cast<std::uint32_t>(sum));
  }

  const Kernel& k_;
  InterpretOptions opts_;
  MachineState st_;
  std::size_t idx_ = 0;
};

}  // namespace

std::optional<std::string> find_unsupported(const Kernel& k) {
  for (std::size_t i = 0; i < k.size(); ++i)
    if (!supported(k[i])) return k[i].mnemonic();
  return std::nullopt;
}

std::vector<std::uint8_t> interpret(const Kernel& k, const BufferMap& inputs, int ret_ptr,
                                    const InterpretOptions& opts) {
  if (!inputs.contains(ret_ptr))
    throw std::invalid_argument("ret_ptr " + std::to_string(ret_ptr) + " names no buffer");
  if (auto m = find_unsupported(k)) throw UnsupportedInstruction(*m);
  Machine m(k, inputs, opts);
  m.run();
  return std::move(m.state().global.at(ret_ptr));
}

}  // namespace sassopt
