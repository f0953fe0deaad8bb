#pragma once

// In-memory model of native GPU instructions: control codes, operands,
// instructions and whole-kernel schedules.

#include <array>
#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sassopt {

inline constexpr int kNumBarriers = 6;
inline constexpr int kMaxStall = 15;

/// Scheduling metadata attached to every instruction, textually
/// `[B------:R-:W2:-:S02]`: wait mask, read barrier, write barrier, yield,
/// stall count.
class ControlCode {
 public:
  ControlCode() = default;

  /// Throws std::invalid_argument if any barrier index is outside
  /// 0..kNumBarriers-1 or the stall count is outside 0..kMaxStall.
  ControlCode(std::uint8_t wait_mask, std::optional<int> read_barrier,
              std::optional<int> write_barrier, bool yield, int stall_cycles);

  /// Parses the bracketed form. On failure returns nullopt and, when `error`
  /// is non-null, stores a description there.
  static std::optional<ControlCode> parse(std::string_view text,
                                          std::string* error = nullptr);

  std::string str() const;

  std::uint8_t wait_mask() const { return wait_mask_; }
  bool waits_on(int barrier) const { return (wait_mask_ >> barrier) & 1U; }
  std::optional<int> read_barrier() const { return read_barrier_; }
  std::optional<int> write_barrier() const { return write_barrier_; }
  bool yield() const { return yield_; }
  int stall_cycles() const { return stall_cycles_; }

  friend bool operator==(const ControlCode&, const ControlCode&) = default;

 private:
  std::uint8_t wait_mask_ = 0;
  std::optional<int> read_barrier_;
  std::optional<int> write_barrier_;
  bool yield_ = false;
  int stall_cycles_ = 0;
};

enum class RegFile : std::uint8_t { Gpr, Predicate, Uniform, UniformPredicate };

/// Identity of one architectural register.
struct Reg {
  RegFile file = RegFile::Gpr;
  std::uint16_t index = 0;

  static constexpr std::uint16_t kRZ = 255;
  static constexpr std::uint16_t kURZ = 63;
  static constexpr std::uint16_t kPT = 7;

  /// RZ/URZ/PT/UPT: reads are constant, writes are discarded.
  bool is_constant() const;
  std::string str() const;

  friend auto operator<=>(const Reg&, const Reg&) = default;
};

enum class OperandKind : std::uint8_t {
  Gpr,
  Predicate,
  Uniform,
  Special,
  Immediate,
  Memory,
  ConstBank,
  Descriptor,
  Target,  // branch target such as `(.L_x_3)
  Opaque,  // unrecognised text, kept verbatim
};

struct MemRef {
  Reg base{RegFile::Gpr, Reg::kRZ};
  bool wide = false;  // `.64` tag: base is a register pair
  std::optional<Reg> uniform_offset;
  std::optional<Reg> descriptor;  // desc[URx]
  std::int64_t offset = 0;
};

struct Operand {
  OperandKind kind = OperandKind::Opaque;
  std::string raw;

  std::optional<Reg> reg;  // register kinds
  bool negate = false;     // `-R1`
  bool invert = false;     // `!P0`, `~R1`
  bool absolute = false;   // `|R1|`
  std::string suffix;      // `.reuse`, `.H1`, ... after the register name

  std::uint64_t imm = 0;  // integer immediates (two's complement)
  bool imm_is_float = false;
  double fimm = 0.0;

  MemRef mem;  // Memory

  int bank = 0;  // ConstBank: c[bank][offset(+reg)]
  std::int64_t bank_offset = 0;
  std::optional<Reg> bank_reg;

  static Operand parse(std::string_view text);
};

enum class InstrClass : std::uint8_t {
  GlobalLoad,
  GlobalStore,
  GlobalAsyncCopy,
  SharedLoad,
  SharedStore,
  Compute,
  Barrier,
  ControlFlow,
  Other,
};
inline constexpr std::size_t kNumInstrClasses = 9;

std::string_view to_string(InstrClass c);
std::optional<InstrClass> instr_class_from_string(std::string_view s);

/// Total: unknown mnemonics map to Other.
InstrClass classify(std::string_view mnemonic);

bool is_global_memory(InstrClass c);

enum class MemSpace : std::uint8_t { Global, Shared, Local, Generic };

struct MemAccess {
  MemSpace space = MemSpace::Generic;
  MemRef ref;
  int width_bytes = 4;
  bool is_write = false;
};

struct Predicate {
  Reg reg;
  bool negated = false;
  friend bool operator==(const Predicate&, const Predicate&) = default;
};

/// One native instruction. Immutable once built; derived facts (class,
/// register and memory effects) are computed at construction.
class Instruction {
 public:
  Instruction(std::optional<ControlCode> control, std::optional<Predicate> predicate,
              std::string mnemonic, std::vector<Operand> operands,
              std::string source_text = {}, int source_line = 0);

  /// Builds from the canonical textual form (without source provenance).
  static Instruction from_text(std::string_view line);

  const std::optional<ControlCode>& control() const { return control_; }
  const std::optional<Predicate>& predicate() const { return predicate_; }
  const std::string& mnemonic() const { return mnemonic_; }
  std::string_view opcode() const;  // mnemonic up to the first dot
  bool has_modifier(std::string_view mod) const;
  const std::vector<Operand>& operands() const { return operands_; }
  std::size_t num_dests() const { return num_dests_; }
  std::span<const Operand> dests() const;
  std::span<const Operand> srcs() const;
  InstrClass klass() const { return klass_; }
  int source_line() const { return source_line_; }

  const std::vector<Reg>& reads() const { return reads_; }
  const std::vector<Reg>& writes() const { return writes_; }
  const std::vector<MemAccess>& memory() const { return memory_; }

  /// Text as it appeared in the source, or the canonical rendering.
  std::string text() const;
  /// Canonical rendering: `[ctrl] @P0 MNEMONIC a, b, c ;`.
  std::string canonical_text() const;
  /// Predicate, mnemonic and operands only.
  std::string body() const;

  /// Width in bytes of the data moved by a memory instruction.
  int access_width() const;
  /// Registers per data operand for wide forms (`.64`, `.128`, `.WIDE`).
  int data_register_count() const;

 private:
  void compute_effects();

  std::optional<ControlCode> control_;
  std::optional<Predicate> predicate_;
  std::string mnemonic_;
  std::vector<Operand> operands_;
  std::string source_text_;
  int source_line_ = 0;

  InstrClass klass_ = InstrClass::Other;
  std::size_t num_dests_ = 0;
  std::vector<Reg> reads_;
  std::vector<Reg> writes_;
  std::vector<MemAccess> memory_;
};

struct RegisterSets {
  std::vector<Reg> reads;
  std::vector<Reg> writes;
};

/// Register identities an instruction reads and writes. Sorted, unique,
/// constant registers (RZ, PT, ...) excluded.
RegisterSets reads_writes(const Instruction& instr);

/// An ordered instruction schedule plus the non-instruction text around it.
/// Immutable: transformations return new kernels sharing instruction storage.
class Kernel {
 public:
  using InstrPtr = std::shared_ptr<const Instruction>;

  Kernel() : gaps_(1) {}
  Kernel(std::string name, std::vector<InstrPtr> schedule,
         std::vector<std::vector<std::string>> gaps, bool trailing_newline = true);
  static Kernel from_instructions(std::vector<Instruction> instrs, std::string name = {});

  const std::string& name() const { return name_; }
  std::size_t size() const { return schedule_.size(); }
  bool empty() const { return schedule_.empty(); }
  const Instruction& operator[](std::size_t i) const { return *schedule_[i]; }
  const Instruction& at(std::size_t i) const { return *schedule_.at(i); }
  const std::vector<InstrPtr>& schedule() const { return schedule_; }

  /// Non-instruction lines in gap g, i.e. before schedule[g] (g == size()
  /// is after the last instruction).
  const std::vector<std::vector<std::string>>& interleaved_text() const { return gaps_; }
  const std::vector<std::size_t>& block_boundaries() const { return boundaries_; }
  /// True if an instruction may not be exchanged with its successor at
  /// `pos + 1` because a boundary sits between them.
  bool boundary_between(std::size_t pos) const;
  bool trailing_newline() const { return trailing_newline_; }

  Kernel with_swapped(std::size_t pos) const;
  Kernel with_order(const std::vector<std::size_t>& order) const;

  /// Structural equality: same instructions (by text) in the same order and
  /// identical interleaved text.
  friend bool operator==(const Kernel& a, const Kernel& b);

 private:
  void compute_boundaries();

  std::string name_;
  std::vector<InstrPtr> schedule_;
  std::vector<std::vector<std::string>> gaps_;
  std::vector<std::size_t> boundaries_;
  bool trailing_newline_ = true;
};

/// True for lines of the form `.ident:` or `ident:`.
bool is_label_line(std::string_view line);

}  // namespace sassopt
