#pragma once

// Shared fixtures for unit and acceptance tests: corpus access, kernel
// generators and independent oracles.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sassopt/ir.hpp"
#include "sassopt/machine.hpp"
#include "sassopt/perturb.hpp"
#include "sassopt/testing.hpp"

namespace sassopt::test {

std::filesystem::path corpus_dir();
std::vector<std::filesystem::path> corpus_files();  // every *.sass, sorted
std::string slurp(const std::filesystem::path& p);
Kernel parse_or_die(std::string_view text, std::string name = {});
Kernel load_kernel(const std::filesystem::path& p);

struct CorpusCase {
  std::string name;
  Kernel kernel;
  TestPlan plan;
};

/// Corpus kernels that come with a `<name>.conf` test plan.
std::vector<CorpusCase> interpretable_corpus();

// --- latency hiding --------------------------------------------------------

/// Four address MOVs, `m` independent IMADs with stall `stall`, then
/// LDG (W0), its consumer (waits on B0), the stores and EXIT. With
/// `hoists` = h the LDG sits before the last h IMADs instead of after them.
std::string latency_hiding_text(int m, int stall, int hoists);
TestPlan latency_hiding_plan();

/// Hand-derived total cycles for latency_hiding_text under the default
/// machine model. Independent of the simulator implementation.
std::int64_t latency_hiding_cycles(int m, int stall, int hoists);

// --- random straight-line integer programs ---------------------------------

enum class OpKind { Iadd3, Imad, Lop3, Shl, Shr, Min, Max, Popc, Brev, Iabs, Prmt, Lea, SetSel };

struct RefOp {
  OpKind kind;
  int dst;
  int a, b, c;         // source registers; -1 means "use imm"
  std::uint32_t imm;   // immediate / lut / shift / selector
  int cmp = 0;         // SetSel: 0 LT, 1 GE, 2 EQ, 3 NE
  int pred = 0;        // SetSel: predicate register used
};

struct RandomProgram {
  std::string text;
  std::vector<RefOp> ops;
  std::vector<int> outputs;  // registers stored to buffer 1, in order
  static constexpr int kInputs = 8;  // R8..R15 loaded from buffer 0
  TestPlan plan() const;
};

RandomProgram random_program(std::uint64_t seed, int length);

/// Evaluates the program's dataflow directly, without the interpreter.
std::vector<std::uint32_t> reference_evaluate(const RandomProgram& p, const std::vector<std::uint32_t>& in);

// --- search-quality fixtures -----------------------------------------------

/// Straight-line kernel of at most 40 instructions and at most 7 global
/// memory instructions, where each load sits right before its consumer.
Kernel synthetic_kernel(std::uint64_t seed);

/// Minimum simulated cycles over every schedule reachable by legal adjacent
/// moves of candidates, each staying within `window` slots of its original
/// position. Legality comes from pairwise conflict checks on two-instruction
/// kernels.
std::int64_t brute_force_optimum(const Kernel& k, int window, const MachineConfig& cfg,
                                 std::size_t* states_visited = nullptr);

// --- injected-mutant corpus ------------------------------------------------

struct MutantCorpus {
  Kernel reference;
  std::vector<Kernel> equivalent;
  std::vector<Kernel> violating;
  std::vector<int> violating_popcounts;
  TestPlan plan;
};

/// Reference of ten masked-select blocks. Violating mutant i moves block
/// i's late load below the SEL that consumes it, so the SEL reads a stale
/// value exactly when (x & mask_i) == 0. Equivalent mutants come from
/// random legal move sequences.
MutantCorpus mutant_corpus(std::uint64_t seed, std::size_t n_equivalent = 10);

/// Up to `steps` random legal moves from `k`; rejected moves are skipped.
Kernel random_legal_walk(const Kernel& k, Rng& rng, int steps);

}  // namespace sassopt::test
