#include <gtest/gtest.h>

#include <bit>
#include <cstring>

#include "sassopt/machine.hpp"
#include "sassopt/testing.hpp"
#include "support.hpp"

using namespace sassopt;

namespace {

std::vector<std::uint32_t> words(const std::vector<std::uint8_t>& bytes) {
  std::vector<std::uint32_t> out(bytes.size() / 4);
  std::memcpy(out.data(), bytes.data(), out.size() * 4);
  return out;
}

std::vector<std::uint8_t> bytes_of(const std::vector<std::uint32_t>& w) {
  std::vector<std::uint8_t> out(w.size() * 4);
  std::memcpy(out.data(), w.data(), out.size());
  return out;
}

const char* kStore42 =
    "MOV R2, c[0x0][0x160] ;\n"
    "MOV R3, c[0x0][0x164] ;\n"
    "MOV R0, 0x2a ;\n"
    "STG.E [R2.64], R0 ;\n"
    "EXIT ;\n";

}  // namespace

TEST(Interpret, StoresImmediate) {
  auto out = interpret(test::parse_or_die(kStore42), {{0, std::vector<std::uint8_t>(4, 0xff)}}, 0);
  EXPECT_EQ(words(out), (std::vector<std::uint32_t>{42}));
}

TEST(Interpret, BufferAddressLayout) {
  EXPECT_EQ(buffer_address(0), 0x7f0000000000ULL);
  EXPECT_EQ(buffer_address(3), 0x7f0000000000ULL + 3 * (1ULL << 32));
}

TEST(Interpret, OutOfBoundsThrows) {
  auto k = test::parse_or_die(
      "MOV R2, c[0x0][0x160] ;\nMOV R3, c[0x0][0x164] ;\nMOV R0, 0x1 ;\nSTG.E [R2.64+0x4], R0 ;\nEXIT ;\n");
  EXPECT_THROW(interpret(k, {{0, std::vector<std::uint8_t>(4)}}, 0), OutOfBoundsAccess);
}

TEST(Interpret, UninitializedReadIsStrict) {
  auto k = test::parse_or_die(
      "MOV R2, c[0x0][0x160] ;\nMOV R3, c[0x0][0x164] ;\nSTG.E [R2.64], R7 ;\nEXIT ;\n");
  BufferMap in{{0, std::vector<std::uint8_t>(4, 9)}};
  EXPECT_THROW(interpret(k, in, 0), UninitializedRead);
  InterpretOptions lax;
  lax.strict = false;
  EXPECT_EQ(words(interpret(k, in, 0, lax)), (std::vector<std::uint32_t>{0}));
}

TEST(Interpret, UnsupportedInstruction) {
  auto k = test::parse_or_die("HMMA.16816.F32 R4, R8, R12, R4 ;\nEXIT ;\n");
  EXPECT_EQ(find_unsupported(k), "HMMA.16816.F32");
  EXPECT_THROW(interpret(k, {{0, {}}}, 0), UnsupportedInstruction);
  EXPECT_FALSE(find_unsupported(test::parse_or_die(kStore42)));
}

TEST(Interpret, MissingReturnBuffer) {
  EXPECT_THROW(interpret(test::parse_or_die(kStore42), {{0, std::vector<std::uint8_t>(4)}}, 1),
               std::invalid_argument);
}

TEST(Interpret, PredicatedOffSkips) {
  auto k = test::parse_or_die(
      "MOV R2, c[0x0][0x160] ;\nMOV R3, c[0x0][0x164] ;\nMOV R0, 0x5 ;\n"
      "ISETP.NE.AND P0, PT, R0, 0x5, PT ;\n@P0 MOV R0, 0x7 ;\n@!P0 IADD3 R0, R0, 0x1, RZ ;\n"
      "STG.E [R2.64], R0 ;\nEXIT ;\n");
  EXPECT_EQ(words(interpret(k, {{0, std::vector<std::uint8_t>(4)}}, 0)), (std::vector<std::uint32_t>{6}));
}

TEST(Interpret, IgnoresControlCodes) {
  for (const auto& c : test::interpretable_corpus()) {
    std::vector<Instruction> stripped;
    for (std::size_t i = 0; i < c.kernel.size(); ++i) {
      const auto& in = c.kernel[i];
      stripped.emplace_back(ControlCode(0, std::nullopt, std::nullopt, true, 15), in.predicate(), in.mnemonic(),
                            in.operands());
    }
    Kernel s = Kernel::from_instructions(std::move(stripped));
    for (std::uint64_t n = 0; n < 20; ++n) {
      auto in = generate_inputs(c.plan, n);
      EXPECT_EQ(interpret(c.kernel, in, c.plan.ret_ptr), interpret(s, in, c.plan.ret_ptr)) << c.name;
    }
  }
}

TEST(Interpret, CorpusSemantics) {
  auto corpus = test::interpretable_corpus();
  ASSERT_EQ(corpus.size(), 4u);
  for (const auto& c : corpus) {
    for (std::uint64_t n = 0; n < 200; ++n) {
      BufferMap in = generate_inputs(c.plan, n);
      auto out = interpret(c.kernel, in, c.plan.ret_ptr);
      if (c.name == "vadd2") {
        auto a = words(in.at(0)), b = words(in.at(1));
        EXPECT_EQ(words(out), (std::vector<std::uint32_t>{a[0] + b[0], a[1] + b[1]}));
      } else if (c.name == "shared_stage") {
        auto a = words(in.at(0));
        EXPECT_EQ(words(out), (std::vector<std::uint32_t>{a[1] * 3 + a[0]}));
      } else if (c.name == "bitmix") {
        auto x = words(in.at(0));
        std::uint32_t r8 = x[0] ^ x[1] ^ x[2];
        std::uint32_t r9 = x[3] >> 3;
        std::uint32_t r10 = r8 * 5 + r9;
        bool p0 = static_cast<std::int32_t>(x[0]) >= static_cast<std::int32_t>(x[1]);
        std::uint32_t r13 = ((p0 ? x[2] : x[3]) << 2) + r9 + (p0 ? 0 : 1);
        std::uint32_t r17 = std::rotl(x[0], 16);
        std::uint32_t r18 = static_cast<std::uint32_t>(
            std::max(static_cast<std::int32_t>(r17), static_cast<std::int32_t>(r10)));
        EXPECT_EQ(words(out), (std::vector<std::uint32_t>{r10, static_cast<std::uint32_t>(std::popcount(r10)), r13, r18}));
      } else if (c.name == "two_blocks") {
        const auto& b = in.at(0);
        std::int32_t u = b[0];
        std::int32_t s = static_cast<std::int8_t>(b[1]);
        std::uint32_t h = b[2] | (b[3] << 8);
        std::uint32_t rev = 0;
        for (int i = 0; i < 32; ++i)
          if (h >> i & 1) rev |= 1U << (31 - i);
        std::vector<std::uint8_t> want{static_cast<std::uint8_t>(u + s + 7 * s),
                                       static_cast<std::uint8_t>(s < 0 ? -s : s),
                                       static_cast<std::uint8_t>(rev >> 24)};
        EXPECT_EQ(out, want);
      } else {
        ADD_FAILURE() << "no oracle for " << c.name;
      }
    }
  }
}

TEST(Interpret, RandomProgramsMatchReference) {
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    auto p = test::random_program(seed, 100);
    Kernel k = test::parse_or_die(p.text);
    ASSERT_FALSE(find_unsupported(k)) << p.text;
    auto plan = p.plan();
    plan.seed = seed;
    for (std::uint64_t n = 0; n < 8; ++n) {
      BufferMap in = generate_inputs(plan, n);
      auto expect = test::reference_evaluate(p, words(in.at(0)));
      auto got = words(interpret(k, in, plan.ret_ptr));
      ASSERT_EQ(got, expect) << "seed " << seed << " sample " << n << "\n" << p.text;
    }
  }
}

TEST(Interpret, ShortProgramsWithHandPickedInputs) {
  for (std::uint64_t seed = 1000; seed < 1300; ++seed) {
    auto p = test::random_program(seed, 12);
    Kernel k = test::parse_or_die(p.text);
    for (std::uint32_t fill : {0u, 1u, 0x80000000u, 0xffffffffu, 0x7fffffffu}) {
      std::vector<std::uint32_t> in(test::RandomProgram::kInputs, fill);
      in[1] ^= 0x00ff00ffu;
      BufferMap m{{0, bytes_of(in)}, {1, std::vector<std::uint8_t>(p.outputs.size() * 4)}};
      ASSERT_EQ(words(interpret(k, m, 1)), test::reference_evaluate(p, in)) << p.text;
    }
  }
}
