#include "sassopt/testing.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <cstring>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "sassopt/random.hpp"

namespace sassopt {

std::string_view to_string(ElementKind k) { return k == ElementKind::Int32 ? "int32" : "int8"; }

std::size_t element_size(ElementKind k) { return k == ElementKind::Int32 ? 4 : 1; }

void TestPlan::validate() const {
  if (sample_count < 1) throw std::invalid_argument("sample_count must be >= 1");
  bool found = false;
  for (std::size_t i = 0; i < buffers.size(); ++i) {
    const auto& b = buffers[i];
    if (b.arg < 0) throw std::invalid_argument("buffer argument index must be >= 0");
    for (std::size_t j = 0; j < i; ++j)
      if (buffers[j].arg == b.arg)
        throw std::invalid_argument("buffer " + std::to_string(b.arg) + " declared twice");
    if (b.range) {
      auto [lo, hi] = *b.range;
      std::int64_t min = b.kind == ElementKind::Int32 ? INT32_MIN : INT8_MIN;
      std::int64_t max = b.kind == ElementKind::Int32 ? UINT32_MAX : UINT8_MAX;
      if (lo > hi || lo < min || hi > max)
        throw std::invalid_argument("bad value range for buffer " + std::to_string(b.arg));
    }
    found |= b.arg == ret_ptr;
  }
  if (!found) throw std::invalid_argument("ret_ptr " + std::to_string(ret_ptr) + " names no declared buffer");
}

const BufferSpec& TestPlan::output() const {
  for (const auto& b : buffers)
    if (b.arg == ret_ptr) return b;
  throw std::invalid_argument("ret_ptr names no declared buffer");
}

std::string TestVerdict::to_json() const {
  nlohmann::ordered_json j;
  j["passed"] = passed;
  j["failed"] = failed;
  if (first_failure) {
    nlohmann::ordered_json f;
    f["sample"] = first_failure->sample;
    f["cell"] = first_failure->cell ? nlohmann::ordered_json(*first_failure->cell)
                                    : nlohmann::ordered_json(nullptr);
    f["expected"] = first_failure->expected;
    f["actual"] = first_failure->actual;
    if (!first_failure->detail.empty()) f["detail"] = first_failure->detail;
    j["first_failure"] = std::move(f);
  } else {
    j["first_failure"] = nullptr;
  }
  j["inconclusive"] = inconclusive;
  if (inconclusive) j["reason"] = inconclusive_reason;
  return j.dump(2);
}

BufferMap generate_inputs(const TestPlan& plan, std::uint64_t sample) {
  Rng rng = derived_rng(plan.seed, sample);
  BufferMap out;
  for (const auto& spec : plan.buffers) {
    const std::size_t esz = element_size(spec.kind);
    std::vector<std::uint8_t> bytes(spec.length * esz);
    for (std::size_t i = 0; i < spec.length; ++i) {
      std::uint64_t v;
      if (spec.range) {
        auto [lo, hi] = *spec.range;
        v = static_cast<std::uint64_t>(lo) + uniform_index(rng, static_cast<std::uint64_t>(hi - lo) + 1);
      } else {
        v = rng();
      }
      if (spec.kind == ElementKind::Int32) {
        std::uint32_t w = static_cast<std::uint32_t>(v);
        std::memcpy(&bytes[i * 4], &w, 4);
      } else {
        bytes[i] = static_cast<std::uint8_t>(v);
      }
    }
    out[spec.arg] = std::move(bytes);
  }
  return out;
}

namespace {

std::int64_t element_at(const std::vector<std::uint8_t>& buf, ElementKind kind, std::size_t i) {
  if (kind == ElementKind::Int8) return static_cast<std::int8_t>(buf[i]);
  std::int32_t v;
  std::memcpy(&v, &buf[i * 4], 4);
  return v;
}

struct Inconclusive {
  std::string reason;
};

std::vector<std::uint8_t> reference_output(const Kernel& ref, const BufferMap& in, const TestPlan& plan) {
  try {
    return interpret(ref, in, plan.ret_ptr, plan.interp);
  } catch (const std::exception& e) {
    throw Inconclusive{std::string("reference: ") + e.what()};
  }
}

// nullopt: pass.
std::optional<Mismatch> compare_sample(const std::vector<std::uint8_t>& want, const Kernel& mut,
                                       const BufferMap& in, const TestPlan& plan, std::uint64_t s) {
  std::vector<std::uint8_t> got;
  try {
    got = interpret(mut, in, plan.ret_ptr, plan.interp);
  } catch (const UnsupportedInstruction& e) {
    throw Inconclusive{std::string("mutant: ") + e.what()};
  } catch (const std::runtime_error& e) {
    return Mismatch{s, std::nullopt, 0, 0, e.what()};
  }
  const ElementKind kind = plan.output().kind;
  const std::size_t n = want.size() / element_size(kind);
  for (std::size_t i = 0; i < n; ++i) {
    auto a = element_at(want, kind, i), b = element_at(got, kind, i);
    if (a != b) return Mismatch{s, i, a, b, {}};
  }
  return std::nullopt;
}

std::optional<Mismatch> one_sample(const Kernel& ref, const Kernel& mut, const TestPlan& plan,
                                   std::uint64_t s) {
  BufferMap in = generate_inputs(plan, s);
  return compare_sample(reference_output(ref, in, plan), mut, in, plan, s);
}

unsigned worker_count(const TestPlan& plan, std::uint64_t count) {
  return std::max(1u, std::min<unsigned>(plan.threads, static_cast<unsigned>(std::max<std::uint64_t>(1, count / 64))));
}

struct Chunk {
  std::uint64_t passed = 0;
  std::uint64_t failed = 0;
  std::optional<Mismatch> first_failure;
  std::optional<std::string> inconclusive;
};

Chunk run_chunk(const Kernel& ref, const Kernel& mut, const TestPlan& plan, std::uint64_t first,
                std::uint64_t count) {
  Chunk c;
  for (std::uint64_t s = first; s < first + count; ++s) {
    try {
      auto m = one_sample(ref, mut, plan, s);
      if (!m) {
        ++c.passed;
        continue;
      }
      ++c.failed;
      if (!c.first_failure) c.first_failure = std::move(m);
      if (plan.fail_fast) break;
    } catch (const Inconclusive& e) {
      c.inconclusive = e.reason;
      break;
    }
  }
  return c;
}

}  // namespace

TestVerdict run_tests_range(const Kernel& reference, const Kernel& mutant, const TestPlan& plan,
                            std::uint64_t first, std::uint64_t count) {
  plan.validate();
  TestVerdict v;
  for (const Kernel* k : {&reference, &mutant}) {
    if (auto m = find_unsupported(*k)) {
      v.inconclusive = true;
      v.inconclusive_reason = std::string(k == &reference ? "reference" : "mutant") +
                              ": instruction not supported by the interpreter: " + *m;
      return v;
    }
  }

  const unsigned threads = worker_count(plan, count);
  std::vector<Chunk> chunks(threads);
  if (threads == 1) {
    chunks[0] = run_chunk(reference, mutant, plan, first, count);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t per = count / threads, extra = count % threads;
    std::uint64_t start = first;
    for (unsigned t = 0; t < threads; ++t) {
      std::uint64_t len = per + (t < extra ? 1 : 0);
      pool.emplace_back([&, t, start, len] { chunks[t] = run_chunk(reference, mutant, plan, start, len); });
      start += len;
    }
    for (auto& th : pool) th.join();
  }

  // Chunks are in sample order; stop merging where a sequential run would.
  for (auto& c : chunks) {
    v.passed += c.passed;
    v.failed += c.failed;
    if (c.first_failure && !v.first_failure) v.first_failure = std::move(c.first_failure);
    if (c.inconclusive) {
      v.inconclusive = true;
      v.inconclusive_reason = *c.inconclusive;
      break;
    }
    if (plan.fail_fast && v.failed) break;
  }
  return v;
}

TestVerdict run_tests(const Kernel& reference, const Kernel& mutant, const TestPlan& plan) {
  return run_tests_range(reference, mutant, plan, 0, plan.sample_count);
}

std::vector<std::pair<std::uint64_t, std::size_t>> pass_curve(
    const Kernel& reference, const std::vector<Kernel>& mutants,
    const std::vector<std::uint64_t>& budgets, const TestPlan& plan) {
  if (!std::is_sorted(budgets.begin(), budgets.end()))
    throw std::invalid_argument("budgets must be ascending");
  const std::uint64_t max_budget = budgets.empty() ? 0 : budgets.back();
  plan.validate();

  // Index of each mutant's first failing sample; max_budget if none.
  std::vector<std::atomic<std::uint64_t>> first_fail(mutants.size());
  for (auto& f : first_fail) f = max_budget;
  if (max_budget > 0) {
    for (std::size_t i = 0; i <= mutants.size(); ++i) {
      const Kernel& k = i == mutants.size() ? reference : mutants[i];
      if (auto m = find_unsupported(k))
        throw std::invalid_argument("pass_curve: instruction not supported by the interpreter: " + *m);
    }
  }

  // Samples outer, mutants inner: each reference output is computed once.
  std::optional<std::string> inconclusive;
  std::mutex mu;
  auto run_range = [&](std::uint64_t first, std::uint64_t count) {
    try {
      for (std::uint64_t s = first; s < first + count; ++s) {
        BufferMap in;
        std::optional<std::vector<std::uint8_t>> want;
        for (std::size_t i = 0; i < mutants.size(); ++i) {
          if (first_fail[i].load() <= s) continue;
          if (!want) {
            in = generate_inputs(plan, s);
            want = reference_output(reference, in, plan);
          }
          if (!compare_sample(*want, mutants[i], in, plan, s)) continue;
          std::uint64_t cur = first_fail[i].load();
          while (s < cur && !first_fail[i].compare_exchange_weak(cur, s)) {
          }
        }
      }
    } catch (const Inconclusive& e) {
      std::lock_guard lock(mu);
      if (!inconclusive) inconclusive = e.reason;
    }
  };
  const unsigned threads = worker_count(plan, max_budget);
  if (threads == 1) {
    run_range(0, max_budget);
  } else {
    std::vector<std::thread> pool;
    // interleaved blocks keep early samples spread over all workers
    constexpr std::uint64_t kBlock = 256;
    std::atomic<std::uint64_t> next{0};
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::uint64_t b; (b = next.fetch_add(kBlock)) < max_budget;)
          run_range(b, std::min(kBlock, max_budget - b));
      });
    for (auto& th : pool) th.join();
  }
  if (inconclusive) throw std::invalid_argument("pass_curve: " + *inconclusive);

  std::vector<std::pair<std::uint64_t, std::size_t>> curve;
  for (std::uint64_t b : budgets) {
    std::size_t n = 0;
    for (const auto& ff : first_fail) n += ff.load() >= b;
    curve.emplace_back(b, n);
  }
  return curve;
}

}  // namespace sassopt
