#include <gtest/gtest.h>

#include <chrono>
#include <fstream>
#include <future>

#include "sassopt/backend.hpp"
#include "sassopt/text.hpp"
#include "support.hpp"

using namespace sassopt;
namespace fs = std::filesystem;

namespace {

class ScratchDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sassopt-backend-" + std::to_string(::getpid()) + "-" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path script(const std::string& name, const std::string& body) {
    fs::path p = dir_ / name;
    std::ofstream(p) << "#!/bin/sh\n" << body;
    fs::permissions(p, fs::perms::owner_all);
    return p;
  }

  BackendDescriptor external(const fs::path& adapter) {
    BackendDescriptor d;
    d.kind = BackendDescriptor::Kind::External;
    d.command = shell_quote(adapter.string()) + " {schedule_file}";
    d.timeout_seconds = 10;
    d.working_directory = dir_;
    return d;
  }

  fs::path dir_;
};

Kernel sample_kernel() { return test::load_kernel(test::corpus_dir() / "vadd2.sass"); }

}  // namespace

TEST(ParseTime, AcceptsExactlyOneProtocolLine) {
  EXPECT_DOUBLE_EQ(parse_time_ms("{\"time_ms\": 1.5}\n"), 1.5);
  EXPECT_DOUBLE_EQ(parse_time_ms("compiling...\n{\"time_ms\": 12}\ndone\n"), 12.0);
  EXPECT_DOUBLE_EQ(parse_time_ms("{\"time_ms\": 2.5e-1}"), 0.25);
  EXPECT_DOUBLE_EQ(parse_time_ms("{\"time_ms\": 3.0}\r\n"), 3.0);
}

TEST(ParseTime, RejectsEverythingElse) {
  for (const char* bad : {"", "1.5\n", "{\"time_ms\": abc}\n", "{\"time_ms\": -1}\n", "{\"time\": 1.0}\n",
                          "{\"time_ms\": 1.0}\n{\"time_ms\": 2.0}\n", " {\"time_ms\": 1.0}\n",
                          "{\"time_ms\":1.0}\n"}) {
    EXPECT_THROW(parse_time_ms(bad), MeasurementFailed) << bad;
  }
}

TEST(Median, OddAndEven) {
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2);
  EXPECT_DOUBLE_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_DOUBLE_EQ(median({7}), 7);
}

TEST(RunCommand, CapturesStdoutAndStatus) {
  auto r = run_command("echo hello; exit 3", 5);
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_FALSE(r.timed_out);
  EXPECT_EQ(r.stdout_text, "hello\n");
}

TEST(RunCommand, StdinIsClosed) {
  auto r = run_command("cat; echo end", 5);
  EXPECT_EQ(r.stdout_text, "end\n");
}

TEST(RunCommand, TimeoutKillsProcessGroup) {
  auto start = std::chrono::steady_clock::now();
  auto r = run_command("sleep 20 & sleep 20; echo never", 0.3);
  auto took = std::chrono::steady_clock::now() - start;
  EXPECT_TRUE(r.timed_out);
  EXPECT_LT(took, std::chrono::seconds(5));
}

TEST(ShellQuote, RoundTripsAwkwardStrings) {
  for (std::string s : {"plain", "a b", "it's", "$(rm -rf /)", "back\\slash", "\"q\"", ""}) {
    auto r = run_command("printf %s " + shell_quote(s), 5);
    EXPECT_EQ(r.stdout_text, s);
  }
}

TEST(Descriptor, Validation) {
  BackendDescriptor d;
  EXPECT_NO_THROW(d.validate());
  d.kind = BackendDescriptor::Kind::External;
  d.command = "./adapter";
  EXPECT_THROW(d.validate(), std::invalid_argument);
  d.command = "./adapter {schedule_file}";
  EXPECT_NO_THROW(d.validate());
  d.timeout_seconds = 0;
  EXPECT_THROW(d.validate(), std::invalid_argument);
}

TEST(SimulatorBackend, MatchesSimulator) {
  Kernel k = sample_kernel();
  SimulatorBackend b;
  auto s = b.measure(k, 5);
  EXPECT_EQ(s.unit, TimeUnit::Cycles);
  EXPECT_EQ(s.time, static_cast<double>(simulate(k, MachineConfig{}).total_cycles));
  EXPECT_EQ(s.reps, 1);
  EXPECT_TRUE(b.concurrency_safe());
  EXPECT_EQ(b.name(), "sim");
  MachineConfig slow;
  slow.global_mem_latency = 800;
  EXPECT_GT(measure(k, BackendDescriptor{}, 3, slow).time, s.time);
}

TEST_F(ScratchDir, ExternalStubReportsTime) {
  auto d = external(script("stub.sh", "echo '{\"time_ms\": 1.5}'\n"));
  auto b = make_backend(d);
  EXPECT_EQ(b->name(), "external");
  EXPECT_FALSE(b->concurrency_safe());
  auto s = b->measure(sample_kernel(), 3);
  EXPECT_DOUBLE_EQ(s.time, 1.5);
  EXPECT_EQ(s.unit, TimeUnit::Milliseconds);
  EXPECT_EQ(s.reps, 3);
  EXPECT_EQ(s.raw.size(), 3u);
}

TEST_F(ScratchDir, ExternalTakesMedianOverReps) {
  auto counter = dir_ / "n";
  auto d = external(script("count.sh",
                           "n=$(cat " + shell_quote(counter.string()) + " 2>/dev/null || echo 0)\n"
                           "n=$((n+1)); echo $n > " + shell_quote(counter.string()) + "\n"
                           "case $n in 1) t=9;; 2) t=1;; 3) t=4;; 4) t=100;; *) t=2;; esac\n"
                           "echo \"{\\\"time_ms\\\": $t}\"\n"));
  auto s = measure(sample_kernel(), d, 5);
  EXPECT_EQ(s.raw, (std::vector<double>{9, 1, 4, 100, 2}));
  EXPECT_DOUBLE_EQ(s.time, 4);
}

TEST_F(ScratchDir, ExternalSeesSerializedSchedule) {
  auto copy = dir_ / "seen.sass";
  auto d = external(script("copy.sh", "cp \"$1\" " + shell_quote(copy.string()) + "\necho '{\"time_ms\": 2}'\n"));
  Kernel k = sample_kernel().with_swapped(4);
  measure(k, d, 1);
  EXPECT_EQ(test::slurp(copy), serialize_kernel(k));
}

TEST_F(ScratchDir, ExternalCannotMutateKernel) {
  auto d = external(script("vandal.sh", "echo 'EXIT ;' > \"$1\"\necho '{\"time_ms\": 2}'\n"));
  Kernel k = sample_kernel();
  std::string before = serialize_kernel(k);
  measure(k, d, 3);
  EXPECT_EQ(serialize_kernel(k), before);
  EXPECT_EQ(serialize_kernel(sample_kernel()), before);
}

TEST_F(ScratchDir, ExternalFailures) {
  Kernel k = sample_kernel();
  EXPECT_THROW(measure(k, external(script("bad.sh", "echo 'time: 3'\n")), 1), MeasurementFailed);
  EXPECT_THROW(measure(k, external(script("exit.sh", "echo '{\"time_ms\": 1}'\nexit 2\n")), 1), MeasurementFailed);
  auto slow = external(script("slow.sh", "sleep 30\necho '{\"time_ms\": 1}'\n"));
  slow.timeout_seconds = 0.3;
  auto start = std::chrono::steady_clock::now();
  EXPECT_THROW(measure(k, slow, 1), MeasurementFailed);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
}

TEST_F(ScratchDir, ExternalRemovesScheduleFiles) {
  auto d = external(script("stub.sh", "echo '{\"time_ms\": 1}'\n"));
  measure(sample_kernel(), d, 2);
  EXPECT_THROW(measure(sample_kernel(), external(script("x.sh", "exit 1\n")), 1), MeasurementFailed);
  for (const auto& e : fs::directory_iterator(dir_)) EXPECT_NE(e.path().extension(), ".sass") << e.path();
}

TEST_F(ScratchDir, NonConcurrentBackendSerializesCalls) {
  auto log = dir_ / "log";
  auto d = external(script("lock.sh", "echo start >> " + shell_quote(log.string()) +
                                          "\nsleep 0.05\necho end >> " + shell_quote(log.string()) +
                                          "\necho '{\"time_ms\": 1}'\n"));
  auto b = make_backend(d);
  Kernel k = sample_kernel();
  std::vector<std::future<void>> fs;
  for (int i = 0; i < 4; ++i) fs.push_back(std::async(std::launch::async, [&] { b->measure(k, 1); }));
  for (auto& f : fs) f.get();
  std::ifstream in(log);
  std::string line;
  int i = 0;
  while (std::getline(in, line)) EXPECT_EQ(line, i++ % 2 == 0 ? "start" : "end");
  EXPECT_EQ(i, 8);
}
