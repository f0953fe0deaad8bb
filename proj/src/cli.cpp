#include "sassopt/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sassopt/anneal.hpp"
#include "sassopt/config.hpp"
#include "sassopt/depgraph.hpp"
#include "sassopt/diff.hpp"
#include "sassopt/store.hpp"
#include "sassopt/text.hpp"

namespace sassopt {

namespace {

struct ExitError {
  int code;
  std::string message;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string fmt_time(double t, TimeUnit u) {
  if (u == TimeUnit::Cycles) return fmt("%.0f", t) + " cycles";
  return fmt("%.6g", t) + " ms";
}

Kernel load_kernel(const std::string& path, std::ostream& err, std::string* text_out = nullptr) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ExitError{exit_code::kError, e.what()};
  }
  ParseResult r = parse_kernel(text, std::filesystem::path(path).filename().string());
  for (const auto& d : r.diagnostics) err << path << ":" << d.str() << "\n";
  if (!r.ok()) throw ExitError{exit_code::kParse, path + ": parse failed"};
  if (text_out) *text_out = normalize_newlines(text);
  return std::move(*r.kernel);
}

RunConfig base_config(const std::string& config_file) {
  try {
    return config_file.empty() ? apply_config({}) : load_config(config_file);
  } catch (const ConfigError& e) {
    throw ExitError{exit_code::kError, e.what()};
  }
}

struct OptimizeArgs {
  std::string input;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> chains;
  std::optional<std::string> backend;
  std::optional<std::uint64_t> tests;
  std::optional<int> reps;
  std::string emit_deps;
  bool unsafe_moves = false;
  bool fail_fast = false;
  std::string store = "sassopt-store";
};

struct ChainResult {
  std::uint64_t seed = 0;
  AnnealState state;
  std::optional<TestVerdict> verdict;
};

int cmd_optimize(const OptimizeArgs& a, std::ostream& out, std::ostream& err) {
  std::string text;
  Kernel k0 = load_kernel(a.input, err, &text);

  RunConfig cfg = base_config(a.config);
  if (a.seed) cfg.anneal.seed = *a.seed;
  if (a.chains) cfg.chains = *a.chains;
  if (a.reps) cfg.anneal.measure_reps = *a.reps;
  if (a.unsafe_moves) cfg.anneal.unsafe_moves = true;
  try {
    if (a.backend) cfg.backend = parse_backend_flag(*a.backend, cfg.backend);
    cfg.anneal.validate();
  } catch (const std::exception& e) {
    throw ExitError{exit_code::kError, e.what()};
  }
  if (cfg.chains < 1) throw ExitError{exit_code::kError, "--chains must be >= 1"};
  if (cfg.plan) {
    if (a.tests) cfg.plan->sample_count = *a.tests;
    if (a.fail_fast) cfg.plan->fail_fast = true;
  } else if (a.tests && *a.tests > 0) {
    throw ExitError{exit_code::kError, "--tests needs a test plan (test.* keys in --config)"};
  }

  if (!a.emit_deps.empty()) {
    std::ofstream dot(a.emit_deps);
    if (!dot) throw ExitError{exit_code::kError, "cannot write " + a.emit_deps};
    build(k0).write_dot(dot, k0);
  }

  if (candidates(k0).empty())
    throw ExitError{exit_code::kNoCandidates,
                    "no candidates: empty candidate set (the kernel has no global-memory load, store or "
                    "async-copy instructions)"};

  std::unique_ptr<CostBackend> backend;
  CostSample base;
  try {
    backend = make_backend(cfg.backend, cfg.machine);
    base = backend->measure(k0, cfg.anneal.measure_reps);
    if (!(base.time > 0)) throw InvalidBaseline(base.time);
  } catch (const std::invalid_argument& e) {
    throw ExitError{exit_code::kBackend, std::string("backend: ") + e.what()};
  } catch (const MeasurementFailed& e) {
    throw ExitError{exit_code::kBackend, std::string("baseline ") + e.what()};
  }

  StepTester step_tester;
  if (cfg.plan && cfg.anneal.tests_per_step > 0) {
    TestPlan step_plan = *cfg.plan;
    step_plan.sample_count = cfg.anneal.tests_per_step;
    step_plan.fail_fast = true;
    step_tester = [k0, step_plan](const Kernel& m) { return run_tests(k0, m, step_plan).failed == 0; };
  }

  auto run_chain = [&](std::uint64_t seed) {
    ChainResult r;
    r.seed = seed;
    AnnealConfig c = cfg.anneal;
    c.seed = seed;
    r.state = anneal(k0, *backend, step_tester, c);
    if (cfg.plan) r.verdict = run_tests(k0, r.state.best, *cfg.plan);
    return r;
  };

  std::vector<ChainResult> results;
  try {
    if (backend->concurrency_safe() && cfg.chains > 1) {
      std::vector<std::future<ChainResult>> fs;
      for (int i = 0; i < cfg.chains; ++i)
        fs.push_back(std::async(std::launch::async, run_chain, cfg.anneal.seed + static_cast<std::uint64_t>(i)));
      for (auto& f : fs) results.push_back(f.get());
    } else {
      for (int i = 0; i < cfg.chains; ++i) results.push_back(run_chain(cfg.anneal.seed + static_cast<std::uint64_t>(i)));
    }
  } catch (const MeasurementFailed& e) {
    throw ExitError{exit_code::kBackend, e.what()};
  } catch (const InvalidBaseline& e) {
    throw ExitError{exit_code::kBackend, e.what()};
  }

  ResultStore store(a.store, text);
  store.record_baseline(text, base.time, to_string(base.unit));

  const TimeUnit unit = base.unit;
  out << "kernel: " << a.input << " (" << store.input_hash() << ")\n";
  out << "backend: " << backend->name() << "\n";
  out << "baseline: " << fmt_time(base.time, unit) << "\n";
  out << "chains: " << cfg.chains << ", iterations per chain: " << cfg.anneal.iterations() << "\n";

  std::vector<std::pair<double, std::string>> passing;
  std::size_t n_pass = 0;
  bool any_abort = false;
  for (const auto& r : results) {
    const auto& st = r.state;
    std::string verdict_text = "untested";
    bool pass = true;
    if (r.verdict) {
      const auto& v = *r.verdict;
      if (v.inconclusive) {
        verdict_text = "tests inconclusive (" + v.inconclusive_reason + ")";
        pass = false;
      } else if (v.failed) {
        verdict_text = "tests FAILED (" + std::to_string(v.failed) + " of " + std::to_string(v.passed + v.failed) +
                       " samples)";
        pass = false;
      } else {
        verdict_text = "tests passed (" + std::to_string(v.passed) + " samples)";
      }
    }
    out << "chain seed=" << r.seed << ": best " << fmt_time(st.best_time, unit) << " ("
        << fmt("%+.2f", -100.0 * (base.time - st.best_time) / base.time) << "%), accepted "
        << st.accepted_count() << "/" << st.history.size() << ", " << verdict_text;
    if (st.aborted) {
      out << ", aborted: " << st.abort_reason;
      any_abort = true;
    }
    out << "\n";
    if (!pass) continue;
    ++n_pass;
    std::string verdict_json = r.verdict ? r.verdict->to_json() : std::string("{\"tested\": false}");
    std::string entry = store.add(r.seed, serialize_kernel(st.best), st.history_jsonl(), verdict_json + "\n",
                                  st.best_time);
    passing.emplace_back(st.best_time, entry);
  }

  std::stable_sort(passing.begin(), passing.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });
  for (const auto& [t, entry] : passing) store.offer_best(entry, t);

  auto best = store.best();
  double best_time = best ? best->time : base.time;
  out << "passing candidates: " << n_pass << "/" << results.size() << "\n";
  out << "best: " << fmt_time(best_time, unit) << " (" << (best ? best->entry : "baseline") << ")\n";
  out << "improvement: " << fmt("%.2f", 100.0 * (base.time - best_time) / base.time) << "%\n";
  out << "best schedule: " << (store.dir() / "best.sass").string() << "\n";
  return any_abort ? exit_code::kBackend : exit_code::kOk;
}

int cmd_simulate(const std::string& input, const std::string& config, std::ostream& out, std::ostream& err) {
  Kernel k = load_kernel(input, err);
  RunConfig cfg = base_config(config);
  out << simulate(k, cfg.machine).to_json() << "\n";
  return exit_code::kOk;
}

int cmd_verify(const std::string& ref_path, const std::string& mut_path, const std::string& config,
               std::optional<std::uint64_t> tests, std::optional<std::uint64_t> seed, bool fail_fast,
               std::ostream& out, std::ostream& err) {
  Kernel ref = load_kernel(ref_path, err);
  Kernel mut = load_kernel(mut_path, err);
  RunConfig cfg = base_config(config);
  if (!cfg.plan) throw ExitError{exit_code::kError, "verify needs a test plan (test.* keys in --config)"};
  TestPlan plan = *cfg.plan;
  if (tests) plan.sample_count = *tests;
  if (seed) plan.seed = *seed;
  if (fail_fast) plan.fail_fast = true;
  TestVerdict v;
  try {
    v = run_tests(ref, mut, plan);
  } catch (const std::invalid_argument& e) {
    throw ExitError{exit_code::kError, e.what()};
  }
  out << v.to_json() << "\n";
  if (v.inconclusive) return exit_code::kVerifyInconclusive;
  return v.failed ? exit_code::kVerifyFailed : exit_code::kOk;
}

int cmd_diff(const std::string& a_path, const std::string& b_path, std::ostream& out, std::ostream& err) {
  Kernel a = load_kernel(a_path, err);
  Kernel b = load_kernel(b_path, err);
  std::vector<SwapStep> steps;
  try {
    steps = schedule_diff(a, b);
  } catch (const std::invalid_argument& e) {
    throw ExitError{exit_code::kError, e.what()};
  }
  auto j = nlohmann::ordered_json::array();
  for (const auto& s : steps)
    j.push_back({{"position", s.position}, {"moved_up", s.moved_up}, {"moved_down", s.moved_down}});
  out << j.dump(2) << "\n";
  return exit_code::kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"sassopt: SASS schedule optimizer"};
  app.require_subcommand(1);

  OptimizeArgs opt;
  auto* optimize = app.add_subcommand("optimize", "Search for a faster schedule");
  optimize->add_option("input", opt.input, "Input .sass listing")->required();
  optimize->add_option("--config", opt.config, "Key-value config file");
  optimize->add_option("--seed", opt.seed, "Seed of the first chain");
  optimize->add_option("--chains", opt.chains, "Number of independent chains");
  optimize->add_option("--backend", opt.backend, "sim | external:<command with {schedule_file}>");
  optimize->add_option("--tests", opt.tests, "Test samples for each chain's best schedule");
  optimize->add_option("--reps", opt.reps, "Measurements per candidate (median)");
  optimize->add_option("--emit-deps", opt.emit_deps, "Write the dependency graph as DOT");
  optimize->add_flag("--unsafe-moves", opt.unsafe_moves, "Ignore dependencies when moving");
  optimize->add_flag("--fail-fast", opt.fail_fast, "Stop testing at the first failing sample");
  optimize->add_option("--store", opt.store, "Result store directory");

  std::string sim_input, sim_config;
  auto* sim = app.add_subcommand("simulate", "Print the simulator report as JSON");
  sim->add_option("input", sim_input)->required();
  sim->add_option("--config", sim_config);

  std::string ver_ref, ver_mut, ver_config;
  std::optional<std::uint64_t> ver_tests, ver_seed;
  bool ver_ff = false;
  auto* verify = app.add_subcommand("verify", "Differential test of a mutant against a reference");
  verify->add_option("reference", ver_ref)->required();
  verify->add_option("mutant", ver_mut)->required();
  verify->add_option("--config", ver_config)->required();
  verify->add_option("--tests", ver_tests, "Number of samples");
  verify->add_option("--seed", ver_seed, "Test seed");
  verify->add_flag("--fail-fast", ver_ff);

  std::string diff_a, diff_b;
  auto* diff = app.add_subcommand("diff", "Adjacent exchanges turning A into B");
  diff->add_option("a", diff_a)->required();
  diff->add_option("b", diff_b)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_code::kError;
  }

  try {
    if (*optimize) return cmd_optimize(opt, out, err);
    if (*sim) return cmd_simulate(sim_input, sim_config, out, err);
    if (*verify) return cmd_verify(ver_ref, ver_mut, ver_config, ver_tests, ver_seed, ver_ff, out, err);
    if (*diff) return cmd_diff(diff_a, diff_b, out, err);
  } catch (const ExitError& e) {
    err << "sassopt: " << e.message << "\n";
    return e.code;
  } catch (const NoCandidates& e) {
    err << "sassopt: " << e.what() << "\n";
    return exit_code::kNoCandidates;
  } catch (const std::exception& e) {
    err << "sassopt: " << e.what() << "\n";
    return exit_code::kError;
  }
  return exit_code::kError;
}

}  // namespace sassopt
