#include "sassopt/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace sassopt {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T number(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  std::from_chars_result r;
  if constexpr (std::is_floating_point_v<T>) {
    r = std::from_chars(v.data(), end, out);
  } else {
    int base = 10;
    const char* p = v.data();
    if (v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) {
      base = 16;
      p += 2;
    }
    r = std::from_chars(p, end, out, base);
  }
  if (r.ec != std::errc() || r.ptr != end) throw ConfigError(key + ": not a valid number: '" + v + "'");
  return out;
}

bool boolean(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

BufferSpec parse_buffer(const std::string& key, int arg, const std::string& v) {
  std::istringstream in(v);
  std::string kind, len, dist;
  in >> kind >> len >> dist;
  std::string rest;
  if (in >> rest) throw ConfigError(key + ": trailing text '" + rest + "'");
  BufferSpec b;
  b.arg = arg;
  if (kind == "int32") b.kind = ElementKind::Int32;
  else if (kind == "int8") b.kind = ElementKind::Int8;
  else throw ConfigError(key + ": element kind must be int32 or int8");
  if (len.empty()) throw ConfigError(key + ": missing length");
  b.length = number<std::size_t>(key, len);
  if (dist.empty() || dist == "uniform") return b;
  if (!dist.starts_with("range:")) throw ConfigError(key + ": distribution must be uniform or range:lo:hi");
  std::string r = dist.substr(6);
  auto colon = r.find(':', 1);
  if (colon == std::string::npos) throw ConfigError(key + ": range needs lo:hi");
  b.range = {number<std::int64_t>(key, r.substr(0, colon)), number<std::int64_t>(key, r.substr(colon + 1))};
  return b;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::string t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(no) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(no) + ": empty key");
    kv[key] = trim(t.substr(eq + 1));
  }
  return kv;
}

RunConfig apply_config(const std::map<std::string, std::string>& kv, RunConfig cfg) {
  auto ensure_plan = [&]() -> TestPlan& {
    if (!cfg.plan) cfg.plan.emplace();
    return *cfg.plan;
  };
  for (const auto& [key, v] : kv) {
    if (key == "anneal.t_max") cfg.anneal.t_max = number<double>(key, v);
    else if (key == "anneal.t_min") cfg.anneal.t_min = number<double>(key, v);
    else if (key == "anneal.cooling") cfg.anneal.cooling = number<double>(key, v);
    else if (key == "anneal.seed") cfg.anneal.seed = number<std::uint64_t>(key, v);
    else if (key == "anneal.measure_reps") cfg.anneal.measure_reps = number<int>(key, v);
    else if (key == "anneal.tests_per_step") cfg.anneal.tests_per_step = number<std::uint64_t>(key, v);
    else if (key == "anneal.unsafe_moves") cfg.anneal.unsafe_moves = boolean(key, v);
    else if (key == "anneal.max_consecutive_failures") cfg.anneal.max_consecutive_failures = number<int>(key, v);
    else if (key == "chains") cfg.chains = number<int>(key, v);
    else if (key == "machine.global_mem_latency") cfg.machine.global_mem_latency = number<int>(key, v);
    else if (key == "machine.barrier_count") cfg.machine.barrier_count = number<int>(key, v);
    else if (key == "machine.issue_width") cfg.machine.issue_width = number<int>(key, v);
    else if (key.starts_with("machine.cpi.")) cfg.machine.cpi_table[key.substr(12)] = number<int>(key, v);
    else if (key.starts_with("machine.latency.")) {
      auto c = instr_class_from_string(key.substr(16));
      if (!c) throw ConfigError(key + ": unknown instruction class");
      cfg.machine.class_latency[static_cast<std::size_t>(*c)] = number<int>(key, v);
    } else if (key == "test.ret_ptr") ensure_plan().ret_ptr = number<int>(key, v);
    else if (key == "test.samples") ensure_plan().sample_count = number<std::uint64_t>(key, v);
    else if (key == "test.seed") ensure_plan().seed = number<std::uint64_t>(key, v);
    else if (key == "test.threads") ensure_plan().threads = number<unsigned>(key, v);
    else if (key == "test.fail_fast") ensure_plan().fail_fast = boolean(key, v);
    else if (key == "test.strict") ensure_plan().interp.strict = boolean(key, v);
    else if (key.starts_with("test.buffer.")) {
      int arg = number<int>(key, key.substr(12));
      auto& bufs = ensure_plan().buffers;
      std::erase_if(bufs, [&](const BufferSpec& b) { return b.arg == arg; });
      bufs.push_back(parse_buffer(key, arg, v));
    } else if (key == "backend") {
      if (v == "sim") cfg.backend.kind = BackendDescriptor::Kind::Simulator;
      else if (v == "external") cfg.backend.kind = BackendDescriptor::Kind::External;
      else throw ConfigError("backend: expected sim or external");
    } else if (key == "backend.command") cfg.backend.command = v;
    else if (key == "backend.timeout") cfg.backend.timeout_seconds = number<double>(key, v);
    else if (key == "backend.workdir") cfg.backend.working_directory = v;
    else if (key == "backend.concurrency_safe") cfg.backend.concurrency_safe = boolean(key, v);
    else throw ConfigError("unknown key '" + key + "'");
  }
  if (cfg.chains < 1) throw ConfigError("chains must be >= 1");
  try {
    cfg.anneal.validate();
    cfg.machine.validate();
    cfg.backend.validate();
    if (cfg.plan) cfg.plan->validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& file, RunConfig base) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return apply_config(parse_key_values(ss.str()), std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
}

BackendDescriptor parse_backend_flag(std::string_view flag, BackendDescriptor base) {
  if (flag == "sim") {
    base.kind = BackendDescriptor::Kind::Simulator;
  } else if (flag.starts_with("external:")) {
    base.kind = BackendDescriptor::Kind::External;
    base.command = std::string(flag.substr(9));
  } else if (flag == "external") {
    base.kind = BackendDescriptor::Kind::External;
  } else {
    throw ConfigError("--backend must be sim or external:<command>");
  }
  try {
    base.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return base;
}

}  // namespace sassopt
