#include "sassopt/store.hpp"

#include <unistd.h>

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sassopt {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string content_hash(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

void atomic_write(const fs::path& file, std::string_view content) {
  fs::path tmp = file;
  tmp += ".tmp." + std::to_string(getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, file);
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

json load_manifest(const fs::path& dir) {
  fs::path m = dir / "manifest.json";
  if (!fs::exists(m)) return json::object();
  return json::parse(read_file(m));
}

void save_manifest(const fs::path& dir, const json& j) { atomic_write(dir / "manifest.json", j.dump(2) + "\n"); }

}  // namespace

ResultStore::ResultStore(fs::path root, std::string_view input_text)
    : dir_(std::move(root)), hash_(content_hash(input_text)) {
  dir_ /= hash_;
  fs::create_directories(dir_);
}

void ResultStore::record_baseline(std::string_view input_text, double time, std::string_view unit) {
  json m = load_manifest(dir_);
  if (m.contains("baseline")) return;
  atomic_write(dir_ / "input.sass", input_text);
  m["input_hash"] = hash_;
  m["unit"] = unit;
  m["baseline"] = {{"time", time}};
  m["best"] = {{"entry", "baseline"}, {"time", time}};
  m["entries"] = json::array();
  save_manifest(dir_, m);
  atomic_write(dir_ / "best.sass", input_text);
}

std::string ResultStore::add(std::uint64_t seed, std::string_view candidate, std::string_view history_jsonl,
                             std::string_view verdict_json, double time) {
  std::string name = std::to_string(seed);
  for (int n = 1;; ++n) {
    fs::path e = dir_ / name;
    if (!fs::exists(e)) break;
    if (fs::exists(e / "candidate.sass") && read_file(e / "candidate.sass") == candidate) return name;
    name = std::to_string(seed) + "-" + std::to_string(n);
  }
  fs::path tmpdir = dir_ / (".tmp-" + name + "-" + std::to_string(getpid()));
  fs::remove_all(tmpdir);
  fs::create_directories(tmpdir);
  atomic_write(tmpdir / "candidate.sass", candidate);
  atomic_write(tmpdir / "history.jsonl", history_jsonl);
  atomic_write(tmpdir / "verdict.json", verdict_json);
  fs::rename(tmpdir, dir_ / name);

  json m = load_manifest(dir_);
  if (!m.contains("entries")) m["entries"] = json::array();
  m["entries"].push_back({{"entry", name}, {"time", time}});
  save_manifest(dir_, m);
  return name;
}

bool ResultStore::offer_best(const std::string& entry, double time) {
  json m = load_manifest(dir_);
  if (m.contains("best") && !(time < m["best"]["time"].get<double>())) return false;
  atomic_write(dir_ / "best.sass", read_file(dir_ / entry / "candidate.sass"));
  m["best"] = {{"entry", entry}, {"time", time}};
  save_manifest(dir_, m);
  return true;
}

std::optional<StoredResult> ResultStore::best() const {
  json m = load_manifest(dir_);
  if (!m.contains("best")) return std::nullopt;
  return StoredResult{m["best"]["entry"].get<std::string>(), m["best"]["time"].get<double>()};
}

}  // namespace sassopt
