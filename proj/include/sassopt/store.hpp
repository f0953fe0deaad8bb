#pragma once

// Append-only on-disk result store:
//
//   <root>/<input-hash>/manifest.json
//   <root>/<input-hash>/best.sass
//   <root>/<input-hash>/<seed>/{candidate.sass, history.jsonl, verdict.json}

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace sassopt {

/// FNV-1a 64-bit, as 16 lowercase hex digits.
std::string content_hash(std::string_view data);

/// Writes via a temporary sibling and rename.
void atomic_write(const std::filesystem::path& file, std::string_view content);

std::string read_file(const std::filesystem::path& file);

struct StoredResult {
  std::string entry;  // directory name relative to the kernel directory
  double time = 0.0;
};

class ResultStore {
 public:
  ResultStore(std::filesystem::path root, std::string_view input_text);

  const std::filesystem::path& dir() const { return dir_; }
  const std::string& input_hash() const { return hash_; }

  /// Records the unmodified input once. Best starts here.
  void record_baseline(std::string_view input_text, double time, std::string_view unit);

  /// Adds one candidate under `<seed>` (or `<seed>-<n>` when that entry
  /// already holds different content). Returns the entry name.
  std::string add(std::uint64_t seed, std::string_view candidate, std::string_view history_jsonl,
                  std::string_view verdict_json, double time);

  /// Moves `best` to `entry` iff `time` is strictly below the current best.
  bool offer_best(const std::string& entry, double time);

  std::optional<StoredResult> best() const;

 private:
  std::filesystem::path dir_;
  std::string hash_;
};

}  // namespace sassopt
