#include "sassopt/diff.hpp"

#include <map>
#include <stdexcept>

namespace sassopt {

std::vector<SwapStep> schedule_diff(const Kernel& a, const Kernel& b) {
  if (a.size() != b.size()) throw std::invalid_argument("schedules differ in length");

  // Key each instruction by its text and occurrence count.
  std::map<std::string, std::vector<std::size_t>> in_b;
  for (std::size_t i = 0; i < b.size(); ++i) in_b[b[i].body()].push_back(i);
  std::map<std::string, std::size_t> seen;
  std::vector<std::size_t> target(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string key = a[i].body();
    auto it = in_b.find(key);
    std::size_t& n = seen[key];
    if (it == in_b.end() || n >= it->second.size())
      throw std::invalid_argument("instruction not present in both schedules: " + key);
    target[i] = it->second[n++];
  }

  // Bubble each element into place; every exchange removes one inversion.
  std::vector<SwapStep> steps;
  std::vector<std::size_t> cur(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) cur[i] = i;
  for (std::size_t t = 0; t < a.size(); ++t) {
    std::size_t j = t;
    while (target[cur[j]] != t) ++j;
    for (; j > t; --j) {
      steps.push_back({j - 1, a[cur[j]].body(), a[cur[j - 1]].body()});
      std::swap(cur[j], cur[j - 1]);
    }
  }
  return steps;
}

}  // namespace sassopt
