#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace keyreconf::testing {

// Walks every (password, layout) pair for a small alphabet and lets a
// Bayesian observer guess uniformly among the passwords consistent with
// what it saw. With a persistent layout it sees which characters repeat;
// with a fresh layout per keystroke it sees nothing useful.
inline double brute_observer(int k, int n, bool persistent) {
  std::vector<std::vector<int>> passwords;
  std::vector<int> cur(static_cast<std::size_t>(n), 0);
  std::function<void(int)> gen = [&](int i) {
    if (i == n) {
      passwords.push_back(cur);
      return;
    }
    for (int c = 0; c < k; ++c) {
      cur[static_cast<std::size_t>(i)] = c;
      gen(i + 1);
    }
  };
  gen(0);
  auto same_pattern = [&](const std::vector<int>& a, const std::vector<int>& b) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if ((a[static_cast<std::size_t>(i)] == a[static_cast<std::size_t>(j)]) !=
            (b[static_cast<std::size_t>(i)] == b[static_cast<std::size_t>(j)])) {
          return false;
        }
      }
    }
    return true;
  };
  double total = 0.0;
  for (const auto& pw : passwords) {
    std::size_t consistent = 0;
    for (const auto& q : passwords) {
      if (!persistent || same_pattern(pw, q)) ++consistent;
    }
    total += 1.0 / static_cast<double>(consistent);
  }
  return total / static_cast<double>(passwords.size());
}


}  // namespace keyreconf::testing
