// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Straight-line reference implementations used as test oracles. They are
// written for clarity, not speed, and share no code with the library.

#pragma once

#include <cstddef>
#include <vector>

namespace voxtrig::oracle {

// Window end of the first window of length L with the largest absolute sum.
inline std::size_t MaxEnergyEnd(const std::vector<double>& x, std::size_t L) {
  double best = -1.0;
  std::size_t best_start = 0;
  for (std::size_t s = 0; s + L <= x.size(); ++s) {
    double e = 0.0;
    for (std::size_t i = s; i < s + L; ++i) e += x[i] < 0 ? -x[i] : x[i];
    if (e > best) {
      best = e;
      best_start = s;
    }
  }
  return best_start + L;
}

// Greedy max-min selection over a dense K x K distance matrix d[i][j].
inline std::vector<std::size_t> MaxMinSelect(const std::vector<std::vector<double>>& d,
                                             std::size_t m) {
  const std::size_t k = d.size();
  std::size_t a = 0, b = 1;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j)
      if (d[i][j] > d[a][b]) {
        a = i;
        b = j;
      }
  std::vector<std::size_t> chosen{a, b};
  std::vector<bool> used(k, false);
  used[a] = used[b] = true;
  while (chosen.size() < m) {
    std::size_t pick = k;
    double pick_score = -1.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (used[c]) continue;
      double score = d[c][chosen[0]];
      for (std::size_t s : chosen) score = d[c][s] < score ? d[c][s] : score;
      if (score > pick_score) {
        pick_score = score;
        pick = c;
      }
    }
    chosen.push_back(pick);
    used[pick] = true;
  }
  return chosen;
}

}  // namespace voxtrig::oracle
