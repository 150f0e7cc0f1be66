#ifndef HYPERMIX_TESTS_ORACLES_HPP_
#define HYPERMIX_TESTS_ORACLES_HPP_

// Independent reference implementations of the metrics, written as plain
// loops with no shared code paths.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hypermix/matrix.hpp"
#include "hypermix/metrics.hpp"
#include "support.hpp"

namespace hypermix::test {

inline long double sqdist(std::span<const double> a, std::span<const double> b) {
  long double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const long double d = static_cast<long double>(a[k]) - b[k];
    s += d * d;
  }
  return s;
}

inline double naive_alignment(const PairedEmbeddings& p) {
  const std::size_t m = p.size();
  long double total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    long double best = 1e300L;
    for (std::size_t k = 0; k < m; ++k)
      if (k != i) best = std::min(best, sqdist(p.image.row(i), p.text.row(k)));
    total += sqdist(p.image.row(i), p.text.row(i)) - best;
  }
  return static_cast<double>(-total / m);
}

inline double naive_uniformity(const PairedEmbeddings& p) {
  const std::size_t m = p.size();
  long double total = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i != j) total += std::exp(-2.0L * sqdist(p.image.row(i), p.text.row(j)));
  return static_cast<double>(-std::log(total / (m * (m - 1))));
}

// Sort candidates by (score desc, index asc) and locate the true item.
inline double sort_recall(const Matrix& s, std::size_t k, Direction dir) {
  const std::size_t m = s.rows();
  std::size_t hits = 0;
  for (std::size_t q = 0; q < m; ++q) {
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto score = [&](std::size_t c) { return dir == Direction::ImageToText ? s(q, c) : s(c, q); };
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t x, std::size_t y) { return score(x) > score(y); });
    const auto pos = std::find(idx.begin(), idx.end(), q) - idx.begin();
    if (static_cast<std::size_t>(pos) < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(m);
}

// First pass assigns bins by interval test, second pass averages.
inline double two_pass_ece(const std::vector<double>& conf, const std::vector<bool>& correct,
                           std::size_t n_bins) {
  const std::size_t n = conf.size();
  std::vector<std::size_t> bin(n);
  for (std::size_t i = 0; i < n; ++i) {
    bin[i] = 0;
    for (std::size_t b = 0; b < n_bins; ++b) {
      const double lo = static_cast<double>(b) / n_bins;
      const double hi = static_cast<double>(b + 1) / n_bins;
      if ((conf[i] > lo && conf[i] <= hi) || (b == 0 && conf[i] == 0.0)) {
        bin[i] = b;
        break;
      }
    }
  }
  long double ece = 0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    long double c = 0, a = 0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (bin[i] == b) {
        ++cnt;
        c += conf[i];
        a += correct[i] ? 1 : 0;
      }
    if (cnt) ece += (static_cast<long double>(cnt) / n) * std::abs(a / cnt - c / cnt);
  }
  return static_cast<double>(ece);
}

}  // namespace hypermix::test

#endif  // HYPERMIX_TESTS_ORACLES_HPP_
