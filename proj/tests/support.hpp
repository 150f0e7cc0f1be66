#ifndef HYPERMIX_TESTS_SUPPORT_HPP_
#define HYPERMIX_TESTS_SUPPORT_HPP_

// Fixtures and brute-force oracles shared by the test binaries. The oracles
// deliberately avoid the library's kernels and use long double where it
// matters.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <unistd.h>

#include "hypermix/matrix.hpp"
#include "hypermix/sphere.hpp"

namespace hypermix::test {

inline Matrix random_rows(std::size_t m, std::size_t d, std::uint64_t seed, bool unit = true) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix out(m, d);
  for (std::size_t i = 0; i < m; ++i) {
    long double s = 0;
    for (std::size_t k = 0; k < d; ++k) {
      out(i, k) = n(rng);
      s += static_cast<long double>(out(i, k)) * out(i, k);
    }
    if (unit)
      for (std::size_t k = 0; k < d; ++k) out(i, k) /= static_cast<double>(std::sqrt(s));
  }
  return out;
}

inline EmbeddingBatch random_batch(std::size_t m, std::size_t d, std::uint64_t seed) {
  return EmbeddingBatch::normalized(random_rows(m, d, seed));
}

inline PairedEmbeddings random_pairs(std::size_t m, std::size_t d, std::uint64_t seed) {
  return PairedEmbeddings(random_batch(m, d, seed), random_batch(m, d, seed + 7919));
}

inline Matrix rows(std::initializer_list<std::initializer_list<double>> r) { return Matrix(r); }

inline PairedEmbeddings pairs(std::initializer_list<std::initializer_list<double>> i,
                              std::initializer_list<std::initializer_list<double>> t) {
  return PairedEmbeddings(EmbeddingBatch::from_rows(Matrix(i)), EmbeddingBatch::from_rows(Matrix(t)));
}

inline long double ldot(std::span<const double> a, std::span<const double> b) {
  long double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += static_cast<long double>(a[k]) * b[k];
  return s;
}

// -log softmax(z)[target] with soft targets, long double.
inline long double soft_ce(const std::vector<long double>& z, const std::vector<long double>& y) {
  long double mx = z[0];
  for (auto v : z) mx = std::max(mx, v);
  long double s = 0;
  for (auto v : z) s += std::exp(v - mx);
  const long double lse = mx + std::log(s);
  long double out = 0;
  for (std::size_t k = 0; k < z.size(); ++k) out += y[k] * (lse - z[k]);
  return out;
}

// Slerp written from scratch in long double, weight lambda on a.
inline std::vector<long double> slerp_oracle(long double lambda, std::span<const double> a,
                                             std::span<const double> b) {
  long double c = std::clamp(ldot(a, b), -1.0L, 1.0L);
  const long double th = std::acos(c);
  std::vector<long double> out(a.size());
  if (std::sin(th) < 1e-6L) {
    long double n = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      out[k] = lambda * a[k] + (1 - lambda) * b[k];
      n += out[k] * out[k];
    }
    for (auto& x : out) x /= std::sqrt(n);
    return out;
  }
  for (std::size_t k = 0; k < a.size(); ++k)
    out[k] = (a[k] * std::sin(lambda * th) + b[k] * std::sin((1 - lambda) * th)) / std::sin(th);
  return out;
}

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("hypermix_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary | std::ios::trunc) << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace hypermix::test

#endif  // HYPERMIX_TESTS_SUPPORT_HPP_
