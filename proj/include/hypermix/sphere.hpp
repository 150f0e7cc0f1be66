#ifndef HYPERMIX_SPHERE_HPP_
#define HYPERMIX_SPHERE_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "hypermix/matrix.hpp"

namespace hypermix {

inline constexpr double kUnitTolerance = 1e-5;

// A point on S^(d-1), d >= 2.
class UnitVector {
 public:
  // Validates |v| = 1 within kUnitTolerance; use l2_normalize for raw input.
  static UnitVector from_components(std::vector<double> components);

  std::size_t dim() const noexcept { return c_.size(); }
  std::span<const double> components() const noexcept { return c_; }
  double operator[](std::size_t i) const { return c_[i]; }

 private:
  explicit UnitVector(std::vector<double> c) : c_(std::move(c)) {}
  friend UnitVector l2_normalize(std::span<const double> v);
  friend class EmbeddingBatch;

  std::vector<double> c_;
};

// M x d matrix whose rows are unit vectors of a shared dimension.
class EmbeddingBatch {
 public:
  // Rows must already be unit within kUnitTolerance.
  static EmbeddingBatch from_rows(Matrix rows);
  // Normalizes every row; throws ZeroVector naming the row otherwise.
  static EmbeddingBatch normalized(Matrix raw);
  static EmbeddingBatch from_vectors(std::span<const UnitVector> rows);

  std::size_t size() const noexcept { return m_.rows(); }
  std::size_t dim() const noexcept { return m_.cols(); }
  const Matrix& matrix() const noexcept { return m_; }
  std::span<const double> row(std::size_t i) const { return m_.row(i); }
  UnitVector unit_row(std::size_t i) const;

 private:
  explicit EmbeddingBatch(Matrix m) : m_(std::move(m)) {}
  Matrix m_;
};

// Image-side and text-side batches paired by row index.
struct PairedEmbeddings {
  PairedEmbeddings(EmbeddingBatch image_rows, EmbeddingBatch text_rows);

  std::size_t size() const noexcept { return image.size(); }
  std::size_t dim() const noexcept { return image.dim(); }

  EmbeddingBatch image;
  EmbeddingBatch text;
};

class MixRatio {
 public:
  explicit MixRatio(double lambda);
  double value() const noexcept { return lambda_; }

 private:
  double lambda_;
};

UnitVector l2_normalize(std::span<const double> v);

double cosine_sim(const UnitVector& a, const UnitVector& b);

// Great-circle interpolation; lambda weights a (lambda = 1 gives a).
UnitVector geodesic_mix(MixRatio lambda, const UnitVector& a, const UnitVector& b);
UnitVector linear_mix_normalized(MixRatio lambda, const UnitVector& a, const UnitVector& b);

EmbeddingBatch batch_geodesic_mix(MixRatio lambda, const EmbeddingBatch& a,
                                  const EmbeddingBatch& b);
EmbeddingBatch batch_linear_mix(MixRatio lambda, const EmbeddingBatch& a,
                                const EmbeddingBatch& b);

// Entry (i, j) = a_i . b_j
Matrix pairwise_similarity(const EmbeddingBatch& a, const EmbeddingBatch& b);

// Row i <-> row M-1-i.
EmbeddingBatch flip_batch(const EmbeddingBatch& a);

}  // namespace hypermix

#endif  // HYPERMIX_SPHERE_HPP_
