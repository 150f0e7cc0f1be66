#include "hypermix/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hypermix/error.hpp"
#include "hypermix/geodesic.hpp"
#include "hypermix/kernels.hpp"

namespace hypermix {

namespace {

void require_dim(std::size_t d) {
  if (d < 2) throw Error(ErrorCode::InvalidArgument, "dimension must be at least 2");
}

void require_unit(std::span<const double> v, std::optional<std::size_t> row = std::nullopt) {
  for (double x : v)
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteValue, "non-finite component", row);
  const double n = norm(v);
  if (std::abs(n - 1.0) > kUnitTolerance)
    throw Error(ErrorCode::NotUnitNorm, "norm " + std::to_string(n) + " is not 1", row);
}

void require_same_dim(std::size_t a, std::size_t b) {
  if (a != b)
    throw Error(ErrorCode::DimensionMismatch,
                "dimensions " + std::to_string(a) + " and " + std::to_string(b) + " differ");
}

[[noreturn]] void raise(const kernels::MixFailure& f) {
  if (f.antipodal)
    throw Error(ErrorCode::AntipodalInputs, "geodesic between antipodal rows is undefined", f.row);
  throw Error(ErrorCode::ZeroVector, "mixed row vanishes", f.row);
}

}  // namespace

UnitVector UnitVector::from_components(std::vector<double> components) {
  require_dim(components.size());
  require_unit(components);
  return UnitVector(std::move(components));
}

UnitVector l2_normalize(std::span<const double> v) {
  require_dim(v.size());
  const double n = norm(v);
  if (!(n >= kZeroNorm)) throw Error(ErrorCode::ZeroVector, "cannot normalize a zero vector");
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return UnitVector(std::move(out));
}

EmbeddingBatch EmbeddingBatch::from_rows(Matrix rows) {
  if (rows.rows() == 0) throw Error(ErrorCode::BatchTooSmall, "batch has no rows");
  require_dim(rows.cols());
  for (std::size_t i = 0; i < rows.rows(); ++i) require_unit(rows.row(i), i);
  return EmbeddingBatch(std::move(rows));
}

EmbeddingBatch EmbeddingBatch::normalized(Matrix raw) {
  if (raw.rows() == 0) throw Error(ErrorCode::BatchTooSmall, "batch has no rows");
  require_dim(raw.cols());
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    auto r = raw.row(i);
    const double n = norm(r);
    if (!std::isfinite(n)) throw Error(ErrorCode::NonFiniteValue, "non-finite row", i);
    if (n < kZeroNorm) throw Error(ErrorCode::ZeroVector, "cannot normalize a zero row", i);
    for (double& x : r) x /= n;
  }
  return EmbeddingBatch(std::move(raw));
}

EmbeddingBatch EmbeddingBatch::from_vectors(std::span<const UnitVector> rows) {
  if (rows.empty()) throw Error(ErrorCode::BatchTooSmall, "batch has no rows");
  Matrix m(rows.size(), rows.front().dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require_same_dim(rows[i].dim(), m.cols());
    auto r = m.row(i);
    std::copy(rows[i].c_.begin(), rows[i].c_.end(), r.begin());
  }
  return EmbeddingBatch(std::move(m));
}

UnitVector EmbeddingBatch::unit_row(std::size_t i) const {
  const auto r = m_.row(i);
  return UnitVector(std::vector<double>(r.begin(), r.end()));
}

PairedEmbeddings::PairedEmbeddings(EmbeddingBatch image_rows, EmbeddingBatch text_rows)
    : image(std::move(image_rows)), text(std::move(text_rows)) {
  require_same_dim(image.dim(), text.dim());
  if (image.size() != text.size())
    throw Error(ErrorCode::DimensionMismatch,
                "paired batches have " + std::to_string(image.size()) + " and " +
                    std::to_string(text.size()) + " rows");
}

MixRatio::MixRatio(double lambda) : lambda_(lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw Error(ErrorCode::OutOfRange, "mix ratio " + std::to_string(lambda) + " outside [0,1]");
}

double cosine_sim(const UnitVector& a, const UnitVector& b) {
  require_same_dim(a.dim(), b.dim());
  return std::clamp(dot(a.components(), b.components()), -1.0, 1.0);
}

UnitVector geodesic_mix(MixRatio lambda, const UnitVector& a, const UnitVector& b) {
  require_same_dim(a.dim(), b.dim());
  std::vector<double> out(a.dim());
  const auto status = geodesic_mix_into(lambda.value(), a.components(), b.components(), out);
  if (status == MixStatus::Antipodal)
    throw Error(ErrorCode::AntipodalInputs, "geodesic between antipodal vectors is undefined");
  if (status == MixStatus::Zero) throw Error(ErrorCode::ZeroVector, "mixed vector vanishes");
  return UnitVector::from_components(std::move(out));
}

UnitVector linear_mix_normalized(MixRatio lambda, const UnitVector& a, const UnitVector& b) {
  require_same_dim(a.dim(), b.dim());
  std::vector<double> out(a.dim());
  if (linear_mix_into(lambda.value(), a.components(), b.components(), out) != MixStatus::Ok)
    throw Error(ErrorCode::ZeroVector, "convex combination vanishes");
  return UnitVector::from_components(std::move(out));
}

EmbeddingBatch batch_geodesic_mix(MixRatio lambda, const EmbeddingBatch& a,
                                  const EmbeddingBatch& b) {
  require_same_dim(a.dim(), b.dim());
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "batch sizes differ");
  Matrix out(a.size(), a.dim());
  if (auto f = kernels::parallel::geodesic_mix_rows(lambda.value(), a.matrix(), b.matrix(), out))
    raise(*f);
  return EmbeddingBatch::from_rows(std::move(out));
}

EmbeddingBatch batch_linear_mix(MixRatio lambda, const EmbeddingBatch& a,
                                const EmbeddingBatch& b) {
  require_same_dim(a.dim(), b.dim());
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "batch sizes differ");
  Matrix out(a.size(), a.dim());
  if (auto f = kernels::parallel::linear_mix_rows(lambda.value(), a.matrix(), b.matrix(), out))
    raise(*f);
  return EmbeddingBatch::from_rows(std::move(out));
}

Matrix pairwise_similarity(const EmbeddingBatch& a, const EmbeddingBatch& b) {
  require_same_dim(a.dim(), b.dim());
  Matrix s = kernels::parallel::similarity(a.matrix(), b.matrix());
  for (double& x : s.flat()) x = std::clamp(x, -1.0, 1.0);
  return s;
}

EmbeddingBatch flip_batch(const EmbeddingBatch& a) {
  const std::size_t m = a.size();
  Matrix out(m, a.dim());
  for (std::size_t i = 0; i < m; ++i) {
    const auto src = a.row(m - 1 - i);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return EmbeddingBatch::from_rows(std::move(out));
}

}  // namespace hypermix
