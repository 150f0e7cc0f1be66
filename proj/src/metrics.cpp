#include "hypermix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hypermix/error.hpp"
#include "hypermix/geodesic.hpp"
#include "hypermix/kernels.hpp"

namespace hypermix {

namespace {

using Index = std::ptrdiff_t;

void require_pairs(const PairedEmbeddings& p) {
  if (p.size() < 2)
    throw Error(ErrorCode::BatchTooSmall, "metric needs at least two pairs");
}

// Sums per-row partials in index order so the total is independent of how
// rows were distributed over threads.
double ordered_sum(std::span<const double> partials) {
  double s = 0.0;
  for (double x : partials) s += x;
  return s;
}

void require_square(const Matrix& s) {
  if (s.rows() != s.cols() || s.rows() == 0)
    throw Error(ErrorCode::DimensionMismatch, "similarity matrix must be square and non-empty");
}

// Row or column `q` of the similarity matrix as seen by a query.
double entry(const Matrix& s, Direction d, std::size_t query, std::size_t candidate) {
  return d == Direction::ImageToText ? s(query, candidate) : s(candidate, query);
}

}  // namespace

std::string_view to_string(Direction d) {
  return d == Direction::ImageToText ? "image_to_text" : "text_to_image";
}

Direction parse_direction(std::string_view s) {
  if (s == "image_to_text" || s == "i2t") return Direction::ImageToText;
  if (s == "text_to_image" || s == "t2i") return Direction::TextToImage;
  throw Error(ErrorCode::InvalidArgument, "unknown direction '" + std::string(s) + "'");
}

double relative_alignment(const PairedEmbeddings& p) {
  require_pairs(p);
  const Matrix dist = kernels::parallel::squared_distance(p.image.matrix(), p.text.matrix());
  const std::size_t m = p.size();
  std::vector<double> excess(m);
  const Index n = static_cast<Index>(m);
#pragma omp parallel for schedule(static)
  for (Index si = 0; si < n; ++si) {
    const auto i = static_cast<std::size_t>(si);
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m; ++k)
      if (k != i) nearest = std::min(nearest, dist(i, k));
    excess[i] = dist(i, i) - nearest;
  }
  return -ordered_sum(excess) / static_cast<double>(m);
}

double uniformity(const PairedEmbeddings& p) {
  require_pairs(p);
  const Matrix dist = kernels::parallel::squared_distance(p.image.matrix(), p.text.matrix());
  const std::size_t m = p.size();
  std::vector<double> partial(m);
  const Index n = static_cast<Index>(m);
#pragma omp parallel for schedule(static)
  for (Index si = 0; si < n; ++si) {
    const auto i = static_cast<std::size_t>(si);
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      if (j != i) s += std::exp(-2.0 * dist(i, j));
    partial[i] = s;
  }
  const double mean = ordered_sum(partial) / static_cast<double>(m * (m - 1));
  return -std::log(mean);
}

ModalityGap modality_gap(const PairedEmbeddings& p) {
  const std::size_t m = p.size();
  const std::size_t d = p.dim();
  ModalityGap gap;
  gap.delta.assign(d, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const auto a = p.image.row(i);
    const auto b = p.text.row(i);
    for (std::size_t k = 0; k < d; ++k) gap.delta[k] += a[k] - b[k];
  }
  for (double& x : gap.delta) x /= static_cast<double>(m);
  gap.norm = norm(gap.delta);
  return gap;
}

MetricReport metric_report(const PairedEmbeddings& p) {
  MetricReport r;
  r.alignment = relative_alignment(p);
  r.uniformity = uniformity(p);
  auto gap = modality_gap(p);
  r.modality_gap_norm = gap.norm;
  r.modality_gap_delta = std::move(gap.delta);
  r.alignment_queries = p.size();
  r.uniformity_pairs = p.size() * (p.size() - 1);
  r.centroid_rows = p.size();
  return r;
}

PairedEmbeddings embedding_shift(const PairedEmbeddings& p, double shift_lambda) {
  if (!(std::abs(shift_lambda) <= 2.5))
    throw Error(ErrorCode::OutOfRange, "shift lambda must lie in [-2.5, 2.5]");
  const auto gap = modality_gap(p);
  const std::size_t m = p.size();
  const std::size_t d = p.dim();
  Matrix img(m, d);
  Matrix txt(m, d);
  const double half = shift_lambda / 2.0;
  // A zero offset is an exact identity; renormalizing would perturb the last bit.
  if (std::all_of(gap.delta.begin(), gap.delta.end(), [&](double x) { return half * x == 0.0; }))
    return p;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      img(i, k) = p.image.row(i)[k] - half * gap.delta[k];
      txt(i, k) = p.text.row(i)[k] + half * gap.delta[k];
    }
  }
  return PairedEmbeddings(EmbeddingBatch::normalized(std::move(img)),
                          EmbeddingBatch::normalized(std::move(txt)));
}

RecallReport recall_at_k(const Matrix& s, std::size_t k, Direction direction) {
  require_square(s);
  const std::size_t m = s.rows();
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  if (k > m)
    throw Error(ErrorCode::KTooLarge,
                "k = " + std::to_string(k) + " exceeds " + std::to_string(m) + " candidates");
  RecallReport r;
  r.direction = direction;
  r.k = k;
  r.queries = m;
  for (std::size_t q = 0; q < m; ++q) {
    const double target = entry(s, direction, q, q);
    std::size_t rank = 0;
    for (std::size_t c = 0; c < m; ++c) {
      const double v = entry(s, direction, q, c);
      if (v > target || (v == target && c < q)) ++rank;
    }
    if (rank < k) ++r.hits;
  }
  r.recall = static_cast<double>(r.hits) / static_cast<double>(m);
  return r;
}

RetrievalConfidences retrieval_confidences(const Matrix& s, double tau, Direction direction) {
  require_square(s);
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
  const std::size_t m = s.rows();
  RetrievalConfidences out;
  out.confidence.resize(m);
  out.correct.resize(m);
  for (std::size_t q = 0; q < m; ++q) {
    std::size_t best = 0;
    double best_v = entry(s, direction, q, 0);
    for (std::size_t c = 1; c < m; ++c) {
      const double v = entry(s, direction, q, c);
      if (v > best_v) {
        best_v = v;
        best = c;
      }
    }
    double z = 0.0;
    for (std::size_t c = 0; c < m; ++c) z += std::exp((entry(s, direction, q, c) - best_v) / tau);
    out.confidence[q] = 1.0 / z;
    out.correct[q] = best == q;
  }
  return out;
}

std::size_t ece_bin_index(double c, std::size_t n_bins) {
  const double n = static_cast<double>(n_bins);
  auto b = static_cast<std::ptrdiff_t>(std::ceil(c * n)) - 1;
  b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(n_bins) - 1);
  // Correct for rounding in c * n so the interval test below is exact.
  while (b > 0 && c <= static_cast<double>(b) / n) --b;
  while (b + 1 < static_cast<std::ptrdiff_t>(n_bins) && c > static_cast<double>(b + 1) / n) ++b;
  return static_cast<std::size_t>(b);
}

EceReport ece(std::span<const double> confidence, const std::vector<bool>& correct,
              std::size_t n_bins) {
  if (n_bins == 0) throw Error(ErrorCode::InvalidArgument, "need at least one bin");
  if (confidence.size() != correct.size())
    throw Error(ErrorCode::DimensionMismatch, "confidence and correctness lengths differ");
  if (confidence.empty()) throw Error(ErrorCode::BatchTooSmall, "no queries");
  EceReport r;
  r.n_bins = n_bins;
  r.n_queries = confidence.size();
  r.bins.resize(n_bins);
  std::vector<double> conf_sum(n_bins, 0.0);
  std::vector<double> acc_sum(n_bins, 0.0);
  for (std::size_t i = 0; i < confidence.size(); ++i) {
    const double c = confidence[i];
    if (!(c >= 0.0 && c <= 1.0))
      throw Error(ErrorCode::OutOfRange, "confidence outside [0,1]", i);
    const std::size_t b = ece_bin_index(c, n_bins);
    ++r.bins[b].count;
    conf_sum[b] += c;
    acc_sum[b] += correct[i] ? 1.0 : 0.0;
  }
  const double total = static_cast<double>(confidence.size());
  for (std::size_t b = 0; b < n_bins; ++b) {
    auto& bin = r.bins[b];
    bin.lo = static_cast<double>(b) / static_cast<double>(n_bins);
    bin.hi = static_cast<double>(b + 1) / static_cast<double>(n_bins);
    if (bin.count == 0) continue;
    const double cnt = static_cast<double>(bin.count);
    bin.mean_confidence = conf_sum[b] / cnt;
    bin.mean_accuracy = acc_sum[b] / cnt;
    r.ece += (cnt / total) * std::abs(bin.mean_accuracy - bin.mean_confidence);
  }
  return r;
}

SidedProportion hard_negative_proportion(const PairedEmbeddings& p, const EmbeddingBatch& mixed) {
  require_pairs(p);
  if (mixed.size() != p.size() || mixed.dim() != p.dim())
    throw Error(ErrorCode::DimensionMismatch, "mixed batch shape differs from the pairs");
  const Matrix img_mix = kernels::parallel::similarity(p.image.matrix(), mixed.matrix());
  const Matrix txt_mix = kernels::parallel::similarity(p.text.matrix(), mixed.matrix());
  const std::size_t m = p.size();
  std::size_t img_hits = 0;
  std::size_t txt_hits = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double pos = dot(p.image.row(i), p.text.row(i));
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      if (img_mix(i, j) > pos) ++img_hits;
      if (txt_mix(i, j) > pos) ++txt_hits;
    }
  }
  const double pairs = static_cast<double>(m * (m - 1));
  return {static_cast<double>(img_hits) / pairs, static_cast<double>(txt_hits) / pairs};
}

SidedProportion original_negative_proportion(const PairedEmbeddings& p) {
  require_pairs(p);
  const Matrix s = kernels::parallel::similarity(p.image.matrix(), p.text.matrix());
  const std::size_t m = p.size();
  std::size_t img_hits = 0;
  std::size_t txt_hits = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      if (s(i, j) > s(i, i)) ++img_hits;
      if (s(j, i) > s(i, i)) ++txt_hits;
    }
  }
  const double pairs = static_cast<double>(m * (m - 1));
  return {static_cast<double>(img_hits) / pairs, static_cast<double>(txt_hits) / pairs};
}

SimatResult simat_transform(const UnitVector& image_source, const UnitVector& text_source,
                            const UnitVector& text_target, double strength,
                            const EmbeddingBatch& gallery) {
  const std::size_t d = image_source.dim();
  if (text_source.dim() != d || text_target.dim() != d || gallery.dim() != d)
    throw Error(ErrorCode::DimensionMismatch, "transform operands differ in dimension");
  SimatResult r;
  r.x.resize(d);
  for (std::size_t k = 0; k < d; ++k)
    r.x[k] = image_source[k] + strength * (text_target[k] - text_source[k]);
  const UnitVector query = l2_normalize(r.x);
  r.top_similarity = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < gallery.size(); ++g) {
    const double v = dot(query.components(), gallery.row(g));
    if (v > r.top_similarity) {
      r.top_similarity = v;
      r.top_index = g;
    }
  }
  return r;
}

}  // namespace hypermix
