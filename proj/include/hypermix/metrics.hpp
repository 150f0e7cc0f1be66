#ifndef HYPERMIX_METRICS_HPP_
#define HYPERMIX_METRICS_HPP_

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "hypermix/matrix.hpp"
#include "hypermix/sphere.hpp"

namespace hypermix {

struct MetricReport {
  double alignment = 0.0;
  double uniformity = 0.0;
  double modality_gap_norm = 0.0;
  std::vector<double> modality_gap_delta;
  std::size_t alignment_queries = 0;   // M
  std::size_t uniformity_pairs = 0;    // M (M - 1)
  std::size_t centroid_rows = 0;       // M
};

struct ReliabilityBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double mean_confidence = 0.0;
  double mean_accuracy = 0.0;
};

struct EceReport {
  std::size_t n_bins = 0;
  std::size_t n_queries = 0;
  std::vector<ReliabilityBin> bins;
  double ece = 0.0;
};

enum class Direction { ImageToText, TextToImage };
std::string_view to_string(Direction d);
Direction parse_direction(std::string_view s);

struct RecallReport {
  Direction direction = Direction::ImageToText;
  std::size_t k = 1;
  std::size_t queries = 0;
  std::size_t hits = 0;
  double recall = 0.0;
};

struct RetrievalConfidences {
  std::vector<double> confidence;
  std::vector<bool> correct;
};

struct SidedProportion {
  double image_side = 0.0;
  double text_side = 0.0;
};

struct SimatResult {
  std::vector<double> x;
  std::size_t top_index = 0;
  double top_similarity = 0.0;
};

// -mean_i [ |I_i - T_i|^2 - min_{k != i} |I_i - T_k|^2 ]
double relative_alignment(const PairedEmbeddings& p);

// -log mean_{i != j} exp(-2 |I_i - T_j|^2)
double uniformity(const PairedEmbeddings& p);

struct ModalityGap {
  std::vector<double> delta;  // mean(image) - mean(text)
  double norm = 0.0;
};
ModalityGap modality_gap(const PairedEmbeddings& p);

MetricReport metric_report(const PairedEmbeddings& p);

// Moves each modality half of shift_lambda * delta toward the other and
// re-normalizes. |shift_lambda| <= 2.5.
PairedEmbeddings embedding_shift(const PairedEmbeddings& p, double shift_lambda);

// Ground truth is the diagonal of the square similarity matrix. Ties rank
// the lower index first.
RecallReport recall_at_k(const Matrix& similarity, std::size_t k, Direction direction);

// Max softmax probability of each query at temperature tau.
RetrievalConfidences retrieval_confidences(const Matrix& similarity, double tau,
                                           Direction direction);

// Equal-width bins ((b)/n, (b+1)/n] with 0 assigned to the first bin.
EceReport ece(std::span<const double> confidence, const std::vector<bool>& correct,
              std::size_t n_bins = 10);
std::size_t ece_bin_index(double confidence, std::size_t n_bins);

// Fraction of ordered pairs (i, j != i) where a mixed row beats the positive:
// image side I_i . mixed_j > I_i . T_i, text side T_i . mixed_j > T_i . I_i.
SidedProportion hard_negative_proportion(const PairedEmbeddings& p, const EmbeddingBatch& mixed);

// Same count for the plain cross-modal negatives: I_i . T_j > I_i . T_i and
// T_i . I_j > T_i . I_i.
SidedProportion original_negative_proportion(const PairedEmbeddings& p);

// x = I_source + strength (T_target - T_source), nearest gallery row to x.
SimatResult simat_transform(const UnitVector& image_source, const UnitVector& text_source,
                            const UnitVector& text_target, double strength,
                            const EmbeddingBatch& gallery);

}  // namespace hypermix

#endif  // HYPERMIX_METRICS_HPP_
