#ifndef HYPERMIX_DATA_IO_HPP_
#define HYPERMIX_DATA_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hypermix/matrix.hpp"
#include "hypermix/sphere.hpp"

namespace hypermix {

// EMB1 layout (little-endian): "EMB1", u16 version, u8 dtype, u32 M, u32 d,
// then M*d float32 row-major.
inline constexpr std::uint16_t kEmbVersion = 1;
inline constexpr std::uint8_t kEmbDtypeF32 = 0;
inline constexpr std::size_t kEmbHeaderSize = 15;
// Rows further than this from unit norm are rejected on load.
inline constexpr double kLoadUnitTolerance = 1e-3;
// Rows within this of unit norm are kept as stored; the rest are rescaled.
inline constexpr double kRenormalizeThreshold = 0x1p-22;

std::vector<std::byte> encode_emb(const Matrix& m);
// Unit-norm validation is the caller's concern here.
Matrix decode_emb(std::span<const std::byte> bytes);

void write_emb(const std::filesystem::path& path, const EmbeddingBatch& batch);
void write_emb_raw(const std::filesystem::path& path, const Matrix& m);
EmbeddingBatch read_emb(const std::filesystem::path& path);
Matrix read_emb_raw(const std::filesystem::path& path);

// Applies the load tolerance and re-normalization rules above.
EmbeddingBatch to_unit_batch(Matrix rows);

struct Manifest {
  std::filesystem::path image_emb;
  std::filesystem::path text_emb;
  std::optional<std::vector<std::string>> names;
};

// Relative paths resolve against the manifest's directory.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& m);
PairedEmbeddings load_pairs(const std::filesystem::path& image, const std::filesystem::path& text);
PairedEmbeddings load_pairs(const Manifest& m);

struct SynthConfig {
  std::size_t m = 128;
  std::size_t d = 32;
  double gap_angle = std::numbers::pi / 3.0;
  double kappa_modality = 50.0;
  double pair_coupling = 0.5;
  // Concentration of the shared per-pair direction.
  double shared_kappa = 6.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Two modality clusters around centroids gap_angle apart in the (e0, e1)
// plane. Both concentrations are scaled by (d - 1) before sampling. Each
// modality stays on its own side of the hyperplane e1 = 0.
PairedEmbeddings synth_bipartite(const SynthConfig& cfg);

}  // namespace hypermix

#endif  // HYPERMIX_DATA_IO_HPP_
