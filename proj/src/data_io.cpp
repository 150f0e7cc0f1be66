#include "hypermix/data_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "hypermix/error.hpp"
#include "hypermix/geodesic.hpp"
#include "hypermix/random.hpp"
#include "hypermix/vmf.hpp"

namespace hypermix {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};

template <typename U>
void put_le(std::vector<std::byte>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i)
    out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
}

template <typename U>
U get_le(std::span<const std::byte> b, std::size_t at) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    v |= static_cast<U>(std::to_integer<std::uint8_t>(b[at + i])) << (8 * i);
  return v;
}

std::string name_of(const fs::path& p) { return "'" + p.string() + "'"; }

std::vector<std::byte> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + name_of(path));
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoError, "cannot read " + name_of(path));
  std::vector<std::byte> out(raw.size());
  std::transform(raw.begin(), raw.end(), out.begin(), [](char c) { return std::byte(c); });
  return out;
}

void spill(const fs::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot create " + name_of(path));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + name_of(path));
}

// Re-throws with the path in front of the message.
template <typename F>
auto with_path(const fs::path& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), name_of(path) + ": " + e.message(), e.row());
  }
}

}  // namespace

std::vector<std::byte> encode_emb(const Matrix& m) {
  if (m.rows() > UINT32_MAX || m.cols() > UINT32_MAX)
    throw Error(ErrorCode::InvalidArgument, "matrix too large for EMB1");
  std::vector<std::byte> out;
  out.reserve(kEmbHeaderSize + 4 * m.size());
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put_le<std::uint16_t>(out, kEmbVersion);
  put_le<std::uint8_t>(out, kEmbDtypeF32);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  for (double x : m.flat()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
  return out;
}

Matrix decode_emb(std::span<const std::byte> b) {
  if (b.size() >= 4) {
    for (std::size_t i = 0; i < 4; ++i)
      if (std::to_integer<char>(b[i]) != kMagic[i])
        throw Error(ErrorCode::BadMagic, "missing EMB1 magic");
  }
  if (b.size() < kEmbHeaderSize) throw Error(ErrorCode::TruncatedFile, "header is incomplete");
  const auto version = get_le<std::uint16_t>(b, 4);
  if (version != kEmbVersion)
    throw Error(ErrorCode::UnsupportedVersion, "version " + std::to_string(version));
  const auto dtype = get_le<std::uint8_t>(b, 6);
  if (dtype != kEmbDtypeF32)
    throw Error(ErrorCode::UnsupportedDtype, "dtype code " + std::to_string(dtype));
  const std::uint64_t rows = get_le<std::uint32_t>(b, 7);
  const std::uint64_t cols = get_le<std::uint32_t>(b, 11);
  const std::uint64_t expected = rows * cols * 4;
  const std::uint64_t payload = b.size() - kEmbHeaderSize;
  if (payload < expected)
    throw Error(ErrorCode::TruncatedFile, "payload has " + std::to_string(payload) +
                                              " bytes, expected " + std::to_string(expected));
  if (payload > expected)
    throw Error(ErrorCode::TrailingData, std::to_string(payload - expected) +
                                             " bytes after the payload");
  Matrix m(rows, cols);
  auto flat = m.flat();
  for (std::size_t k = 0; k < flat.size(); ++k) {
    const float f = std::bit_cast<float>(get_le<std::uint32_t>(b, kEmbHeaderSize + 4 * k));
    if (!std::isfinite(f))
      throw Error(ErrorCode::NonFiniteValue, "non-finite value", k / cols);
    flat[k] = f;
  }
  return m;
}

EmbeddingBatch to_unit_batch(Matrix rows) {
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    auto r = rows.row(i);
    const double n = norm(r);
    const double dev = std::abs(n - 1.0);
    if (dev >= kLoadUnitTolerance)
      throw Error(ErrorCode::NotUnitNorm, "row norm " + std::to_string(n) + " is not 1", i);
    if (dev > kRenormalizeThreshold)
      for (double& x : r) x /= n;
  }
  return EmbeddingBatch::from_rows(std::move(rows));
}

void write_emb(const fs::path& path, const EmbeddingBatch& batch) {
  spill(path, encode_emb(batch.matrix()));
}

void write_emb_raw(const fs::path& path, const Matrix& m) { spill(path, encode_emb(m)); }

EmbeddingBatch read_emb(const fs::path& path) {
  return with_path(path, [&] { return to_unit_batch(decode_emb(slurp(path))); });
}

Matrix read_emb_raw(const fs::path& path) {
  return with_path(path, [&] { return decode_emb(slurp(path)); });
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + name_of(path));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, name_of(path) + ": " + e.what());
  }
  auto field = [&](const char* key) -> std::string {
    if (!j.is_object() || !j.contains(key) || !j[key].is_string())
      throw Error(ErrorCode::InvalidConfig, name_of(path) + ": '" + key + "' must be a string");
    return j[key].get<std::string>();
  };
  const fs::path base = path.parent_path();
  Manifest m;
  m.image_emb = base / field("image_emb");
  m.text_emb = base / field("text_emb");
  if (j.contains("names")) {
    if (!j["names"].is_array())
      throw Error(ErrorCode::InvalidConfig, name_of(path) + ": 'names' must be a list");
    std::vector<std::string> names;
    for (const auto& n : j["names"]) {
      if (!n.is_string())
        throw Error(ErrorCode::InvalidConfig, name_of(path) + ": 'names' entries must be strings");
      names.push_back(n.get<std::string>());
    }
    m.names = std::move(names);
  }
  return m;
}

void write_manifest(const fs::path& path, const Manifest& m) {
  nlohmann::json j = {{"image_emb", m.image_emb.string()}, {"text_emb", m.text_emb.string()}};
  if (m.names) j["names"] = *m.names;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot create " + name_of(path));
  out << j.dump(2) << '\n';
}

PairedEmbeddings load_pairs(const fs::path& image, const fs::path& text) {
  return PairedEmbeddings(read_emb(image), read_emb(text));
}

PairedEmbeddings load_pairs(const Manifest& m) {
  PairedEmbeddings p = load_pairs(m.image_emb, m.text_emb);
  if (m.names && m.names->size() != p.size())
    throw Error(ErrorCode::DimensionMismatch, "manifest lists " + std::to_string(m.names->size()) +
                                                  " names for " + std::to_string(p.size()) +
                                                  " rows");
  return p;
}

void SynthConfig::validate() const {
  auto fail = [](const char* field, const char* rule) {
    throw Error(ErrorCode::InvalidConfig, std::string(field) + " " + rule);
  };
  if (m < 1) fail("m", "must be at least 1");
  if (d < 2) fail("d", "must be at least 2");
  if (!(gap_angle > 0.0 && gap_angle < std::numbers::pi)) fail("gap_angle", "must lie in (0, pi)");
  if (!(kappa_modality > 0.0) || !std::isfinite(kappa_modality))
    fail("kappa_modality", "must be positive");
  if (!(pair_coupling >= 0.0 && pair_coupling <= 1.0)) fail("pair_coupling", "must lie in [0, 1]");
  if (!(shared_kappa > 0.0) || !std::isfinite(shared_kappa))
    fail("shared_kappa", "must be positive");
}

PairedEmbeddings synth_bipartite(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.d;
  const double scale = static_cast<double>(d - 1);
  std::vector<double> mid(d, 0.0);
  mid[0] = 1.0;
  std::vector<double> c_img(d, 0.0);
  std::vector<double> c_txt(d, 0.0);
  c_img[0] = c_txt[0] = std::cos(cfg.gap_angle / 2.0);
  c_img[1] = std::sin(cfg.gap_angle / 2.0);
  c_txt[1] = -c_img[1];

  Rng rng(cfg.seed);
  Matrix img(cfg.m, d);
  Matrix txt(cfg.m, d);
  const double c = cfg.pair_coupling;
  for (std::size_t i = 0; i < cfg.m; ++i) {
    std::vector<double> s = sample_vmf(mid, cfg.shared_kappa * scale, rng);
    s[0] = std::abs(s[0]);
    s[1] = 0.0;
    const double sn = norm(s);
    if (sn < kZeroNorm) s = mid;
    else
      for (double& x : s) x /= sn;
    std::vector<double> v = sample_vmf(c_img, cfg.kappa_modality * scale, rng);
    std::vector<double> t = sample_vmf(c_txt, cfg.kappa_modality * scale, rng);
    v[1] = std::abs(v[1]);
    t[1] = -std::abs(t[1]);
    for (std::size_t k = 0; k < d; ++k) {
      img(i, k) = (1.0 - c) * v[k] + c * s[k];
      txt(i, k) = (1.0 - c) * t[k] + c * s[k];
    }
  }
  return PairedEmbeddings(EmbeddingBatch::normalized(std::move(img)),
                          EmbeddingBatch::normalized(std::move(txt)));
}

}  // namespace hypermix
