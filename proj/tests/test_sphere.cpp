#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hypermix/error.hpp"
#include "hypermix/sphere.hpp"
#include "support.hpp"

using namespace hypermix;
using doctest::Approx;

namespace {

UnitVector uv(std::vector<double> c) { return UnitVector::from_components(std::move(c)); }

void check_code(ErrorCode code, auto&& f) {
  try {
    f();
    FAIL("expected " << to_string(code));
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

const double kHalfRoot2 = std::sqrt(0.5);

}  // namespace

TEST_SUITE("sphere") {

TEST_CASE("l2_normalize") {
  const auto v = l2_normalize(std::vector<double>{3, 4});
  CHECK(v[0] == Approx(0.6).epsilon(1e-15));
  CHECK(v[1] == Approx(0.8).epsilon(1e-15));
  const auto e = l2_normalize(std::vector<double>{1, 0, 0});
  CHECK(e[0] == 1.0);
  CHECK(e[2] == 0.0);
  check_code(ErrorCode::ZeroVector, [] { l2_normalize(std::vector<double>{0, 0}); });
  check_code(ErrorCode::ZeroVector, [] { l2_normalize(std::vector<double>{1e-13, 0}); });
  check_code(ErrorCode::InvalidArgument, [] { l2_normalize(std::vector<double>{1}); });
}

TEST_CASE("unit vector validation") {
  check_code(ErrorCode::NotUnitNorm, [] { uv({1.0, 0.1}); });
  CHECK_NOTHROW(uv({1.0, 1e-6}));
  check_code(ErrorCode::BatchTooSmall, [] { EmbeddingBatch::from_rows(Matrix(0, 2)); });
  check_code(ErrorCode::NotUnitNorm, [] { EmbeddingBatch::from_rows(Matrix{{1, 0}, {2, 0}}); });
  try {
    EmbeddingBatch::normalized(Matrix{{1, 0}, {3, 4}, {0, 0}});
    FAIL("expected ZeroVector");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroVector);
    CHECK(e.row() == 2u);
  }
}

TEST_CASE("cosine_sim") {
  CHECK(cosine_sim(uv({1, 0}), uv({1, 0})) == 1.0);
  CHECK(cosine_sim(uv({1, 0}), uv({0, 1})) == 0.0);
  CHECK(cosine_sim(uv({1, 0}), uv({-1, 0})) == -1.0);
  check_code(ErrorCode::DimensionMismatch, [] { cosine_sim(uv({1, 0}), uv({1, 0, 0})); });
}

TEST_CASE("mix ratio range") {
  CHECK_NOTHROW(MixRatio(0.0));
  CHECK_NOTHROW(MixRatio(1.0));
  check_code(ErrorCode::OutOfRange, [] { MixRatio(-0.01); });
  check_code(ErrorCode::OutOfRange, [] { MixRatio(1.01); });
  check_code(ErrorCode::OutOfRange, [] { MixRatio(std::nan("")); });
}

TEST_CASE("geodesic_mix examples") {
  const auto a = uv({1, 0});
  const auto b = uv({0, 1});
  const auto e1 = geodesic_mix(MixRatio(1.0), a, b);
  CHECK(e1[0] == 1.0);
  CHECK(e1[1] == 0.0);
  const auto mid = geodesic_mix(MixRatio(0.5), a, b);
  CHECK(mid[0] == Approx(kHalfRoot2).epsilon(1e-15));
  CHECK(mid[1] == Approx(kHalfRoot2).epsilon(1e-15));
  // sin(pi/8), sin(3pi/8)
  const auto q = geodesic_mix(MixRatio(0.25), a, b);
  CHECK(q[0] == Approx(0.38268343236508977173).epsilon(1e-14));
  CHECK(q[1] == Approx(0.92387953251128675613).epsilon(1e-14));
}

TEST_CASE("geodesic_mix antipodal and near-parallel") {
  check_code(ErrorCode::AntipodalInputs,
             [] { geodesic_mix(MixRatio(0.5), uv({1, 0}), uv({-1, 0})); });
  // just inside the margin is still defined
  const double t = std::numbers::pi - 1e-5;
  CHECK_NOTHROW(geodesic_mix(MixRatio(0.5), uv({1, 0}), uv({std::cos(t), std::sin(t)})));
  const auto same = geodesic_mix(MixRatio(0.3), uv({0, 1}), uv({0, 1}));
  CHECK(same[1] == Approx(1.0).epsilon(1e-15));
  CHECK(std::isfinite(same[0]));
}

TEST_CASE("geodesic_mix matches long double oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t d : {2u, 3u, 8u, 64u}) {
    const Matrix a = test::random_rows(50, d, 100 + d);
    const Matrix b = test::random_rows(50, d, 200 + d);
    for (std::size_t i = 0; i < 50; ++i) {
      const double l = u(rng);
      const auto got = geodesic_mix(MixRatio(l), EmbeddingBatch::from_rows(a).unit_row(i),
                                    EmbeddingBatch::from_rows(b).unit_row(i));
      const auto want = test::slerp_oracle(l, a.row(i), b.row(i));
      for (std::size_t k = 0; k < d; ++k)
        CHECK(std::abs(got[k] - static_cast<double>(want[k])) < 1e-12);
    }
  }
}

TEST_CASE("geodesic_mix properties") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Matrix a = test::random_rows(200, 5, 1);
  const Matrix b = test::random_rows(200, 5, 2);
  const auto A = EmbeddingBatch::from_rows(a);
  const auto B = EmbeddingBatch::from_rows(b);
  for (std::size_t i = 0; i < 200; ++i) {
    const double l = u(rng);
    const auto ai = A.unit_row(i);
    const auto bi = B.unit_row(i);
    const auto m = geodesic_mix(MixRatio(l), ai, bi);
    CHECK(std::abs(norm(m.components()) - 1.0) < 1e-12);
    // minor arc: at least as close to each endpoint as they are to each other
    const double c = cosine_sim(ai, bi);
    CHECK(cosine_sim(m, ai) >= c - 1e-12);
    CHECK(cosine_sim(m, bi) >= c - 1e-12);
    // in span{a, b}: residual after projecting onto the plane vanishes
    const double ab = dot(ai.components(), bi.components());
    const double ma = dot(m.components(), ai.components());
    const double mb = dot(m.components(), bi.components());
    const double det = 1.0 - ab * ab;
    const double x = (ma - ab * mb) / det;
    const double y = (mb - ab * ma) / det;
    double resid = 0.0;
    for (std::size_t k = 0; k < 5; ++k) resid += std::pow(m[k] - x * ai[k] - y * bi[k], 2);
    CHECK(std::sqrt(resid) < 1e-10);
    // argument swap
    const auto s = geodesic_mix(MixRatio(1.0 - l), bi, ai);
    for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(s[k] - m[k]) < 1e-12);
  }
}

TEST_CASE("small-angle limit equals normalized chord") {
  const double th = 1e-4;
  const auto a = uv({1, 0, 0});
  const auto b = uv({std::cos(th), std::sin(th), 0});
  for (double l : {0.1, 0.5, 0.9}) {
    const auto g = geodesic_mix(MixRatio(l), a, b);
    const auto c = linear_mix_normalized(MixRatio(l), a, b);
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(g[k] - c[k]) < 1e-6);
  }
}

TEST_CASE("linear_mix_normalized") {
  const auto e = linear_mix_normalized(MixRatio(1.0), uv({1, 0}), uv({0, 1}));
  CHECK(e[0] == 1.0);
  const auto m = linear_mix_normalized(MixRatio(0.5), uv({1, 0}), uv({0, 1}));
  CHECK(m[0] == Approx(kHalfRoot2).epsilon(1e-15));
  check_code(ErrorCode::ZeroVector,
             [] { linear_mix_normalized(MixRatio(0.5), uv({1, 0}), uv({-1, 0})); });
}

TEST_CASE("batch_geodesic_mix") {
  const auto A = EmbeddingBatch::from_rows(Matrix{{1, 0}, {0, 1}});
  const auto B = EmbeddingBatch::from_rows(Matrix{{0, 1}, {1, 0}});
  CHECK(batch_geodesic_mix(MixRatio(1.0), A, B).matrix() == A.matrix());
  CHECK(batch_geodesic_mix(MixRatio(0.0), A, B).matrix() == B.matrix());
  const auto m = batch_geodesic_mix(MixRatio(0.5), A, B);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 2; ++k) CHECK(m.row(i)[k] == Approx(kHalfRoot2).epsilon(1e-15));
  const auto C = EmbeddingBatch::from_rows(Matrix{{1, 0}, {0, 1}, {1, 0}});
  const auto D = EmbeddingBatch::from_rows(Matrix{{0, 1}, {0, -1}, {-1, 0}});
  try {
    batch_geodesic_mix(MixRatio(0.5), C, D);
    FAIL("expected AntipodalInputs");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AntipodalInputs);
    CHECK(e.row() == 1u);
  }
  check_code(ErrorCode::DimensionMismatch, [&] { batch_geodesic_mix(MixRatio(0.5), A, C); });
}

TEST_CASE("pairwise_similarity and flip") {
  const auto I = EmbeddingBatch::from_rows(Matrix{{1, 0}, {0, 1}});
  CHECK(pairwise_similarity(I, I) == Matrix{{1, 0}, {0, 1}});
  CHECK(pairwise_similarity(EmbeddingBatch::from_rows(Matrix{{1, 0}}),
                            EmbeddingBatch::from_rows(Matrix{{0, 1}})) == Matrix{{0}});
  const auto neg = EmbeddingBatch::from_rows(Matrix{{-1, 0}, {0, -1}});
  CHECK(pairwise_similarity(I, neg) == Matrix{{-1, 0}, {0, -1}});
  const auto A = test::random_batch(7, 4, 3);
  const auto B = test::random_batch(5, 4, 4);
  const Matrix ab = pairwise_similarity(A, B);
  CHECK(ab.transposed() == pairwise_similarity(B, A));
  for (double x : ab.flat()) CHECK((x >= -1.0 && x <= 1.0));
  const auto f = flip_batch(A);
  CHECK(f.row(0)[0] == A.row(6)[0]);
  CHECK(flip_batch(f).matrix() == A.matrix());
  const auto one = EmbeddingBatch::from_rows(Matrix{{0, 1}});
  CHECK(flip_batch(one).matrix() == one.matrix());
  check_code(ErrorCode::DimensionMismatch, [] {
    pairwise_similarity(test::random_batch(2, 3, 1), test::random_batch(2, 4, 1));
  });
}

}  // TEST_SUITE
