#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "powerset/batch.hpp"
#include "powerset/core.hpp"
#include "powerset/harness.hpp"

using namespace powerset;
using doctest::Approx;

TEST_CASE("l2_normalize scales to unit length") {
  const Vector a = l2_normalize(Vector{3.0, 4.0});
  CHECK(a[0] == Approx(0.6).epsilon(1e-15));
  CHECK(a[1] == Approx(0.8).epsilon(1e-15));

  const Vector b = l2_normalize(Vector{1.0, 0.0});
  CHECK(b == Vector{1.0, 0.0});
}

TEST_CASE("l2_normalize rejects zero and non-finite vectors") {
  CHECK_THROWS_WITH_AS(l2_normalize(Vector{0.0, 0.0}), "zero-norm embedding", DegenerateInput);
  CHECK_THROWS_AS(l2_normalize(Vector{NAN, 1.0}), DegenerateInput);
  CHECK_THROWS_AS(l2_normalize(Vector{INFINITY, 1.0}), DegenerateInput);
}

TEST_CASE("l2_normalize property: unit norm and positive scale invariance") {
  oracle::Gen gen(11);
  for (int t = 0; t < 500; ++t) {
    const Vector v = gen.vec(gen.index(1, 32), -5.0, 5.0);
    const double scale = gen.uniform(0.01, 100.0);
    Vector scaled = v;
    for (double& x : scaled) x *= scale;
    const Vector u = l2_normalize(v);
    const Vector w = l2_normalize(scaled);
    CHECK(l2_norm(u) == Approx(1.0).epsilon(1e-14));
    for (std::size_t k = 0; k < u.size(); ++k) CHECK(u[k] == Approx(w[k]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("dot of unit vectors") {
  CHECK(dot(Vector{1.0, 0.0}, Vector{1.0, 0.0}) == 1.0);
  CHECK(dot(Vector{1.0, 0.0}, Vector{0.0, 1.0}) == 0.0);
  CHECK_THROWS_AS(dot(Vector{1.0}, Vector{1.0, 2.0}), ShapeError);
}

TEST_CASE("masked_unit_sum") {
  const Matrix patches = Matrix::from_rows({{2.0, 0.0}, {0.0, 0.5}, {1.0, 1.0}});
  const std::vector<unsigned char> mask{1, 0, 1};
  const Vector v = masked_unit_sum(patches, mask);
  CHECK(v[0] == Approx(0.9486832980505138).epsilon(1e-14));
  CHECK(v[1] == Approx(0.31622776601683794).epsilon(1e-14));

  const std::vector<unsigned char> none{0, 0, 0};
  CHECK_THROWS_WITH_AS(masked_unit_sum(patches, none), "empty mask", DegenerateInput);
  const std::vector<unsigned char> short_mask{1, 0};
  CHECK_THROWS_AS(masked_unit_sum(patches, short_mask), ShapeError);
}

TEST_CASE("Matrix shape handling") {
  CHECK_THROWS_AS(Matrix::from_rows({{1.0, 2.0}, {3.0}}), ShapeError);
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1.0, 2.0, 3.0}), ShapeError);
  const Matrix m = Matrix::from_rows({{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}});
  const Matrix t = m.transposed();
  REQUIRE(t.rows() == 3);
  CHECK(t(2, 1) == 6.0);
  CHECK(t.transposed() == m);
}

TEST_CASE("mix_seed separates streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 64; ++s)
    for (std::uint64_t k = 0; k < 64; ++k) seen.insert(mix_seed(s, k));
  CHECK(seen.size() == 64 * 64);
  CHECK(mix_seed(5, 9) == mix_seed(5, 9));
}

TEST_CASE("compute_s0 matches per-pair scalar dot products") {
  SyntheticSpec spec;
  spec.batch_size = 2;
  spec.masks = 2;
  spec.tokens = 3;
  spec.dim = 5;
  spec.grid = {3, 3};
  spec.seed = 21;
  MiniBatch batch = gen_synthetic_batch(spec);
  // Second text gets 2 leaves so the leaf extent is ragged across j.
  batch.items[1].text.tree = parse_bracketed("(S (NP a) (VP b))");
  batch.items[1].text.tokens = Matrix::from_rows({{1.0, 0.0, 0.0, 0.5, 0.0}, {0.0, 1.0, 0.2, 0.0, 0.0}});
  batch.items[1].text.token_map = identity_token_map(batch.items[1].text.tree);
  batch.validate();

  const SimilarityTensor s0 = compute_s0(batch);
  CHECK(s0.leaves(0) == 3);
  CHECK(s0.leaves(1) == 2);
  CHECK(s0.element_count() == 2 * 2 * 3 + 2 * 2 * 2);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const auto ref = oracle::s0_block(batch.items[i].image, batch.items[j].text);
      REQUIRE(s0.cell(i, j).rows() == 2);
      for (std::size_t m = 0; m < 2; ++m)
        for (std::size_t leaf = 0; leaf < s0.leaves(j); ++leaf)
          CHECK(s0(i, j, m, leaf) == Approx(ref[m][leaf]).epsilon(1e-13));
    }
  }
}

TEST_CASE("compute_s0 entries are cosines") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SyntheticSpec spec;
    spec.seed = seed;
    spec.dim = 1 + seed % 7;
    const SimilarityTensor s0 = compute_s0(gen_synthetic_batch(spec));
    for (std::size_t i = 0; i < s0.batch_size(); ++i)
      for (std::size_t j = 0; j < s0.batch_size(); ++j)
        for (double v : s0.cell(i, j).data()) CHECK(std::abs(v) <= 1.0 + 1e-12);
  }
}

TEST_CASE("MiniBatch validation") {
  SyntheticSpec spec;
  spec.batch_size = 2;
  MiniBatch batch = gen_synthetic_batch(spec);
  CHECK_NOTHROW(batch.validate());

  MiniBatch single = batch;
  single.items.pop_back();
  CHECK_THROWS(single.validate());

  MiniBatch bad_dim = batch;
  bad_dim.items[1].text.global.push_back(0.0);
  CHECK_THROWS(bad_dim.validate());

  MiniBatch non_finite = batch;
  non_finite.items[0].image.patches(0, 0) = NAN;
  CHECK_THROWS(non_finite.validate());
}
