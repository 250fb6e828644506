#include <doctest.h>

#include "../common/oracles.hpp"
#include "tropfact/datagen.hpp"

using namespace tropfact;

namespace {

Matrix standard_product(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
  return c;
}

}  // namespace

TEST_CASE("mixture endpoints and ranges") {
  SynthSpec spec;
  spec.m = 20;
  spec.n = 15;
  spec.seed = 4;
  for (double lambda : {0.0, 0.5, 1.0}) {
    spec.lambda = lambda;
    const Mixture mix = gen_mixture(spec);
    CHECK(mix.a.rows() == 20);
    CHECK(mix.a.cols() == 3);
    CHECK(mix.b.rows() == 3);
    CHECK(mix.b.cols() == 15);
    for (double x : mix.a.data()) CHECK((x >= 0.0 && x < 1.0));
    const Matrix trop = oracle::maxplus(mix.a, mix.b), lin = standard_product(mix.a, mix.b);
    for (std::size_t p = 0; p < mix.full.size(); ++p) {
      const double expect = lambda * trop.data()[p] + (1 - lambda) * lin.data()[p];
      CHECK(mix.full.data()[p] == doctest::Approx(expect).epsilon(1e-14));
      if (lambda == 1.0) CHECK((mix.full.data()[p] >= 0.0 && mix.full.data()[p] < 2.0));
      if (lambda == 0.0) CHECK((mix.full.data()[p] >= 0.0 && mix.full.data()[p] < 3.0));
    }
  }
  spec.m = spec.n = 1;
  spec.true_rank = 1;
  spec.lambda = 0.5;
  const Mixture one = gen_mixture(spec);
  const double a = one.a(0, 0), b = one.b(0, 0);
  CHECK(one.full(0, 0) == doctest::Approx(0.5 * (a + b) + 0.5 * a * b));
}

TEST_CASE("generator is seeded") {
  SynthSpec spec;
  spec.m = 10;
  spec.n = 12;
  spec.seed = 9;
  CHECK(gen_mixture(spec).full == gen_mixture(spec).full);
  spec.seed = 10;
  SynthSpec other = spec;
  other.seed = 9;
  CHECK_FALSE(gen_mixture(spec).full == gen_mixture(other).full);
}

TEST_CASE("spec validation") {
  SynthSpec spec;
  spec.m = 2;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = SynthSpec{};
  spec.lambda = 1.5;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = SynthSpec{};
  spec.mask_fraction = 1.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("masking") {
  std::mt19937_64 rng(3);
  const Matrix full = oracle::random_matrix(10, 10, rng);
  const MaskedSplit none = apply_mask(full, 0.0, 1);
  CHECK(none.train.given_count() == 100);
  CHECK(none.test_coordinates().empty());

  const MaskedSplit split = apply_mask(full, 0.2, 1);
  CHECK(split.train.given_count() == 80);
  CHECK(split.test_coordinates().size() == 20);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j) {
      const bool train = split.train.given(i, j), test = split.test_mask[i * 10 + j] != 0;
      CHECK(train != test);
      if (train) CHECK(split.train(i, j) == full(i, j));
    }
  CHECK_NOTHROW(split.train.validate());
  CHECK(apply_mask(full, 0.2, 1).test_mask == split.test_mask);

  // Masking only touches given entries.
  MaskedMatrix partial(full);
  partial.hide(0, 0);
  const MaskedSplit p = apply_mask(partial, 0.5, 2);
  CHECK(p.train.given_count() == 99 - 49);
  CHECK(p.test_mask[0] == 0);

  CHECK_THROWS_AS(apply_mask(Matrix(3, 3, 1.0), 0.9, 1), std::invalid_argument);
}

TEST_CASE("tall and wide pair") {
  SynthSpec spec;
  spec.m = 20;
  spec.n = 8;
  spec.seed = 5;
  const TallWidePair pair = gen_tall_wide_pair(spec);
  CHECK(pair.tall.rows() == 20);
  CHECK(pair.wide.rows() == 8);
  CHECK(pair.wide == pair.tall.transposed());
  CHECK(apply_mask(pair.tall, 0.2, 3).train.given_count() ==
        apply_mask(pair.wide, 0.2, 3).train.given_count());
}

TEST_CASE("generate bundles mixture and split") {
  SynthSpec spec;
  spec.m = 12;
  spec.n = 9;
  spec.seed = 77;
  const SynthDataset ds = generate(spec);
  CHECK(ds.mixture.full == gen_mixture(spec).full);
  CHECK(ds.split.test_coordinates().size() == static_cast<std::size_t>(12 * 9 * 0.2));
  CHECK(generate(spec).split.test_mask == ds.split.test_mask);
}
