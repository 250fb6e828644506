#include "tropfact/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace tropfact {

void SynthSpec::validate() const {
  if (true_rank < 1) throw std::invalid_argument("true rank must be at least 1");
  if (m < true_rank || n < true_rank) {
    throw std::invalid_argument("matrix dimensions must be at least the true rank");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must be in [0, 1]");
  if (!(mask_fraction >= 0.0 && mask_fraction < 1.0)) {
    throw std::invalid_argument("mask fraction must be in [0, 1)");
  }
}

Mixture gen_mixture(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Mixture out{Matrix(spec.m, spec.n), Matrix(spec.m, spec.true_rank),
              Matrix(spec.true_rank, spec.n)};
  for (double& x : out.a.data()) x = unit(rng);
  for (double& x : out.b.data()) x = unit(rng);

  const Matrix trop = trop_matmul(out.a, out.b);
  for (std::size_t i = 0; i < spec.m; ++i) {
    for (std::size_t j = 0; j < spec.n; ++j) {
      double lin = 0.0;
      for (std::size_t k = 0; k < spec.true_rank; ++k) lin += out.a(i, k) * out.b(k, j);
      out.full(i, j) = spec.lambda * trop(i, j) + (1.0 - spec.lambda) * lin;
    }
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> MaskedSplit::test_coordinates() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t n = train.cols();
  for (std::size_t p = 0; p < test_mask.size(); ++p)
    if (test_mask[p]) out.emplace_back(p / n, p % n);
  return out;
}

namespace {

bool covers_all(const MaskedMatrix& m) {
  std::vector<std::uint8_t> col(m.cols(), 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    bool row = false;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (m.given(i, j)) {
        row = true;
        col[j] = 1;
      }
    }
    if (!row) return false;
  }
  return std::all_of(col.begin(), col.end(), [](std::uint8_t c) { return c != 0; });
}

constexpr int kMaxRedraws = 10000;

}  // namespace

MaskedSplit apply_mask(const MaskedMatrix& data, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("mask fraction must be in [0, 1)");
  }
  std::vector<std::size_t> given;
  given.reserve(data.given_count());
  const std::size_t n = data.cols();
  for (std::size_t p = 0; p < data.rows() * n; ++p)
    if (data.mask()[p]) given.push_back(p);

  const auto hidden =
      static_cast<std::size_t>(std::floor(fraction * static_cast<double>(given.size())));
  // Covering every row and column needs at least max(m, n) entries.
  if (given.size() - hidden < std::max(data.rows(), data.cols())) {
    throw std::invalid_argument("mask fraction leaves too few entries to cover every row and column");
  }

  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    std::vector<std::size_t> order = given;
    std::shuffle(order.begin(), order.end(), rng);
    MaskedSplit split{data, std::vector<std::uint8_t>(data.rows() * n, 0)};
    for (std::size_t h = 0; h < hidden; ++h) {
      split.train.hide(order[h] / n, order[h] % n);
      split.test_mask[order[h]] = 1;
    }
    if (covers_all(split.train)) return split;
  }
  throw std::invalid_argument("could not draw a mask that keeps every row and column covered");
}

MaskedSplit apply_mask(const Matrix& full, double fraction, std::uint64_t seed) {
  return apply_mask(MaskedMatrix(full), fraction, seed);
}

SynthDataset generate(const SynthSpec& spec) {
  SynthDataset out;
  out.mixture = gen_mixture(spec);
  out.split = apply_mask(out.mixture.full, spec.mask_fraction, spec.seed ^ 0x6d61736b5eedULL);
  return out;
}

TallWidePair gen_tall_wide_pair(const SynthSpec& spec) {
  SynthSpec tall_spec = spec;
  if (tall_spec.m < tall_spec.n) std::swap(tall_spec.m, tall_spec.n);
  Mixture mix = gen_mixture(tall_spec);
  TallWidePair out{std::move(mix.full), Matrix()};
  out.wide = out.tall.transposed();
  return out;
}

}  // namespace tropfact
