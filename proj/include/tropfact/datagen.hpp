#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tropfact/matrix.hpp"

namespace tropfact {

/// Synthetic dataset R_λ = λ (A ⊗ B) + (1 − λ) (A · B).
struct SynthSpec {
  std::size_t m = 200;
  std::size_t n = 200;
  std::size_t true_rank = 3;
  double lambda = 0.5;
  std::uint64_t seed = 0;
  double mask_fraction = 0.2;

  void validate() const;
};

struct Mixture {
  Matrix full;  // m x n
  Matrix a;     // m x true_rank
  Matrix b;     // true_rank x n
};

/// A and B are i.i.d. Uniform[0, 1).
Mixture gen_mixture(const SynthSpec& spec);

struct MaskedSplit {
  MaskedMatrix train;
  std::vector<std::uint8_t> test_mask;  // row-major, 1 = held out

  std::vector<std::pair<std::size_t, std::size_t>> test_coordinates() const;
};

/// Hides floor(fraction * given) of the given entries uniformly without
/// replacement, redrawing until every row and column keeps a given entry.
/// Throws std::invalid_argument when that is impossible.
MaskedSplit apply_mask(const MaskedMatrix& data, double fraction, std::uint64_t seed);
MaskedSplit apply_mask(const Matrix& full, double fraction, std::uint64_t seed);

struct SynthDataset {
  Mixture mixture;
  MaskedSplit split;
};

/// Mixture plus its masked split; the mask stream is derived from spec.seed.
SynthDataset generate(const SynthSpec& spec);

struct TallWidePair {
  Matrix tall;
  Matrix wide;  // tallᵀ
};

/// Builds the tall m x n matrix (m ≥ n) and its transpose.
TallWidePair gen_tall_wide_pair(const SynthSpec& spec);

}  // namespace tropfact
