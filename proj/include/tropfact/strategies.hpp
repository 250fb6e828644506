#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "tropfact/factor_engine.hpp"

namespace tropfact {

enum class Family { ByRow, ByElement, ByMatrix };
enum class Selection { Seq, Td, TdA, TdB };
enum class PermutationChoice { NoPerm, PermR, PermC, RandPermR };

/// One update strategy, named the way the method tables name them, e.g.
/// STMF_ByRow_RandPermR_TD_A_W.
struct StrategySpec {
  Family family = Family::ByRow;
  Selection selection = Selection::TdA;
  PermutationChoice permutation = PermutationChoice::RandPermR;
  bool prefer_wide = true;

  /// Throws std::invalid_argument for combinations outside the method table.
  void validate() const;
  std::string name() const;
  Orientation orientation_for(const MaskedMatrix& r) const;

  bool operator==(const StrategySpec&) const = default;
};

StrategySpec fast_stmf_spec();

/// Either the original STMF baseline or one of the proposed strategies.
struct MethodSpec {
  bool baseline = false;
  StrategySpec strategy;

  std::string name() const;
  bool operator==(const MethodSpec&) const = default;
};

/// Case-insensitive. Accepts "STMF", "FastSTMF", and
/// STMF_<ByRow|ByElement|ByMatrix>_<NoPerm|PermR|PermC|RandPermR>_<SEQ|TD|TD_A|TD_B>[_W].
MethodSpec parse_method(std::string_view name);

struct UpdateCandidate {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t k = 0;
  double err_score = 0.0;
};

/// U ⊗ V, its argmax indices and the td sums, evaluated once per decision.
struct ScoreTable {
  Matrix product;
  std::vector<std::uint32_t> argmax;  // row-major f(i, j)
  std::vector<double> td_row;
  std::vector<double> td_col;

  std::size_t f(std::size_t i, std::size_t j) const noexcept {
    return argmax[i * product.cols() + j];
  }
};

ScoreTable compute_scores(const MaskedMatrix& r, const Matrix& u, const Matrix& v);

std::size_t select_k_td(const Matrix& u, const Matrix& v, std::size_t i, std::size_t j);
/// Most frequent f over the given entries of row i and column j together.
std::size_t select_k_td_a(const MaskedMatrix& r, const Matrix& u, const Matrix& v, std::size_t i,
                          std::size_t j);
std::size_t select_k_td_a(const MaskedMatrix& r, const ScoreTable& s, std::size_t rank,
                          std::size_t i, std::size_t j);
/// Compares the worst column of row i against the worst row of column j.
/// Column scores are td_col, row scores td_row.
std::size_t select_k_td_b(const MaskedMatrix& r, const Matrix& u, const Matrix& v, std::size_t i,
                          std::size_t j);
std::size_t select_k_td_b(const MaskedMatrix& r, const ScoreTable& s, std::size_t i,
                          std::size_t j);

/// Given columns of row i ordered by td_col, highest first, ties by index.
std::vector<std::size_t> byrow_candidate_columns(const MaskedMatrix& r, const ScoreTable& s,
                                                 std::size_t i);

/// One ByRow decision for row i with a TD-family selection: walk candidate
/// columns, try F-ULF then F-URF at each, stop at the first strict decrease.
bool byrow_update_row(FitState& state, std::size_t i, Selection selection);
/// Exhaustive ByRow decision: the (j, k, rule) with the largest decrease.
bool byrow_seq_row(FitState& state, std::size_t i);
void byrow_sweep(FitState& state, Selection selection);

void byelement_sweep(FitState& state);

using UniformSource = std::function<double()>;

/// All given entries scored by td_row + td_col - td, highest first, stable.
std::vector<UpdateCandidate> bymatrix_candidates(const MaskedMatrix& r, const Matrix& u,
                                                 const Matrix& v);
/// Tries candidates in order, flipping a coin between F-ULF (u < 0.5) and
/// F-URF for each, until one decreases the error.
bool bymatrix_step(FitState& state, const UniformSource& uniform);
bool bymatrix_step(FitState& state);

SweepFn sweep_for(const StrategySpec& spec);

FitResult fit(const MaskedMatrix& r, const StrategySpec& spec, const FitConfig& config,
              const FitObserver* observer = nullptr);
FitResult fit_method(const MaskedMatrix& r, const MethodSpec& method, const FitConfig& config,
                     const FitObserver* observer = nullptr);
FitResult fast_stmf(const MaskedMatrix& r, const FitConfig& config,
                    const FitObserver* observer = nullptr);

}  // namespace tropfact
