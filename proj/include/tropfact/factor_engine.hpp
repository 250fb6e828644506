#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "tropfact/matrix.hpp"

namespace tropfact {

using Rng = std::mt19937_64;

enum class UpdateRule { Ulf, Urf };

/// Result of one fast update. The saved slices restore the pre-update pair.
struct UpdateOutcome {
  double error = 0.0;
  UpdateRule rule = UpdateRule::Ulf;
  std::size_t i = 0, j = 0, k = 0;
  std::vector<double> saved_u_col;
  std::vector<double> saved_v_row;
};

/// Seeds U_ik from R_ij, then residuates row k of V and column k of U.
/// Touches nothing outside column k of U and row k of V. The reported error
/// is +inf once it is certain to reach reject_at.
UpdateOutcome f_ulf(const MaskedMatrix& r, Matrix& u, Matrix& v, std::size_t i, std::size_t j,
                    std::size_t k, double reject_at = kPosInf);
/// Seeds V_kj from R_ij, then residuates column k of U and row k of V.
UpdateOutcome f_urf(const MaskedMatrix& r, Matrix& u, Matrix& v, std::size_t i, std::size_t j,
                    std::size_t k, double reject_at = kPosInf);
/// F-ULF or F-URF without evaluating the error.
UpdateOutcome update_slices(UpdateRule rule, const MaskedMatrix& r, Matrix& u, Matrix& v,
                            std::size_t i, std::size_t j, std::size_t k);
/// True when the update left column k of U and row k of V bitwise intact.
bool slices_unchanged(const Matrix& u, const Matrix& v, const UpdateOutcome& outcome);
UpdateOutcome apply_update(UpdateRule rule, const MaskedMatrix& r, Matrix& u, Matrix& v,
                           std::size_t i, std::size_t j, std::size_t k,
                           double reject_at = kPosInf);
void revert_update(Matrix& u, Matrix& v, const UpdateOutcome& outcome);

/// Factors in the original orientation of the data, plus how they were fitted.
struct FactorPair {
  Matrix u;  // m x r
  Matrix v;  // r x n
  bool transposed = false;
  Permutation row_perm;  // applied to rows of the fitted-orientation data
  Permutation col_perm;  // applied to columns of the fitted-orientation data

  std::size_t rank() const noexcept { return u.cols(); }
};

/// Random Acol: each column of U averages q randomly chosen data columns
/// (with replacement) over given entries, falling back to the row mean.
/// V is then the residuation of U, so U ⊗ V ≤ R on given entries.
FactorPair random_acol_init(const MaskedMatrix& r, std::size_t rank, std::size_t q, Rng& rng);
FactorPair random_acol_init(const MaskedMatrix& r, std::size_t rank, std::size_t q,
                            std::uint64_t seed);

enum class BudgetClock { Sweeps, WallSeconds };

/// At least one limit must be set; the run stops at whichever is hit first.
struct Budget {
  std::optional<std::size_t> sweeps;
  std::optional<double> seconds;

  BudgetClock clock() const noexcept {
    return sweeps ? BudgetClock::Sweeps : BudgetClock::WallSeconds;
  }
  double limit() const noexcept {
    return sweeps ? static_cast<double>(*sweeps) : seconds.value_or(0.0);
  }
};

struct Sample {
  double wall_seconds = 0.0;
  double sweeps = 0.0;  // completed sweeps plus the fraction of the current one
  double error = 0.0;
};

/// Anytime error record of one run. The first sample is taken right after
/// initialization.
struct Trajectory {
  std::vector<Sample> samples;
  BudgetClock clock = BudgetClock::Sweeps;
  double budget = 0.0;  // t_max in clock units

  double time(const Sample& s) const noexcept {
    return clock == BudgetClock::Sweeps ? s.sweeps : s.wall_seconds;
  }
  double init_time() const { return time(samples.front()); }
  double init_error() const { return samples.front().error; }
  double final_error() const { return samples.back().error; }
};

struct FitConfig {
  std::size_t rank = 3;
  Budget budget;
  std::uint64_t seed = 0;
  /// Convergence when one sweep lowers the error by less than
  /// epsilon_rel * (error after init).
  double epsilon_rel = 1e-8;
  std::size_t acol_q = 5;
};

enum class PermutationKind { None, SortRowsByMin, SortColsByMin, RandomRows };

struct Orientation {
  bool transpose = false;
  PermutationKind permutation = PermutationKind::None;
};

struct FitCounters {
  std::size_t trials = 0;
  std::size_t accepted = 0;
};

/// Optional instrumentation hooks.
struct FitObserver {
  std::function<void(const UpdateOutcome&, bool accepted)> on_trial;
  std::function<void(std::size_t sweep, double error)> on_sweep_end;
};

/// Mutable state of one fitting run, always in the fitted orientation.
/// Single-threaded; owns the factor pair until the run finishes.
class FitState {
 public:
  using Clock = std::chrono::steady_clock;

  FitState(const MaskedMatrix& data, Matrix u, Matrix v, Rng& rng, Clock::time_point start,
           std::optional<double> seconds_limit, Trajectory& trajectory,
           const FitObserver* observer = nullptr);

  const MaskedMatrix& data() const noexcept { return data_; }
  const Matrix& u() const noexcept { return u_; }
  const Matrix& v() const noexcept { return v_; }
  std::size_t rank() const noexcept { return u_.cols(); }
  double error() const noexcept { return error_; }
  Rng& rng() noexcept { return rng_; }
  const FitCounters& counters() const noexcept { return counters_; }

  /// Applies the update and keeps it only if the error strictly decreases.
  bool try_update(UpdateRule rule, std::size_t i, std::size_t j, std::size_t k);

  /// Raw trial: applies without deciding. Follow with revert() or commit().
  /// Trials that cannot lower the current error report +inf.
  UpdateOutcome apply(UpdateRule rule, std::size_t i, std::size_t j, std::size_t k);
  void revert(const UpdateOutcome& outcome);
  void commit(const UpdateOutcome& outcome);

  bool expired() const noexcept;
  double elapsed_seconds() const noexcept;

  /// Position inside the current sweep, in [0, 1]; stamps accepted samples.
  void set_progress(double fraction) noexcept { progress_ = fraction; }
  void begin_sweep(std::size_t completed) noexcept {
    completed_sweeps_ = completed;
    progress_ = 0.0;
  }
  void record_sample();

  Matrix take_u() { return std::move(u_); }
  Matrix take_v() { return std::move(v_); }

 private:
  const MaskedMatrix& data_;
  Matrix u_;
  Matrix v_;
  Rng& rng_;
  Clock::time_point start_;
  std::optional<Clock::time_point> deadline_;
  Trajectory& trajectory_;
  const FitObserver* observer_;
  double error_ = 0.0;
  std::size_t completed_sweeps_ = 0;
  double progress_ = 0.0;
  FitCounters counters_;
};

/// One pass of a strategy over the data.
using SweepFn = std::function<void(FitState&)>;

struct FitResult {
  FactorPair factors;
  Trajectory trajectory;
  double final_error = 0.0;  // approx_error of the restored factors on the input
  std::size_t sweeps = 0;
  bool converged = false;
  FitCounters counters;
};

/// Outer loop shared by every method: reorient, initialize, sweep until the
/// error stalls or the budget runs out, then restore the original orientation.
/// Throws std::invalid_argument on an invalid config.
FitResult run_fit(const MaskedMatrix& r, const Orientation& orientation, const FitConfig& config,
                  const SweepFn& sweep, const FitObserver* observer = nullptr);

/// Original STMF sweep: every given element in row-major order, trying
/// k = 0..r-1 with F-ULF, then k = 0..r-1 with F-URF, keeping the first
/// strict decrease.
void stmf_sweep(FitState& state);

/// STMF baseline: columns sorted by minimum, no transposition.
FitResult stmf_baseline(const MaskedMatrix& r, const FitConfig& config,
                        const FitObserver* observer = nullptr);

/// Maps factors fitted on the reoriented data back to the original
/// orientation.
void restore_orientation(FactorPair& pair, Matrix fitted_u, Matrix fitted_v);

}  // namespace tropfact
