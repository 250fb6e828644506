#include "tropfact/factor_engine.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace tropfact {

namespace {

void check_update_args(const MaskedMatrix& r, const Matrix& u, const Matrix& v, std::size_t i,
                       std::size_t j, std::size_t k) {
  if (i >= r.rows() || j >= r.cols()) throw std::out_of_range("update position out of range");
  if (k >= u.cols() || k >= v.rows()) throw std::out_of_range("factor index out of range");
  if (!r.given(i, j)) {
    throw std::invalid_argument("update seeded from missing entry (" + std::to_string(i) + ", " +
                                std::to_string(j) + ")");
  }
}

UpdateOutcome save_slices(UpdateRule rule, const Matrix& u, const Matrix& v, std::size_t i,
                          std::size_t j, std::size_t k) {
  UpdateOutcome out;
  out.rule = rule;
  out.i = i;
  out.j = j;
  out.k = k;
  out.saved_u_col = u.column(k);
  const auto vrow = v.row(k);
  out.saved_v_row.assign(vrow.begin(), vrow.end());
  return out;
}

thread_local std::vector<double> g_col;

}  // namespace

UpdateOutcome update_slices(UpdateRule rule, const MaskedMatrix& r, Matrix& u, Matrix& v,
                            std::size_t i, std::size_t j, std::size_t k) {
  check_update_args(r, u, v, i, j, k);
  UpdateOutcome out = save_slices(rule, u, v, i, j, k);
  g_col.resize(r.rows());
  if (rule == UpdateRule::Ulf) {
    u(i, k) = r(i, j) - v(k, j);
    for (std::size_t t = 0; t < r.rows(); ++t) g_col[t] = u(t, k);
    residuate_basis_row(r, g_col, v.row(k));
    residuate_coef_col(r, v.row(k), g_col);
    u.set_column(k, g_col);
  } else {
    v(k, j) = r(i, j) - u(i, k);
    residuate_coef_col(r, v.row(k), g_col);
    u.set_column(k, g_col);
    residuate_basis_row(r, g_col, v.row(k));
  }
  return out;
}

bool slices_unchanged(const Matrix& u, const Matrix& v, const UpdateOutcome& out) {
  const auto vrow = v.row(out.k);
  if (!std::equal(vrow.begin(), vrow.end(), out.saved_v_row.begin())) return false;
  for (std::size_t t = 0; t < u.rows(); ++t)
    if (u(t, out.k) != out.saved_u_col[t]) return false;
  return true;
}

UpdateOutcome f_ulf(const MaskedMatrix& r, Matrix& u, Matrix& v, std::size_t i, std::size_t j,
                    std::size_t k, double reject_at) {
  UpdateOutcome out = update_slices(UpdateRule::Ulf, r, u, v, i, j, k);
  out.error = approx_error_bounded(r, u, v, reject_at);
  return out;
}

UpdateOutcome f_urf(const MaskedMatrix& r, Matrix& u, Matrix& v, std::size_t i, std::size_t j,
                    std::size_t k, double reject_at) {
  UpdateOutcome out = update_slices(UpdateRule::Urf, r, u, v, i, j, k);
  out.error = approx_error_bounded(r, u, v, reject_at);
  return out;
}

UpdateOutcome apply_update(UpdateRule rule, const MaskedMatrix& r, Matrix& u, Matrix& v,
                           std::size_t i, std::size_t j, std::size_t k, double reject_at) {
  return rule == UpdateRule::Ulf ? f_ulf(r, u, v, i, j, k, reject_at)
                                 : f_urf(r, u, v, i, j, k, reject_at);
}

void revert_update(Matrix& u, Matrix& v, const UpdateOutcome& outcome) {
  u.set_column(outcome.k, outcome.saved_u_col);
  std::copy(outcome.saved_v_row.begin(), outcome.saved_v_row.end(), v.row(outcome.k).begin());
}

FactorPair random_acol_init(const MaskedMatrix& r, std::size_t rank, std::size_t q, Rng& rng) {
  if (rank < 1) throw std::invalid_argument("rank must be at least 1");
  if (q < 1) throw std::invalid_argument("Random Acol needs at least one column per average");
  const std::size_t m = r.rows(), n = r.cols();
  if (n == 0 || m == 0) throw std::invalid_argument("empty data matrix");
  q = std::min(q, n);

  std::vector<double> row_mean(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (r.given(i, j)) {
        s += r(i, j);
        ++c;
      }
    }
    row_mean[i] = c ? s / static_cast<double>(c) : 0.0;
  }

  Matrix u(m, rank);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> cols(q);
  for (std::size_t l = 0; l < rank; ++l) {
    for (auto& c : cols) c = pick(rng);
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      std::size_t c = 0;
      for (std::size_t j : cols) {
        if (r.given(i, j)) {
          s += r(i, j);
          ++c;
        }
      }
      u(i, l) = c ? s / static_cast<double>(c) : row_mean[i];
    }
  }

  FactorPair pair;
  pair.v = residuate_basis(r, u);
  pair.u = std::move(u);
  pair.row_perm = Permutation::identity(m);
  pair.col_perm = Permutation::identity(n);
  return pair;
}

FactorPair random_acol_init(const MaskedMatrix& r, std::size_t rank, std::size_t q,
                            std::uint64_t seed) {
  Rng rng(seed);
  return random_acol_init(r, rank, q, rng);
}

FitState::FitState(const MaskedMatrix& data, Matrix u, Matrix v, Rng& rng,
                   Clock::time_point start, std::optional<double> seconds_limit,
                   Trajectory& trajectory, const FitObserver* observer)
    : data_(data),
      u_(std::move(u)),
      v_(std::move(v)),
      rng_(rng),
      start_(start),
      trajectory_(trajectory),
      observer_(observer) {
  if (seconds_limit) {
    deadline_ = start + std::chrono::duration_cast<Clock::duration>(
                            std::chrono::duration<double>(*seconds_limit));
  }
  error_ = approx_error(data_, u_, v_);
}

bool FitState::try_update(UpdateRule rule, std::size_t i, std::size_t j, std::size_t k) {
  UpdateOutcome out = apply(rule, i, j, k);
  if (out.error < error_) {
    commit(out);
    return true;
  }
  revert(out);
  return false;
}

UpdateOutcome FitState::apply(UpdateRule rule, std::size_t i, std::size_t j, std::size_t k) {
  ++counters_.trials;
  UpdateOutcome out = update_slices(rule, data_, u_, v_, i, j, k);
  out.error = slices_unchanged(u_, v_, out) ? error_ : approx_error_bounded(data_, u_, v_, error_);
  return out;
}

void FitState::revert(const UpdateOutcome& outcome) {
  revert_update(u_, v_, outcome);
  if (observer_ && observer_->on_trial) observer_->on_trial(outcome, false);
}

void FitState::commit(const UpdateOutcome& outcome) {
  error_ = outcome.error;
  ++counters_.accepted;
  record_sample();
  if (observer_ && observer_->on_trial) observer_->on_trial(outcome, true);
}

bool FitState::expired() const noexcept { return deadline_ && Clock::now() >= *deadline_; }

double FitState::elapsed_seconds() const noexcept {
  return std::chrono::duration<double>(Clock::now() - start_).count();
}

void FitState::record_sample() {
  trajectory_.samples.push_back(
      {elapsed_seconds(), static_cast<double>(completed_sweeps_) + progress_, error_});
}

void restore_orientation(FactorPair& pair, Matrix fitted_u, Matrix fitted_v) {
  Matrix u = unpermute_rows(fitted_u, pair.row_perm);
  Matrix v = unpermute_cols(fitted_v, pair.col_perm);
  if (pair.transposed) {
    pair.u = v.transposed();
    pair.v = u.transposed();
  } else {
    pair.u = std::move(u);
    pair.v = std::move(v);
  }
}

FitResult run_fit(const MaskedMatrix& r, const Orientation& orientation, const FitConfig& config,
                  const SweepFn& sweep, const FitObserver* observer) {
  const Budget& budget = config.budget;
  if (!budget.sweeps && !budget.seconds) {
    throw std::invalid_argument("a sweep budget or a wall-clock budget is required");
  }
  if (budget.seconds && !(*budget.seconds > 0.0)) {
    throw std::invalid_argument("wall-clock budget must be positive");
  }
  if (config.rank < 1) throw std::invalid_argument("rank must be at least 1");
  if (!(config.epsilon_rel >= 0.0)) throw std::invalid_argument("epsilon must be non-negative");
  r.validate();

  const auto start = FitState::Clock::now();
  Rng rng(config.seed);

  MaskedMatrix work = orientation.transpose ? r.transposed() : r;
  FactorPair pair;
  pair.transposed = orientation.transpose;
  pair.row_perm = Permutation::identity(work.rows());
  pair.col_perm = Permutation::identity(work.cols());
  switch (orientation.permutation) {
    case PermutationKind::None:
      break;
    case PermutationKind::SortRowsByMin:
      pair.row_perm = sort_perm_by_min(work, Axis::Rows);
      work = permute_rows(work, pair.row_perm);
      break;
    case PermutationKind::SortColsByMin:
      pair.col_perm = sort_perm_by_min(work, Axis::Cols);
      work = permute_cols(work, pair.col_perm);
      break;
    case PermutationKind::RandomRows: {
      std::vector<std::size_t> order = pair.row_perm.forward();
      std::shuffle(order.begin(), order.end(), rng);
      pair.row_perm = Permutation(std::move(order));
      work = permute_rows(work, pair.row_perm);
      break;
    }
  }

  FactorPair init = random_acol_init(work, config.rank, config.acol_q, rng);

  FitResult result;
  result.trajectory.clock = budget.clock();
  result.trajectory.budget = budget.limit();

  FitState state(work, std::move(init.u), std::move(init.v), rng, start, budget.seconds,
                 result.trajectory, observer);
  state.record_sample();

  const double eps = config.epsilon_rel * state.error();
  std::size_t sweeps = 0;
  bool converged = state.error() == 0.0;
  while (!converged) {
    if (budget.sweeps && sweeps >= *budget.sweeps) break;
    if (state.expired()) break;
    const double before = state.error();
    state.begin_sweep(sweeps);
    sweep(state);
    ++sweeps;
    state.begin_sweep(sweeps);
    state.record_sample();
    if (observer && observer->on_sweep_end) observer->on_sweep_end(sweeps, state.error());
    if (state.expired()) break;
    const double delta = before - state.error();
    if (delta < eps || delta <= 0.0) converged = true;
  }

  result.sweeps = sweeps;
  result.converged = converged;
  result.counters = state.counters();
  restore_orientation(pair, state.take_u(), state.take_v());
  result.factors = std::move(pair);
  result.final_error = approx_error(r, result.factors.u, result.factors.v);
  return result;
}

void stmf_sweep(FitState& state) {
  const MaskedMatrix& r = state.data();
  const std::size_t m = r.rows(), n = r.cols();
  const double total = static_cast<double>(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!r.given(i, j)) continue;
      if (state.expired()) return;
      state.set_progress(static_cast<double>(i * n + j + 1) / total);
      bool done = false;
      for (std::size_t k = 0; k < state.rank() && !done; ++k)
        done = state.try_update(UpdateRule::Ulf, i, j, k);
      for (std::size_t k = 0; k < state.rank() && !done; ++k)
        done = state.try_update(UpdateRule::Urf, i, j, k);
    }
  }
}

FitResult stmf_baseline(const MaskedMatrix& r, const FitConfig& config,
                        const FitObserver* observer) {
  return run_fit(r, Orientation{false, PermutationKind::SortColsByMin}, config, stmf_sweep,
                 observer);
}

}  // namespace tropfact
