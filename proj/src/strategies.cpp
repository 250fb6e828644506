#include "tropfact/strategies.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tropfact {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

const char* family_name(Family f) {
  switch (f) {
    case Family::ByRow: return "ByRow";
    case Family::ByElement: return "ByElement";
    case Family::ByMatrix: return "ByMatrix";
  }
  return "?";
}

const char* selection_name(Selection s) {
  switch (s) {
    case Selection::Seq: return "SEQ";
    case Selection::Td: return "TD";
    case Selection::TdA: return "TD_A";
    case Selection::TdB: return "TD_B";
  }
  return "?";
}

const char* permutation_name(PermutationChoice p) {
  switch (p) {
    case PermutationChoice::NoPerm: return "NoPerm";
    case PermutationChoice::PermR: return "PermR";
    case PermutationChoice::PermC: return "PermC";
    case PermutationChoice::RandPermR: return "RandPermR";
  }
  return "?";
}

}  // namespace

void StrategySpec::validate() const {
  switch (family) {
    case Family::ByElement:
      if (selection != Selection::Td || permutation != PermutationChoice::PermC) {
        throw std::invalid_argument("ByElement requires TD selection and PermC");
      }
      break;
    case Family::ByMatrix:
      if (selection != Selection::Td || permutation != PermutationChoice::NoPerm) {
        throw std::invalid_argument("ByMatrix requires TD selection and NoPerm");
      }
      break;
    case Family::ByRow:
      if (permutation == PermutationChoice::PermC) {
        throw std::invalid_argument("ByRow supports NoPerm, PermR or RandPermR");
      }
      break;
  }
}

std::string StrategySpec::name() const {
  std::string out = "STMF_";
  out += family_name(family);
  out += '_';
  out += permutation_name(permutation);
  out += '_';
  out += selection_name(selection);
  if (prefer_wide) out += "_W";
  return out;
}

Orientation StrategySpec::orientation_for(const MaskedMatrix& r) const {
  Orientation o;
  o.transpose = prefer_wide && r.rows() > r.cols();
  switch (permutation) {
    case PermutationChoice::NoPerm: o.permutation = PermutationKind::None; break;
    case PermutationChoice::PermR: o.permutation = PermutationKind::SortRowsByMin; break;
    case PermutationChoice::PermC: o.permutation = PermutationKind::SortColsByMin; break;
    case PermutationChoice::RandPermR: o.permutation = PermutationKind::RandomRows; break;
  }
  return o;
}

StrategySpec fast_stmf_spec() {
  return StrategySpec{Family::ByRow, Selection::TdA, PermutationChoice::RandPermR, true};
}

std::string MethodSpec::name() const {
  if (baseline) return "STMF";
  if (strategy == fast_stmf_spec()) return "FastSTMF";
  return strategy.name();
}

MethodSpec parse_method(std::string_view raw) {
  const std::string name = upper(raw);
  MethodSpec method;
  if (name == "STMF") {
    method.baseline = true;
    return method;
  }
  if (name == "FASTSTMF") {
    method.strategy = fast_stmf_spec();
    return method;
  }
  const auto fail = [&]() -> MethodSpec {
    throw std::invalid_argument("unknown method name '" + std::string(raw) + "'");
  };
  std::string rest = name;
  if (rest.rfind("STMF_", 0) != 0) return fail();
  rest.erase(0, 5);

  StrategySpec spec;
  const auto take = [&rest](std::string_view token) {
    if (rest.rfind(token, 0) == 0 && (rest.size() == token.size() || rest[token.size()] == '_')) {
      rest.erase(0, std::min(rest.size(), token.size() + 1));
      return true;
    }
    return false;
  };
  if (take("BYROW")) spec.family = Family::ByRow;
  else if (take("BYELEMENT")) spec.family = Family::ByElement;
  else if (take("BYMATRIX")) spec.family = Family::ByMatrix;
  else return fail();

  if (take("NOPERM")) spec.permutation = PermutationChoice::NoPerm;
  else if (take("PERMR")) spec.permutation = PermutationChoice::PermR;
  else if (take("PERMC")) spec.permutation = PermutationChoice::PermC;
  else if (take("RANDPERMR") || take("RANDPERM")) spec.permutation = PermutationChoice::RandPermR;
  else return fail();

  spec.prefer_wide = false;
  if (rest.size() >= 2 && rest.compare(rest.size() - 2, 2, "_W") == 0) {
    spec.prefer_wide = true;
    rest.erase(rest.size() - 2);
  }
  if (rest == "SEQ") spec.selection = Selection::Seq;
  else if (rest == "TD") spec.selection = Selection::Td;
  else if (rest == "TD_A") spec.selection = Selection::TdA;
  else if (rest == "TD_B") spec.selection = Selection::TdB;
  else return fail();

  spec.validate();
  method.strategy = spec;
  return method;
}

ScoreTable compute_scores(const MaskedMatrix& r, const Matrix& u, const Matrix& v) {
  const std::size_t m = r.rows(), n = r.cols(), rank = u.cols();
  ScoreTable s;
  s.product = Matrix(m, n, kNegInf);
  s.argmax.assign(m * n, 0);
  s.td_row.assign(m, 0.0);
  s.td_col.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    auto prow = s.product.row(i);
    std::uint32_t* arow = s.argmax.data() + i * n;
    for (std::size_t k = 0; k < rank; ++k) {
      const double uik = u(i, k);
      const auto vrow = v.row(k);
      for (std::size_t j = 0; j < n; ++j) {
        const double x = uik + vrow[j];
        if (x > prow[j]) {
          prow[j] = x;
          arow[j] = static_cast<std::uint32_t>(k);
        }
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (!r.given(i, j)) continue;
      const double d = std::abs(r(i, j) - prow[j]);
      s.td_row[i] += d;
      s.td_col[j] += d;
    }
  }
  return s;
}

std::size_t select_k_td(const Matrix& u, const Matrix& v, std::size_t i, std::size_t j) {
  return argmax_k(u, v, i, j);
}

std::size_t select_k_td_a(const MaskedMatrix& r, const ScoreTable& s, std::size_t rank,
                          std::size_t i, std::size_t j) {
  thread_local std::vector<std::size_t> counts;
  counts.assign(rank, 0);
  for (std::size_t t = 0; t < r.cols(); ++t)
    if (r.given(i, t)) ++counts[s.f(i, t)];
  for (std::size_t t = 0; t < r.rows(); ++t)
    if (r.given(t, j)) ++counts[s.f(t, j)];
  return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) -
                                  counts.begin());
}

std::size_t select_k_td_a(const MaskedMatrix& r, const Matrix& u, const Matrix& v, std::size_t i,
                          std::size_t j) {
  return select_k_td_a(r, compute_scores(r, u, v), u.cols(), i, j);
}

std::size_t select_k_td_b(const MaskedMatrix& r, const ScoreTable& s, std::size_t i,
                          std::size_t j) {
  std::size_t j0 = j;
  double best = -1.0;
  for (std::size_t t = 0; t < r.cols(); ++t) {
    if (r.given(i, t) && s.td_col[t] > best) {
      best = s.td_col[t];
      j0 = t;
    }
  }
  std::size_t i0 = i;
  best = -1.0;
  for (std::size_t t = 0; t < r.rows(); ++t) {
    if (r.given(t, j) && s.td_row[t] > best) {
      best = s.td_row[t];
      i0 = t;
    }
  }
  return s.product(i, j0) >= s.product(i0, j) ? s.f(i, j0) : s.f(i0, j);
}

std::size_t select_k_td_b(const MaskedMatrix& r, const Matrix& u, const Matrix& v, std::size_t i,
                          std::size_t j) {
  return select_k_td_b(r, compute_scores(r, u, v), i, j);
}

std::vector<std::size_t> byrow_candidate_columns(const MaskedMatrix& r, const ScoreTable& s,
                                                 std::size_t i) {
  std::vector<std::size_t> cols;
  cols.reserve(r.cols());
  for (std::size_t j = 0; j < r.cols(); ++j)
    if (r.given(i, j)) cols.push_back(j);
  std::stable_sort(cols.begin(), cols.end(),
                   [&](std::size_t a, std::size_t b) { return s.td_col[a] > s.td_col[b]; });
  return cols;
}

bool byrow_update_row(FitState& state, std::size_t i, Selection selection) {
  if (selection == Selection::Seq) return byrow_seq_row(state, i);
  const MaskedMatrix& r = state.data();
  // Reverted trials restore the pair bitwise, so one score table serves the
  // whole row.
  const ScoreTable scores = compute_scores(r, state.u(), state.v());
  for (std::size_t j : byrow_candidate_columns(r, scores, i)) {
    if (state.expired()) return false;
    std::size_t k = 0;
    switch (selection) {
      case Selection::Td: k = scores.f(i, j); break;
      case Selection::TdA: k = select_k_td_a(r, scores, state.rank(), i, j); break;
      case Selection::TdB: k = select_k_td_b(r, scores, i, j); break;
      case Selection::Seq: break;
    }
    if (state.try_update(UpdateRule::Ulf, i, j, k)) return true;
    if (state.try_update(UpdateRule::Urf, i, j, k)) return true;
  }
  return false;
}

bool byrow_seq_row(FitState& state, std::size_t i) {
  const MaskedMatrix& r = state.data();
  const double before = state.error();
  double best_decrease = 0.0;
  bool found = false;
  std::size_t best_j = 0, best_k = 0;
  UpdateRule best_rule = UpdateRule::Ulf;
  for (std::size_t j = 0; j < r.cols(); ++j) {
    if (!r.given(i, j)) continue;
    if (state.expired()) return false;
    for (std::size_t k = 0; k < state.rank(); ++k) {
      for (UpdateRule rule : {UpdateRule::Ulf, UpdateRule::Urf}) {
        UpdateOutcome trial = state.apply(rule, i, j, k);
        const double decrease = before - trial.error;
        state.revert(trial);
        if (trial.error < before && decrease > best_decrease) {
          best_decrease = decrease;
          best_j = j;
          best_k = k;
          best_rule = rule;
          found = true;
        }
      }
    }
  }
  if (!found) return false;
  state.commit(state.apply(best_rule, i, best_j, best_k));
  return true;
}

void byrow_sweep(FitState& state, Selection selection) {
  const std::size_t m = state.data().rows();
  for (std::size_t i = 0; i < m; ++i) {
    if (state.expired()) return;
    state.set_progress(static_cast<double>(i + 1) / static_cast<double>(m));
    byrow_update_row(state, i, selection);
  }
}

void byelement_sweep(FitState& state) {
  const MaskedMatrix& r = state.data();
  const std::size_t m = r.rows(), n = r.cols();
  const double total = static_cast<double>(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!r.given(i, j)) continue;
      if (td(r, state.u(), state.v(), i, j) == 0.0) continue;
      if (state.expired()) return;
      state.set_progress(static_cast<double>(i * n + j + 1) / total);
      const std::size_t k = argmax_k(state.u(), state.v(), i, j);
      if (!state.try_update(UpdateRule::Ulf, i, j, k)) state.try_update(UpdateRule::Urf, i, j, k);
    }
  }
}

std::vector<UpdateCandidate> bymatrix_candidates(const MaskedMatrix& r, const Matrix& u,
                                                 const Matrix& v) {
  const ScoreTable s = compute_scores(r, u, v);
  std::vector<UpdateCandidate> out;
  out.reserve(r.given_count());
  for (std::size_t i = 0; i < r.rows(); ++i) {
    for (std::size_t j = 0; j < r.cols(); ++j) {
      if (!r.given(i, j)) continue;
      const double d = std::abs(r(i, j) - s.product(i, j));
      out.push_back({i, j, s.f(i, j), s.td_row[i] + s.td_col[j] - d});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const UpdateCandidate& a, const UpdateCandidate& b) {
    return a.err_score > b.err_score;
  });
  return out;
}

bool bymatrix_step(FitState& state, const UniformSource& uniform) {
  for (const UpdateCandidate& c : bymatrix_candidates(state.data(), state.u(), state.v())) {
    if (state.expired()) return false;
    const UpdateRule rule = uniform() < 0.5 ? UpdateRule::Ulf : UpdateRule::Urf;
    if (state.try_update(rule, c.i, c.j, c.k)) return true;
  }
  return false;
}

bool bymatrix_step(FitState& state) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return bymatrix_step(state, [&] { return dist(state.rng()); });
}

SweepFn sweep_for(const StrategySpec& spec) {
  spec.validate();
  switch (spec.family) {
    case Family::ByRow: {
      const Selection sel = spec.selection;
      return [sel](FitState& s) { byrow_sweep(s, sel); };
    }
    case Family::ByElement:
      return [](FitState& s) { byelement_sweep(s); };
    case Family::ByMatrix:
      return [](FitState& s) { bymatrix_step(s); };
  }
  throw std::invalid_argument("unknown strategy family");
}

FitResult fit(const MaskedMatrix& r, const StrategySpec& spec, const FitConfig& config,
              const FitObserver* observer) {
  return run_fit(r, spec.orientation_for(r), config, sweep_for(spec), observer);
}

FitResult fit_method(const MaskedMatrix& r, const MethodSpec& method, const FitConfig& config,
                     const FitObserver* observer) {
  if (method.baseline) return stmf_baseline(r, config, observer);
  return fit(r, method.strategy, config, observer);
}

FitResult fast_stmf(const MaskedMatrix& r, const FitConfig& config, const FitObserver* observer) {
  return fit(r, fast_stmf_spec(), config, observer);
}

}  // namespace tropfact
