#include <doctest.h>

#include <random>

#include "../common/oracles.hpp"
#include "tropfact/strategies.hpp"

using namespace tropfact;

namespace {

struct Harness {
  Rng rng{7};
  Trajectory traj;
  FitObserver observer;
  std::size_t trials = 0;
  std::size_t accepted = 0;
  Harness() {
    observer.on_trial = [this](const UpdateOutcome&, bool ok) {
      ++trials;
      accepted += ok;
    };
  }
  FitState state(const MaskedMatrix& r, Matrix u, Matrix v) {
    return FitState(r, std::move(u), std::move(v), rng, FitState::Clock::now(), std::nullopt, traj,
                    &observer);
  }
};

std::pair<Matrix, Matrix> init_pair(const MaskedMatrix& r, std::size_t rank, std::uint64_t seed) {
  FactorPair p = random_acol_init(r, rank, 5, seed);
  return {std::move(p.u), std::move(p.v)};
}

std::size_t td_b_oracle(const MaskedMatrix& r, const Matrix& u, const Matrix& v, std::size_t i,
                        std::size_t j) {
  const Matrix p = oracle::maxplus(u, v);
  auto col_score = [&](std::size_t c) {
    double s = 0;
    for (std::size_t t = 0; t < r.rows(); ++t)
      if (r.given(t, c)) s += std::fabs(r(t, c) - p(t, c));
    return s;
  };
  auto row_score = [&](std::size_t a) {
    double s = 0;
    for (std::size_t t = 0; t < r.cols(); ++t)
      if (r.given(a, t)) s += std::fabs(r(a, t) - p(a, t));
    return s;
  };
  std::size_t j0 = r.cols(), i0 = r.rows();
  for (std::size_t t = 0; t < r.cols(); ++t)
    if (r.given(i, t) && (j0 == r.cols() || col_score(t) > col_score(j0))) j0 = t;
  for (std::size_t t = 0; t < r.rows(); ++t)
    if (r.given(t, j) && (i0 == r.rows() || row_score(t) > row_score(i0))) i0 = t;
  return p(i, j0) >= p(i0, j) ? oracle::f(u, v, i, j0) : oracle::f(u, v, i0, j);
}

}  // namespace

TEST_CASE("method names") {
  CHECK(parse_method("FastSTMF").strategy == fast_stmf_spec());
  CHECK(fast_stmf_spec().name() == "STMF_ByRow_RandPermR_TD_A_W");
  CHECK(parse_method("stmf").baseline);
  CHECK(parse_method("STMF_ByRow_RandPermR_TD_A_W") == parse_method("FastSTMF"));
  const auto seq = parse_method("STMF_ByRow_PermR_SEQ");
  CHECK(seq.strategy.selection == Selection::Seq);
  CHECK_FALSE(seq.strategy.prefer_wide);
  CHECK(parse_method("STMF_ByElement_PermC_TD_W").strategy.family == Family::ByElement);
  CHECK(parse_method("STMF_ByMatrix_NoPerm_TD_W").strategy.family == Family::ByMatrix);
  CHECK(parse_method("STMF_ByRow_NoPerm_TD_B").strategy.selection == Selection::TdB);
  CHECK_THROWS_AS(parse_method("STMF_ByElement_PermR_TD"), std::invalid_argument);
  CHECK_THROWS_AS(parse_method("STMF_ByMatrix_NoPerm_TD_A"), std::invalid_argument);
  CHECK_THROWS_AS(parse_method("STMF_ByRow_PermC_TD"), std::invalid_argument);
  CHECK_THROWS_AS(parse_method("NMF"), std::invalid_argument);
  for (const char* n : {"STMF_ByRow_NoPerm_SEQ", "STMF_ByRow_PermR_TD_W", "STMF_ByRow_RandPermR_TD_B_W",
                        "STMF_ByElement_PermC_TD", "STMF_ByMatrix_NoPerm_TD_W"})
    CHECK(parse_method(n).name() == n);
}

TEST_CASE("orientation rules") {
  const MaskedMatrix tall(Matrix(6, 3, 1.0)), wide(Matrix(3, 6, 1.0)), square(Matrix(4, 4, 1.0));
  const auto fast = fast_stmf_spec();
  CHECK(fast.orientation_for(tall).transpose);
  CHECK_FALSE(fast.orientation_for(wide).transpose);
  CHECK_FALSE(fast.orientation_for(square).transpose);
  CHECK(fast.orientation_for(wide).permutation == PermutationKind::RandomRows);
  auto plain = parse_method("STMF_ByRow_PermR_TD").strategy;
  CHECK_FALSE(plain.orientation_for(tall).transpose);
  CHECK(plain.orientation_for(tall).permutation == PermutationKind::SortRowsByMin);
  CHECK(parse_method("STMF_ByElement_PermC_TD").strategy.orientation_for(wide).permutation ==
        PermutationKind::SortColsByMin);
}

TEST_CASE("TD_A votes") {
  // r = 1 always gives k = 0.
  std::mt19937_64 rng(1);
  const MaskedMatrix r1 = oracle::random_masked(4, 4, 0.2, rng);
  const Matrix u1 = oracle::random_matrix(4, 1, rng), v1 = oracle::random_matrix(1, 4, rng);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(select_k_td_a(r1, u1, v1, i, j) == 0);

  // Row 0 votes {0,0,1}, column 2 votes {1,1,1}: counts 2 vs 4.
  const Matrix u = Matrix::from_rows({{1, 0}, {0, 1}, {0, 1}});
  const Matrix v = Matrix::from_rows({{0, 0, -5}, {0, 0, 5}});
  const MaskedMatrix r(Matrix(3, 3, 10.0));
  CHECK(select_k_td_a(r, u, v, 0, 2) == 1);

  // Row 0 votes {0,0}, column 0 votes {0,1,1,1}: 3 each, smaller index wins.
  const Matrix ut = Matrix::from_rows({{1, 0}, {0, 1}, {0, 1}, {0, 1}});
  const Matrix vt(2, 3, 0.0);
  MaskedMatrix rt(Matrix(4, 3, 1.0));
  rt.hide(0, 2);
  CHECK(select_k_td_a(rt, ut, vt, 0, 0) == 0);
  rt.hide(0, 1);
  CHECK(select_k_td_a(rt, ut, vt, 0, 0) == 1);
}

TEST_CASE("TD_B against a brute-force transcription") {
  const MaskedMatrix one(Matrix::from_rows({{2}}));
  const Matrix u1 = Matrix::from_rows({{0, 1}}), v1 = Matrix::from_rows({{0}, {0}});
  CHECK(select_k_td_b(one, u1, v1, 0, 0) == oracle::f(u1, v1, 0, 0));

  std::mt19937_64 rng(31);
  for (int t = 0; t < 100; ++t) {
    const MaskedMatrix r = oracle::random_masked(4, 4, 0.2, rng);
    const Matrix u = oracle::random_matrix(4, 3, rng), v = oracle::random_matrix(3, 4, rng);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        CHECK(select_k_td_b(r, u, v, i, j) == td_b_oracle(r, u, v, i, j));
  }
}

TEST_CASE("TD_B takes the first branch on equality") {
  const Matrix u = Matrix::from_rows({{0, -5}, {-5, 0}});
  const Matrix v = Matrix::from_rows({{0, -1}, {-1, 0}});
  // U⊗V = [[0, -1], [-1, 0]] with f(0,1) = 0 and f(1,0) = 1. td = [[0, 6], [5, 9]],
  // so j0 = 1 for row 0 and i0 = 1 for column 0, and both products are -1.
  const MaskedMatrix r(Matrix::from_rows({{0, 5}, {4, 9}}));
  REQUIRE(oracle::f(u, v, 0, 1) == 0);
  REQUIRE(oracle::f(u, v, 1, 0) == 1);
  CHECK(select_k_td_b(r, u, v, 0, 0) == 0);
}

TEST_CASE("ByRow candidate order") {
  // 2x3 with column scores [4, 0, 1].
  const MaskedMatrix r(Matrix::from_rows({{4, 0, 1}, {0, 0, 0}}));
  const Matrix u(2, 1, 0.0), v(1, 3, 0.0);
  const ScoreTable s = compute_scores(r, u, v);
  CHECK(s.td_col == std::vector<double>{4, 0, 1});
  CHECK(byrow_candidate_columns(r, s, 0) == std::vector<std::size_t>{0, 2, 1});
}

TEST_CASE("ByRow accepts at most one update per row") {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 20; ++t) {
    const MaskedMatrix r = oracle::random_masked(8, 10, 0.2, rng);
    auto [u, v] = init_pair(r, 3, t);
    for (Selection sel : {Selection::Seq, Selection::Td, Selection::TdA, Selection::TdB}) {
      Harness h;
      FitState state = h.state(r, u, v);
      for (std::size_t i = 0; i < r.rows(); ++i) {
        const std::size_t before = h.accepted;
        const double e = state.error();
        const bool ok = byrow_update_row(state, i, sel);
        CHECK(h.accepted - before == (ok ? 1u : 0u));
        CHECK(state.error() <= e);
        if (!ok) CHECK(state.error() == e);
      }
    }
  }
}

TEST_CASE("ByRow on an exact row changes nothing") {
  const Matrix u = Matrix::from_rows({{0, 1}, {1, 0}});
  const Matrix v = Matrix::from_rows({{0, 2}, {1, 0}});
  const MaskedMatrix r(trop_matmul(u, v));
  Harness h;
  FitState state = h.state(r, u, v);
  CHECK_FALSE(byrow_update_row(state, 0, Selection::TdA));
  CHECK(state.u() == u);
  CHECK(state.v() == v);
}

TEST_CASE("SEQ picks the largest decrease") {
  std::mt19937_64 rng(51);
  for (int t = 0; t < 100; ++t) {
    const MaskedMatrix r = oracle::random_masked(2, 2, 0.0, rng);
    auto [u, v] = init_pair(r, 2, t);
    const double e0 = approx_error(r, u, v);
    // Brute force over (j, k, rule) with the documented tie order.
    double best = e0;
    Matrix bu = u, bv = v;
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t k = 0; k < 2; ++k)
        for (UpdateRule rule : {UpdateRule::Ulf, UpdateRule::Urf}) {
          Matrix uu = u, vv = v;
          const auto out = apply_update(rule, r, uu, vv, 0, j, k);
          if (out.error < best) {
            best = out.error;
            bu = uu;
            bv = vv;
          }
        }
    Harness h;
    FitState state = h.state(r, u, v);
    byrow_seq_row(state, 0);
    CHECK(state.error() == best);
    CHECK(state.u() == bu);
    CHECK(state.v() == bv);
  }
}

TEST_CASE("SEQ on a single entry tries both rules") {
  const MaskedMatrix rr(Matrix::from_rows({{3}}));
  Harness h;
  FitState state = h.state(rr, Matrix(1, 1, 0.0), Matrix(1, 1, 0.0));
  CHECK(byrow_seq_row(state, 0));
  CHECK(h.trials <= 3);  // two trial evaluations plus the commit
  CHECK(state.error() == 0.0);
}

TEST_CASE("ByElement sweep") {
  SUBCASE("exact data attempts nothing") {
    const Matrix u = Matrix::from_rows({{0, 1}, {2, 0}, {1, 1}});
    const Matrix v = Matrix::from_rows({{0, 1, 3}, {2, 0, 1}});
    const MaskedMatrix r(trop_matmul(u, v));
    Harness h;
    FitState state = h.state(r, u, v);
    byelement_sweep(state);
    CHECK(h.trials == 0);
  }
  SUBCASE("visits only given entries") {
    std::mt19937_64 rng(61);
    const MaskedMatrix r = oracle::random_masked(10, 10, 0.2, rng);
    auto [u, v] = init_pair(r, 3, 1);
    Harness h;
    std::vector<std::pair<std::size_t, std::size_t>> visited;
    h.observer.on_trial = [&](const UpdateOutcome& o, bool) {
      CHECK(r.given(o.i, o.j));
      if (visited.empty() || visited.back() != std::make_pair(o.i, o.j)) visited.emplace_back(o.i, o.j);
    };
    FitState state = h.state(r, u, v);
    byelement_sweep(state);
    CHECK(visited.size() <= r.given_count());
    CHECK(std::is_sorted(visited.begin(), visited.end()));
    CHECK(!visited.empty());
  }
}

TEST_CASE("ByMatrix candidates and stubbed coin") {
  const MaskedMatrix one(Matrix::from_rows({{5}}));
  const Matrix u1(1, 1, 0.0), v1(1, 1, 1.0);
  const auto c1 = bymatrix_candidates(one, u1, v1);
  REQUIRE(c1.size() == 1);
  CHECK(c1[0].err_score == 4.0);

  // Product is 0 everywhere, so td is the data itself.
  const MaskedMatrix r(Matrix::from_rows({{1, 2}, {3, 7}}));
  const Matrix u(2, 1, 0.0), v(1, 2, 0.0);
  // err = td_row + td_col - td: (0,0): 3+4-1=6, (0,1): 3+9-2=10, (1,0): 10+4-3=11, (1,1): 10+9-7=12.
  const auto c = bymatrix_candidates(r, u, v);
  std::vector<std::pair<std::size_t, std::size_t>> order;
  for (const auto& x : c) order.emplace_back(x.i, x.j);
  CHECK(order == std::vector<std::pair<std::size_t, std::size_t>>{{1, 1}, {1, 0}, {0, 1}, {0, 0}});

  std::mt19937_64 rng(71);
  for (int t = 0; t < 20; ++t) {
    const MaskedMatrix data = oracle::random_masked(6, 6, 0.2, rng);
    auto [uu, vv] = init_pair(data, 2, t);
    Harness h1, h2;
    FitState a = h1.state(data, uu, vv);
    bymatrix_step(a, [] { return 0.25; });
    // Reference: ULF only, first decrease in candidate order.
    Matrix ur = uu, vr = vv;
    const double e0 = approx_error(data, ur, vr);
    for (const auto& cand : bymatrix_candidates(data, ur, vr)) {
      Matrix ut = ur, vt = vr;
      const auto out = f_ulf(data, ut, vt, cand.i, cand.j, cand.k);
      if (out.error < e0) {
        ur = ut;
        vr = vt;
        break;
      }
    }
    CHECK(a.u() == ur);
    CHECK(a.v() == vr);
  }
}

TEST_CASE("every strategy yields non-increasing trajectories") {
  std::mt19937_64 rng(81);
  const MaskedMatrix r = oracle::random_masked(12, 9, 0.2, rng);
  FitConfig cfg;
  cfg.budget.sweeps = 8;
  for (const char* name : {"STMF", "FastSTMF", "STMF_ByRow_NoPerm_SEQ", "STMF_ByRow_PermR_TD",
                           "STMF_ByRow_RandPermR_TD_B", "STMF_ByElement_PermC_TD_W",
                           "STMF_ByMatrix_NoPerm_TD_W"}) {
    CAPTURE(name);
    const FitResult res = fit_method(r, parse_method(name), cfg);
    const auto& s = res.trajectory.samples;
    for (std::size_t p = 1; p < s.size(); ++p) {
      CHECK(s[p].error <= s[p - 1].error);
      CHECK(s[p].sweeps >= s[p - 1].sweeps);
    }
    CHECK(res.final_error == doctest::Approx(s.back().error).epsilon(1e-12));
  }
}

TEST_CASE("FastSTMF fits tropical structure") {
  std::mt19937_64 rng(91);
  const Matrix a = oracle::random_matrix(50, 3, rng, 0, 1), b = oracle::random_matrix(3, 50, rng, 0, 1);
  MaskedMatrix r(trop_matmul(a, b));
  std::bernoulli_distribution drop(0.2);
  for (std::size_t i = 0; i < 50; ++i)
    for (std::size_t j = 0; j < 50; ++j)
      if (drop(rng) && i != j) r.hide(i, j);
  FitConfig cfg;
  cfg.budget.sweeps = 2000;
  cfg.seed = 3;
  const FitResult res = fast_stmf(r, cfg);
  CHECK(res.final_error <= 0.01 * res.trajectory.init_error());
}
