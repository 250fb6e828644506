#include "tropfact/matrix.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

namespace tropfact {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("matrix data size " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t m = rows.size();
  const std::size_t n = m == 0 ? 0 : rows.front().size();
  Matrix out(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    if (rows[i].size() != n) throw DimensionError("ragged row list");
    std::copy(rows[i].begin(), rows[i].end(), out.row(i).begin());
  }
  return out;
}

std::vector<double> Matrix::column(std::size_t j) const {
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

void Matrix::set_column(std::size_t j, std::span<const double> values) {
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = values[i];
}

Matrix Matrix::transposed() const {
  Matrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
  return out;
}

Matrix Matrix::negated() const {
  Matrix out = *this;
  for (double& x : out.data_) x = -x;
  return out;
}

MaskedMatrix::MaskedMatrix(Matrix values)
    : values_(std::move(values)),
      filled_(values_),
      mask_(values_.size(), 1),
      given_count_(values_.size()) {}

MaskedMatrix::MaskedMatrix(Matrix values, std::vector<std::uint8_t> mask)
    : values_(std::move(values)), mask_(std::move(mask)) {
  if (mask_.size() != values_.size()) throw DimensionError("mask size does not match values");
  for (auto& b : mask_) b = b ? 1 : 0;
  given_count_ = static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), 1));
  filled_ = values_;
  for (std::size_t p = 0; p < mask_.size(); ++p)
    if (!mask_[p]) filled_.data()[p] = kPosInf;
}

void MaskedMatrix::set(std::size_t i, std::size_t j, double v) {
  auto& b = mask_[i * cols() + j];
  if (!b) ++given_count_;
  b = 1;
  values_(i, j) = v;
  filled_(i, j) = v;
}

void MaskedMatrix::hide(std::size_t i, std::size_t j) {
  auto& b = mask_[i * cols() + j];
  if (b) --given_count_;
  b = 0;
  filled_(i, j) = kPosInf;
}

void MaskedMatrix::validate() const {
  std::vector<std::uint8_t> col_seen(cols(), 0);
  for (std::size_t i = 0; i < rows(); ++i) {
    bool row_seen = false;
    for (std::size_t j = 0; j < cols(); ++j) {
      if (!given(i, j)) continue;
      if (!std::isfinite(values_(i, j))) {
        throw std::invalid_argument("non-finite given entry at (" + std::to_string(i) + ", " +
                                    std::to_string(j) + ")");
      }
      row_seen = true;
      col_seen[j] = 1;
    }
    if (!row_seen) throw std::invalid_argument("row " + std::to_string(i) + " has no given entries");
  }
  for (std::size_t j = 0; j < cols(); ++j) {
    if (!col_seen[j]) {
      throw std::invalid_argument("column " + std::to_string(j) + " has no given entries");
    }
  }
}

MaskedMatrix MaskedMatrix::transposed() const {
  std::vector<std::uint8_t> mask(mask_.size());
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t j = 0; j < cols(); ++j) mask[j * rows() + i] = mask_[i * cols() + j];
  return MaskedMatrix(values_.transposed(), std::move(mask));
}

Permutation::Permutation(std::vector<std::size_t> forward)
    : forward_(std::move(forward)), inverse_(forward_.size(), forward_.size()) {
  for (std::size_t p = 0; p < forward_.size(); ++p) {
    const std::size_t idx = forward_[p];
    if (idx >= forward_.size() || inverse_[idx] != forward_.size()) {
      throw std::invalid_argument("invalid permutation");
    }
    inverse_[idx] = p;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<std::size_t> f(n);
  std::iota(f.begin(), f.end(), std::size_t{0});
  return Permutation(std::move(f));
}

bool Permutation::is_identity() const noexcept {
  for (std::size_t p = 0; p < forward_.size(); ++p)
    if (forward_[p] != p) return false;
  return true;
}

Matrix trop_matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("trop_matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                         std::to_string(b.rows()) + " differ");
  }
  Matrix out(a.rows(), b.cols(), kNegInf);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == kNegInf) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] = std::max(orow[j], aik + brow[j]);
    }
  }
  return out;
}

Matrix masked_minplus(const Matrix& a, const std::vector<std::uint8_t>* a_mask, const Matrix& b,
                      const std::vector<std::uint8_t>* b_mask) {
  if (a.cols() != b.rows()) {
    throw DimensionError("masked_minplus: inner dimensions " + std::to_string(a.cols()) +
                         " and " + std::to_string(b.rows()) + " differ");
  }
  if ((a_mask && a_mask->size() != a.size()) || (b_mask && b_mask->size() != b.size())) {
    throw DimensionError("masked_minplus: mask size mismatch");
  }
  Matrix out(a.rows(), b.cols(), kPosInf);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      if (a_mask && !(*a_mask)[i * a.cols() + k]) continue;
      const double aik = a(i, k);
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) {
        if (b_mask && !(*b_mask)[k * b.cols() + j]) continue;
        orow[j] = std::min(orow[j], aik + brow[j]);
      }
    }
  }
  return out;
}

namespace {

using V2 = double __attribute__((vector_size(16)));

V2 load2(const double* p) {
  V2 x;
  std::memcpy(&x, p, sizeof x);
  return x;
}

}  // namespace

#define TF_CLONES __attribute__((target_clones("avx2", "default")))

TF_CLONES void residuate_basis_row(const MaskedMatrix& r, std::span<const double> u_col,
                         std::span<double> out_row) {
  const std::size_t n = r.cols();
  std::fill(out_row.begin(), out_row.end(), kPosInf);
  double* out = out_row.data();
  for (std::size_t i = 0; i < r.rows(); ++i) {
    const double ui = u_col[i];
    const double* rrow = r.filled().row(i).data();
    for (std::size_t j = 0; j < n; ++j) out[j] = std::min(out[j], rrow[j] - ui);
  }
}

TF_CLONES void residuate_coef_col(const MaskedMatrix& r, std::span<const double> v_row,
                        std::span<double> out_col) {
  const std::size_t n = r.cols();
  const double* v = v_row.data();
  for (std::size_t i = 0; i < r.rows(); ++i) {
    const double* rrow = r.filled().row(i).data();
    V2 b0 = {kPosInf, kPosInf}, b1 = b0;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const V2 x0 = load2(rrow + j) - load2(v + j), x1 = load2(rrow + j + 2) - load2(v + j + 2);
      b0 = x0 < b0 ? x0 : b0;
      b1 = x1 < b1 ? x1 : b1;
    }
    double best = std::min(std::min(b0[0], b0[1]), std::min(b1[0], b1[1]));
    for (; j < n; ++j) best = std::min(best, rrow[j] - v[j]);
    out_col[i] = best;
  }
}

Matrix residuate_basis(const MaskedMatrix& r, const Matrix& u) {
  if (u.rows() != r.rows()) throw DimensionError("residuate_basis: U rows differ from R rows");
  Matrix v(u.cols(), r.cols());
  for (std::size_t k = 0; k < u.cols(); ++k) residuate_basis_row(r, u.column(k), v.row(k));
  return v;
}

Matrix residuate_coef(const MaskedMatrix& r, const Matrix& v) {
  if (v.cols() != r.cols()) throw DimensionError("residuate_coef: V cols differ from R cols");
  Matrix u(r.rows(), v.rows());
  std::vector<double> col(r.rows());
  for (std::size_t k = 0; k < v.rows(); ++k) {
    residuate_coef_col(r, v.row(k), col);
    u.set_column(k, col);
  }
  return u;
}

namespace {

// Exact 128-bit fixed-point sum of non-negative finite terms at most mx, of
// which at most `nonzero` are non-zero.
double fixed_point_sum(std::span<const double> terms, double mx, std::size_t nonzero) {
  if (mx == 0.0) return 0.0;
  if (std::isinf(mx)) return mx;

  int exp = 0;
  std::frexp(mx, &exp);  // mx < 2^exp
  const int top_bits = 126 - static_cast<int>(std::bit_width(nonzero));
  const int shift = top_bits - exp;
  // Each term contributes floor(t * 2^shift), taken straight from its bits.
  constexpr std::uint64_t kMantissa = (std::uint64_t(1) << 52) - 1;
  unsigned __int128 acc = 0;
  for (double t : terms) {
    const auto b = std::bit_cast<std::uint64_t>(t);
    const int e = static_cast<int>(b >> 52);
    const std::uint64_t mant = (b & kMantissa) | (e ? kMantissa + 1 : 0);
    const int s = (e ? e : 1) - 1075 + shift;
    if (s >= 0)
      acc += static_cast<unsigned __int128>(mant) << s;
    else if (s > -64)
      acc += mant >> -s;
  }
  return std::ldexp(static_cast<double>(acc), -shift);
}

std::vector<double>& scratch_terms() {
  thread_local std::vector<double> terms;
  return terms;
}

}  // namespace

double order_independent_sum(std::span<const double> terms) {
  double mx = 0.0;
  for (double t : terms) {
    if (!(t >= 0.0)) throw std::invalid_argument("order_independent_sum: negative or NaN term");
    mx = std::max(mx, t);
  }
  return fixed_point_sum(terms, mx, terms.size());
}

double b_norm(const MaskedMatrix& w) {
  auto& terms = scratch_terms();
  terms.clear();
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j)
      if (w.given(i, j)) terms.push_back(std::abs(w(i, j)));
  return order_independent_sum(terms);
}

double approx_error(const MaskedMatrix& r, const Matrix& u, const Matrix& v) {
  return approx_error_bounded(r, u, v, kPosInf);
}

TF_CLONES double approx_error_bounded(const MaskedMatrix& r, const Matrix& u, const Matrix& v,
                            double reject_at) {
  if (u.rows() != r.rows() || v.cols() != r.cols() || u.cols() != v.rows()) {
    throw DimensionError("approx_error: factor shapes do not match data");
  }
  const std::size_t m = r.rows(), n = r.cols(), rank = u.cols();
  if (rank == 0) throw DimensionError("approx_error: rank must be positive");
  auto& terms = scratch_terms();
  terms.resize(m * n);
  // A naive running sum of k terms is within k * 2^-53 of the exact sum, so
  // this margin keeps early rejection exact for any realistic size.
  const double cutoff = reject_at * (1.0 + 1e-6);
  double mx = 0.0, partial = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double* out = terms.data() + i * n;
    const double* urow = u.row(i).data();
    const double* v0 = v.row(0).data();
    for (std::size_t j = 0; j < n; ++j) out[j] = urow[0] + v0[j];
    for (std::size_t k = 1; k < rank; ++k) {
      const double uik = urow[k];
      const double* vrow = v.row(k).data();
      for (std::size_t j = 0; j < n; ++j) out[j] = std::max(out[j], uik + vrow[j]);
    }
    // Missing entries hold +inf in filled(); finite factors keep given residuals finite.
    const double* frow = r.filled().row(i).data();
    for (std::size_t j = 0; j < n; ++j) {
      const double d = std::abs(frow[j] - out[j]);
      out[j] = d != kPosInf ? d : 0.0;
    }
    V2 s0 = {0, 0}, s1 = s0, h0 = {mx, mx}, h1 = h0;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const V2 x0 = load2(out + j), x1 = load2(out + j + 2);
      s0 += x0;
      s1 += x1;
      h0 = x0 > h0 ? x0 : h0;
      h1 = x1 > h1 ? x1 : h1;
    }
    double row_sum = (s0[0] + s0[1]) + (s1[0] + s1[1]);
    mx = std::max(std::max(h0[0], h0[1]), std::max(h1[0], h1[1]));
    for (; j < n; ++j) {
      row_sum += out[j];
      mx = std::max(mx, out[j]);
    }
    if (!(row_sum >= 0.0)) throw std::invalid_argument("approx_error: NaN residual");
    partial += row_sum;
    if (partial > cutoff) return kPosInf;
  }
  return fixed_point_sum(terms, mx, r.given_count());
}

std::size_t argmax_k(const Matrix& u, const Matrix& v, std::size_t i, std::size_t j) {
  std::size_t best = 0;
  double best_val = kNegInf;
  for (std::size_t k = 0; k < u.cols(); ++k) {
    const double s = u(i, k) + v(k, j);
    if (s > best_val) {
      best_val = s;
      best = k;
    }
  }
  return best;
}

namespace {
double product_entry(const Matrix& u, const Matrix& v, std::size_t i, std::size_t j) {
  double best = kNegInf;
  for (std::size_t k = 0; k < u.cols(); ++k) best = std::max(best, u(i, k) + v(k, j));
  return best;
}
}  // namespace

double td(const MaskedMatrix& r, const Matrix& u, const Matrix& v, std::size_t i, std::size_t j) {
  if (!r.given(i, j)) {
    throw std::invalid_argument("td: entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                ") is missing");
  }
  return std::abs(r(i, j) - product_entry(u, v, i, j));
}

double td_row(const MaskedMatrix& r, const Matrix& u, const Matrix& v, std::size_t i) {
  double s = 0.0;
  for (std::size_t j = 0; j < r.cols(); ++j)
    if (r.given(i, j)) s += std::abs(r(i, j) - product_entry(u, v, i, j));
  return s;
}

double td_col(const MaskedMatrix& r, const Matrix& u, const Matrix& v, std::size_t j) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.rows(); ++i)
    if (r.given(i, j)) s += std::abs(r(i, j) - product_entry(u, v, i, j));
  return s;
}

namespace {
void check_perm(std::size_t expected, const Permutation& p) {
  if (p.size() != expected) {
    throw std::invalid_argument("permutation length " + std::to_string(p.size()) +
                                " does not match dimension " + std::to_string(expected));
  }
}

Matrix mask_as_matrix(const MaskedMatrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m.given(i, j) ? 1.0 : 0.0;
  return out;
}

MaskedMatrix rebuild(Matrix values, const Matrix& mask) {
  std::vector<std::uint8_t> bits(mask.size());
  for (std::size_t p = 0; p < bits.size(); ++p) bits[p] = mask.data()[p] != 0.0;
  return MaskedMatrix(std::move(values), std::move(bits));
}
}  // namespace

Matrix permute_rows(const Matrix& m, const Permutation& p) {
  check_perm(m.rows(), p);
  Matrix out(m.rows(), m.cols());
  for (std::size_t a = 0; a < m.rows(); ++a) {
    auto src = m.row(p.forward()[a]);
    std::copy(src.begin(), src.end(), out.row(a).begin());
  }
  return out;
}

Matrix permute_cols(const Matrix& m, const Permutation& p) {
  check_perm(m.cols(), p);
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t b = 0; b < m.cols(); ++b) out(i, b) = m(i, p.forward()[b]);
  return out;
}

Matrix unpermute_rows(const Matrix& m, const Permutation& p) {
  check_perm(m.rows(), p);
  Matrix out(m.rows(), m.cols());
  for (std::size_t a = 0; a < m.rows(); ++a) {
    auto src = m.row(a);
    std::copy(src.begin(), src.end(), out.row(p.forward()[a]).begin());
  }
  return out;
}

Matrix unpermute_cols(const Matrix& m, const Permutation& p) {
  check_perm(m.cols(), p);
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t b = 0; b < m.cols(); ++b) out(i, p.forward()[b]) = m(i, b);
  return out;
}

MaskedMatrix permute_rows(const MaskedMatrix& m, const Permutation& p) {
  return rebuild(permute_rows(m.values(), p), permute_rows(mask_as_matrix(m), p));
}

MaskedMatrix permute_cols(const MaskedMatrix& m, const Permutation& p) {
  return rebuild(permute_cols(m.values(), p), permute_cols(mask_as_matrix(m), p));
}

Permutation sort_perm_by_min(const MaskedMatrix& m, Axis axis) {
  const std::size_t count = axis == Axis::Rows ? m.rows() : m.cols();
  std::vector<double> mins(count, kPosInf);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (!m.given(i, j)) continue;
      double& slot = mins[axis == Axis::Rows ? i : j];
      slot = std::min(slot, m(i, j));
    }
  }
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return mins[a] < mins[b]; });
  return Permutation(std::move(order));
}

}  // namespace tropfact
