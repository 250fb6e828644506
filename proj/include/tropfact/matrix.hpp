#pragma once

// Dense matrices with missingness and the (max,+) / masked (min,+) kernels
// the factorization engine is built on.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tropfact {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Row-major dense matrix of extended reals.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  std::vector<double> column(std::size_t j) const;
  void set_column(std::size_t j, std::span<const double> values);

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transposed() const;
  Matrix negated() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Dense values plus a given/missing mask. Values under the mask are
/// unspecified and never read by the kernels.
class MaskedMatrix {
 public:
  MaskedMatrix() = default;
  /// Fully given.
  explicit MaskedMatrix(Matrix values);
  MaskedMatrix(Matrix values, std::vector<std::uint8_t> mask);

  std::size_t rows() const noexcept { return values_.rows(); }
  std::size_t cols() const noexcept { return values_.cols(); }

  bool given(std::size_t i, std::size_t j) const noexcept {
    return mask_[i * values_.cols() + j] != 0;
  }
  double operator()(std::size_t i, std::size_t j) const noexcept { return values_(i, j); }

  const Matrix& values() const noexcept { return values_; }
  /// Values with +inf at missing entries.
  const Matrix& filled() const noexcept { return filled_; }
  std::span<const std::uint8_t> mask() const noexcept { return mask_; }
  std::size_t given_count() const noexcept { return given_count_; }

  void set(std::size_t i, std::size_t j, double v);
  void hide(std::size_t i, std::size_t j);

  /// Throws std::invalid_argument when a given entry is non-finite or a row or
  /// column has no given entries. Residuation needs both.
  void validate() const;

  MaskedMatrix transposed() const;

 private:
  Matrix values_;
  Matrix filled_;
  std::vector<std::uint8_t> mask_;
  std::size_t given_count_ = 0;
};

class Permutation {
 public:
  Permutation() = default;
  /// Throws std::invalid_argument unless `forward` is a permutation of 0..n-1.
  explicit Permutation(std::vector<std::size_t> forward);
  static Permutation identity(std::size_t n);

  std::size_t size() const noexcept { return forward_.size(); }
  /// Position p of the permuted object holds original index forward()[p].
  const std::vector<std::size_t>& forward() const noexcept { return forward_; }
  const std::vector<std::size_t>& inverse() const noexcept { return inverse_; }
  bool is_identity() const noexcept;

 private:
  std::vector<std::size_t> forward_;
  std::vector<std::size_t> inverse_;
};

enum class Axis { Rows, Cols };

// ---- tropical kernels ----

/// (A ⊗ B)_ij = max_k A_ik + B_kj.
Matrix trop_matmul(const Matrix& a, const Matrix& b);

/// (A ⊗* B)_ij = min over k with both operands given of A_ik + B_kj. A null
/// mask means fully given. Empty feasible sets produce +inf.
Matrix masked_minplus(const Matrix& a, const std::vector<std::uint8_t>* a_mask,
                      const Matrix& b, const std::vector<std::uint8_t>* b_mask);

/// Greatest basis row for one coefficient column: out_j = min_i R_ij - u_i.
void residuate_basis_row(const MaskedMatrix& r, std::span<const double> u_col,
                         std::span<double> out_row);
/// Greatest coefficient column for one basis row: out_i = min_j R_ij - v_j.
void residuate_coef_col(const MaskedMatrix& r, std::span<const double> v_row,
                        std::span<double> out_col);

/// V = (-U)ᵀ ⊗* R.
Matrix residuate_basis(const MaskedMatrix& r, const Matrix& u);
/// U = R ⊗* (-V)ᵀ.
Matrix residuate_coef(const MaskedMatrix& r, const Matrix& v);

/// Sum of non-negative terms that does not depend on their order. Terms are
/// accumulated in 128-bit fixed point scaled to the largest term.
double order_independent_sum(std::span<const double> terms);

/// Sum of |W_ij| over given entries.
double b_norm(const MaskedMatrix& w);

/// ‖R − U ⊗ V‖_b over the given entries of R.
double approx_error(const MaskedMatrix& r, const Matrix& u, const Matrix& v);
/// approx_error, or +inf as soon as the error is certain to reach reject_at.
double approx_error_bounded(const MaskedMatrix& r, const Matrix& u, const Matrix& v,
                            double reject_at);

/// Smallest index attaining max_l U_il + V_lj.
std::size_t argmax_k(const Matrix& u, const Matrix& v, std::size_t i, std::size_t j);

/// |R_ij − (U⊗V)_ij|. Throws std::invalid_argument on a missing entry.
double td(const MaskedMatrix& r, const Matrix& u, const Matrix& v, std::size_t i, std::size_t j);
double td_row(const MaskedMatrix& r, const Matrix& u, const Matrix& v, std::size_t i);
double td_col(const MaskedMatrix& r, const Matrix& u, const Matrix& v, std::size_t j);

// ---- reorientation ----

Matrix permute_rows(const Matrix& m, const Permutation& p);
Matrix permute_cols(const Matrix& m, const Permutation& p);
MaskedMatrix permute_rows(const MaskedMatrix& m, const Permutation& p);
MaskedMatrix permute_cols(const MaskedMatrix& m, const Permutation& p);
Matrix unpermute_rows(const Matrix& m, const Permutation& p);
Matrix unpermute_cols(const Matrix& m, const Permutation& p);

/// Orders rows (or columns) ascending by their minimum over given entries,
/// stable in the original index.
Permutation sort_perm_by_min(const MaskedMatrix& m, Axis axis);

}  // namespace tropfact
