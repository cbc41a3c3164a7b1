#pragma once

// Dense linear algebra for desk-scale problems (dimensions up to a few
// hundred). Everything is a value type; no expression templates.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace biflow {

using Vector = std::vector<double>;

enum class Triangle { Lower, Upper };

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  Vector column(std::size_t j) const;

  const std::vector<double>& data() const noexcept { return data_; }

  Matrix transpose() const;
  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const Matrix& b);

  double trace() const;
  double max_abs() const;
  double norm_frobenius() const;
  double norm_inf() const;
  bool all_finite() const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);

/// Block matrix [[a, b], [c, d]].
Matrix hstack_vstack(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d);

/// Reverses the order of rows and columns (J A J with J the exchange matrix).
Matrix reverse_permute(const Matrix& a);

/// ||a - b||_F / max(||b||_F, tiny).
double relative_frobenius_error(const Matrix& a, const Matrix& b);

/// Throws NotSymmetric when max |a_ij - a_ji| > 1e-12 * max |a|.
void check_symmetric(const Matrix& a);

/// L lower-triangular with positive diagonal and L L^T = a.
Matrix cholesky_lower(const Matrix& a);
/// U upper-triangular with positive diagonal and U U^T = a.
Matrix cholesky_upper(const Matrix& a);

/// Square roots of Gram matrices computed from a factor without forming
/// a * a^T: the result B satisfies B B^T = a a^T. Uses Householder QR, so
/// small eigenvalues of a a^T keep their relative accuracy.
Matrix lower_gram_sqrt(const Matrix& a);
Matrix upper_gram_sqrt(const Matrix& a);

Vector solve_triangular(const Matrix& t, std::span<const double> b, Triangle side);
/// Solves T X = B column by column.
Matrix solve_triangular(const Matrix& t, const Matrix& b, Triangle side);
Matrix inverse_triangular(const Matrix& t, Triangle side);

/// General inverse by LU with partial pivoting. Throws SingularMatrix.
Matrix inverse(const Matrix& a);

/// Singular values in descending order (one-sided Jacobi).
Vector singular_values(const Matrix& a);

/// sigma_max / sigma_min; +infinity when sigma_min < eps * sigma_max.
double condition_number_2(const Matrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm_inf(std::span<const double> a);
Vector axpy(double alpha, std::span<const double> x, std::span<const double> y);

}  // namespace biflow
