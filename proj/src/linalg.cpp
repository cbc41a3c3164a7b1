#include "biflow/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "biflow/error.hpp"

namespace biflow {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_same_shape(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::DimensionMismatch,
          "matrix shapes differ");
}

// R factor (n x n, upper) of the Householder QR of c (p x n, p >= n).
Matrix householder_r(Matrix c) {
  const std::size_t p = c.rows(), n = c.cols();
  require(p >= n, ErrorCode::NotPositiveDefinite, "Gram factor has fewer columns than rows");
  Vector v(p);
  for (std::size_t k = 0; k < n; ++k) {
    double norm = 0.0;
    for (std::size_t i = k; i < p; ++i) norm = std::hypot(norm, c(i, k));
    if (norm == 0.0) continue;
    const double alpha = c(k, k) > 0 ? -norm : norm;
    double vnorm2 = 0.0;
    for (std::size_t i = k; i < p; ++i) {
      v[i] = c(i, k) - (i == k ? alpha : 0.0);
      vnorm2 += v[i] * v[i];
    }
    if (vnorm2 == 0.0) continue;
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < p; ++i) s += v[i] * c(i, j);
      s *= 2.0 / vnorm2;
      for (std::size_t i = k; i < p; ++i) c(i, j) -= s * v[i];
    }
  }
  Matrix r(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double sign = c(i, i) < 0 ? -1.0 : 1.0;
    require(c(i, i) != 0.0, ErrorCode::NotPositiveDefinite, "Gram matrix is singular");
    for (std::size_t j = i; j < n; ++j) r(i, j) = sign * c(i, j);
  }
  return r;
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, ErrorCode::DimensionMismatch, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Vector Matrix::column(std::size_t j) const {
  Vector c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
  require(r0 + nr <= rows_ && c0 + nc <= cols_, ErrorCode::DimensionMismatch, "block out of range");
  Matrix b(nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    std::copy_n(data_.begin() + (r0 + i) * cols_ + c0, nc, b.data_.begin() + i * nc);
  return b;
}

void Matrix::set_block(std::size_t r0, std::size_t c0, const Matrix& b) {
  require(r0 + b.rows_ <= rows_ && c0 + b.cols_ <= cols_, ErrorCode::DimensionMismatch,
          "block out of range");
  for (std::size_t i = 0; i < b.rows_; ++i)
    std::copy_n(b.data_.begin() + i * b.cols_, b.cols_, data_.begin() + (r0 + i) * cols_ + c0);
}

double Matrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
  return t;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double Matrix::norm_frobenius() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

double Matrix::norm_inf() const {
  double m = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (double v : row(i)) s += std::abs(v);
    m = std::max(m, s);
  }
  return m;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& o) {
  require_same_shape(*this, o);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  require_same_shape(*this, o);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), ErrorCode::DimensionMismatch, "matmul inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
  require(a.cols() == x.size(), ErrorCode::DimensionMismatch, "matvec dimensions differ");
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

Matrix hstack_vstack(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d) {
  require(a.rows() == b.rows() && c.rows() == d.rows() && a.cols() == c.cols() &&
              b.cols() == d.cols(),
          ErrorCode::DimensionMismatch, "inconsistent block shapes");
  Matrix m(a.rows() + c.rows(), a.cols() + b.cols());
  m.set_block(0, 0, a);
  m.set_block(0, a.cols(), b);
  m.set_block(a.rows(), 0, c);
  m.set_block(a.rows(), a.cols(), d);
  return m;
}

Matrix reverse_permute(const Matrix& a) {
  Matrix r(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      r(i, j) = a(a.rows() - 1 - i, a.cols() - 1 - j);
  return r;
}

double relative_frobenius_error(const Matrix& a, const Matrix& b) {
  return (a - b).norm_frobenius() / std::max(b.norm_frobenius(), std::numeric_limits<double>::min());
}

void check_symmetric(const Matrix& a) {
  require(a.is_square(), ErrorCode::DimensionMismatch, "matrix is not square");
  const double tol = 1e-12 * a.max_abs();
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > tol) fail(ErrorCode::NotSymmetric, "matrix is not symmetric");
}

Matrix cholesky_lower(const Matrix& a) {
  check_symmetric(a);
  require(a.all_finite(), ErrorCode::NotPositiveDefinite, "non-finite entries");
  const std::size_t n = a.rows();
  const double pivot_floor = kEps * std::abs(a.trace());
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > pivot_floor)) fail(ErrorCode::NotPositiveDefinite, "pivot below tolerance");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

Matrix cholesky_upper(const Matrix& a) {
  return reverse_permute(cholesky_lower(reverse_permute(a)));
}

Matrix lower_gram_sqrt(const Matrix& a) {
  return householder_r(a.transpose()).transpose();
}

Matrix upper_gram_sqrt(const Matrix& a) {
  // Reverse the rows of a, take the lower square root, reverse back.
  Matrix flipped(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) flipped(i, j) = a(a.rows() - 1 - i, j);
  return reverse_permute(lower_gram_sqrt(flipped));
}

Vector solve_triangular(const Matrix& t, std::span<const double> b, Triangle side) {
  require(t.is_square() && t.rows() == b.size(), ErrorCode::DimensionMismatch,
          "triangular solve dimensions differ");
  const std::size_t n = t.rows();
  const double floor = kEps * t.norm_inf();
  for (std::size_t i = 0; i < n; ++i)
    if (!(std::abs(t(i, i)) >= floor) || t(i, i) == 0.0)
      fail(ErrorCode::SingularDiagonal, "triangular matrix has a vanishing diagonal entry");
  Vector x(b.begin(), b.end());
  if (side == Triangle::Lower) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x[i];
      auto ti = t.row(i);
      for (std::size_t k = 0; k < i; ++k) s -= ti[k] * x[k];
      x[i] = s / ti[i];
    }
  } else {
    for (std::size_t i = n; i-- > 0;) {
      double s = x[i];
      auto ti = t.row(i);
      for (std::size_t k = i + 1; k < n; ++k) s -= ti[k] * x[k];
      x[i] = s / ti[i];
    }
  }
  return x;
}

Matrix solve_triangular(const Matrix& t, const Matrix& b, Triangle side) {
  require(t.rows() == b.rows(), ErrorCode::DimensionMismatch, "triangular solve dimensions differ");
  Matrix x(b.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    const Vector col = solve_triangular(t, b.column(j), side);
    for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = col[i];
  }
  return x;
}

Matrix inverse_triangular(const Matrix& t, Triangle side) {
  return solve_triangular(t, Matrix::identity(t.rows()), side);
}

Matrix inverse(const Matrix& a) {
  require(a.is_square(), ErrorCode::DimensionMismatch, "inverse of a non-square matrix");
  const std::size_t n = a.rows();
  Matrix lu = a;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  const double floor = kEps * static_cast<double>(n) * a.max_abs();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(p, k))) p = i;
    if (!(std::abs(lu(p, k)) > floor)) fail(ErrorCode::SingularMatrix, "matrix is singular");
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(p, j));
      std::swap(perm[k], perm[p]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / lu(k, k);
      lu(i, k) = f;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
    }
  }
  Matrix inv(n, n);
  Vector col(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = perm[i] == j ? 1.0 : 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < i; ++k) col[i] -= lu(i, k) * col[k];
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t k = i + 1; k < n; ++k) col[i] -= lu(i, k) * col[k];
      col[i] /= lu(i, i);
    }
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return inv;
}

Vector singular_values(const Matrix& a) {
  const bool wide = a.rows() < a.cols();
  const Matrix& src = a;
  const std::size_t m = wide ? a.cols() : a.rows();
  const std::size_t n = wide ? a.rows() : a.cols();
  // Column-major copy: column j of the (tall) working matrix.
  std::vector<Vector> cols(n, Vector(m));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (wide) cols[i][j] = src(i, j);
      else cols[j][i] = src(i, j);
    }

  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
          alpha += cols[i][k] * cols[i][k];
          beta += cols[j][k] * cols[j][k];
          gamma += cols[i][k] * cols[j][k];
        }
        if (gamma == 0.0 || !(std::abs(gamma) > kEps * std::sqrt(alpha * beta))) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t k = 0; k < m; ++k) {
          const double xi = cols[i][k], xj = cols[j][k];
          cols[i][k] = c * xi - s * xj;
          cols[j][k] = s * xi + c * xj;
        }
      }
    }
    if (!rotated) break;
  }

  Vector sv(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (double v : cols[j]) s = std::hypot(s, v);
    sv[j] = s;
  }
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

double condition_number_2(const Matrix& a) {
  require(a.is_square(), ErrorCode::DimensionMismatch, "condition number of a non-square matrix");
  if (a.rows() == 0) return 1.0;
  const Vector sv = singular_values(a);
  const double smax = sv.front(), smin = sv.back();
  if (smax == 0.0 || smin < kEps * smax) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

Vector axpy(double alpha, std::span<const double> x, std::span<const double> y) {
  Vector r(y.begin(), y.end());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += alpha * x[i];
  return r;
}

}  // namespace biflow
