// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace deeprnn {

/// Dense real vector.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  Vector(std::initializer_list<double> values) : values_(values) {}
  explicit Vector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t dim() const noexcept { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }
  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  void fill(double v);

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> values_;
};

/// Dense row-major matrix.
///
/// Model weights follow the transposed convention: a matrix mapping an
/// n-dimensional activation to an m-dimensional one is stored n x m and
/// applied as `W^T x`. Row i therefore holds the outgoing weights of input
/// unit i and column j the incoming weights of output unit j.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {values_.data() + r * cols_, cols_};
  }

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }
  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }

  void fill(double v);
  Matrix transposed() const;
  Matrix scaled(double factor) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

std::string shape_string(const Matrix& m);

enum class Nonlinearity { sigmoid, tanh, rectifier, identity };

std::string_view to_string(Nonlinearity nl);
/// Throws ConfigError for unknown names.
Nonlinearity parse_nonlinearity(std::string_view name);

double activate(Nonlinearity nl, double x);
/// Derivative expressed through the activation value y = activate(nl, x).
/// Valid for all four kinds.
double derivative_from_output(Nonlinearity nl, double y);

/// W·x + b. Throws ConfigError on shape mismatch.
Vector affine(const Matrix& w, const Vector& x, const Vector& b);
/// Wᵀ·x + b, the form used by the recurrent layers.
Vector affine_transposed(const Matrix& w, const Vector& x, const Vector& b);

/// out += Wᵀ·x (no shape checks; out.dim() == w.cols(), x.size() == w.rows()).
void accumulate_transposed(const Matrix& w, std::span<const double> x, std::span<double> out);
/// out += W·y (out.size() == w.rows(), y.size() == w.cols()).
void accumulate_product(const Matrix& w, std::span<const double> y, std::span<double> out);
/// g += x ⊗ y, x indexing rows and y indexing columns.
void accumulate_outer(Matrix& g, std::span<const double> x, std::span<const double> y);

Vector apply(Nonlinearity nl, const Vector& v);
void apply_inplace(Nonlinearity nl, std::span<double> v);

/// Max-subtracted softmax.
Vector softmax(const Vector& v);
double log_sum_exp(std::span<const double> v);

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> v);
bool all_finite(std::span<const double> v);

/// Counter-based generator: draw k is a pure function of (seed, stream, k),
/// so streams never depend on platform or on how many other streams exist.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_below(std::uint64_t n);
  /// Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double std) { return mean + std * normal(); }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// i.i.d. N(0, std²) entries. std == 0 gives the zero matrix.
Matrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double std);

/// σ_max(M) by power iteration on MᵀM from a fixed start vector.
/// Throws NumericError (naming `name`) when the cap is hit before the estimate
/// settles to `tol`, ConfigError for a zero or empty matrix.
double largest_singular_value(const Matrix& m, double tol = 1e-6, int max_iterations = 1000,
                              std::string_view name = "matrix");

}  // namespace deeprnn
