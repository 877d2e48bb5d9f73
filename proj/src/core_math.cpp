// SPDX-License-Identifier: Apache-2.0
#include "deeprnn/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "deeprnn/errors.hpp"

namespace deeprnn {

void Vector::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw ConfigError("matrix " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                      " given " + std::to_string(values_.size()) + " entries");
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  values_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ConfigError("ragged matrix literal");
    values_.insert(values_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

void Matrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::scaled(double factor) const {
  Matrix out = *this;
  for (double& v : out.values_) v *= factor;
  return out;
}

std::string shape_string(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

std::string_view to_string(Nonlinearity nl) {
  switch (nl) {
    case Nonlinearity::sigmoid: return "sigmoid";
    case Nonlinearity::tanh: return "tanh";
    case Nonlinearity::rectifier: return "rectifier";
    case Nonlinearity::identity: return "identity";
  }
  return "?";
}

Nonlinearity parse_nonlinearity(std::string_view name) {
  if (name == "sigmoid" || name == "logistic") return Nonlinearity::sigmoid;
  if (name == "tanh") return Nonlinearity::tanh;
  if (name == "rectifier" || name == "relu") return Nonlinearity::rectifier;
  if (name == "identity" || name == "linear") return Nonlinearity::identity;
  throw ConfigError("unknown nonlinearity '" + std::string(name) + "'");
}

double activate(Nonlinearity nl, double x) {
  switch (nl) {
    case Nonlinearity::sigmoid:
      if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
      else {
        const double e = std::exp(x);
        return e / (1.0 + e);
      }
    case Nonlinearity::tanh: return std::tanh(x);
    case Nonlinearity::rectifier: return x > 0 ? x : 0.0;
    case Nonlinearity::identity: return x;
  }
  return x;
}

double derivative_from_output(Nonlinearity nl, double y) {
  switch (nl) {
    case Nonlinearity::sigmoid: return y * (1.0 - y);
    case Nonlinearity::tanh: return 1.0 - y * y;
    case Nonlinearity::rectifier: return y > 0 ? 1.0 : 0.0;
    case Nonlinearity::identity: return 1.0;
  }
  return 1.0;
}

Vector affine(const Matrix& w, const Vector& x, const Vector& b) {
  if (w.cols() != x.dim() || w.rows() != b.dim()) {
    throw ConfigError("affine: W " + shape_string(w) + ", x dim " + std::to_string(x.dim()) +
                      ", b dim " + std::to_string(b.dim()));
  }
  Vector out = b;
  accumulate_product(w, x.span(), out.span());
  return out;
}

Vector affine_transposed(const Matrix& w, const Vector& x, const Vector& b) {
  if (w.rows() != x.dim() || w.cols() != b.dim()) {
    throw ConfigError("affine_transposed: W " + shape_string(w) + ", x dim " +
                      std::to_string(x.dim()) + ", b dim " + std::to_string(b.dim()));
  }
  Vector out = b;
  accumulate_transposed(w, x.span(), out.span());
  return out;
}

void accumulate_transposed(const Matrix& w, std::span<const double> x, std::span<double> out) {
  const std::size_t cols = w.cols();
  double* o = out.data();
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* row = w.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) o[j] += row[j] * xi;
  }
}

void accumulate_product(const Matrix& w, std::span<const double> y, std::span<double> out) {
  const std::size_t cols = w.cols();
  const double* yv = y.data();
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double* row = w.data() + i * cols;
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += row[j] * yv[j];
    out[i] += s;
  }
}

void accumulate_outer(Matrix& g, std::span<const double> x, std::span<const double> y) {
  const std::size_t cols = g.cols();
  const double* yv = y.data();
  for (std::size_t i = 0; i < g.rows(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    double* row = g.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) row[j] += xi * yv[j];
  }
}

Vector apply(Nonlinearity nl, const Vector& v) {
  Vector out = v;
  apply_inplace(nl, out.span());
  return out;
}

void apply_inplace(Nonlinearity nl, std::span<double> v) {
  for (double& x : v) x = activate(nl, x);
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

Vector softmax(const Vector& v) {
  Vector out(v.dim());
  if (v.dim() == 0) return out;
  const double mx = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (std::size_t i = 0; i < v.dim(); ++i) {
    out[i] = std::exp(v[i] - mx);
    s += out[i];
  }
  for (double& x : out) x /= s;
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> v) { return dot(v, v); }

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), key_(mix64(seed + kGolden) ^ mix64(~stream * kGolden + 0x632BE59BD9B4E019ULL)) {}

std::uint64_t Rng::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::uniform_below(std::uint64_t n) {
  // rejection on the top of the range keeps the draw unbiased
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Matrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double std) {
  if (std < 0) throw ConfigError("gaussian_matrix: negative standard deviation");
  Matrix m(rows, cols);
  if (std == 0.0) return m;
  for (double& v : m.span()) v = rng.normal(0.0, std);
  return m;
}

double largest_singular_value(const Matrix& m, double tol, int max_iterations,
                              std::string_view name) {
  if (m.size() == 0 || squared_norm(m.span()) == 0.0) {
    throw ConfigError("largest_singular_value: " + std::string(name) + " is zero");
  }
  const std::size_t n = m.cols();
  Rng start(0x5eed5eedULL);
  std::vector<double> v(n);
  for (double& x : v) x = start.uniform() + 0.5;
  double vn = std::sqrt(squared_norm(v));
  for (double& x : v) x /= vn;

  std::vector<double> mv(m.rows());
  std::vector<double> next(n);
  double estimate = 0.0;
  double change = std::numeric_limits<double>::infinity();
  // The Rayleigh quotient converges quadratically in the vector error, so the
  // stopping rule asks for far less movement than `tol` between iterations.
  const double settle = tol * 1e-3;
  for (int it = 0; it < max_iterations; ++it) {
    std::fill(mv.begin(), mv.end(), 0.0);
    accumulate_product(m, v, mv);
    std::fill(next.begin(), next.end(), 0.0);
    accumulate_transposed(m, mv, next);
    const double lambda = dot(v, next);  // vᵀMᵀMv with |v| = 1
    const double norm = std::sqrt(squared_norm(next));
    if (norm == 0.0) {
      // start vector in the null space; fall back to a coordinate direction
      std::fill(v.begin(), v.end(), 0.0);
      v[static_cast<std::size_t>(it) % n] = 1.0;
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = next[i] / norm;
    const double sigma = std::sqrt(std::max(lambda, 0.0));
    change = std::abs(sigma - estimate) / sigma;
    estimate = sigma;
    if (change < settle) return estimate;
  }
  if (change < tol) return estimate;
  throw NumericError("largest_singular_value: power iteration on " + std::string(name) +
                     " did not converge in " + std::to_string(max_iterations) + " iterations");
}

}  // namespace deeprnn
