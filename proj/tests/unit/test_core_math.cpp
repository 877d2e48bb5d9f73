// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "deeprnn/core_math.hpp"
#include "deeprnn/errors.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace deeprnn;
using testsupport::jacobi_singular_values;
using testsupport::sample_std;

TEST_CASE("affine agrees with an extended-precision dot product") {
  Rng rng(11);
  const Matrix w = gaussian_matrix(rng, 5, 7, 1.0);
  Vector x(7), b(5);
  for (auto& v : x) v = rng.normal();
  for (auto& v : b) v = rng.normal();
  const Vector y = affine(w, x, b);
  for (std::size_t r = 0; r < 5; ++r) {
    long double acc = b[r];
    for (std::size_t c = 0; c < 7; ++c) acc += static_cast<long double>(w(r, c)) * x[c];
    CHECK(y[r] == doctest::Approx(static_cast<double>(acc)).epsilon(1e-14));
  }
  Vector xt(5);
  for (auto& v : xt) v = rng.normal();
  const Vector yt = affine_transposed(w, xt, Vector(7));
  for (std::size_t c = 0; c < 7; ++c) {
    long double acc = 0;
    for (std::size_t r = 0; r < 5; ++r) acc += static_cast<long double>(w(r, c)) * xt[r];
    CHECK(yt[c] == doctest::Approx(static_cast<double>(acc)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(affine(w, Vector(6), b), ConfigError);
  CHECK_THROWS_AS(affine_transposed(w, xt, Vector(5)), ConfigError);
}

TEST_CASE("nonlinearities") {
  CHECK(apply(Nonlinearity::sigmoid, Vector{0, 0}) == Vector{0.5, 0.5});
  CHECK(apply(Nonlinearity::tanh, Vector{0}) == Vector{0});
  CHECK(apply(Nonlinearity::rectifier, Vector{-3, 2}) == Vector{0, 2});
  CHECK(apply(Nonlinearity::identity, Vector{-3, 2}) == Vector{-3, 2});
  CHECK(parse_nonlinearity("logistic") == Nonlinearity::sigmoid);
  CHECK(parse_nonlinearity("relu") == Nonlinearity::rectifier);
  CHECK_THROWS_AS(parse_nonlinearity("swish"), ConfigError);
}

TEST_CASE("derivatives match central differences at random points") {
  Rng rng(5);
  const double h = 1e-5;
  for (auto nl : {Nonlinearity::sigmoid, Nonlinearity::tanh}) {
    for (int i = 0; i < 20; ++i) {
      const double x = rng.normal(0.0, 2.0);
      const double fd = (activate(nl, x + h) - activate(nl, x - h)) / (2 * h);
      const double an = derivative_from_output(nl, activate(nl, x));
      CHECK(std::abs(fd - an) / std::max(std::abs(an), 1e-8) < 1e-7);
    }
  }
  CHECK(derivative_from_output(Nonlinearity::rectifier, 0.0) == 0.0);
  CHECK(derivative_from_output(Nonlinearity::rectifier, 2.0) == 1.0);
  CHECK(derivative_from_output(Nonlinearity::identity, -4.0) == 1.0);
}

TEST_CASE("softmax") {
  CHECK(softmax(Vector{0, 0}) == Vector{0.5, 0.5});
  for (double c : {-1e3, 0.0, 7.5, 1e3}) {
    const Vector p = softmax(Vector{c, c, c, c});
    for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  }
  // reference values: e^k / (e + e^2 + e^3) evaluated to 20 digits
  const Vector p = softmax(Vector{1, 2, 3});
  CHECK(std::abs(p[0] - 0.09003057317038046) < 1e-8);
  CHECK(std::abs(p[1] - 0.24472847105479767) < 1e-8);
  CHECK(std::abs(p[2] - 0.66524095577481989) < 1e-8);

  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Vector v(9);
    for (auto& x : v) x = rng.normal(0, 5);
    const double c = rng.normal(0, 100);
    Vector shifted = v;
    for (auto& x : shifted) x += c;
    const Vector a = softmax(v), b = softmax(shifted);
    double sum = 0;
    std::size_t am = 0, bm = 0;
    for (std::size_t k = 0; k < 9; ++k) {
      CHECK(std::abs(a[k] - b[k]) < 1e-12);
      sum += a[k];
      if (a[k] > a[am]) am = k;
      if (b[k] > b[bm]) bm = k;
    }
    CHECK(am == bm);
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("largest singular value") {
  CHECK(largest_singular_value(Matrix::identity(3)) == doctest::Approx(1.0).epsilon(1e-12));
  const double d[] = {3.0, 1.0};
  CHECK(largest_singular_value(Matrix::diagonal(d)) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK_THROWS_AS(largest_singular_value(Matrix(3, 3)), ConfigError);

  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix m = gaussian_matrix(rng, 10, 10, 1.0);
    const double oracle = jacobi_singular_values(m)[0];
    const double est = largest_singular_value(m, 1e-6);
    CHECK(std::abs(est - oracle) / oracle < 1e-6);
    const double alpha = -2.5;
    CHECK(std::abs(largest_singular_value(m.scaled(alpha)) - std::abs(alpha) * est) <
          2e-6 * std::abs(alpha) * est);
  }
}

TEST_CASE("power iteration reports non-convergence with the matrix name") {
  // one iteration cannot settle to 1e-12
  Rng rng(4);
  const Matrix m = gaussian_matrix(rng, 30, 30, 1.0);
  try {
    largest_singular_value(m, 1e-12, 1, "W_test");
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("W_test") != std::string::npos);
  }
}

TEST_CASE("gaussian_matrix") {
  Rng rng(8);
  CHECK(gaussian_matrix(rng, 2, 2, 0.0) == Matrix(2, 2));
  const Matrix big = gaussian_matrix(rng, 1000, 1000, 0.1);
  const double s = sample_std(big.span());
  CHECK(s >= 0.098);
  CHECK(s <= 0.102);
  Rng a(99), b(99);
  CHECK(gaussian_matrix(a, 20, 30, 0.3) == gaussian_matrix(b, 20, 30, 0.3));
}

TEST_CASE("rng determinism and stream independence") {
  Rng a(1234), b(1234), other(1234, 1);
  std::size_t same_as_other = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto x = a.next_u64();
    REQUIRE(x == b.next_u64());
    same_as_other += x == other.next_u64();
  }
  CHECK(same_as_other == 0);

  Rng u(7);
  double mean = 0;
  for (int i = 0; i < 100000; ++i) {
    const double x = u.uniform();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    mean += x;
  }
  CHECK(mean / 100000 == doctest::Approx(0.5).epsilon(0.01));
  for (int i = 0; i < 1000; ++i) CHECK(u.uniform_below(7) < 7);
}

TEST_CASE("log_sum_exp is stable") {
  const double v[] = {1000.0, 1000.0};
  CHECK(log_sum_exp(v) == doctest::Approx(1000.0 + std::log(2.0)));
  const double w[] = {-1000.0, -1000.0, -1000.0};
  CHECK(log_sum_exp(w) == doctest::Approx(-1000.0 + std::log(3.0)));
}
