// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "deeprnn/core_math.hpp"
#include "deeprnn/model.hpp"

namespace testsupport {

using namespace deeprnn;

inline const std::vector<Architecture>& all_architectures() {
  static const std::vector<Architecture> a = {Architecture::rnn, Architecture::dt,
                                              Architecture::dts, Architecture::dot,
                                              Architecture::dots, Architecture::srnn};
  return a;
}

inline ModelConfig toy(Architecture a, std::size_t in = 3, std::size_t hidden = 4,
                       OutputHead head = OutputHead::softmax) {
  ModelConfig c;
  c.architecture = a;
  c.input_dim = c.output_dim = in;
  c.hidden_dim = hidden;
  if (has_deep_transition(a)) c.transition_inter_dim = hidden + 1;
  if (has_deep_output(a)) c.output_inter_dim = hidden;
  if (a == Architecture::srnn) c.levels = 2;
  c.output_head = head;
  c.validate();
  return c;
}

inline ParamSet random_params(const ModelConfig& c, Rng& rng, double std = 0.5) {
  ParamSet p = build(c).params;
  for (auto& t : p) t.value = gaussian_matrix(rng, t.value.rows(), t.value.cols(), std);
  return p;
}

inline std::vector<Frame> random_frames(const ModelConfig& c, std::size_t n, Rng& rng) {
  std::vector<Frame> seq(n);
  for (auto& f : seq) {
    if (c.output_head == OutputHead::softmax) {
      f.push_back(static_cast<int>(rng.uniform_below(c.input_dim)));
    } else {
      for (std::size_t k = 0; k < c.input_dim; ++k)
        if (rng.uniform() < 0.4) f.push_back(static_cast<int>(k));
    }
  }
  return seq;
}

inline Vector dense(const Frame& f, std::size_t dim) {
  Vector v(dim);
  for (int i : f) v[static_cast<std::size_t>(i)] = 1.0;
  return v;
}

/// Singular values of a dense matrix by one-sided Jacobi rotations, sorted
/// descending. Slow and simple: only for checking power iteration.
inline std::vector<double> jacobi_singular_values(const Matrix& m) {
  const std::size_t rows = m.rows(), cols = m.cols();
  std::vector<std::vector<double>> a(cols, std::vector<double>(rows));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) a[c][r] = m(r, c);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i + 1 < cols; ++i) {
      for (std::size_t j = i + 1; j < cols; ++j) {
        double alpha = 0, beta = 0, gamma = 0;
        for (std::size_t k = 0; k < rows; ++k) {
          alpha += a[i][k] * a[i][k];
          beta += a[j][k] * a[j][k];
          gamma += a[i][k] * a[j][k];
        }
        if (gamma == 0.0) continue;
        off = std::max(off, std::abs(gamma) / std::sqrt(alpha * beta));
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t), sn = cs * t;
        for (std::size_t k = 0; k < rows; ++k) {
          const double x = a[i][k], y = a[j][k];
          a[i][k] = cs * x - sn * y;
          a[j][k] = sn * x + cs * y;
        }
      }
    }
    if (off < 1e-15) break;
  }
  std::vector<double> s(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    double n = 0;
    for (double v : a[c]) n += v * v;
    s[c] = std::sqrt(n);
  }
  std::sort(s.rbegin(), s.rend());
  return s;
}

inline std::size_t column_nonzeros(const Matrix& m, std::size_t c) {
  std::size_t n = 0;
  for (std::size_t r = 0; r < m.rows(); ++r) n += m(r, c) != 0.0;
  return n;
}

inline double sample_std(std::span<const double> v) {
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace testsupport
