#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "grpolab/errors.hpp"

namespace grpolab {

// Dense row-major matrix of doubles; just enough linear algebra for the
// bucketed softmax policy and its gradients.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  std::span<double> row(int r) {
    return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }
  std::span<const double> row(int r) const {
    return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }

  bool same_shape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }

  void zero() { std::fill(data.begin(), data.end(), 0.0); }

  void add_scaled(const Matrix& g, double scale) {
    if (!same_shape(g)) throw_invalid_input("matrix shape mismatch in add_scaled");
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += scale * g.data[i];
  }

  void scale(double s) {
    for (double& v : data) v *= s;
  }

  double squared_norm() const {
    double acc = 0.0;
    for (double v : data) acc += v * v;
    return acc;
  }

  double norm() const { return std::sqrt(squared_norm()); }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) = default;
};

}  // namespace grpolab
