#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "csgen/errors.hpp"
#include "csgen/rng.hpp"

namespace csgen::nn {

// Dense row-major matrix of 64-bit reals. Scalars are [1,1], row vectors
// [1,n]; every op in the tape works on this one canonical rank.
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  static Tensor scalar(double v) {
    Tensor t(1, 1);
    t.data[0] = v;
    return t;
  }

  std::size_t size() const { return data.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  double item() const {
    if (size() != 1) throw ShapeError("item() on non-scalar tensor");
    return data[0];
  }

  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  std::string shape_str() const {
    return "[" + std::to_string(rows) + "," + std::to_string(cols) + "]";
  }

  void fill(double v) {
    for (double& x : data) x = v;
  }

  void fill_uniform(Rng& rng, double lo, double hi) {
    for (double& x : data) x = rng.uniform(lo, hi);
  }

  bool all_finite() const {
    for (double x : data)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

// A trainable tensor with its gradient accumulator. Parameters live
// outside the tape and persist across training steps.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, std::size_t r, std::size_t c)
      : name(std::move(n)), value(r, c), grad(r, c) {}

  void init_uniform(Rng& rng, double scale) { value.fill_uniform(rng, -scale, scale); }

  void zero_grad() { grad.fill(0.0); }
};

}  // namespace csgen::nn
