#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "ndp/error.hpp"
#include "ndp/rng.hpp"

namespace ndp {

// Dense row-major matrix of 64-bit reals. A vector is a 1-column or 1-row
// matrix; a scalar is 1x1.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c, double fill = 0.0);

  static Tensor scalar(double v);
  static Tensor row(std::vector<double> v);
  static Tensor col(std::vector<double> v);
  static Tensor from_rows(int r, int c, std::vector<double> v);
  static Tensor randn(int r, int c, Rng& rng, double stddev = 1.0);

  int size() const { return rows * cols; }
  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return data[static_cast<size_t>(r) * cols + c];
  }
  bool same_shape(const Tensor& o) const {
    return rows == o.rows && cols == o.cols;
  }
  std::string shape_str() const;

  double item() const;  // value of a 1x1 tensor
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace ndp
