#include "ndp/tensor.hpp"

namespace ndp {

Tensor::Tensor(int r, int c, double fill)
    : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {
  if (r < 0 || c < 0) fail(ErrorKind::Shape, "negative tensor dimension");
}

Tensor Tensor::scalar(double v) {
  Tensor t(1, 1);
  t.data[0] = v;
  return t;
}

Tensor Tensor::row(std::vector<double> v) {
  Tensor t;
  t.rows = 1;
  t.cols = static_cast<int>(v.size());
  t.data = std::move(v);
  return t;
}

Tensor Tensor::col(std::vector<double> v) {
  Tensor t;
  t.rows = static_cast<int>(v.size());
  t.cols = 1;
  t.data = std::move(v);
  return t;
}

Tensor Tensor::from_rows(int r, int c, std::vector<double> v) {
  if (static_cast<size_t>(r) * c != v.size())
    fail(ErrorKind::Shape, "from_rows: data length " +
                               std::to_string(v.size()) + " != " +
                               std::to_string(r) + "x" + std::to_string(c));
  Tensor t;
  t.rows = r;
  t.cols = c;
  t.data = std::move(v);
  return t;
}

Tensor Tensor::randn(int r, int c, Rng& rng, double stddev) {
  Tensor t(r, c);
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& x : t.data) x = dist(rng);
  return t;
}

std::string Tensor::shape_str() const {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

double Tensor::item() const {
  if (rows != 1 || cols != 1)
    fail(ErrorKind::Shape, "item() on non-scalar tensor " + shape_str());
  return data[0];
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    fail(ErrorKind::Shape, std::string(op) + ": shape mismatch " +
                               a.shape_str() + " vs " + b.shape_str());
}

}  // namespace ndp
