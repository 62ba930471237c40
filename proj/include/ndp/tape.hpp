#pragma once

#include <vector>

#include "ndp/tensor.hpp"

namespace ndp {

// Handle to a node on a Tape. Only meaningful together with the tape that
// produced it.
struct Value {
  int i = -1;
  bool valid() const { return i >= 0; }
};

enum class Op {
  Leaf,
  Constant,
  MatMul,
  Add,       // same shape, or rhs broadcast as a 1xC row over all rows
  Mul,       // elementwise; either side may be a 1x1 scalar
  ConcatRows,
  ConcatCols,
  Tanh,
  Relu,
  Sigmoid,
  Exp,
  Scale,     // by compile-time constant c0
  SumRows,   // RxC -> 1xC
  MeanAll,   // RxC -> 1x1
  GatherRows,
  ScatterAddRows,
  Pick,      // per-row column select, RxC -> Rx1
  Clamp,     // [c0, c1], zero gradient outside
  MinElem,
  LogSoftmax,           // row-wise
  SoftmaxCrossEntropy,  // mean over batch, integer labels
  Mse,                  // mean squared error over all elements
};

// Reverse-mode tape over dense tensors. Append-only during the forward pass;
// backward() walks nodes in reverse creation order and accumulates gradients
// additively across fan-out.
class Tape {
 public:
  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    Tensor val;
    Tensor grad;
    std::vector<int> idx;  // gather/scatter/pick indices or class labels
    double c0 = 0.0;
    double c1 = 0.0;
    int aux = 0;  // scatter output row count
    bool trainable = false;
    bool needs_grad = false;
  };

  Value leaf(Tensor t, bool trainable = true);
  Value constant(Tensor t);

  Value matmul(Value a, Value b);
  Value add(Value a, Value b);
  Value sub(Value a, Value b) { return add(a, scale(b, -1.0)); }
  Value mul(Value a, Value b);
  Value concat_rows(Value a, Value b);
  Value concat_cols(Value a, Value b);
  Value tanh(Value a);
  Value relu(Value a);
  Value sigmoid(Value a);
  Value exp(Value a);
  Value scale(Value a, double c);
  Value sum_rows(Value a);
  Value mean_all(Value a);
  Value gather_rows(Value a, std::vector<int> rows);
  Value scatter_add_rows(Value src, std::vector<int> dst_rows, int out_rows);
  Value pick(Value a, std::vector<int> col_per_row);
  Value clamp(Value a, double lo, double hi);
  Value min_elem(Value a, Value b);
  Value log_softmax(Value a);
  Value softmax_cross_entropy(Value logits, std::vector<int> labels);
  Value mse(Value pred, Value target);

  void backward(Value loss);

  const Tensor& val(Value v) const { return nodes_[v.i].val; }
  // Gradient of the last backward() w.r.t. v. Only nodes on a path from a
  // trainable leaf to the loss carry one.
  const Tensor& grad(Value v) const;
  bool has_grad(Value v) const;

  size_t size() const { return nodes_.size(); }
  void reset();  // drops all nodes, keeps allocation

 private:
  Value push(Node n);
  std::vector<Node> nodes_;
};

// Draws an index proportionally to the given nonnegative weights. Not a tape
// operation: the draw never carries gradient.
int sample_categorical(const Tensor& probs, Rng& rng);

// Adam with bias correction. Moment accumulators are created lazily to match
// the parameter shapes on the first step.
struct AdamState {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long t = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  explicit AdamState(double learning_rate = 0.001) : lr(learning_rate) {}
  void step(std::vector<Tensor*> params, const std::vector<Tensor>& grads);
};

}  // namespace ndp
