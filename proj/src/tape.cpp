#include "ndp/tape.hpp"

#include <algorithm>
#include <cmath>

namespace ndp {

namespace {

void check_index_range(const std::vector<int>& idx, int n, const char* op) {
  for (int i : idx)
    if (i < 0 || i >= n)
      fail(ErrorKind::Contract, std::string(op) + ": index " +
                                    std::to_string(i) + " out of range [0," +
                                    std::to_string(n) + ")");
}

}  // namespace

Value Tape::push(Node n) {
  bool parents_need =
      (n.a >= 0 && nodes_[n.a].needs_grad) || (n.b >= 0 && nodes_[n.b].needs_grad);
  n.needs_grad = n.trainable || parents_need;
  nodes_.push_back(std::move(n));
  return Value{static_cast<int>(nodes_.size()) - 1};
}

Value Tape::leaf(Tensor t, bool trainable) {
  Node n;
  n.op = Op::Leaf;
  n.val = std::move(t);
  n.trainable = trainable;
  return push(std::move(n));
}

Value Tape::constant(Tensor t) {
  Node n;
  n.op = Op::Constant;
  n.val = std::move(t);
  return push(std::move(n));
}

Value Tape::matmul(Value a, Value b) {
  const Tensor& A = nodes_[a.i].val;
  const Tensor& B = nodes_[b.i].val;
  if (A.cols != B.rows)
    fail(ErrorKind::Shape,
         "matmul: shape mismatch " + A.shape_str() + " vs " + B.shape_str());
  Node n;
  n.op = Op::MatMul;
  n.a = a.i;
  n.b = b.i;
  n.val = Tensor(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i) {
    const double* arow = &A.data[static_cast<size_t>(i) * A.cols];
    double* orow = &n.val.data[static_cast<size_t>(i) * B.cols];
    for (int k = 0; k < A.cols; ++k) {
      double av = arow[k];
      if (av == 0.0) continue;
      const double* brow = &B.data[static_cast<size_t>(k) * B.cols];
      for (int j = 0; j < B.cols; ++j) orow[j] += av * brow[j];
    }
  }
  return push(std::move(n));
}

Value Tape::add(Value a, Value b) {
  const Tensor& A = nodes_[a.i].val;
  const Tensor& B = nodes_[b.i].val;
  Node n;
  n.op = Op::Add;
  n.a = a.i;
  n.b = b.i;
  if (A.same_shape(B)) {
    n.val = A;
    for (int i = 0; i < A.size(); ++i) n.val.data[i] += B.data[i];
  } else if (B.rows == 1 && B.cols == A.cols) {
    n.val = A;
    for (int i = 0; i < A.rows; ++i)
      for (int j = 0; j < A.cols; ++j) n.val.at(i, j) += B.at(0, j);
  } else {
    fail(ErrorKind::Shape,
         "add: shape mismatch " + A.shape_str() + " vs " + B.shape_str());
  }
  return push(std::move(n));
}

Value Tape::mul(Value a, Value b) {
  const Tensor& A = nodes_[a.i].val;
  const Tensor& B = nodes_[b.i].val;
  Node n;
  n.op = Op::Mul;
  n.a = a.i;
  n.b = b.i;
  if (A.same_shape(B)) {
    n.val = A;
    for (int i = 0; i < A.size(); ++i) n.val.data[i] *= B.data[i];
  } else if (B.size() == 1) {
    n.val = A;
    for (auto& x : n.val.data) x *= B.data[0];
  } else if (A.size() == 1) {
    n.val = B;
    for (auto& x : n.val.data) x *= A.data[0];
  } else {
    fail(ErrorKind::Shape,
         "mul: shape mismatch " + A.shape_str() + " vs " + B.shape_str());
  }
  return push(std::move(n));
}

Value Tape::concat_rows(Value a, Value b) {
  const Tensor& A = nodes_[a.i].val;
  const Tensor& B = nodes_[b.i].val;
  if (A.cols != B.cols)
    fail(ErrorKind::Shape, "concat_rows: shape mismatch " + A.shape_str() +
                               " vs " + B.shape_str());
  Node n;
  n.op = Op::ConcatRows;
  n.a = a.i;
  n.b = b.i;
  n.val = Tensor(A.rows + B.rows, A.cols);
  std::copy(A.data.begin(), A.data.end(), n.val.data.begin());
  std::copy(B.data.begin(), B.data.end(), n.val.data.begin() + A.size());
  return push(std::move(n));
}

Value Tape::concat_cols(Value a, Value b) {
  const Tensor& A = nodes_[a.i].val;
  const Tensor& B = nodes_[b.i].val;
  if (A.rows != B.rows)
    fail(ErrorKind::Shape, "concat_cols: shape mismatch " + A.shape_str() +
                               " vs " + B.shape_str());
  Node n;
  n.op = Op::ConcatCols;
  n.a = a.i;
  n.b = b.i;
  n.val = Tensor(A.rows, A.cols + B.cols);
  for (int i = 0; i < A.rows; ++i) {
    for (int j = 0; j < A.cols; ++j) n.val.at(i, j) = A.at(i, j);
    for (int j = 0; j < B.cols; ++j) n.val.at(i, A.cols + j) = B.at(i, j);
  }
  return push(std::move(n));
}

Value Tape::tanh(Value a) {
  Node n;
  n.op = Op::Tanh;
  n.a = a.i;
  n.val = nodes_[a.i].val;
  for (auto& x : n.val.data) x = std::tanh(x);
  return push(std::move(n));
}

Value Tape::relu(Value a) {
  Node n;
  n.op = Op::Relu;
  n.a = a.i;
  n.val = nodes_[a.i].val;
  for (auto& x : n.val.data) x = x > 0.0 ? x : 0.0;
  return push(std::move(n));
}

Value Tape::sigmoid(Value a) {
  Node n;
  n.op = Op::Sigmoid;
  n.a = a.i;
  n.val = nodes_[a.i].val;
  for (auto& x : n.val.data) x = 1.0 / (1.0 + std::exp(-x));
  return push(std::move(n));
}

Value Tape::exp(Value a) {
  Node n;
  n.op = Op::Exp;
  n.a = a.i;
  n.val = nodes_[a.i].val;
  for (auto& x : n.val.data) x = std::exp(x);
  return push(std::move(n));
}

Value Tape::scale(Value a, double c) {
  Node n;
  n.op = Op::Scale;
  n.a = a.i;
  n.c0 = c;
  n.val = nodes_[a.i].val;
  for (auto& x : n.val.data) x *= c;
  return push(std::move(n));
}

Value Tape::sum_rows(Value a) {
  const Tensor& A = nodes_[a.i].val;
  Node n;
  n.op = Op::SumRows;
  n.a = a.i;
  n.val = Tensor(1, A.cols);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) n.val.at(0, j) += A.at(i, j);
  return push(std::move(n));
}

Value Tape::mean_all(Value a) {
  const Tensor& A = nodes_[a.i].val;
  if (A.size() == 0) fail(ErrorKind::Shape, "mean_all: empty tensor");
  double s = 0.0;
  for (double x : A.data) s += x;
  Node n;
  n.op = Op::MeanAll;
  n.a = a.i;
  n.val = Tensor::scalar(s / A.size());
  return push(std::move(n));
}

Value Tape::gather_rows(Value a, std::vector<int> rows) {
  const Tensor& A = nodes_[a.i].val;
  check_index_range(rows, A.rows, "gather_rows");
  Node n;
  n.op = Op::GatherRows;
  n.a = a.i;
  n.val = Tensor(static_cast<int>(rows.size()), A.cols);
  for (size_t r = 0; r < rows.size(); ++r)
    for (int j = 0; j < A.cols; ++j)
      n.val.at(static_cast<int>(r), j) = A.at(rows[r], j);
  n.idx = std::move(rows);
  return push(std::move(n));
}

Value Tape::scatter_add_rows(Value src, std::vector<int> dst_rows,
                             int out_rows) {
  const Tensor& S = nodes_[src.i].val;
  if (static_cast<int>(dst_rows.size()) != S.rows)
    fail(ErrorKind::Shape, "scatter_add_rows: " + std::to_string(S.rows) +
                               " source rows vs " +
                               std::to_string(dst_rows.size()) + " indices");
  check_index_range(dst_rows, out_rows, "scatter_add_rows");
  Node n;
  n.op = Op::ScatterAddRows;
  n.a = src.i;
  n.aux = out_rows;
  n.val = Tensor(out_rows, S.cols);
  for (int r = 0; r < S.rows; ++r)
    for (int j = 0; j < S.cols; ++j) n.val.at(dst_rows[r], j) += S.at(r, j);
  n.idx = std::move(dst_rows);
  return push(std::move(n));
}

Value Tape::pick(Value a, std::vector<int> col_per_row) {
  const Tensor& A = nodes_[a.i].val;
  if (static_cast<int>(col_per_row.size()) != A.rows)
    fail(ErrorKind::Shape, "pick: need one column index per row");
  check_index_range(col_per_row, A.cols, "pick");
  Node n;
  n.op = Op::Pick;
  n.a = a.i;
  n.val = Tensor(A.rows, 1);
  for (int i = 0; i < A.rows; ++i) n.val.at(i, 0) = A.at(i, col_per_row[i]);
  n.idx = std::move(col_per_row);
  return push(std::move(n));
}

Value Tape::clamp(Value a, double lo, double hi) {
  Node n;
  n.op = Op::Clamp;
  n.a = a.i;
  n.c0 = lo;
  n.c1 = hi;
  n.val = nodes_[a.i].val;
  for (auto& x : n.val.data) x = std::min(std::max(x, lo), hi);
  return push(std::move(n));
}

Value Tape::min_elem(Value a, Value b) {
  const Tensor& A = nodes_[a.i].val;
  const Tensor& B = nodes_[b.i].val;
  require_same_shape(A, B, "min_elem");
  Node n;
  n.op = Op::MinElem;
  n.a = a.i;
  n.b = b.i;
  n.val = A;
  for (int i = 0; i < A.size(); ++i) n.val.data[i] = std::min(A.data[i], B.data[i]);
  return push(std::move(n));
}

Value Tape::log_softmax(Value a) {
  const Tensor& A = nodes_[a.i].val;
  Node n;
  n.op = Op::LogSoftmax;
  n.a = a.i;
  n.val = A;
  for (int i = 0; i < A.rows; ++i) {
    double mx = n.val.at(i, 0);
    for (int j = 1; j < A.cols; ++j) mx = std::max(mx, n.val.at(i, j));
    double lse = 0.0;
    for (int j = 0; j < A.cols; ++j) lse += std::exp(n.val.at(i, j) - mx);
    lse = mx + std::log(lse);
    for (int j = 0; j < A.cols; ++j) n.val.at(i, j) -= lse;
  }
  return push(std::move(n));
}

Value Tape::softmax_cross_entropy(Value logits, std::vector<int> labels) {
  const Tensor& A = nodes_[logits.i].val;
  if (static_cast<int>(labels.size()) != A.rows)
    fail(ErrorKind::Shape, "softmax_cross_entropy: " +
                               std::to_string(labels.size()) + " labels vs " +
                               std::to_string(A.rows) + " rows");
  check_index_range(labels, A.cols, "softmax_cross_entropy");
  double total = 0.0;
  for (int i = 0; i < A.rows; ++i) {
    double mx = A.at(i, 0);
    for (int j = 1; j < A.cols; ++j) mx = std::max(mx, A.at(i, j));
    double lse = 0.0;
    for (int j = 0; j < A.cols; ++j) lse += std::exp(A.at(i, j) - mx);
    total += mx + std::log(lse) - A.at(i, labels[i]);
  }
  Node n;
  n.op = Op::SoftmaxCrossEntropy;
  n.a = logits.i;
  n.val = Tensor::scalar(total / A.rows);
  n.idx = std::move(labels);
  return push(std::move(n));
}

Value Tape::mse(Value pred, Value target) {
  const Tensor& A = nodes_[pred.i].val;
  const Tensor& B = nodes_[target.i].val;
  require_same_shape(A, B, "mse");
  double total = 0.0;
  for (int i = 0; i < A.size(); ++i) {
    double d = A.data[i] - B.data[i];
    total += d * d;
  }
  Node n;
  n.op = Op::Mse;
  n.a = pred.i;
  n.b = target.i;
  n.val = Tensor::scalar(total / A.size());
  return push(std::move(n));
}

const Tensor& Tape::grad(Value v) const {
  const Node& n = nodes_[v.i];
  if (!n.needs_grad || n.grad.size() == 0)
    fail(ErrorKind::Contract, "grad(): node carries no gradient");
  return n.grad;
}

bool Tape::has_grad(Value v) const {
  return nodes_[v.i].needs_grad && nodes_[v.i].grad.size() != 0;
}

void Tape::reset() { nodes_.clear(); }

void Tape::backward(Value loss) {
  Node& ln = nodes_[loss.i];
  if (ln.val.rows != 1 || ln.val.cols != 1)
    fail(ErrorKind::Contract,
         "backward: loss must be scalar, got " + ln.val.shape_str());
  for (int i = 0; i <= loss.i; ++i) {
    Node& n = nodes_[i];
    if (n.needs_grad)
      n.grad = Tensor(n.val.rows, n.val.cols);
    else
      n.grad = Tensor();
  }
  if (!ln.needs_grad) return;  // loss does not depend on any trainable leaf
  ln.grad.data[0] = 1.0;

  for (int i = loss.i; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad) continue;
    const Tensor& g = n.grad;
    Node* pa = n.a >= 0 ? &nodes_[n.a] : nullptr;
    Node* pb = n.b >= 0 ? &nodes_[n.b] : nullptr;
    bool ga = pa && pa->needs_grad;
    bool gb = pb && pb->needs_grad;
    switch (n.op) {
      case Op::Leaf:
      case Op::Constant:
        break;
      case Op::MatMul: {
        const Tensor& A = pa->val;
        const Tensor& B = pb->val;
        if (ga) {  // dA = g . B^T
          for (int r = 0; r < A.rows; ++r)
            for (int k = 0; k < A.cols; ++k) {
              double s = 0.0;
              for (int j = 0; j < B.cols; ++j) s += g.at(r, j) * B.at(k, j);
              pa->grad.at(r, k) += s;
            }
        }
        if (gb) {  // dB = A^T . g
          for (int r = 0; r < A.rows; ++r)
            for (int k = 0; k < A.cols; ++k) {
              double av = A.at(r, k);
              if (av == 0.0) continue;
              for (int j = 0; j < B.cols; ++j)
                pb->grad.at(k, j) += av * g.at(r, j);
            }
        }
        break;
      }
      case Op::Add: {
        if (ga)
          for (int k = 0; k < g.size(); ++k) pa->grad.data[k] += g.data[k];
        if (gb) {
          if (pb->val.same_shape(n.val)) {
            for (int k = 0; k < g.size(); ++k) pb->grad.data[k] += g.data[k];
          } else {  // broadcast row: column-sum the incoming gradient
            for (int r = 0; r < g.rows; ++r)
              for (int j = 0; j < g.cols; ++j) pb->grad.at(0, j) += g.at(r, j);
          }
        }
        break;
      }
      case Op::Mul: {
        const Tensor& A = pa->val;
        const Tensor& B = pb->val;
        if (A.same_shape(B)) {
          if (ga)
            for (int k = 0; k < g.size(); ++k)
              pa->grad.data[k] += g.data[k] * B.data[k];
          if (gb)
            for (int k = 0; k < g.size(); ++k)
              pb->grad.data[k] += g.data[k] * A.data[k];
        } else if (B.size() == 1) {
          if (ga)
            for (int k = 0; k < g.size(); ++k)
              pa->grad.data[k] += g.data[k] * B.data[0];
          if (gb)
            for (int k = 0; k < g.size(); ++k)
              pb->grad.data[0] += g.data[k] * A.data[k];
        } else {  // A is scalar
          if (gb)
            for (int k = 0; k < g.size(); ++k)
              pb->grad.data[k] += g.data[k] * A.data[0];
          if (ga)
            for (int k = 0; k < g.size(); ++k)
              pa->grad.data[0] += g.data[k] * B.data[k];
        }
        break;
      }
      case Op::ConcatRows: {
        int an = pa->val.size();
        if (ga)
          for (int k = 0; k < an; ++k) pa->grad.data[k] += g.data[k];
        if (gb)
          for (int k = 0; k < pb->val.size(); ++k)
            pb->grad.data[k] += g.data[an + k];
        break;
      }
      case Op::ConcatCols: {
        int ac = pa->val.cols;
        for (int r = 0; r < n.val.rows; ++r) {
          if (ga)
            for (int j = 0; j < ac; ++j) pa->grad.at(r, j) += g.at(r, j);
          if (gb)
            for (int j = 0; j < pb->val.cols; ++j)
              pb->grad.at(r, j) += g.at(r, ac + j);
        }
        break;
      }
      case Op::Tanh:
        if (ga)
          for (int k = 0; k < g.size(); ++k)
            pa->grad.data[k] += g.data[k] * (1.0 - n.val.data[k] * n.val.data[k]);
        break;
      case Op::Relu:
        if (ga)
          for (int k = 0; k < g.size(); ++k)
            if (pa->val.data[k] > 0.0) pa->grad.data[k] += g.data[k];
        break;
      case Op::Sigmoid:
        if (ga)
          for (int k = 0; k < g.size(); ++k)
            pa->grad.data[k] +=
                g.data[k] * n.val.data[k] * (1.0 - n.val.data[k]);
        break;
      case Op::Exp:
        if (ga)
          for (int k = 0; k < g.size(); ++k)
            pa->grad.data[k] += g.data[k] * n.val.data[k];
        break;
      case Op::Scale:
        if (ga)
          for (int k = 0; k < g.size(); ++k) pa->grad.data[k] += g.data[k] * n.c0;
        break;
      case Op::SumRows:
        if (ga)
          for (int r = 0; r < pa->val.rows; ++r)
            for (int j = 0; j < pa->val.cols; ++j)
              pa->grad.at(r, j) += g.at(0, j);
        break;
      case Op::MeanAll:
        if (ga) {
          double gv = g.data[0] / pa->val.size();
          for (int k = 0; k < pa->val.size(); ++k) pa->grad.data[k] += gv;
        }
        break;
      case Op::GatherRows:
        if (ga)
          for (size_t r = 0; r < n.idx.size(); ++r)
            for (int j = 0; j < n.val.cols; ++j)
              pa->grad.at(n.idx[r], j) += g.at(static_cast<int>(r), j);
        break;
      case Op::ScatterAddRows:
        if (ga)
          for (size_t r = 0; r < n.idx.size(); ++r)
            for (int j = 0; j < n.val.cols; ++j)
              pa->grad.at(static_cast<int>(r), j) += g.at(n.idx[r], j);
        break;
      case Op::Pick:
        if (ga)
          for (int r = 0; r < n.val.rows; ++r)
            pa->grad.at(r, n.idx[r]) += g.at(r, 0);
        break;
      case Op::Clamp:
        if (ga)
          for (int k = 0; k < g.size(); ++k) {
            double x = pa->val.data[k];
            if (x >= n.c0 && x <= n.c1) pa->grad.data[k] += g.data[k];
          }
        break;
      case Op::MinElem:
        for (int k = 0; k < g.size(); ++k) {
          if (pa->val.data[k] <= pb->val.data[k]) {
            if (ga) pa->grad.data[k] += g.data[k];
          } else if (gb) {
            pb->grad.data[k] += g.data[k];
          }
        }
        break;
      case Op::LogSoftmax:
        if (ga) {
          for (int r = 0; r < n.val.rows; ++r) {
            double rowsum = 0.0;
            for (int j = 0; j < n.val.cols; ++j) rowsum += g.at(r, j);
            for (int j = 0; j < n.val.cols; ++j)
              pa->grad.at(r, j) +=
                  g.at(r, j) - std::exp(n.val.at(r, j)) * rowsum;
          }
        }
        break;
      case Op::SoftmaxCrossEntropy:
        if (ga) {
          const Tensor& A = pa->val;
          double gv = g.data[0] / A.rows;
          for (int r = 0; r < A.rows; ++r) {
            double mx = A.at(r, 0);
            for (int j = 1; j < A.cols; ++j) mx = std::max(mx, A.at(r, j));
            double lse = 0.0;
            for (int j = 0; j < A.cols; ++j) lse += std::exp(A.at(r, j) - mx);
            for (int j = 0; j < A.cols; ++j) {
              double p = std::exp(A.at(r, j) - mx) / lse;
              pa->grad.at(r, j) += gv * (p - (j == n.idx[r] ? 1.0 : 0.0));
            }
          }
        }
        break;
      case Op::Mse: {
        double gv = 2.0 * g.data[0] / pa->val.size();
        for (int k = 0; k < pa->val.size(); ++k) {
          double d = pa->val.data[k] - pb->val.data[k];
          if (ga) pa->grad.data[k] += gv * d;
          if (gb) pb->grad.data[k] -= gv * d;
        }
        break;
      }
    }
  }
}

int sample_categorical(const Tensor& probs, Rng& rng) {
  double total = 0.0;
  for (double p : probs.data) {
    if (p < 0.0)
      fail(ErrorKind::Sampling, "sample_categorical: negative probability");
    if (!std::isfinite(p))
      fail(ErrorKind::Sampling, "sample_categorical: non-finite probability");
    total += p;
  }
  if (total <= 0.0)
    fail(ErrorKind::Sampling, "sample_categorical: zero total mass");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(rng) * total;
  double acc = 0.0;
  int last = -1;
  for (int i = 0; i < probs.size(); ++i) {
    if (probs.data[i] <= 0.0) continue;
    acc += probs.data[i];
    last = i;
    if (u < acc) return i;
  }
  return last;  // u landed on the accumulated rounding slack
}

void AdamState::step(std::vector<Tensor*> params,
                     const std::vector<Tensor>& grads) {
  if (params.size() != grads.size())
    fail(ErrorKind::Contract, "adam: parameter/gradient count mismatch");
  if (m.empty()) {
    for (auto* p : params) {
      m.emplace_back(p->rows, p->cols);
      v.emplace_back(p->rows, p->cols);
    }
  }
  if (m.size() != params.size())
    fail(ErrorKind::Contract, "adam: parameter count changed between steps");
  t += 1;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (size_t p = 0; p < params.size(); ++p) {
    Tensor& th = *params[p];
    const Tensor& g = grads[p];
    if (!th.same_shape(g))
      fail(ErrorKind::Shape, "adam: gradient shape " + g.shape_str() +
                                 " vs parameter " + th.shape_str());
    if (!th.same_shape(m[p]))
      fail(ErrorKind::Shape, "adam: moment shape mismatch");
    for (int k = 0; k < th.size(); ++k) {
      m[p].data[k] = beta1 * m[p].data[k] + (1.0 - beta1) * g.data[k];
      v[p].data[k] = beta2 * v[p].data[k] + (1.0 - beta2) * g.data[k] * g.data[k];
      double mhat = m[p].data[k] / bc1;
      double vhat = v[p].data[k] / bc2;
      th.data[k] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace ndp
