#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sentattn/tensor.hpp"

namespace sentattn::ad {

using Var = int;
constexpr Var kNoVar = -1;

// Reverse-mode tape. Ops append nodes in evaluation order, so the tape is
// already topologically sorted; backward() walks it once in reverse. A node
// only participates in backward when something downstream touched its grad,
// and only records a closure at all when an operand requires grad.
//
// Tensors on the tape are values; parameters enter through leaf(). Tapes are
// single-use per backward and not shared across threads.
class Tape {
 public:
  Var leaf(Tensor value, bool requires_grad);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  const Tensor& val(Var v) const { return nodes_[static_cast<std::size_t>(v)].val; }
  // Gradient of the last backward() target w.r.t. v (zeros if untouched).
  Tensor& grad(Var v);
  bool requires_grad(Var v) const {
    return nodes_[static_cast<std::size_t>(v)].requires_grad;
  }

  void backward(Var loss);  // loss must be a scalar node
  std::size_t size() const { return nodes_.size(); }

  // ---- elementwise / shape ----
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var add_rowvec(Var x, Var b);  // b broadcast over rows of x
  Var relu(Var x);
  Var sigmoid(Var x);
  Var tanh_(Var x);
  Var log_floor(Var x, double eps);  // ln(max(x, eps)), zero slope below eps
  Var detach(Var x);

  Var concat_cols(Var a, Var b);
  Var concat_rows(const std::vector<Var>& parts);
  Var gather_rows(Var x, std::vector<int> idx);  // idx entry -1 gives a zero row
  // y[i,:] = mask[i]*a[i,:] + (1-mask[i])*b[i,:]
  Var row_mask_mix(Var a, Var b, std::vector<double> mask);

  // ---- matrix products ----
  Var matmul(Var a, Var b);     // [m,k]x[k,n]
  Var matmul_nt(Var a, Var b);  // A B^T with B [n,k]

  // ---- attention ----
  // S[h,m,n] = scale * q_h(m) . k_h(n). valid_cols < 0 means all columns;
  // causal limits row m to columns <= m. Invalid entries are -inf.
  Var mh_scores(Var Q, Var K, int heads, double scale, bool causal = false,
                int valid_cols = -1);
  Var softmax_lastdim(Var x);
  Var mh_mix(Var W, Var V, int heads, bool causal = false);
  // group-sum over the last dim: seg_of[j] gives the segment of column j
  Var segment_sum_lastdim(Var x, std::vector<int> seg_of, int num_segments);

  // ---- reductions / losses ----
  Var sum_lastdim(Var x);  // [..., n] -> [...]
  Var mean_all(Var x);     // -> scalar
  Var sum_all(Var x);      // -> scalar
  Var layer_norm(Var x, Var gain, Var bias, double eps);
  // rows of `table` selected by token id
  Var embed_rows(Var table, std::vector<int> ids);
  // mean negative log-likelihood over targets != ignore_index
  Var xent_logits(Var logits, std::vector<int> targets, int ignore_index = -1);

 private:
  struct Node {
    Tensor val;
    Tensor grad;  // empty until touched
    bool requires_grad = false;
    std::function<void(Tape&)> backward;
  };

  Var push(Tensor val, bool requires_grad, std::function<void(Tape&)> backward);
  std::vector<Node> nodes_;
};

}  // namespace sentattn::ad
