#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "msem/tensor.hpp"

namespace msem {

// Define-by-run reverse-mode autodiff. A Tape records one forward pass;
// backward() walks the nodes once in reverse. Tapes are cheap and rebuilt
// per pass; a tape is single-threaded.
class Tape {
 public:
  // Leaves. Parameters are entered with requires_grad=true.
  int leaf(Tensor value, bool requires_grad = false);

  // Core primitives. All return the id of the new node.
  int matmul(int a, int b);
  int add(int a, int b);              // same shape
  int sub(int a, int b);              // same shape
  int hadamard(int a, int b);         // elementwise product, same shape
  int divide(int a, int b);           // elementwise quotient, same shape
  int add_rowvec(int a, int v);       // a[m×n] + broadcast row v[n]
  int scale(int a, double c);
  int add_const(int a, double c);
  int sigmoid(int a);
  int tanh_(int a);
  int relu(int a);
  int exp_(int a);
  int log_(int a);                    // requires positive input
  int sqrt_(int a);                   // requires positive input
  int clamp(int a, double lo, double hi);  // zero gradient where clamped
  int softmax_rows(int a);
  int layer_norm(int x, int gain, int bias, double eps = 1e-5);
  int transpose(int a);
  int reshape(int a, std::vector<int64_t> shape);
  int concat_rows(const std::vector<int>& parts);
  int concat_cols(const std::vector<int>& parts);
  int slice_rows(int a, int64_t r0, int64_t r1);  // rows [r0, r1)
  int slice_cols(int a, int64_t c0, int64_t c1);  // cols [c0, c1)
  int sum_all(int a);                 // -> scalar [1]
  int mean_all(int a);                // -> scalar [1]
  int col_max(int a);                 // max over rows -> [1×n]; grad to first argmax
  int lookup(int table, const std::vector<int64_t>& rows);  // gather rows; scatter-add grad
  // Cross-entropy of softmax(logits) against one-hot target; logits [1×M].
  int cross_entropy(int logits, int64_t target);

  void backward(int loss_id);

  const Tensor& val(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  const Tensor& grad(int id) const;
  bool needs_grad(int id) const { return nodes_[static_cast<size_t>(id)].needs_grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    bool grad_ready = false;
    std::function<void(Tape&, const Node&)> back;  // null for leaves
  };

  int push(Tensor value, bool needs_grad, std::function<void(Tape&, const Node&)> back);
  Tensor& grad_buf(int id);
  void accumulate(int id, const Tensor& g);
  void accumulate_scaled(int id, const Tensor& g, double c);
  Node& node(int id) { return nodes_[static_cast<size_t>(id)]; }

  std::vector<Node> nodes_;
};

}  // namespace msem
