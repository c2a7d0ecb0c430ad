#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "deskmt/rng.hpp"

namespace deskmt {

using Matrix = Eigen::MatrixXd;

// One node of the reverse-mode tape: a 2-D value plus its gradient.
struct Node {
  Matrix value;
  Matrix grad;  // allocated on first use
  bool requires_grad = false;
  std::function<void()> backprop;  // adds into parent grads; empty for leaves

  void accumulate(const Matrix& g);
};

// Dynamic computation tape. Nodes are created in topological order, so the
// backward pass is a reverse sweep over the creation sequence. The tape owns
// every node; parameters are bound per tape and their gradients read back
// after backward().
class Tape {
 public:
  Node* constant(Matrix value);               // no gradient tracking
  Node* leaf(const Matrix& value);            // gradient-tracked input (parameter copy)

  Node* matmul(Node* a, Node* b);             // (m,k) x (k,n)
  Node* matmul_nt(Node* a, Node* b);          // a * b^T
  Node* add(Node* a, Node* b);                // same shape
  Node* add_rowvec(Node* a, Node* row);       // broadcast (1,n) over rows
  Node* add_const(Node* a, const Matrix& c);  // e.g. positional encodings, masks
  Node* scale(Node* a, double s);
  Node* affine2(Node* a, Node* b, double ca, double cb);  // ca*a + cb*b
  Node* relu(Node* a);
  Node* softmax_rows(Node* a);
  Node* layer_norm(Node* a, Node* gain, Node* bias, double eps = 1e-5);
  Node* gather_rows(Node* table, const std::vector<int>& ids);
  Node* slice_cols(Node* a, int start, int count);
  Node* concat_cols(const std::vector<Node*>& parts);
  Node* dropout(Node* a, double rate, Rng& rng);  // inverted dropout, identity at rate 0

  // Mean over rows marked valid; throws if none are valid.
  Node* mean_pool_rows(Node* a, const std::vector<bool>& valid);

  // 1 - cos(u, v) for two (1,d) vectors. Throws RuntimeFailure on zero norms.
  Node* cosine_distance(Node* u, Node* v);

  // Sum over non-pad rows of label-smoothed NLL; n_valid reports the row
  // count so callers can average across a batch.
  Node* cross_entropy_smoothed_sum(Node* logits, const std::vector<int>& gold, double epsilon, int pad_id,
                                   size_t* n_valid);

  void backward(Node* root);  // root must be 1x1

  size_t size() const { return nodes_.size(); }

 private:
  Node* make();
  std::vector<std::unique_ptr<Node>> nodes_;
};

}  // namespace deskmt
