#include "deskmt/tensor.hpp"

#include <cmath>

#include "deskmt/error.hpp"

namespace deskmt {

void Node::accumulate(const Matrix& g) {
  if (!requires_grad) return;
  if (grad.size() == 0) grad = Matrix::Zero(value.rows(), value.cols());
  grad += g;
}

Node* Tape::make() {
  nodes_.push_back(std::make_unique<Node>());
  return nodes_.back().get();
}

Node* Tape::constant(Matrix value) {
  Node* n = make();
  n->value = std::move(value);
  return n;
}

Node* Tape::leaf(const Matrix& value) {
  Node* n = make();
  n->value = value;
  n->requires_grad = true;
  return n;
}

Node* Tape::matmul(Node* a, Node* b) {
  Node* n = make();
  n->value.noalias() = a->value * b->value;
  n->requires_grad = a->requires_grad || b->requires_grad;
  if (n->requires_grad)
    n->backprop = [n, a, b] {
      if (a->requires_grad) a->accumulate(n->grad * b->value.transpose());
      if (b->requires_grad) b->accumulate(a->value.transpose() * n->grad);
    };
  return n;
}

Node* Tape::matmul_nt(Node* a, Node* b) {
  Node* n = make();
  n->value.noalias() = a->value * b->value.transpose();
  n->requires_grad = a->requires_grad || b->requires_grad;
  if (n->requires_grad)
    n->backprop = [n, a, b] {
      if (a->requires_grad) a->accumulate(n->grad * b->value);
      if (b->requires_grad) b->accumulate(n->grad.transpose() * a->value);
    };
  return n;
}

Node* Tape::add(Node* a, Node* b) {
  Node* n = make();
  n->value = a->value + b->value;
  n->requires_grad = a->requires_grad || b->requires_grad;
  if (n->requires_grad)
    n->backprop = [n, a, b] {
      a->accumulate(n->grad);
      b->accumulate(n->grad);
    };
  return n;
}

Node* Tape::add_rowvec(Node* a, Node* row) {
  Node* n = make();
  n->value = a->value.rowwise() + row->value.row(0);
  n->requires_grad = a->requires_grad || row->requires_grad;
  if (n->requires_grad)
    n->backprop = [n, a, row] {
      a->accumulate(n->grad);
      if (row->requires_grad) row->accumulate(n->grad.colwise().sum());
    };
  return n;
}

Node* Tape::add_const(Node* a, const Matrix& c) {
  Node* n = make();
  n->value = a->value + c;
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backprop = [n, a] { a->accumulate(n->grad); };
  return n;
}

Node* Tape::scale(Node* a, double s) {
  Node* n = make();
  n->value = a->value * s;
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backprop = [n, a, s] { a->accumulate(n->grad * s); };
  return n;
}

Node* Tape::affine2(Node* a, Node* b, double ca, double cb) {
  Node* n = make();
  n->value = ca * a->value + cb * b->value;
  n->requires_grad = a->requires_grad || b->requires_grad;
  if (n->requires_grad)
    n->backprop = [n, a, b, ca, cb] {
      a->accumulate(ca * n->grad);
      b->accumulate(cb * n->grad);
    };
  return n;
}

Node* Tape::relu(Node* a) {
  Node* n = make();
  n->value = a->value.cwiseMax(0.0);
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backprop = [n, a] {
      a->accumulate((a->value.array() > 0.0).cast<double>().matrix().cwiseProduct(n->grad));
    };
  return n;
}

Node* Tape::softmax_rows(Node* a) {
  Node* n = make();
  const Matrix& x = a->value;
  n->value.resize(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    Eigen::RowVectorXd e = (x.row(r).array() - m).exp();
    n->value.row(r) = e / e.sum();
  }
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backprop = [n, a] {
      Matrix dx(n->value.rows(), n->value.cols());
      for (Eigen::Index r = 0; r < n->value.rows(); ++r) {
        const double dot = n->grad.row(r).dot(n->value.row(r));
        dx.row(r) = (n->grad.row(r).array() - dot) * n->value.row(r).array();
      }
      a->accumulate(dx);
    };
  return n;
}

Node* Tape::layer_norm(Node* a, Node* gain, Node* bias, double eps) {
  Node* n = make();
  const Matrix& x = a->value;
  const Eigen::Index d = x.cols();
  Matrix normalized(x.rows(), d);
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().sum() / static_cast<double>(d);
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    normalized.row(r) = (x.row(r).array() - mean) * inv_std(r);
  }
  n->value = (normalized.array().rowwise() * gain->value.row(0).array()).rowwise() +
             bias->value.row(0).array();
  n->requires_grad = a->requires_grad || gain->requires_grad || bias->requires_grad;
  if (n->requires_grad)
    n->backprop = [n, a, gain, bias, normalized, inv_std] {
      const Eigen::Index dim = normalized.cols();
      if (gain->requires_grad) gain->accumulate(n->grad.cwiseProduct(normalized).colwise().sum());
      if (bias->requires_grad) bias->accumulate(n->grad.colwise().sum());
      if (a->requires_grad) {
        Matrix dx(normalized.rows(), dim);
        for (Eigen::Index r = 0; r < normalized.rows(); ++r) {
          Eigen::RowVectorXd dy = n->grad.row(r).cwiseProduct(gain->value.row(0));
          const double mean_dy = dy.mean();
          const double mean_dy_xhat = dy.dot(normalized.row(r)) / static_cast<double>(dim);
          dx.row(r) = (dy.array() - mean_dy - normalized.row(r).array() * mean_dy_xhat) * inv_std(r);
        }
        a->accumulate(dx);
      }
    };
  return n;
}

Node* Tape::gather_rows(Node* table, const std::vector<int>& ids) {
  Node* n = make();
  n->value.resize(static_cast<Eigen::Index>(ids.size()), table->value.cols());
  for (size_t i = 0; i < ids.size(); ++i)
    n->value.row(static_cast<Eigen::Index>(i)) = table->value.row(ids[i]);
  n->requires_grad = table->requires_grad;
  if (n->requires_grad)
    n->backprop = [n, table, ids] {
      if (table->grad.size() == 0) table->grad = Matrix::Zero(table->value.rows(), table->value.cols());
      for (size_t i = 0; i < ids.size(); ++i)
        table->grad.row(ids[i]) += n->grad.row(static_cast<Eigen::Index>(i));
    };
  return n;
}

Node* Tape::slice_cols(Node* a, int start, int count) {
  Node* n = make();
  n->value = a->value.middleCols(start, count);
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backprop = [n, a, start, count] {
      if (a->grad.size() == 0) a->grad = Matrix::Zero(a->value.rows(), a->value.cols());
      a->grad.middleCols(start, count) += n->grad;
    };
  return n;
}

Node* Tape::concat_cols(const std::vector<Node*>& parts) {
  Node* n = make();
  Eigen::Index cols = 0;
  for (Node* p : parts) cols += p->value.cols();
  n->value.resize(parts[0]->value.rows(), cols);
  Eigen::Index at = 0;
  for (Node* p : parts) {
    n->value.middleCols(at, p->value.cols()) = p->value;
    at += p->value.cols();
    n->requires_grad = n->requires_grad || p->requires_grad;
  }
  if (n->requires_grad) {
    std::vector<Node*> ps = parts;
    n->backprop = [n, ps] {
      Eigen::Index at = 0;
      for (Node* p : ps) {
        p->accumulate(n->grad.middleCols(at, p->value.cols()));
        at += p->value.cols();
      }
    };
  }
  return n;
}

Node* Tape::dropout(Node* a, double rate, Rng& rng) {
  if (rate <= 0.0) return a;
  Node* n = make();
  Matrix mask(a->value.rows(), a->value.cols());
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index r = 0; r < mask.rows(); ++r)
    for (Eigen::Index c = 0; c < mask.cols(); ++c)
      mask(r, c) = rng.uniform01() < rate ? 0.0 : keep_scale;
  n->value = a->value.cwiseProduct(mask);
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backprop = [n, a, mask] { a->accumulate(n->grad.cwiseProduct(mask)); };
  return n;
}

Node* Tape::mean_pool_rows(Node* a, const std::vector<bool>& valid) {
  size_t k = 0;
  for (bool v : valid) k += v ? 1 : 0;
  if (k == 0) throw RuntimeFailure("mean_pool_rows: no valid rows");
  Node* n = make();
  n->value = Matrix::Zero(1, a->value.cols());
  for (size_t i = 0; i < valid.size(); ++i)
    if (valid[i]) n->value.row(0) += a->value.row(static_cast<Eigen::Index>(i));
  n->value /= static_cast<double>(k);
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backprop = [n, a, valid, k] {
      if (a->grad.size() == 0) a->grad = Matrix::Zero(a->value.rows(), a->value.cols());
      for (size_t i = 0; i < valid.size(); ++i)
        if (valid[i]) a->grad.row(static_cast<Eigen::Index>(i)) += n->grad.row(0) / static_cast<double>(k);
    };
  return n;
}

Node* Tape::cosine_distance(Node* u, Node* v) {
  const double nu = u->value.row(0).norm();
  const double nv = v->value.row(0).norm();
  if (nu == 0.0 || nv == 0.0) throw RuntimeFailure("cosine_distance: zero-norm pooled vector");
  const double dot = u->value.row(0).dot(v->value.row(0));
  Node* n = make();
  n->value = Matrix::Constant(1, 1, 1.0 - dot / (nu * nv));
  n->requires_grad = u->requires_grad || v->requires_grad;
  if (n->requires_grad)
    n->backprop = [n, u, v, nu, nv, dot] {
      const double g = n->grad(0, 0);
      // d(1 - u.v/(|u||v|))/du = (u.v) u / (|u|^3 |v|) - v / (|u||v|)
      u->accumulate(g * (dot / (nu * nu * nu * nv) * u->value - v->value / (nu * nv)));
      v->accumulate(g * (dot / (nv * nv * nv * nu) * v->value - u->value / (nu * nv)));
    };
  return n;
}

Node* Tape::cross_entropy_smoothed_sum(Node* logits, const std::vector<int>& gold, double epsilon,
                                       int pad_id, size_t* n_valid) {
  const Matrix& x = logits->value;
  const Eigen::Index v_size = x.cols();
  if (static_cast<size_t>(x.rows()) != gold.size())
    throw RuntimeFailure("cross_entropy: logits rows != gold length");

  Matrix log_probs(x.rows(), v_size);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    const double lse = m + std::log((x.row(r).array() - m).exp().sum());
    log_probs.row(r) = x.row(r).array() - lse;
  }

  const double off_gold = epsilon / static_cast<double>(v_size - 1);
  double total = 0.0;
  size_t valid = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == pad_id) continue;
    ++valid;
    const Eigen::Index r = static_cast<Eigen::Index>(i);
    const double sum_logp = log_probs.row(r).sum();
    const double logp_gold = log_probs(r, gold[i]);
    total -= (1.0 - epsilon) * logp_gold + off_gold * (sum_logp - logp_gold);
  }
  if (valid == 0) throw DataError("cross_entropy: all target positions are padding");
  if (n_valid) *n_valid = valid;

  Node* n = make();
  n->value = Matrix::Constant(1, 1, total);
  n->requires_grad = logits->requires_grad;
  if (n->requires_grad)
    n->backprop = [n, logits, gold, epsilon, off_gold, log_probs, pad_id] {
      const double g = n->grad(0, 0);
      Matrix dx = Matrix::Zero(log_probs.rows(), log_probs.cols());
      for (size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] == pad_id) continue;
        const Eigen::Index r = static_cast<Eigen::Index>(i);
        // d/dx of -sum_j q_j log p_j is softmax(x) - q
        dx.row(r) = log_probs.row(r).array().exp();
        dx.row(r).array() -= off_gold;
        dx(r, gold[i]) -= (1.0 - epsilon) - off_gold;
        dx.row(r) *= g;
      }
      logits->accumulate(dx);
    };
  return n;
}

void Tape::backward(Node* root) {
  if (root->value.rows() != 1 || root->value.cols() != 1)
    throw RuntimeFailure("backward root must be a scalar");
  root->grad = Matrix::Constant(1, 1, 1.0);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node* n = it->get();
    if (n->requires_grad && n->backprop && n->grad.size() != 0) n->backprop();
  }
}

}  // namespace deskmt
