#include <doctest.h>

#include <cmath>

#include "deskmt/error.hpp"
#include "deskmt/tensor.hpp"

using namespace deskmt;

namespace {

Matrix random_matrix(Rng& rng, int r, int c) {
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = 2.0 * rng.uniform01() - 1.0;
  return m;
}

// Finite-difference check of a graph built from the given leaves. The output
// is reduced to a scalar by summation when needed.
template <class BuildFn>
double fd_check(const std::vector<Matrix>& inputs, BuildFn build) {
  Tape tape;
  std::vector<Node*> leaves;
  for (const auto& m : inputs) leaves.push_back(tape.leaf(m));
  Node* out = build(tape, leaves);
  Node* root = out;
  if (out->value.size() != 1) {
    Node* ones_r = tape.constant(Matrix::Ones(1, out->value.rows()));
    Node* ones_c = tape.constant(Matrix::Ones(out->value.cols(), 1));
    root = tape.matmul(tape.matmul(ones_r, out), ones_c);
  }
  tape.backward(root);

  const double h = 1e-5;
  double max_rel = 0.0;
  for (size_t li = 0; li < inputs.size(); ++li) {
    for (Eigen::Index r = 0; r < inputs[li].rows(); ++r)
      for (Eigen::Index c = 0; c < inputs[li].cols(); ++c) {
        auto eval = [&](double delta) {
          Tape t2;
          std::vector<Node*> l2;
          for (size_t k = 0; k < inputs.size(); ++k) {
            Matrix m = inputs[k];
            if (k == li) m(r, c) += delta;
            l2.push_back(t2.leaf(m));
          }
          Node* o = build(t2, l2);
          return o->value.size() == 1 ? o->value(0, 0) : o->value.sum();
        };
        const double numeric = (eval(h) - eval(-h)) / (2.0 * h);
        const double analytic = leaves[li]->grad.size() ? leaves[li]->grad(r, c) : 0.0;
        const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
        max_rel = std::max(max_rel, std::abs(numeric - analytic) / denom);
      }
  }
  return max_rel;
}

}  // namespace

TEST_CASE("matmul forward and gradient") {
  Rng rng(1);
  auto a = random_matrix(rng, 3, 4);
  auto b = random_matrix(rng, 4, 2);
  Tape tape;
  Node* out = tape.matmul(tape.leaf(a), tape.leaf(b));
  CHECK(out->value.isApprox(a * b));
  CHECK(fd_check({a, b}, [](Tape& t, std::vector<Node*>& l) { return t.matmul(l[0], l[1]); }) < 1e-6);
}

TEST_CASE("matmul_nt gradient") {
  Rng rng(2);
  auto a = random_matrix(rng, 3, 4);
  auto b = random_matrix(rng, 5, 4);
  CHECK(fd_check({a, b}, [](Tape& t, std::vector<Node*>& l) { return t.matmul_nt(l[0], l[1]); }) < 1e-6);
}

TEST_CASE("add, add_rowvec, scale, affine2, relu gradients") {
  Rng rng(3);
  auto a = random_matrix(rng, 4, 3);
  auto b = random_matrix(rng, 4, 3);
  auto row = random_matrix(rng, 1, 3);
  CHECK(fd_check({a, b}, [](Tape& t, std::vector<Node*>& l) { return t.add(l[0], l[1]); }) < 1e-6);
  CHECK(fd_check({a, row}, [](Tape& t, std::vector<Node*>& l) { return t.add_rowvec(l[0], l[1]); }) < 1e-6);
  CHECK(fd_check({a}, [](Tape& t, std::vector<Node*>& l) { return t.scale(l[0], -1.7); }) < 1e-6);
  CHECK(fd_check({a, b}, [](Tape& t, std::vector<Node*>& l) { return t.affine2(l[0], l[1], 0.3, 0.7); }) < 1e-6);
  CHECK(fd_check({a}, [](Tape& t, std::vector<Node*>& l) { return t.relu(l[0]); }) < 1e-5);
}

TEST_CASE("softmax rows gradient and normalization") {
  Rng rng(4);
  auto a = random_matrix(rng, 3, 6);
  Tape tape;
  Node* s = tape.softmax_rows(tape.leaf(a));
  for (int r = 0; r < 3; ++r) CHECK(s->value.row(r).sum() == doctest::Approx(1.0));
  // weight the output so the gradient is not killed by the row-sum symmetry
  Rng rng2(5);
  auto w = random_matrix(rng2, 6, 1);
  CHECK(fd_check({a}, [&w](Tape& t, std::vector<Node*>& l) {
          return t.matmul(t.softmax_rows(l[0]), t.constant(w));
        }) < 1e-5);
}

TEST_CASE("layer_norm gradient") {
  Rng rng(6);
  auto x = random_matrix(rng, 4, 8);
  auto gain = random_matrix(rng, 1, 8);
  auto bias = random_matrix(rng, 1, 8);
  auto w = random_matrix(rng, 8, 1);
  CHECK(fd_check({x, gain, bias}, [&w](Tape& t, std::vector<Node*>& l) {
          return t.matmul(t.layer_norm(l[0], l[1], l[2]), t.constant(w));
        }) < 1e-5);
}

TEST_CASE("gather, slice, concat gradients") {
  Rng rng(7);
  auto table = random_matrix(rng, 6, 4);
  std::vector<int> ids = {1, 3, 3, 0};
  CHECK(fd_check({table}, [&ids](Tape& t, std::vector<Node*>& l) { return t.gather_rows(l[0], ids); }) < 1e-6);

  auto a = random_matrix(rng, 3, 8);
  CHECK(fd_check({a}, [](Tape& t, std::vector<Node*>& l) { return t.slice_cols(l[0], 2, 4); }) < 1e-6);
  CHECK(fd_check({a}, [](Tape& t, std::vector<Node*>& l) {
          return t.concat_cols({t.slice_cols(l[0], 0, 4), t.slice_cols(l[0], 4, 4)});
        }) < 1e-6);
}

TEST_CASE("mean_pool_rows") {
  Rng rng(8);
  auto a = random_matrix(rng, 4, 3);
  std::vector<bool> valid = {true, false, true, true};
  Tape tape;
  Node* pooled = tape.mean_pool_rows(tape.leaf(a), valid);
  Matrix expect = (a.row(0) + a.row(2) + a.row(3)) / 3.0;
  CHECK(pooled->value.isApprox(expect));
  CHECK(fd_check({a}, [&valid](Tape& t, std::vector<Node*>& l) { return t.mean_pool_rows(l[0], valid); }) < 1e-6);
  CHECK_THROWS_AS(tape.mean_pool_rows(tape.leaf(a), {false, false, false, false}), RuntimeFailure);
}

TEST_CASE("cosine_distance values and gradient") {
  Tape tape;
  Matrix u(1, 2), v(1, 2);

  u << 1, 0;
  v << 1, 0;
  CHECK(tape.cosine_distance(tape.leaf(u), tape.leaf(v))->value(0, 0) == doctest::Approx(0.0).epsilon(1e-12));

  v << 0, 1;
  CHECK(tape.cosine_distance(tape.leaf(u), tape.leaf(v))->value(0, 0) == doctest::Approx(1.0));

  v << -1, 0;
  CHECK(tape.cosine_distance(tape.leaf(u), tape.leaf(v))->value(0, 0) == doctest::Approx(2.0));

  v << 0, 0;
  CHECK_THROWS_AS(tape.cosine_distance(tape.leaf(u), tape.leaf(v)), RuntimeFailure);

  Rng rng(9);
  auto a = random_matrix(rng, 1, 5);
  auto b = random_matrix(rng, 1, 5);
  CHECK(fd_check({a, b}, [](Tape& t, std::vector<Node*>& l) { return t.cosine_distance(l[0], l[1]); }) < 1e-5);
}

TEST_CASE("cross entropy smoothed sum") {
  Rng rng(10);
  auto logits = random_matrix(rng, 3, 5);
  std::vector<int> gold = {2, 0, 4};

  SUBCASE("uniform logits give ln V for any epsilon") {
    Matrix uniform = Matrix::Constant(2, 7, 0.42);
    for (double eps : {0.0, 0.1, 0.5}) {
      Tape tape;
      size_t n = 0;
      Node* sum = tape.cross_entropy_smoothed_sum(tape.leaf(uniform), {1, 3}, eps, 0, &n);
      CHECK(sum->value(0, 0) / 2.0 == doctest::Approx(std::log(7.0)).epsilon(1e-12));
    }
  }
  SUBCASE("eps 0 is negative log-likelihood") {
    Tape tape;
    size_t n = 0;
    Node* sum = tape.cross_entropy_smoothed_sum(tape.leaf(logits), gold, 0.0, /*pad=*/-1, &n);
    double expect = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double lse = std::log(logits.row(i).array().exp().sum());
      expect -= logits(i, gold[static_cast<size_t>(i)]) - lse;
    }
    CHECK(sum->value(0, 0) == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("hand-computed smoothed case, V=3") {
    Matrix lg(1, 3);
    lg << 0.2, -0.1, 0.4;
    const double eps = 0.1;
    const double z = std::exp(0.2) + std::exp(-0.1) + std::exp(0.4);
    const double lp0 = 0.2 - std::log(z), lp1 = -0.1 - std::log(z), lp2 = 0.4 - std::log(z);
    const double expect = -(0.9 * lp2 + 0.05 * (lp0 + lp1));
    Tape tape;
    Node* sum = tape.cross_entropy_smoothed_sum(tape.leaf(lg), {2}, eps, 0, nullptr);
    CHECK(sum->value(0, 0) == doctest::Approx(expect).epsilon(1e-9));
  }
  SUBCASE("pad positions are excluded") {
    Tape tape;
    size_t n = 0;
    tape.cross_entropy_smoothed_sum(tape.leaf(logits), {2, 0, 4}, 0.1, /*pad=*/0, &n);
    CHECK(n == 2);  // gold id 0 is the pad id here
    CHECK_THROWS_AS(tape.cross_entropy_smoothed_sum(tape.leaf(logits), {0, 0, 0}, 0.1, 0, &n), DataError);
  }
  SUBCASE("gradient") {
    CHECK(fd_check({logits}, [&gold](Tape& t, std::vector<Node*>& l) {
            return t.cross_entropy_smoothed_sum(l[0], gold, 0.1, -1, nullptr);
          }) < 1e-6);
  }
}

TEST_CASE("dropout") {
  Rng data_rng(11);
  auto a = random_matrix(data_rng, 8, 8);
  Tape tape;
  Rng rng_a(7);
  Node* d = tape.dropout(tape.leaf(a), 0.5, rng_a);
  int zeros = 0;
  for (Eigen::Index r = 0; r < 8; ++r)
    for (Eigen::Index c = 0; c < 8; ++c) {
      if (d->value(r, c) == 0.0) ++zeros;
      else CHECK(d->value(r, c) == doctest::Approx(2.0 * a(r, c)));
    }
  CHECK(zeros > 8);
  CHECK(zeros < 56);

  Tape tape2;
  Rng rng_b(7);
  Node* d2 = tape2.dropout(tape2.leaf(a), 0.5, rng_b);
  CHECK(d->value.isApprox(d2->value));

  Tape tape3;
  Rng rng_c(7);
  Node* in = tape3.leaf(a);
  CHECK(tape3.dropout(in, 0.0, rng_c) == in);
}
