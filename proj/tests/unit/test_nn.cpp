#include <cmath>
#include <numeric>

#include "doctest.h"
#include "hmill/error.hpp"
#include "hmill/matrix.hpp"
#include "hmill/nn.hpp"

using namespace hmill;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (auto& v : m.data()) v = standard_normal(rng);
  return m;
}

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

void check_close(const Matrix& a, const Matrix& b, double tol) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::fabs(a.data()[i] - b.data()[i]) <= tol);
}

}  // namespace

TEST_CASE("matrix construction and shape errors") {
  Matrix m{{1, 2, 3}, {4, 5, 6}};
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 0) == 4);
  CHECK(m.col(2) == std::vector<double>{3, 6});
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), ShapeError);
  const Matrix parts[] = {Matrix(2, 1), Matrix(3, 1)};
  CHECK_THROWS_AS(hcat(parts), ShapeError);
  CHECK(vcat(parts).rows() == 5);
  Matrix bad(1, 1, std::nan(""));
  CHECK_FALSE(bad.all_finite());
  CHECK_THROWS_AS(require_finite(bad, "x"), ShapeError);
}

TEST_CASE("matmul variants agree with the textbook triple loop") {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 1 + rng() % 5, k = 1 + rng() % 5, m = 1 + rng() % 5;
    Matrix a = random_matrix(n, k, rng);
    Matrix b = random_matrix(k, m, rng);
    check_close(matmul(a, b), naive_matmul(a, b), 1e-12);
    check_close(matmul_tn(transpose(a), b), naive_matmul(a, b), 1e-12);
    check_close(matmul_nt(a, transpose(b)), naive_matmul(a, b), 1e-12);
  }
}

TEST_CASE("select_cols and row_block") {
  Matrix m{{1, 2, 3}, {4, 5, 6}};
  const std::size_t idx[] = {2, 0};
  CHECK(select_cols(m, idx) == Matrix{{3, 1}, {6, 4}});
  CHECK(row_block(m, 1, 1) == Matrix{{4, 5, 6}});
}

TEST_CASE("activation tags round-trip") {
  for (auto a : {Activation::Identity, Activation::Relu, Activation::Tanh}) {
    CHECK(activation_from_string(to_string(a)) == a);
  }
  CHECK_THROWS_AS(activation_from_string("sigmoid"), FormatError);
}

TEST_CASE("dense layer gradients match finite differences") {
  Rng rng(2);
  for (auto act : {Activation::Identity, Activation::Relu, Activation::Tanh}) {
    DenseLayer layer = make_dense(4, 3, act, rng);
    for (auto& b : layer.bias) b = 0.1 * standard_normal(rng);
    Matrix x = random_matrix(4, 5, rng);
    Matrix r = random_matrix(3, 5, rng);
    auto loss = [&](const DenseLayer& l, const Matrix& in) {
      Matrix y = dense_forward(l, in);
      double s = 0;
      for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * r.data()[i];
      return s;
    };
    DenseLayer grad{Matrix(3, 4), std::vector<double>(3, 0.0), act};
    Matrix y = dense_forward(layer, x);
    Matrix dx = dense_backward(layer, x, y, r, grad);

    std::vector<double> theta(layer.weights.data().begin(), layer.weights.data().end());
    auto fd = finite_difference_gradient(
        [&](std::span<const double> t) {
          DenseLayer l = layer;
          std::copy(t.begin(), t.end(), l.weights.data().begin());
          return loss(l, x);
        },
        theta);
    for (std::size_t i = 0; i < fd.size(); ++i) CHECK(grad.weights.data()[i] == doctest::Approx(fd[i]).epsilon(1e-6));

    std::vector<double> xin(x.data().begin(), x.data().end());
    auto fdx = finite_difference_gradient(
        [&](std::span<const double> t) {
          Matrix in(4, 5, std::vector<double>(t.begin(), t.end()));
          return loss(layer, in);
        },
        xin);
    for (std::size_t i = 0; i < fdx.size(); ++i) CHECK(dx.data()[i] == doctest::Approx(fdx[i]).epsilon(1e-6));
  }
}

TEST_CASE("glorot normal has the advertised variance") {
  Rng rng(3);
  Matrix w = glorot_normal_init(200, 300, rng);
  double mean = 0, sq = 0;
  for (double v : w.data()) {
    mean += v;
    sq += v * v;
  }
  mean /= w.size();
  const double var = sq / w.size() - mean * mean;
  CHECK(std::fabs(mean) < 0.002);
  CHECK(var == doctest::Approx(2.0 / 500).epsilon(0.03));
}

TEST_CASE("standard_normal is reproducible") {
  Rng a(9), b(9);
  for (int i = 0; i < 10; ++i) CHECK(standard_normal(a) == standard_normal(b));
}

TEST_CASE("softmax is shift invariant and survives huge logits") {
  Matrix z{{1000, 1}, {1001, 2}, {999, 3}};
  Matrix p = softmax_columns(z);
  CHECK(p.all_finite());
  for (std::size_t j = 0; j < 2; ++j) CHECK(p(0, j) + p(1, j) + p(2, j) == doctest::Approx(1.0));
  Matrix q = softmax_columns(Matrix{{0, 1}, {1, 2}, {-1, 3}});
  for (std::size_t i = 0; i < 3; ++i) CHECK(p(i, 0) == doctest::Approx(q(i, 0)));
}

TEST_CASE("cross entropy value and gradient") {
  Matrix logits{{0.2, -1.0, 0.5}, {0.1, 0.3, -0.2}, {-0.4, 0.0, 2.0}};
  const int labels[] = {0, 2, 1};
  auto res = multiclass_cross_entropy(softmax_columns(logits), labels);
  double expect = 0;
  Matrix p = softmax_columns(logits);
  for (int j = 0; j < 3; ++j) expect -= std::log(p(labels[j], j));
  CHECK(res.loss == doctest::Approx(expect / 3));

  std::vector<double> theta(logits.data().begin(), logits.data().end());
  auto fd = finite_difference_gradient(
      [&](std::span<const double> t) {
        Matrix z(3, 3, std::vector<double>(t.begin(), t.end()));
        return multiclass_cross_entropy(softmax_columns(z), labels).loss;
      },
      theta);
  for (std::size_t i = 0; i < fd.size(); ++i) CHECK(res.grad_logits.data()[i] == doctest::Approx(fd[i]).epsilon(1e-6));
}

TEST_CASE("weighted binary cross entropy") {
  const double p[] = {0.8, 0.3};
  const int y[] = {1, 0};
  const double expect = -(0.1 * std::log(0.8) + 0.9 * std::log(0.7)) / 2;
  CHECK(weighted_binary_cross_entropy(p, y, 0.9, 0.1) == doctest::Approx(expect));
  auto g = weighted_binary_cross_entropy_grad(p, y, 0.9, 0.1);
  CHECK(g[0] == doctest::Approx(-0.1 / 0.8 / 2));
  CHECK(g[1] == doctest::Approx(0.9 / 0.7 / 2));

  Matrix logits{{0.3, -0.2, 1.0}, {-0.1, 0.4, 0.2}};
  const int lab[] = {1, 0, 1};
  auto res = weighted_binary_cross_entropy_logits(softmax_columns(logits), lab, 0.7, 0.3);
  std::vector<double> theta(logits.data().begin(), logits.data().end());
  auto fd = finite_difference_gradient(
      [&](std::span<const double> t) {
        Matrix z(2, 3, std::vector<double>(t.begin(), t.end()));
        return weighted_binary_cross_entropy_logits(softmax_columns(z), lab, 0.7, 0.3).loss;
      },
      theta);
  for (std::size_t i = 0; i < fd.size(); ++i) CHECK(res.grad_logits.data()[i] == doctest::Approx(fd[i]).epsilon(1e-6));

  // A saturated probability is floored rather than producing infinity.
  const double zero[] = {0.0};
  const int one[] = {1};
  CHECK(std::isfinite(weighted_binary_cross_entropy(zero, one, 0.5, 0.5)));
}

TEST_CASE("adam first step has magnitude alpha") {
  std::vector<double> params{1.0, -2.0, 0.5};
  const std::vector<double> grads{0.3, -4.0, 1e-3};
  auto st = AdamState::for_parameters(3, 0.01);
  adam_step(params, grads, st);
  CHECK(st.step == 1);
  CHECK(params[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
  CHECK(params[1] == doctest::Approx(-2.0 + 0.01).epsilon(1e-6));
  CHECK(params[2] == doctest::Approx(0.5 - 0.01).epsilon(1e-4));
  std::vector<double> shorter{1.0};
  CHECK_THROWS_AS(adam_step(shorter, grads, st), ShapeError);
}

TEST_CASE("adam minimizes a quadratic") {
  std::vector<double> x{3.0, -2.0};
  auto st = AdamState::for_parameters(2, 0.05);
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> g{2 * (x[0] - 1), 2 * (x[1] + 1)};
    adam_step(x, g, st);
  }
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(x[1] == doctest::Approx(-1.0).epsilon(1e-3));
}

TEST_CASE("finite differences are exact on quadratics") {
  auto g = finite_difference_gradient(
      [](std::span<const double> t) { return t[0] * t[0] + 3 * t[0] * t[1]; }, {1.0, 2.0});
  CHECK(g[0] == doctest::Approx(8.0).epsilon(1e-9));
  CHECK(g[1] == doctest::Approx(3.0).epsilon(1e-9));
}
