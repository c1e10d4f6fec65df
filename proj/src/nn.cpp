#include "hmill/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "hmill/error.hpp"

namespace hmill {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
  }
  return "identity";
}

Activation activation_from_string(const std::string& tag) {
  if (tag == "identity") return Activation::Identity;
  if (tag == "relu") return Activation::Relu;
  if (tag == "tanh") return Activation::Tanh;
  throw FormatError("unknown activation '" + tag + "'");
}

double standard_normal(Rng& rng) {
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  double u1;
  do {
    u1 = static_cast<double>(rng() >> 11) * kScale;
  } while (u1 <= 0.0);
  const double u2 = static_cast<double>(rng() >> 11) * kScale;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Matrix glorot_normal_init(std::size_t rows, std::size_t cols, Rng& rng) {
  const double sd = std::sqrt(2.0 / static_cast<double>(rows + cols));
  Matrix out(rows, cols);
  for (double& v : out.data()) v = sd * standard_normal(rng);
  return out;
}

DenseLayer make_dense(std::size_t in, std::size_t out, Activation act, Rng& rng) {
  return DenseLayer{glorot_normal_init(out, in, rng), std::vector<double>(out, 0.0), act};
}

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::Identity: return z;
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Tanh: return std::tanh(z);
  }
  return z;
}

// Derivative expressed through the activation output y.
double activation_slope(Activation a, double y) {
  switch (a) {
    case Activation::Identity: return 1.0;
    case Activation::Relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: return 1.0 - y * y;
  }
  return 1.0;
}

}  // namespace

Matrix dense_forward(const DenseLayer& layer, const Matrix& x) {
  if (x.rows() != layer.in_dim()) {
    throw ShapeError("dense layer expects " + std::to_string(layer.in_dim()) +
                     " input rows, got " + std::to_string(x.rows()));
  }
  Matrix z = matmul(layer.weights, x);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    for (double& v : row) v = activate(layer.activation, v + layer.bias[r]);
  }
  return z;
}

Matrix dense_backward(const DenseLayer& layer, const Matrix& input, const Matrix& output,
                      const Matrix& upstream, DenseLayer& grad) {
  if (upstream.rows() != output.rows() || upstream.cols() != output.cols()) {
    throw ShapeError("dense_backward: upstream " + shape_str(upstream) + " vs output " +
                     shape_str(output));
  }
  Matrix dz = upstream;
  for (std::size_t i = 0; i < dz.size(); ++i) {
    dz.data()[i] *= activation_slope(layer.activation, output.data()[i]);
  }
  const Matrix dw = matmul_nt(dz, input);
  for (std::size_t i = 0; i < dw.size(); ++i) grad.weights.data()[i] += dw.data()[i];
  for (std::size_t r = 0; r < dz.rows(); ++r) {
    double s = 0.0;
    for (double v : dz.row(r)) s += v;
    grad.bias[r] += s;
  }
  return matmul_tn(layer.weights, dz);
}

Matrix softmax_columns(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < x.rows(); ++r) mx = std::max(mx, x(r, c));
    double sum = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      out(r, c) = std::exp(x(r, c) - mx);
      sum += out(r, c);
    }
    for (std::size_t r = 0; r < x.rows(); ++r) out(r, c) /= sum;
  }
  return out;
}

LossResult multiclass_cross_entropy(const Matrix& probs, std::span<const int> labels) {
  if (labels.size() != probs.cols()) {
    throw ShapeError("cross entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(probs.cols()) + " columns");
  }
  LossResult out{0.0, probs};
  const double n = static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels[i];
    if (c < 0 || static_cast<std::size_t>(c) >= probs.rows()) {
      throw ShapeError("cross entropy: label " + std::to_string(c) + " outside 0.." +
                       std::to_string(probs.rows() - 1));
    }
    out.loss -= std::log(std::max(probs(c, i), kProbabilityFloor));
    out.grad_logits(c, i) -= 1.0;
  }
  if (n > 0) {
    out.loss /= n;
    for (double& g : out.grad_logits.data()) g /= n;
  }
  return out;
}

double weighted_binary_cross_entropy(std::span<const double> p1, std::span<const int> y,
                                     double w0, double w1) {
  if (p1.size() != y.size()) throw ShapeError("weighted BCE: length mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < p1.size(); ++i) {
    const double p = std::clamp(p1[i], kProbabilityFloor, 1.0 - kProbabilityFloor);
    loss -= y[i] ? w1 * std::log(p) : w0 * std::log1p(-p);
  }
  return p1.empty() ? 0.0 : loss / static_cast<double>(p1.size());
}

std::vector<double> weighted_binary_cross_entropy_grad(std::span<const double> p1,
                                                       std::span<const int> y, double w0,
                                                       double w1) {
  if (p1.size() != y.size()) throw ShapeError("weighted BCE: length mismatch");
  std::vector<double> g(p1.size());
  const double n = static_cast<double>(p1.size());
  for (std::size_t i = 0; i < p1.size(); ++i) {
    const double p = std::clamp(p1[i], kProbabilityFloor, 1.0 - kProbabilityFloor);
    g[i] = (y[i] ? -w1 / p : w0 / (1.0 - p)) / n;
  }
  return g;
}

LossResult weighted_binary_cross_entropy_logits(const Matrix& probs,
                                                std::span<const int> labels, double w0,
                                                double w1) {
  if (probs.rows() != 2) {
    throw ShapeError("weighted BCE needs a 2-row output, got " + shape_str(probs));
  }
  if (labels.size() != probs.cols()) throw ShapeError("weighted BCE: length mismatch");
  const auto p1 = probs.row(1);
  LossResult out{weighted_binary_cross_entropy(p1, labels, w0, w1),
                 Matrix(2, probs.cols())};
  const double n = static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    // p1 = sigmoid(z1 - z0): dL/dz1 = dL/dp1 * p1 (1 - p1), computed without
    // dividing by p1 so the expression stays finite at saturation.
    const double p = p1[i];
    const double dz1 = (labels[i] ? -w1 * (1.0 - p) : w0 * p) / n;
    out.grad_logits(1, i) = dz1;
    out.grad_logits(0, i) = -dz1;
  }
  return out;
}

AdamState AdamState::for_parameters(std::size_t n, double alpha, double beta1,
                                    double beta2, double epsilon) {
  AdamState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.alpha = alpha;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  return s;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " params, " +
                     std::to_string(grads.size()) + " grads, " +
                     std::to_string(state.m.size()) + " moments");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= state.alpha * mhat / (std::sqrt(vhat) + state.epsilon);
  }
}

std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& f, std::vector<double> theta,
    double h) {
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = theta[i];
    theta[i] = orig + h;
    const double fp = f(theta);
    theta[i] = orig - h;
    const double fm = f(theta);
    theta[i] = orig;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace hmill
