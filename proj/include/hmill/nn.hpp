#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hmill/matrix.hpp"
#include "hmill/rng.hpp"

namespace hmill {

enum class Activation { Identity, Relu, Tanh };

std::string to_string(Activation a);
/// Inverse of to_string; throws FormatError on unknown tags.
Activation activation_from_string(const std::string& tag);

/// Affine map followed by an element-wise activation, y = act(W x + b).
struct DenseLayer {
  Matrix weights;               // out x in
  std::vector<double> bias;     // out
  Activation activation = Activation::Identity;

  std::size_t in_dim() const noexcept { return weights.cols(); }
  std::size_t out_dim() const noexcept { return weights.rows(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Glorot-normal weights, zero bias.
DenseLayer make_dense(std::size_t in, std::size_t out, Activation act, Rng& rng);

/// act(W X + b) for X of shape in x B. Column j depends only on X's column j.
Matrix dense_forward(const DenseLayer& layer, const Matrix& x);

/// Gradients of a dense layer given its input, its output and dL/doutput.
/// `grad` receives dL/dW and dL/db added to its current contents.
/// Returns dL/dinput.
Matrix dense_backward(const DenseLayer& layer, const Matrix& input, const Matrix& output,
                      const Matrix& upstream, DenseLayer& grad);

/// Entries ~ Normal(0, 2 / (rows + cols)).
Matrix glorot_normal_init(std::size_t rows, std::size_t cols, Rng& rng);

/// Standard normal draw via Box-Muller on 53-bit uniforms; bit-reproducible
/// on every platform for a given generator state.
double standard_normal(Rng& rng);

/// Column-wise softmax, shifted by each column's maximum.
Matrix softmax_columns(const Matrix& x);

/// Floor applied to probabilities before taking logarithms in losses.
inline constexpr double kProbabilityFloor = 1e-30;

struct LossResult {
  double loss = 0.0;
  Matrix grad_logits;  // dL/dlogits, same shape as the logits
};

/// Mean multiclass cross entropy of softmax probabilities `probs`
/// (|C| x B) against class indices; gradient is taken w.r.t. the logits.
LossResult multiclass_cross_entropy(const Matrix& probs, std::span<const int> labels);

/// L = -(1/n) sum w1 y log p + w0 (1 - y) log(1 - p).
double weighted_binary_cross_entropy(std::span<const double> p1, std::span<const int> y,
                                     double w0, double w1);
/// dL/dp of weighted_binary_cross_entropy.
std::vector<double> weighted_binary_cross_entropy_grad(std::span<const double> p1,
                                                       std::span<const int> y, double w0,
                                                       double w1);
/// Weighted BCE on a two-row softmax output (row 1 = positive class),
/// with the gradient pushed back to the two logits.
LossResult weighted_binary_cross_entropy_logits(const Matrix& probs,
                                                std::span<const int> labels, double w0,
                                                double w1);

struct AdamState {
  std::size_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Zero moments for `n` parameters.
  static AdamState for_parameters(std::size_t n, double alpha = 0.001,
                                  double beta1 = 0.9, double beta2 = 0.999,
                                  double epsilon = 1e-8);
};

/// One bias-corrected Adam update, in place. Throws ShapeError when the three
/// lengths disagree.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

/// Central differences, one coordinate at a time.
std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& f, std::vector<double> theta,
    double h = 1e-5);

}  // namespace hmill
