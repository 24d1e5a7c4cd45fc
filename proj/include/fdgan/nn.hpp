#pragma once
// Minimal dense network with explicit backprop, plus Adam.
//
// Matrices are batch-major (row = sample) and row-major in memory. The
// forward pass caches inputs and pre-activations; backward returns exact
// parameter gradients and, when asked, gradients with respect to the input
// batch so a frozen discriminator can be backpropagated into the generator.
//
// Everything is 64-bit: the gradient checks and determinism contracts in the
// tests are not achievable in float.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdgan/rng.hpp"

namespace fdgan {

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c) {}

  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const {
    return a[static_cast<std::size_t>(i) * cols + j];
  }
  double* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(int i) const {
    return a.data() + static_cast<std::size_t>(i) * cols;
  }
};

enum class Hidden { LeakyRelu, Tanh };
enum class Output { Linear, Sigmoid };

struct MlpConfig {
  std::vector<int> sizes;  // input, hidden..., output
  Hidden hidden = Hidden::LeakyRelu;
  double leak = 0.1;
  Output output = Output::Linear;
  double init_std = 0.01;  // isotropic Gaussian weights, zero biases
};

// Gradients (or Adam moments) shaped exactly like the parameters.
struct ParamGrads {
  std::vector<Matrix> w;
  std::vector<std::vector<double>> b;
};

// Thrown when a training step encounters a non-finite loss or gradient;
// layer is -1 when the problem is in the loss itself.
struct StepRejected : std::runtime_error {
  int layer;
  explicit StepRejected(const std::string& msg, int layer_ = -1)
      : std::runtime_error(msg), layer(layer_) {}
};

class Mlp {
 public:
  struct Cache {
    Matrix input;
    std::vector<Matrix> pre;   // pre-activation z per layer
    std::vector<Matrix> post;  // activation a per hidden layer
  };

  Mlp() = default;
  static Mlp init(const MlpConfig& cfg, RngStream& rng);

  const MlpConfig& config() const { return cfg_; }
  int input_size() const { return cfg_.sizes.front(); }
  int output_size() const { return cfg_.sizes.back(); }
  int n_layers() const { return static_cast<int>(weights_.size()); }
  const std::vector<Matrix>& weights() const { return weights_; }
  const std::vector<std::vector<double>>& biases() const { return biases_; }
  std::vector<Matrix>& weights() { return weights_; }
  std::vector<std::vector<double>>& biases() { return biases_; }

  // Forward pass; pass a cache to enable backward.
  Matrix forward(const Matrix& batch, Cache* cache = nullptr) const;

  // Backward pass for the scalar loss whose d(loss)/d(output) is output_grad.
  // input_grad, when non-null, receives d(loss)/d(batch).
  ParamGrads backward(const Cache& cache, const Matrix& output_grad,
                      Matrix* input_grad = nullptr) const;

  ParamGrads zero_grads() const;
  bool params_equal(const Mlp& other) const;

  // Structured-text checkpoint: header (sizes, nonlinearity tags) followed by
  // row-major parameter arrays in full 17-digit precision.
  std::string save_text() const;
  static Mlp load_text(const std::string& text);

 private:
  MlpConfig cfg_;
  std::vector<Matrix> weights_;             // weights_[l]: sizes[l] x sizes[l+1]
  std::vector<std::vector<double>> biases_;  // biases_[l]: sizes[l+1]
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Optional linear decay of the step size to zero over this many steps
  // (0 disables). Used by the fixed-density ratio estimator, where a
  // constant step size leaves residual parameter jitter.
  long decay_steps = 0;
};

struct AdamState {
  AdamConfig cfg;
  long t = 0;
  ParamGrads m, v;

  static AdamState init(const Mlp& net, const AdamConfig& cfg);
};

// One Adam update: net += -sign * lr_t * mhat / (sqrt(vhat) + eps), i.e.
// sign=+1 descends and sign=-1 ascends. Rejects the step (parameters and
// moments untouched, StepRejected thrown with the layer index) if any
// gradient entry is non-finite.
void adam_step(AdamState& state, Mlp& net, const ParamGrads& grads,
               double sign = 1.0);

}  // namespace fdgan
