#pragma once

#include <array>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

namespace hama::nn {

using Vec = std::vector<double>;

// Row-major dense matrix.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

/// Numerically stable softmax (max subtraction). Throws on empty input.
Vec softmax(const Vec& z);

/// Backward of y = softmax(z): returns dL/dz given y and dL/dy.
Vec softmax_backward(const Vec& y, const Vec& grad_y);

enum class Activation { Identity, Softmax };

struct DenseLayer {
  Mat weights;  // [out x in]
  Vec biases;   // [out]

  std::size_t in() const { return weights.cols; }
  std::size_t out() const { return weights.rows; }
};

/// Xavier uniform init: weights ~ U(-a, a) with a = sqrt(6/(in+out)), biases 0.
DenseLayer xavier_init(std::size_t out, std::size_t in, std::mt19937_64& rng);

// Two-layer MLP: y = act(W2 relu(W1 x + b1) + b2).
struct Mlp2 {
  DenseLayer layer1;
  DenseLayer layer2;
  Activation out_act = Activation::Identity;

  std::size_t in() const { return layer1.in(); }
  std::size_t out() const { return layer2.out(); }
};

Mlp2 make_mlp(std::size_t in, std::size_t hidden, std::size_t out, Activation act,
              std::mt19937_64& rng);

struct Mlp2Cache {
  Vec x;
  Vec z1;  // pre-activation of layer1
  Vec h1;  // relu(z1)
  Vec y;
};

/// Forward pass. If cache is non-null it is filled for a later backward call.
Vec mlp_forward(const Mlp2& net, const Vec& x, Mlp2Cache* cache = nullptr);

struct Mlp2Grads {
  Mat dW1;
  Vec db1;
  Mat dW2;
  Vec db2;

  Mlp2Grads() = default;
  explicit Mlp2Grads(const Mlp2& net);
  void zero();
};

/// Accumulates parameter gradients into `grads` and returns dL/dx.
Vec mlp_backward(const Mlp2& net, const Mlp2Cache& cache, const Vec& grad_y,
                 Mlp2Grads& grads);

// Flat-parameter plumbing used by the optimizer, soft updates and checkpoints.
std::size_t param_count(const Mlp2& net);
void append_params(const Mlp2& net, Vec& out);
void append_grads(const Mlp2Grads& g, Vec& out);
// Reads param_count(net) values starting at out[pos]; advances pos.
void load_params(Mlp2& net, const Vec& flat, std::size_t& pos);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vec m;
  Vec v;
  long t = 0;
  AdamConfig cfg;

  AdamState() = default;
  AdamState(std::size_t n, AdamConfig c) : m(n, 0.0), v(n, 0.0), cfg(c) {}

  /// One Adam step with bias correction. Throws if grads contain NaN/Inf.
  void step(Vec& params, const Vec& grads);
};

/// target <- tau*online + (1-tau)*target, elementwise.
void soft_update(const Vec& online, Vec& target, double tau);

bool all_finite(const Vec& v);

}  // namespace hama::nn
