#include "hama/nn.hpp"

#include <algorithm>
#include <cmath>

namespace hama::nn {

bool all_finite(const Vec& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Vec softmax(const Vec& z) {
  if (z.empty()) throw std::invalid_argument("softmax: empty input");
  const double zmax = *std::max_element(z.begin(), z.end());
  Vec out(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - zmax);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

Vec softmax_backward(const Vec& y, const Vec& grad_y) {
  double dot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) dot += y[i] * grad_y[i];
  Vec grad_z(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) grad_z[i] = y[i] * (grad_y[i] - dot);
  return grad_z;
}

DenseLayer xavier_init(std::size_t out, std::size_t in, std::mt19937_64& rng) {
  if (out == 0 || in == 0) throw std::invalid_argument("xavier_init: zero dimension");
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-a, a);
  DenseLayer layer;
  layer.weights = Mat(out, in);
  layer.biases.assign(out, 0.0);
  for (double& w : layer.weights.a) w = dist(rng);
  return layer;
}

Mlp2 make_mlp(std::size_t in, std::size_t hidden, std::size_t out, Activation act,
              std::mt19937_64& rng) {
  Mlp2 net;
  net.layer1 = xavier_init(hidden, in, rng);
  net.layer2 = xavier_init(out, hidden, rng);
  net.out_act = act;
  return net;
}

namespace {

// y = W x + b
void affine(const DenseLayer& l, const Vec& x, Vec& y) {
  const std::size_t out = l.out(), in = l.in();
  y.resize(out);
  for (std::size_t i = 0; i < out; ++i) {
    const double* row = &l.weights.a[i * in];
    double s = l.biases[i];
    for (std::size_t j = 0; j < in; ++j) s += row[j] * x[j];
    y[i] = s;
  }
}

}  // namespace

Vec mlp_forward(const Mlp2& net, const Vec& x, Mlp2Cache* cache) {
  if (x.size() != net.in()) throw std::invalid_argument("mlp_forward: input size mismatch");
  Vec z1;
  affine(net.layer1, x, z1);
  Vec h1(z1.size());
  for (std::size_t i = 0; i < z1.size(); ++i) h1[i] = z1[i] > 0.0 ? z1[i] : 0.0;
  Vec y;
  affine(net.layer2, h1, y);
  if (net.out_act == Activation::Softmax) y = softmax(y);
  if (cache) {
    cache->x = x;
    cache->z1 = std::move(z1);
    cache->h1 = h1;
    cache->y = y;
  }
  return y;
}

Mlp2Grads::Mlp2Grads(const Mlp2& net)
    : dW1(net.layer1.out(), net.layer1.in()),
      db1(net.layer1.out(), 0.0),
      dW2(net.layer2.out(), net.layer2.in()),
      db2(net.layer2.out(), 0.0) {}

void Mlp2Grads::zero() {
  std::fill(dW1.a.begin(), dW1.a.end(), 0.0);
  std::fill(db1.begin(), db1.end(), 0.0);
  std::fill(dW2.a.begin(), dW2.a.end(), 0.0);
  std::fill(db2.begin(), db2.end(), 0.0);
}

Vec mlp_backward(const Mlp2& net, const Mlp2Cache& cache, const Vec& grad_y,
                 Mlp2Grads& grads) {
  if (grad_y.size() != net.out()) throw std::invalid_argument("mlp_backward: grad size mismatch");
  const std::size_t out = net.layer2.out();
  const std::size_t hid = net.layer1.out();
  const std::size_t in = net.layer1.in();

  Vec gz2 = net.out_act == Activation::Softmax ? softmax_backward(cache.y, grad_y) : grad_y;

  // layer2 grads and grad wrt h1
  Vec gh1(hid, 0.0);
  for (std::size_t i = 0; i < out; ++i) {
    const double g = gz2[i];
    grads.db2[i] += g;
    const double* row = &net.layer2.weights.a[i * hid];
    double* grow = &grads.dW2.a[i * hid];
    for (std::size_t j = 0; j < hid; ++j) {
      grow[j] += g * cache.h1[j];
      gh1[j] += g * row[j];
    }
  }

  // relu
  for (std::size_t j = 0; j < hid; ++j) {
    if (cache.z1[j] <= 0.0) gh1[j] = 0.0;
  }

  // layer1 grads and grad wrt x
  Vec gx(in, 0.0);
  for (std::size_t i = 0; i < hid; ++i) {
    const double g = gh1[i];
    if (g == 0.0) continue;
    grads.db1[i] += g;
    const double* row = &net.layer1.weights.a[i * in];
    double* grow = &grads.dW1.a[i * in];
    for (std::size_t j = 0; j < in; ++j) {
      grow[j] += g * cache.x[j];
      gx[j] += g * row[j];
    }
  }
  return gx;
}

std::size_t param_count(const Mlp2& net) {
  return net.layer1.weights.a.size() + net.layer1.biases.size() +
         net.layer2.weights.a.size() + net.layer2.biases.size();
}

void append_params(const Mlp2& net, Vec& out) {
  out.insert(out.end(), net.layer1.weights.a.begin(), net.layer1.weights.a.end());
  out.insert(out.end(), net.layer1.biases.begin(), net.layer1.biases.end());
  out.insert(out.end(), net.layer2.weights.a.begin(), net.layer2.weights.a.end());
  out.insert(out.end(), net.layer2.biases.begin(), net.layer2.biases.end());
}

void append_grads(const Mlp2Grads& g, Vec& out) {
  out.insert(out.end(), g.dW1.a.begin(), g.dW1.a.end());
  out.insert(out.end(), g.db1.begin(), g.db1.end());
  out.insert(out.end(), g.dW2.a.begin(), g.dW2.a.end());
  out.insert(out.end(), g.db2.begin(), g.db2.end());
}

namespace {
void load_span(Vec& dst, const Vec& flat, std::size_t& pos) {
  if (pos + dst.size() > flat.size()) throw std::invalid_argument("load_params: flat vector too short");
  std::copy(flat.begin() + static_cast<long>(pos),
            flat.begin() + static_cast<long>(pos + dst.size()), dst.begin());
  pos += dst.size();
}
}  // namespace

void load_params(Mlp2& net, const Vec& flat, std::size_t& pos) {
  load_span(net.layer1.weights.a, flat, pos);
  load_span(net.layer1.biases, flat, pos);
  load_span(net.layer2.weights.a, flat, pos);
  load_span(net.layer2.biases, flat, pos);
}

void AdamState::step(Vec& params, const Vec& grads) {
  if (params.size() != m.size() || grads.size() != m.size())
    throw std::invalid_argument("adam: size mismatch");
  if (!all_finite(grads)) throw std::runtime_error("adam: non-finite gradient, step aborted");
  ++t;
  const double b1t = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double b2t = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grads[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double mhat = m[i] / b1t;
    const double vhat = v[i] / b2t;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

void soft_update(const Vec& online, Vec& target, double tau) {
  if (online.size() != target.size()) throw std::invalid_argument("soft_update: size mismatch");
  for (std::size_t i = 0; i < online.size(); ++i)
    target[i] = tau * online[i] + (1.0 - tau) * target[i];
}

}  // namespace hama::nn
