#include <algorithm>
#include <cmath>
#include <string>

#include "stacksense/error.hpp"
#include "stacksense/nn.hpp"
#include "stacksense/rng.hpp"

namespace stacksense::nn {

double activate(Activation kind, double a) {
  switch (kind) {
    case Activation::logistic:
      return 1.0 / (1.0 + std::exp(-a));
    case Activation::tanh:
      return std::tanh(a);
    case Activation::heaviside:
      return a >= 0.0 ? 1.0 : 0.0;
    case Activation::heaviside_antisymmetric:
      return a >= 0.0 ? 1.0 : -1.0;
    case Activation::identity:
      return a;
  }
  return a;
}

double activate_derivative(Activation kind, double a) {
  switch (kind) {
    case Activation::logistic: {
      const double s = 1.0 / (1.0 + std::exp(-a));
      return s * (1.0 - s);
    }
    case Activation::tanh: {
      const double t = std::tanh(a);
      return 1.0 - t * t;
    }
    case Activation::identity:
      return 1.0;
    case Activation::heaviside:
    case Activation::heaviside_antisymmetric:
      break;
  }
  throw NonDifferentiableActivation("activation '" + std::string(to_string(kind)) +
                                    "' has no usable derivative");
}

bool is_differentiable(Activation kind) noexcept {
  return kind == Activation::logistic || kind == Activation::tanh || kind == Activation::identity;
}

std::string_view to_string(Activation kind) noexcept {
  switch (kind) {
    case Activation::logistic: return "logistic";
    case Activation::tanh: return "tanh";
    case Activation::heaviside: return "heaviside";
    case Activation::heaviside_antisymmetric: return "heaviside-antisymmetric";
    case Activation::identity: return "identity";
  }
  return "?";
}

Activation activation_from_string(std::string_view name) {
  for (auto k : {Activation::logistic, Activation::tanh, Activation::heaviside,
                 Activation::heaviside_antisymmetric, Activation::identity})
    if (to_string(k) == name) return k;
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

LayeredNet::LayeredNet(std::vector<std::size_t> layer_sizes, std::vector<Activation> activations)
    : sizes_(std::move(layer_sizes)), activations_(std::move(activations)) {
  if (sizes_.size() < 2) throw InvalidArgument("a layered net needs at least one weight layer");
  if (activations_.size() != sizes_.size() - 1)
    throw DimensionMismatch("activation count", sizes_.size() - 1, activations_.size());
  for (auto s : sizes_)
    if (s == 0) throw InvalidArgument("layer sizes must be positive");
  for (std::size_t i = 1; i < sizes_.size(); ++i) weights_.emplace_back(sizes_[i], sizes_[i - 1] + 1);
}

LayeredNet::LayeredNet(std::vector<Matrix> weights, std::vector<Activation> activations)
    : weights_(std::move(weights)), activations_(std::move(activations)) {
  if (weights_.empty()) throw InvalidArgument("a layered net needs at least one weight layer");
  if (activations_.size() != weights_.size())
    throw DimensionMismatch("activation count", weights_.size(), activations_.size());
  if (weights_.front().cols() < 2) throw InvalidArgument("weight matrix needs a bias column and an input");
  sizes_.push_back(weights_.front().cols() - 1);
  for (const auto& w : weights_) {
    if (w.cols() != sizes_.back() + 1) throw DimensionMismatch("weight matrix columns", sizes_.back() + 1, w.cols());
    if (w.rows() == 0) throw InvalidArgument("layer sizes must be positive");
    sizes_.push_back(w.rows());
  }
  if (!all_finite()) throw InvalidArgument("weights must be finite");
}

void LayeredNet::randomize(std::uint64_t seed, double scale) {
  Rng rng(seed);
  for (auto& w : weights_)
    for (double& v : w.data()) v = rng.uniform(-scale, scale);
}

std::size_t LayeredNet::weight_count() const noexcept {
  std::size_t n = 0;
  for (const auto& w : weights_) n += w.rows() * w.cols();
  return n;
}

bool LayeredNet::all_finite() const noexcept {
  for (const auto& w : weights_)
    for (double v : w.data())
      if (!std::isfinite(v)) return false;
  return true;
}

bool LayeredNet::trainable() const noexcept {
  return std::all_of(activations_.begin(), activations_.end(), is_differentiable);
}

ForwardPass forward(const LayeredNet& net, std::span<const double> x, ForwardStats* stats) {
  if (x.size() != net.input_dim()) throw DimensionMismatch("forward input", net.input_dim(), x.size());
  ForwardPass pass;
  pass.z.reserve(net.layer_count() + 1);
  pass.a.reserve(net.layer_count());
  pass.z.emplace_back(x.begin(), x.end());
  std::size_t madds = 0;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const Matrix& w = net.weights(l);
    const Vector& in = pass.z.back();
    Vector a(w.rows()), z(w.rows());
    for (std::size_t k = 0; k < w.rows(); ++k) {
      const auto row = w.row(k);
      double s = row[0];
      for (std::size_t j = 0; j < in.size(); ++j) s += row[j + 1] * in[j];
      a[k] = s;
      z[k] = activate(net.activation(l), s);
    }
    madds += w.rows() * w.cols();
    pass.a.push_back(std::move(a));
    pass.z.push_back(std::move(z));
  }
  if (stats) stats->multiply_adds += madds;
  return pass;
}

Vector evaluate(const LayeredNet& net, std::span<const double> x) {
  auto pass = forward(net, x);
  return std::move(pass.z.back());
}

double sse_error(std::span<const double> y, std::span<const double> t) {
  if (y.size() != t.size()) throw DimensionMismatch("sse_error", y.size(), t.size());
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - t[i]) * (y[i] - t[i]);
  return 0.5 * s;
}

Gradients backprop(const LayeredNet& net, std::span<const double> x, std::span<const double> t) {
  if (t.size() != net.output_dim()) throw DimensionMismatch("backprop target", net.output_dim(), t.size());
  for (auto act : net.activations())
    if (!is_differentiable(act))
      throw NonDifferentiableActivation("backprop through '" + std::string(to_string(act)) + "' layer");

  const ForwardPass pass = forward(net, x);
  const std::size_t layers = net.layer_count();
  Gradients g;
  g.deltas.resize(layers);
  g.weights.resize(layers);

  Vector& out = g.deltas[layers - 1];
  out.resize(net.output_dim());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = (pass.z[layers][k] - t[k]) * activate_derivative(net.activation(layers - 1), pass.a[layers - 1][k]);

  for (std::size_t l = layers - 1; l-- > 0;) {
    const Matrix& next = net.weights(l + 1);
    const Vector& next_delta = g.deltas[l + 1];
    Vector& delta = g.deltas[l];
    delta.assign(net.sizes()[l + 1], 0.0);
    for (std::size_t m = 0; m < next.rows(); ++m) {
      const auto row = next.row(m);
      for (std::size_t k = 0; k < delta.size(); ++k) delta[k] += row[k + 1] * next_delta[m];
    }
    for (std::size_t k = 0; k < delta.size(); ++k) delta[k] *= activate_derivative(net.activation(l), pass.a[l][k]);
  }

  for (std::size_t l = 0; l < layers; ++l) {
    const Vector& in = pass.z[l];
    const Vector& delta = g.deltas[l];
    Matrix& gw = g.weights[l];
    gw = Matrix(delta.size(), in.size() + 1);
    for (std::size_t k = 0; k < delta.size(); ++k) {
      auto row = gw.row(k);
      row[0] = delta[k];
      for (std::size_t i = 0; i < in.size(); ++i) row[i + 1] = delta[k] * in[i];
    }
  }
  return g;
}

LayeredNet logistic_to_tanh(const LayeredNet& net) {
  std::vector<Matrix> weights = net.all_weights();
  std::vector<Activation> acts = net.activations();
  for (std::size_t l = 0; l + 1 < weights.size(); ++l) {
    if (acts[l] != Activation::logistic) continue;
    for (double& v : weights[l].data()) v *= 0.5;
    acts[l] = Activation::tanh;
    // Next layer sees 0.5 + 0.5 z' instead of z.
    Matrix& next = weights[l + 1];
    for (std::size_t k = 0; k < next.rows(); ++k) {
      auto row = next.row(k);
      double shift = 0.0;
      for (std::size_t j = 1; j < row.size(); ++j) {
        shift += 0.5 * row[j];
        row[j] *= 0.5;
      }
      row[0] += shift;
    }
  }
  return LayeredNet(std::move(weights), std::move(acts));
}

Vector rebalance_priors(std::span<const double> posteriors, std::span<const double> train_priors,
                        std::span<const double> deploy_priors) {
  if (train_priors.size() != posteriors.size())
    throw DimensionMismatch("rebalance_priors train priors", posteriors.size(), train_priors.size());
  if (deploy_priors.size() != posteriors.size())
    throw DimensionMismatch("rebalance_priors deploy priors", posteriors.size(), deploy_priors.size());
  Vector out(posteriors.size());
  double total = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!(train_priors[k] > 0.0)) throw InvalidArgument("training prior must be strictly positive");
    if (deploy_priors[k] < 0.0 || posteriors[k] < 0.0)
      throw InvalidArgument("posteriors and deployment priors must be non-negative");
    out[k] = posteriors[k] * deploy_priors[k] / train_priors[k];
    total += out[k];
  }
  if (!(total > 0.0)) throw InvalidArgument("rebalanced posteriors are all zero");
  for (double& v : out) v /= total;
  return out;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

Classification classify(const LayeredNet& net, std::span<const double> x) {
  Classification c;
  c.outputs = evaluate(net, x);
  c.index = argmax(c.outputs);
  return c;
}

}  // namespace stacksense::nn
