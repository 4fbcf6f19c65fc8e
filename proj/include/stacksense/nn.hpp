#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stacksense/matrix.hpp"

namespace stacksense::nn {

// ---------------------------------------------------------------------------
// Graph structure

// A directed graph over nodes 0..node_count-1.
struct NetGraph {
  std::size_t node_count = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
};

// Returns the nodes in an order where every edge points forward, i.e.
// number(i) < number(j) for every edge (i, j) with number(v) the position of
// v in the result. Among the valid orders the one that always emits the
// smallest available node is chosen. Throws CycleDetected with a witness cycle
// when the graph is not feed-forward, InvalidArgument for out-of-range edges.
std::vector<std::size_t> validate_feedforward(const NetGraph& graph);

// ---------------------------------------------------------------------------
// Activations

enum class Activation { logistic, tanh, heaviside, heaviside_antisymmetric, identity };

double activate(Activation kind, double a);
// g'(a). Only defined for differentiable kinds; throws
// NonDifferentiableActivation for the step functions.
double activate_derivative(Activation kind, double a);
bool is_differentiable(Activation kind) noexcept;

std::string_view to_string(Activation kind) noexcept;
Activation activation_from_string(std::string_view name);

// ---------------------------------------------------------------------------
// Layered perceptron network

// Layer i (1-based in the usual notation, index i-1 here) maps d_{i-1} inputs
// to d_i outputs through a d_i x (d_{i-1}+1) weight matrix whose column 0 is
// the bias, i.e. the weight against a constant +1 input.
class LayeredNet {
 public:
  LayeredNet() = default;
  LayeredNet(std::vector<std::size_t> layer_sizes, std::vector<Activation> activations);
  // Takes explicit weights; shapes are validated.
  LayeredNet(std::vector<Matrix> weights, std::vector<Activation> activations);

  // Uniform in [-scale, scale] from the seed.
  void randomize(std::uint64_t seed, double scale = 0.5);

  std::size_t input_dim() const noexcept { return sizes_.front(); }
  std::size_t output_dim() const noexcept { return sizes_.back(); }
  std::size_t layer_count() const noexcept { return weights_.size(); }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  std::size_t weight_count() const noexcept;

  Matrix& weights(std::size_t layer) { return weights_.at(layer); }
  const Matrix& weights(std::size_t layer) const { return weights_.at(layer); }
  const std::vector<Matrix>& all_weights() const noexcept { return weights_; }
  Activation activation(std::size_t layer) const { return activations_.at(layer); }
  const std::vector<Activation>& activations() const noexcept { return activations_; }

  bool all_finite() const noexcept;
  bool trainable() const noexcept;

  bool operator==(const LayeredNet&) const = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<Matrix> weights_;
  std::vector<Activation> activations_;
};

// Per-layer pre-activations a and outputs z. z[0] is the input itself, so
// z has layer_count()+1 entries and a has layer_count() entries.
struct ForwardPass {
  std::vector<Vector> a;
  std::vector<Vector> z;
  const Vector& output() const { return z.back(); }
};

struct ForwardStats {
  std::size_t multiply_adds = 0;
};

ForwardPass forward(const LayeredNet& net, std::span<const double> x, ForwardStats* stats = nullptr);
// Convenience: the output vector only.
Vector evaluate(const LayeredNet& net, std::span<const double> x);

// 1/2 ||y - t||^2.
double sse_error(std::span<const double> y, std::span<const double> t);

struct Gradients {
  std::vector<Matrix> weights;  // same shapes as the net's weight matrices
  std::vector<Vector> deltas;   // dE/da per layer
};

// Gradient of the sum-of-squares error of a single pattern.
Gradients backprop(const LayeredNet& net, std::span<const double> x, std::span<const double> t);

// Replaces every logistic hidden layer by a tanh layer computing the same
// function, using logistic(a) = (1 + tanh(a/2)) / 2. The layer after each
// converted layer absorbs the affine change. The output layer is left alone.
LayeredNet logistic_to_tanh(const LayeredNet& net);

// ---------------------------------------------------------------------------
// Data and training

struct Dataset {
  std::vector<Vector> inputs;
  std::vector<Vector> targets;

  std::size_t size() const noexcept { return inputs.size(); }
  std::size_t input_dim() const { return inputs.front().size(); }
  std::size_t target_dim() const { return targets.front().size(); }
  // Throws InvalidArgument unless N >= 1 and all dims agree.
  void validate() const;
};

enum class TrainingMode { batch, sequential };

struct TrainingConfig {
  double rate = 0.01;
  double momentum = 0.0;
  bool adaptive = false;
  double rate_up = 1.1;
  double rate_down = 0.5;
  double error_threshold = 1e-3;
  std::size_t max_generations = 1000;
  TrainingMode mode = TrainingMode::sequential;
  bool shuffle = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainingResult {
  LayeredNet net;
  // Mean over patterns of 1/2 ||y - t||^2, one entry per completed generation.
  std::vector<double> trace;
  double initial_error = 0.0;
  double final_rate = 0.0;
  bool reached_threshold = false;

  std::size_t generations() const noexcept { return trace.size(); }
};

// Mean of 1/2 ||y - t||^2 over the dataset.
double mean_error(const LayeredNet& net, const Dataset& data);

// Bold-driver step: rate * up when the error went down, rate * down when it
// went up, unchanged otherwise.
double adapt_rate(double rate, double previous_error, double current_error, double up, double down);

TrainingResult train(LayeredNet net, const Dataset& data, const TrainingConfig& cfg);

// Perceptron criterion training on f = (1, x) with targets in {-1, +1}.
struct PerceptronResult {
  Vector weights;  // weights[0] is the bias
  bool converged = false;
  std::size_t iterations = 0;
  double criterion = 0.0;  // E^perc at the returned weights
};

double perceptron_criterion(std::span<const double> w, const Dataset& data);
PerceptronResult train_perceptron(const Dataset& data, double rate, std::size_t max_generations,
                                  Vector initial = {});

// ---------------------------------------------------------------------------
// Classification helpers

// out_k proportional to posteriors_k * deploy_k / train_k, normalised to sum 1.
Vector rebalance_priors(std::span<const double> posteriors, std::span<const double> train_priors,
                        std::span<const double> deploy_priors);

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

struct Classification {
  std::size_t index = 0;
  Vector outputs;
};
Classification classify(const LayeredNet& net, std::span<const double> x);

}  // namespace stacksense::nn
