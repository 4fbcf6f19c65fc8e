#include <cmath>
#include <numeric>

#include "stacksense/error.hpp"
#include "stacksense/nn.hpp"
#include "stacksense/rng.hpp"

namespace stacksense::nn {

void Dataset::validate() const {
  if (inputs.empty()) throw InvalidArgument("dataset is empty");
  if (inputs.size() != targets.size()) throw DimensionMismatch("dataset targets", inputs.size(), targets.size());
  const std::size_t d = inputs.front().size();
  const std::size_t c = targets.front().size();
  for (std::size_t n = 0; n < inputs.size(); ++n) {
    if (inputs[n].size() != d) throw DimensionMismatch("pattern " + std::to_string(n) + " input", d, inputs[n].size());
    if (targets[n].size() != c) throw DimensionMismatch("pattern " + std::to_string(n) + " target", c, targets[n].size());
  }
}

void TrainingConfig::validate() const {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw InvalidArgument("learning rate must be a finite non-negative number");
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw InvalidArgument("momentum must lie in [0, 1]");
  if (!(rate_up > 1.0 && rate_down > 0.0 && rate_down < 1.0))
    throw InvalidArgument("adaptive rate factors must satisfy up > 1 > down > 0");
  if (!(error_threshold > 0.0)) throw InvalidArgument("error threshold must be positive");
  if (max_generations == 0) throw InvalidArgument("max generations must be positive");
}

double mean_error(const LayeredNet& net, const Dataset& data) {
  double total = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) total += sse_error(evaluate(net, data.inputs[n]), data.targets[n]);
  return total / static_cast<double>(data.size());
}

double adapt_rate(double rate, double previous_error, double current_error, double up, double down) {
  if (current_error < previous_error) return rate * up;
  if (current_error > previous_error) return rate * down;
  return rate;
}

namespace {

void zero(std::vector<Matrix>& ms) {
  for (auto& m : ms)
    for (double& v : m.data()) v = 0.0;
}

// step = -rate * grad + momentum * step; w += step.
void apply_step(LayeredNet& net, const std::vector<Matrix>& grad, std::vector<Matrix>& step, double rate,
                double momentum) {
  for (std::size_t l = 0; l < grad.size(); ++l) {
    auto w = net.weights(l).data();
    auto g = grad[l].data();
    auto s = step[l].data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      s[i] = -rate * g[i] + momentum * s[i];
      w[i] += s[i];
    }
  }
}

}  // namespace

TrainingResult train(LayeredNet net, const Dataset& data, const TrainingConfig& cfg) {
  cfg.validate();
  data.validate();
  if (!net.trainable()) throw NonDifferentiableActivation("net contains a step activation and cannot be trained");
  if (data.input_dim() != net.input_dim()) throw DimensionMismatch("training inputs", net.input_dim(), data.input_dim());
  if (data.target_dim() != net.output_dim()) throw DimensionMismatch("training targets", net.output_dim(), data.target_dim());

  std::vector<Matrix> step;
  for (const auto& w : net.all_weights()) step.emplace_back(w.rows(), w.cols());

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainingResult result;
  double rate = cfg.rate;
  double previous = mean_error(net, data);
  result.initial_error = previous;
  if (!std::isfinite(previous)) throw Diverged(0);

  for (std::size_t gen = 1; gen <= cfg.max_generations; ++gen) {
    if (cfg.mode == TrainingMode::batch) {
      std::vector<Matrix> sum;
      for (const auto& w : net.all_weights()) sum.emplace_back(w.rows(), w.cols());
      for (std::size_t n = 0; n < data.size(); ++n) {
        const Gradients g = backprop(net, data.inputs[n], data.targets[n]);
        for (std::size_t l = 0; l < sum.size(); ++l) {
          auto acc = sum[l].data();
          auto part = g.weights[l].data();
          for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += part[i];
        }
      }
      apply_step(net, sum, step, rate, cfg.momentum);
    } else {
      if (cfg.shuffle) rng.shuffle(order.begin(), order.end());
      for (auto n : order) {
        const Gradients g = backprop(net, data.inputs[n], data.targets[n]);
        apply_step(net, g.weights, step, rate, cfg.momentum);
      }
    }

    const double err = mean_error(net, data);
    if (!std::isfinite(err) || !net.all_finite()) throw Diverged(gen);
    result.trace.push_back(err);
    if (err < cfg.error_threshold) {
      result.reached_threshold = true;
      break;
    }
    if (cfg.adaptive) {
      const double next = adapt_rate(rate, previous, err, cfg.rate_up, cfg.rate_down);
      if (next < rate) zero(step);
      rate = next;
    }
    previous = err;
  }
  result.final_rate = rate;
  result.net = std::move(net);
  return result;
}

double perceptron_criterion(std::span<const double> w, const Dataset& data) {
  double e = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto& x = data.inputs[n];
    const double t = data.targets[n][0];
    double s = w[0];
    for (std::size_t j = 0; j < x.size(); ++j) s += w[j + 1] * x[j];
    if (s * t <= 0.0) e -= s * t;
  }
  return e;
}

PerceptronResult train_perceptron(const Dataset& data, double rate, std::size_t max_generations, Vector initial) {
  data.validate();
  if (data.target_dim() != 1) throw InvalidArgument("perceptron targets must be scalar");
  for (const auto& t : data.targets)
    if (t[0] != 1.0 && t[0] != -1.0) throw InvalidArgument("perceptron targets must be -1 or +1");
  const std::size_t d = data.input_dim();
  if (initial.empty()) initial.assign(d + 1, 0.0);
  if (initial.size() != d + 1) throw DimensionMismatch("initial perceptron weights", d + 1, initial.size());

  PerceptronResult r;
  r.weights = std::move(initial);
  for (;;) {
    // Batch step over the misclassified set M: w += rate * sum_{n in M} f^n t^n.
    Vector update(d + 1, 0.0);
    bool any = false;
    for (std::size_t n = 0; n < data.size(); ++n) {
      const auto& x = data.inputs[n];
      const double t = data.targets[n][0];
      double s = r.weights[0];
      for (std::size_t j = 0; j < d; ++j) s += r.weights[j + 1] * x[j];
      if (s * t > 0.0) continue;
      any = true;
      update[0] += t;
      for (std::size_t j = 0; j < d; ++j) update[j + 1] += x[j] * t;
    }
    if (!any) {
      r.converged = true;
      break;
    }
    if (r.iterations == max_generations) break;
    for (std::size_t j = 0; j <= d; ++j) r.weights[j] += rate * update[j];
    ++r.iterations;
  }
  r.criterion = perceptron_criterion(r.weights, data);
  return r;
}

}  // namespace stacksense::nn
