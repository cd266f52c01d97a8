#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "o2orl/rng.hpp"

namespace o2orl {

enum class OutputActivation { kIdentity, kTanh };

// Fully-connected network with ReLU hidden units and an identity or tanh
// output head. Layer l maps layer_sizes[l] inputs to layer_sizes[l+1]
// outputs; weights[l] is row-major (out x in).
//
// Flatten order, fixed for checkpoints and gradients: for each layer in
// order, all weights row-major, then the biases.
//
// Conventions: ReLU derivative at exactly zero pre-activation is 0; a tanh
// head keeps every output strictly inside (-1, 1).
struct MlpNet {
  std::vector<int> layer_sizes;
  OutputActivation output_activation = OutputActivation::kIdentity;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int layer_count() const { return static_cast<int>(layer_sizes.size()) - 1; }
};

// Weights and biases drawn uniform in +-1/sqrt(fan_in).
MlpNet make_mlp(std::vector<int> layer_sizes, OutputActivation head, Rng& rng);

std::size_t param_count(std::span<const int> layer_sizes);
std::size_t param_count(const MlpNet& net);

std::vector<double> flatten(const MlpNet& net);
void unflatten(MlpNet& net, std::span<const double> params);

std::vector<double> forward(const MlpNet& net, std::span<const double> input);

struct BackwardResult {
  std::vector<double> param_grad;  // flatten order
  std::vector<double> input_grad;
};

// Reverse-mode gradients of dot(upstream, output) with respect to all
// parameters and the input.
BackwardResult backward(const MlpNet& net, std::span<const double> input,
                        std::span<const double> upstream);

// Reusable per-layer buffers for the training hot path; one trace per
// network, reused across batch elements to avoid reallocation.
struct MlpTrace {
  std::vector<std::vector<double>> pre;    // pre-activations, per layer
  std::vector<std::vector<double>> act;    // act[0] is the input copy
  std::vector<std::vector<double>> delta;  // backprop scratch
};

void forward_trace(const MlpNet& net, std::span<const double> input,
                   MlpTrace& trace);

// Backprop through the activations recorded in `trace`. Parameter gradients
// are accumulated (+=) into param_grad, which must have param_count entries.
// If input_grad is non-null it is overwritten with the input gradient.
void backward_trace(const MlpNet& net, MlpTrace& trace,
                    std::span<const double> upstream,
                    std::span<double> param_grad,
                    std::vector<double>* input_grad = nullptr);

// Input gradient only; parameter gradients are not formed. Used where a
// network is differentiated through rather than trained.
void backward_input_only(const MlpNet& net, MlpTrace& trace,
                         std::span<const double> upstream,
                         std::vector<double>& input_grad);

struct AdamState {
  std::vector<double> m;  // first moments, flatten order
  std::vector<double> v;  // second moments
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam_state(const MlpNet& net);

// Bias-corrected Adam descent step, applied in place. Rejects non-finite
// gradients with an error naming the offending layer.
void adam_step(MlpNet& net, std::span<const double> grad, AdamState& state,
               double lr);

// target <- tau * online + (1 - tau) * target, elementwise.
void soft_update(MlpNet& target, const MlpNet& online, double tau);

// Versioned text checkpoint: layer sizes, head, then the flattened
// parameters one value per line in round-trip precision.
void save_net(const MlpNet& net, std::ostream& out);
MlpNet load_net(std::istream& in);

void save_adam(const AdamState& state, std::ostream& out);
AdamState load_adam(std::istream& in);

}  // namespace o2orl
