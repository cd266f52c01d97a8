#include "o2orl/net.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "o2orl/textio.hpp"

namespace o2orl {

namespace {

void check_architecture(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("MlpNet needs at least input and output layers");
  }
  for (int s : layer_sizes) {
    if (s <= 0) throw std::invalid_argument("layer sizes must be positive");
  }
}

void check_input_dim(const MlpNet& net, std::size_t got) {
  if (static_cast<int>(got) != net.input_dim()) {
    throw std::invalid_argument("forward: input size " + std::to_string(got) +
                                ", expected " + std::to_string(net.input_dim()));
  }
}

bool same_architecture(const MlpNet& a, const MlpNet& b) {
  return a.layer_sizes == b.layer_sizes;
}

}  // namespace

MlpNet make_mlp(std::vector<int> layer_sizes, OutputActivation head, Rng& rng) {
  check_architecture(layer_sizes);
  MlpNet net;
  net.layer_sizes = std::move(layer_sizes);
  net.output_activation = head;
  net.weights.resize(net.layer_count());
  net.biases.resize(net.layer_count());
  for (int l = 0; l < net.layer_count(); ++l) {
    const int fan_in = net.layer_sizes[l];
    const int fan_out = net.layer_sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    net.weights[l].resize(static_cast<std::size_t>(fan_out) * fan_in);
    net.biases[l].resize(fan_out);
    for (double& w : net.weights[l]) w = rng.uniform(-bound, bound);
    for (double& b : net.biases[l]) b = rng.uniform(-bound, bound);
  }
  return net;
}

std::size_t param_count(std::span<const int> layer_sizes) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    n += static_cast<std::size_t>(layer_sizes[l + 1]) * layer_sizes[l];
    n += static_cast<std::size_t>(layer_sizes[l + 1]);
  }
  return n;
}

std::size_t param_count(const MlpNet& net) { return param_count(net.layer_sizes); }

std::vector<double> flatten(const MlpNet& net) {
  std::vector<double> out;
  out.reserve(param_count(net));
  for (int l = 0; l < net.layer_count(); ++l) {
    out.insert(out.end(), net.weights[l].begin(), net.weights[l].end());
    out.insert(out.end(), net.biases[l].begin(), net.biases[l].end());
  }
  return out;
}

void unflatten(MlpNet& net, std::span<const double> params) {
  if (params.size() != param_count(net)) {
    throw std::invalid_argument("unflatten: got " + std::to_string(params.size()) +
                                " values, expected " +
                                std::to_string(param_count(net)));
  }
  std::size_t k = 0;
  for (int l = 0; l < net.layer_count(); ++l) {
    for (double& w : net.weights[l]) w = params[k++];
    for (double& b : net.biases[l]) b = params[k++];
  }
}

void forward_trace(const MlpNet& net, std::span<const double> input,
                   MlpTrace& trace) {
  check_input_dim(net, input.size());
  const int layers = net.layer_count();
  trace.pre.resize(layers);
  trace.act.resize(layers + 1);
  trace.delta.resize(layers);
  trace.act[0].assign(input.begin(), input.end());
  for (int l = 0; l < layers; ++l) {
    const int in = net.layer_sizes[l];
    const int out = net.layer_sizes[l + 1];
    const std::vector<double>& x = trace.act[l];
    std::vector<double>& z = trace.pre[l];
    std::vector<double>& a = trace.act[l + 1];
    z.resize(out);
    a.resize(out);
    const double* w = net.weights[l].data();
    for (int o = 0; o < out; ++o) {
      double acc = net.biases[l][o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) acc += row[i] * x[i];
      z[o] = acc;
    }
    const bool last = (l == layers - 1);
    if (!last) {
      for (int o = 0; o < out; ++o) a[o] = z[o] > 0.0 ? z[o] : 0.0;
    } else if (net.output_activation == OutputActivation::kTanh) {
      for (int o = 0; o < out; ++o) a[o] = std::tanh(z[o]);
    } else {
      a = z;
    }
  }
}

std::vector<double> forward(const MlpNet& net, std::span<const double> input) {
  MlpTrace trace;
  forward_trace(net, input, trace);
  return trace.act.back();
}

namespace {

// Fills trace.delta for every layer given the upstream output gradient.
// ReLU' at exactly 0 is 0.
void detail_compute_deltas(const MlpNet& net, MlpTrace& trace,
                           std::span<const double> upstream) {
  const int layers = net.layer_count();
  {
    std::vector<double>& d = trace.delta[layers - 1];
    d.assign(upstream.begin(), upstream.end());
    if (net.output_activation == OutputActivation::kTanh) {
      const std::vector<double>& a = trace.act[layers];
      for (std::size_t o = 0; o < d.size(); ++o) d[o] *= 1.0 - a[o] * a[o];
    }
  }
  for (int l = layers - 1; l > 0; --l) {
    const int in = net.layer_sizes[l];
    const int out = net.layer_sizes[l + 1];
    const std::vector<double>& d_up = trace.delta[l];
    std::vector<double>& d = trace.delta[l - 1];
    d.assign(in, 0.0);
    const double* w = net.weights[l].data();
    for (int o = 0; o < out; ++o) {
      const double* row = w + static_cast<std::size_t>(o) * in;
      const double g = d_up[o];
      for (int i = 0; i < in; ++i) d[i] += row[i] * g;
    }
    const std::vector<double>& z = trace.pre[l - 1];
    for (int i = 0; i < in; ++i) {
      if (z[i] <= 0.0) d[i] = 0.0;
    }
  }
}

}  // namespace

void backward_trace(const MlpNet& net, MlpTrace& trace,
                    std::span<const double> upstream,
                    std::span<double> param_grad,
                    std::vector<double>* input_grad) {
  const int layers = net.layer_count();
  if (static_cast<int>(upstream.size()) != net.output_dim()) {
    throw std::invalid_argument(
        "backward: upstream size " + std::to_string(upstream.size()) +
        ", expected " + std::to_string(net.output_dim()));
  }
  if (param_grad.size() != param_count(net)) {
    throw std::invalid_argument("backward: gradient buffer size mismatch");
  }

  detail_compute_deltas(net, trace, upstream);

  // Parameter gradients in flatten order.
  std::size_t k = 0;
  for (int l = 0; l < layers; ++l) {
    const int in = net.layer_sizes[l];
    const int out = net.layer_sizes[l + 1];
    const std::vector<double>& x = trace.act[l];
    const std::vector<double>& d = trace.delta[l];
    for (int o = 0; o < out; ++o) {
      const double g = d[o];
      for (int i = 0; i < in; ++i) param_grad[k++] += g * x[i];
    }
    for (int o = 0; o < out; ++o) param_grad[k++] += d[o];
  }

  if (input_grad != nullptr) {
    const int in = net.layer_sizes[0];
    const int out = net.layer_sizes[1];
    input_grad->assign(in, 0.0);
    const std::vector<double>& d = trace.delta[0];
    const double* w = net.weights[0].data();
    for (int o = 0; o < out; ++o) {
      const double* row = w + static_cast<std::size_t>(o) * in;
      const double g = d[o];
      for (int i = 0; i < in; ++i) (*input_grad)[i] += row[i] * g;
    }
  }
}

void backward_input_only(const MlpNet& net, MlpTrace& trace,
                         std::span<const double> upstream,
                         std::vector<double>& input_grad) {
  if (static_cast<int>(upstream.size()) != net.output_dim()) {
    throw std::invalid_argument(
        "backward: upstream size " + std::to_string(upstream.size()) +
        ", expected " + std::to_string(net.output_dim()));
  }
  detail_compute_deltas(net, trace, upstream);
  const int in = net.layer_sizes[0];
  const int out = net.layer_sizes[1];
  input_grad.assign(in, 0.0);
  const std::vector<double>& d = trace.delta[0];
  const double* w = net.weights[0].data();
  for (int o = 0; o < out; ++o) {
    const double* row = w + static_cast<std::size_t>(o) * in;
    const double g = d[o];
    for (int i = 0; i < in; ++i) input_grad[i] += row[i] * g;
  }
}

BackwardResult backward(const MlpNet& net, std::span<const double> input,
                        std::span<const double> upstream) {
  MlpTrace trace;
  forward_trace(net, input, trace);
  BackwardResult res;
  res.param_grad.assign(param_count(net), 0.0);
  backward_trace(net, trace, upstream, res.param_grad, &res.input_grad);
  return res;
}

AdamState make_adam_state(const MlpNet& net) {
  AdamState st;
  st.m.assign(param_count(net), 0.0);
  st.v.assign(param_count(net), 0.0);
  return st;
}

void adam_step(MlpNet& net, std::span<const double> grad, AdamState& state,
               double lr) {
  const std::size_t n = param_count(net);
  if (grad.size() != n || state.m.size() != n || state.v.size() != n) {
    throw std::invalid_argument("adam_step: gradient/state size mismatch");
  }
  // Locate non-finite components before mutating anything.
  std::size_t k = 0;
  for (int l = 0; l < net.layer_count(); ++l) {
    const std::size_t layer_span =
        net.weights[l].size() + net.biases[l].size();
    for (std::size_t j = 0; j < layer_span; ++j) {
      if (!std::isfinite(grad[k + j])) {
        throw std::runtime_error("adam_step: non-finite gradient in layer " +
                                 std::to_string(l) + " (flat index " +
                                 std::to_string(k + j) + ")");
      }
    }
    k += layer_span;
  }

  state.step += 1;
  const double b1t = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double b2t = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  k = 0;
  for (int l = 0; l < net.layer_count(); ++l) {
    for (double& w : net.weights[l]) {
      const double g = grad[k];
      state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
      state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
      w -= lr * (state.m[k] / b1t) / (std::sqrt(state.v[k] / b2t) + state.epsilon);
      ++k;
    }
    for (double& b : net.biases[l]) {
      const double g = grad[k];
      state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
      state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
      b -= lr * (state.m[k] / b1t) / (std::sqrt(state.v[k] / b2t) + state.epsilon);
      ++k;
    }
  }
}

void soft_update(MlpNet& target, const MlpNet& online, double tau) {
  if (!same_architecture(target, online)) {
    throw std::invalid_argument("soft_update: architecture mismatch");
  }
  if (tau < 0.0 || tau > 1.0) {
    throw std::invalid_argument("soft_update: tau must be in [0,1]");
  }
  for (int l = 0; l < target.layer_count(); ++l) {
    for (std::size_t i = 0; i < target.weights[l].size(); ++i) {
      target.weights[l][i] =
          tau * online.weights[l][i] + (1.0 - tau) * target.weights[l][i];
    }
    for (std::size_t i = 0; i < target.biases[l].size(); ++i) {
      target.biases[l][i] =
          tau * online.biases[l][i] + (1.0 - tau) * target.biases[l][i];
    }
  }
}

namespace {

constexpr const char* kNetMagic = "o2orl-net";
constexpr const char* kAdamMagic = "o2orl-adam";
constexpr int kFormatVersion = 1;

std::string next_token(std::istream& in, const char* what) {
  std::string tok;
  if (!(in >> tok)) {
    throw std::runtime_error(std::string("checkpoint: unexpected end of input, expected ") + what);
  }
  return tok;
}

}  // namespace

void save_net(const MlpNet& net, std::ostream& out) {
  out << kNetMagic << " v" << kFormatVersion << "\n";
  out << "layers " << net.layer_sizes.size();
  for (int s : net.layer_sizes) out << ' ' << s;
  out << "\n";
  out << "head " << (net.output_activation == OutputActivation::kTanh ? "tanh" : "identity") << "\n";
  const std::vector<double> params = flatten(net);
  out << "params " << params.size() << "\n";
  for (double p : params) out << fmt_double(p) << "\n";
}

MlpNet load_net(std::istream& in) {
  if (next_token(in, "magic") != kNetMagic || next_token(in, "version") != "v1") {
    throw std::runtime_error("checkpoint: not a v1 network file");
  }
  if (next_token(in, "'layers'") != "layers") {
    throw std::runtime_error("checkpoint: expected 'layers'");
  }
  const long count = parse_long(next_token(in, "layer count"));
  if (count < 2) throw std::runtime_error("checkpoint: bad layer count");
  std::vector<int> sizes(count);
  for (long i = 0; i < count; ++i) {
    sizes[i] = static_cast<int>(parse_long(next_token(in, "layer size")));
  }
  if (next_token(in, "'head'") != "head") {
    throw std::runtime_error("checkpoint: expected 'head'");
  }
  const std::string head = next_token(in, "head kind");
  if (head != "tanh" && head != "identity") {
    throw std::runtime_error("checkpoint: unknown head '" + head + "'");
  }
  if (next_token(in, "'params'") != "params") {
    throw std::runtime_error("checkpoint: expected 'params'");
  }
  const long n = parse_long(next_token(in, "param count"));
  check_architecture(sizes);
  if (static_cast<std::size_t>(n) != param_count(sizes)) {
    throw std::runtime_error("checkpoint: param count does not match layers");
  }
  std::vector<double> params(n);
  for (long i = 0; i < n; ++i) params[i] = parse_double(next_token(in, "parameter"));

  MlpNet net;
  net.layer_sizes = std::move(sizes);
  net.output_activation =
      head == "tanh" ? OutputActivation::kTanh : OutputActivation::kIdentity;
  net.weights.resize(net.layer_count());
  net.biases.resize(net.layer_count());
  for (int l = 0; l < net.layer_count(); ++l) {
    net.weights[l].resize(static_cast<std::size_t>(net.layer_sizes[l + 1]) *
                          net.layer_sizes[l]);
    net.biases[l].resize(net.layer_sizes[l + 1]);
  }
  unflatten(net, params);
  return net;
}

void save_adam(const AdamState& state, std::ostream& out) {
  out << kAdamMagic << " v" << kFormatVersion << "\n";
  out << "step " << state.step << "\n";
  out << "beta1 " << fmt_double(state.beta1) << "\n";
  out << "beta2 " << fmt_double(state.beta2) << "\n";
  out << "epsilon " << fmt_double(state.epsilon) << "\n";
  out << "moments " << state.m.size() << "\n";
  for (std::size_t i = 0; i < state.m.size(); ++i) {
    out << fmt_double(state.m[i]) << ' ' << fmt_double(state.v[i]) << "\n";
  }
}

AdamState load_adam(std::istream& in) {
  if (next_token(in, "magic") != kAdamMagic || next_token(in, "version") != "v1") {
    throw std::runtime_error("checkpoint: not a v1 optimizer file");
  }
  AdamState st;
  auto expect = [&](const char* key) {
    if (next_token(in, key) != key) {
      throw std::runtime_error(std::string("checkpoint: expected '") + key + "'");
    }
  };
  expect("step");
  st.step = parse_long(next_token(in, "step"));
  expect("beta1");
  st.beta1 = parse_double(next_token(in, "beta1"));
  expect("beta2");
  st.beta2 = parse_double(next_token(in, "beta2"));
  expect("epsilon");
  st.epsilon = parse_double(next_token(in, "epsilon"));
  expect("moments");
  const long n = parse_long(next_token(in, "moment count"));
  st.m.resize(n);
  st.v.resize(n);
  for (long i = 0; i < n; ++i) {
    st.m[i] = parse_double(next_token(in, "first moment"));
    st.v[i] = parse_double(next_token(in, "second moment"));
  }
  return st;
}

}  // namespace o2orl
