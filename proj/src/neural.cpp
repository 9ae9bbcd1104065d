#include "curious/neural.hpp"

#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

namespace curious {

namespace {

void Activate(Matrix& z, Activation act) {
  switch (act) {
    case Activation::kRelu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::kTanh:
      z = z.array().tanh();
      break;
    case Activation::kIdentity:
      break;
  }
}

// Derivative of the activation expressed through its output.
void ScaleByDerivative(Matrix& delta, const Matrix& out, Activation act) {
  switch (act) {
    case Activation::kRelu:
      delta = (out.array() > 0.0).select(delta, 0.0);
      break;
    case Activation::kTanh:
      delta.array() *= 1.0 - out.array().square();
      break;
    case Activation::kIdentity:
      break;
  }
}

Activation LayerActivation(const NetworkParams& params, std::size_t layer) {
  return layer + 1 == params.layers.size() ? params.output : Activation::kRelu;
}

const char* ActivationName(Activation act) {
  switch (act) {
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kIdentity:
      return "identity";
  }
  return "?";
}

Activation ParseActivation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity") return Activation::kIdentity;
  throw std::runtime_error("unknown activation '" + name + "'");
}

void CheckSameShape(const NetworkParams& a, const NetworkParams& b,
                    const char* what) {
  if (!a.SameShape(b)) {
    throw ShapeMismatchError(std::string(what) + ": network shapes differ");
  }
}

template <typename F>
NetworkParams Combine(const NetworkParams& a, const NetworkParams& b, F&& f) {
  NetworkParams out = a;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    out.layers[l].weight = f(a.layers[l].weight, b.layers[l].weight);
    out.layers[l].bias = f(a.layers[l].bias, b.layers[l].bias);
  }
  return out;
}

double ReadDouble(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw std::runtime_error("network file truncated");
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') {
    throw std::runtime_error("bad number '" + token + "' in network file");
  }
  return v;
}

void Expect(std::istream& in, const std::string& word) {
  std::string token;
  if (!(in >> token) || token != word) {
    throw std::runtime_error("network file: expected '" + word + "'");
  }
}

}  // namespace

long NetworkParams::parameter_count() const {
  long n = 0;
  for (const DenseLayer& layer : layers) n += layer.weight.size() + layer.bias.size();
  return n;
}

bool NetworkParams::SameShape(const NetworkParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].weight.rows() != other.layers[l].weight.rows() ||
        layers[l].weight.cols() != other.layers[l].weight.cols() ||
        layers[l].bias.size() != other.layers[l].bias.size()) {
      return false;
    }
  }
  return true;
}

bool NetworkParams::operator==(const NetworkParams& other) const {
  if (output != other.output || !SameShape(other)) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].weight != other.layers[l].weight ||
        layers[l].bias != other.layers[l].bias) {
      return false;
    }
  }
  return true;
}

NetworkParams InitNetwork(const std::vector<int>& sizes, Activation output,
                          std::mt19937_64& rng, double final_scale) {
  if (sizes.size() < 2) {
    throw ShapeMismatchError("a network needs at least input and output sizes");
  }
  NetworkParams params;
  params.output = output;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    const bool last = l + 2 == sizes.size();
    const double bound = last ? final_scale : 1.0 / std::sqrt(double(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{Matrix(out, in), Vector(out)};
    // Row-major fill keeps the draw order independent of storage order.
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) layer.weight(r, c) = dist(rng);
    }
    for (int r = 0; r < out; ++r) layer.bias[r] = dist(rng);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

NetworkParams ZerosLike(const NetworkParams& like) {
  NetworkParams out = like;
  for (DenseLayer& layer : out.layers) {
    layer.weight.setZero();
    layer.bias.setZero();
  }
  return out;
}

Matrix ForwardBatch(const NetworkParams& params, const Matrix& inputs,
                    ForwardCache* cache) {
  if (params.layers.empty() || inputs.rows() != params.input_dim()) {
    throw ShapeMismatchError("forward: input dimension " +
                             std::to_string(inputs.rows()) +
                             " does not match network input " +
                             std::to_string(params.layers.empty()
                                                ? 0
                                                : params.input_dim()));
  }
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(inputs);
  }
  Matrix a = inputs;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const DenseLayer& layer = params.layers[l];
    Matrix z = layer.weight * a;
    z.colwise() += layer.bias;
    Activate(z, LayerActivation(params, l));
    a = std::move(z);
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

Vector Forward(const NetworkParams& params, const Vector& input) {
  return ForwardBatch(params, input);
}

Gradients Backward(const NetworkParams& params, const ForwardCache& cache,
                   const Matrix& upstream) {
  const std::size_t n_layers = params.layers.size();
  if (cache.activations.size() != n_layers + 1) {
    throw ShapeMismatchError("backward: cache does not match network depth");
  }
  const Matrix& output = cache.activations.back();
  if (upstream.rows() != output.rows() || upstream.cols() != output.cols()) {
    throw ShapeMismatchError("backward: upstream gradient shape mismatch");
  }
  Gradients grads;
  grads.params = ZerosLike(params);
  Matrix delta = upstream;
  for (std::size_t l = n_layers; l-- > 0;) {
    ScaleByDerivative(delta, cache.activations[l + 1],
                      LayerActivation(params, l));
    const Matrix& in = cache.activations[l];
    grads.params.layers[l].weight.noalias() = delta * in.transpose();
    grads.params.layers[l].bias = delta.rowwise().sum();
    Matrix next = params.layers[l].weight.transpose() * delta;
    delta = std::move(next);
  }
  grads.input = std::move(delta);
  return grads;
}

Gradients Backward(const NetworkParams& params, const Vector& input,
                   const Vector& upstream) {
  ForwardCache cache;
  ForwardBatch(params, input, &cache);
  return Backward(params, cache, upstream);
}

AdamState MakeAdam(const NetworkParams& params, double learning_rate) {
  AdamState opt;
  opt.first_moment = ZerosLike(params);
  opt.second_moment = ZerosLike(params);
  opt.learning_rate = learning_rate;
  return opt;
}

bool AllFinite(const NetworkParams& params) {
  for (const DenseLayer& layer : params.layers) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

void AdamStep(NetworkParams& params, const NetworkParams& grads,
              AdamState& opt) {
  CheckSameShape(params, grads, "adam");
  CheckSameShape(params, opt.first_moment, "adam");
  if (!AllFinite(grads)) throw NumericError("adam: non-finite gradient");
  ++opt.step;
  const double b1 = opt.beta1;
  const double b2 = opt.beta2;
  const double correction1 = 1.0 - std::pow(b1, double(opt.step));
  const double correction2 = 1.0 - std::pow(b2, double(opt.step));
  const double lr = opt.learning_rate;
  const double eps = opt.epsilon;
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / correction1) /
                 ((v.array() / correction2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weight, grads.layers[l].weight,
           opt.first_moment.layers[l].weight, opt.second_moment.layers[l].weight);
    update(params.layers[l].bias, grads.layers[l].bias,
           opt.first_moment.layers[l].bias, opt.second_moment.layers[l].bias);
  }
}

NetworkParams Polyak(const NetworkParams& target, const NetworkParams& online,
                     double tau) {
  CheckSameShape(target, online, "polyak");
  return Combine(target, online, [tau](const auto& t, const auto& o) {
    return (tau * t + (1.0 - tau) * o).eval();
  });
}

NetworkParams Average(std::span<const NetworkParams> sets) {
  if (sets.empty()) throw ShapeMismatchError("average: no parameter sets");
  NetworkParams sum = sets.front();
  for (std::size_t k = 1; k < sets.size(); ++k) {
    CheckSameShape(sum, sets[k], "average");
    sum = Combine(sum, sets[k],
                  [](const auto& a, const auto& b) { return (a + b).eval(); });
  }
  const double scale = 1.0 / double(sets.size());
  for (DenseLayer& layer : sum.layers) {
    layer.weight *= scale;
    layer.bias *= scale;
  }
  return sum;
}

void SaveNetwork(std::ostream& out, const NetworkParams& params) {
  std::ostringstream s;
  s << std::hexfloat;
  s << "curious-network 1\n";
  s << "output " << ActivationName(params.output) << "\n";
  s << "layers " << params.layers.size() << "\n";
  for (const DenseLayer& layer : params.layers) {
    s << "layer " << layer.weight.rows() << " " << layer.weight.cols() << "\n";
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        s << (c ? " " : "") << layer.weight(r, c);
      }
      s << "\n";
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      s << (r ? " " : "") << layer.bias[r];
    }
    s << "\n";
  }
  out << s.str();
}

NetworkParams LoadNetwork(std::istream& in) {
  Expect(in, "curious-network");
  int version = 0;
  if (!(in >> version) || version != 1) {
    throw std::runtime_error("unsupported network file version");
  }
  NetworkParams params;
  Expect(in, "output");
  std::string act;
  in >> act;
  params.output = ParseActivation(act);
  Expect(in, "layers");
  std::size_t n_layers = 0;
  if (!(in >> n_layers) || n_layers == 0) {
    throw std::runtime_error("network file: bad layer count");
  }
  for (std::size_t l = 0; l < n_layers; ++l) {
    Expect(in, "layer");
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    if (!(in >> rows >> cols) || rows <= 0 || cols <= 0) {
      throw std::runtime_error("network file: bad layer shape");
    }
    DenseLayer layer{Matrix(rows, cols), Vector(rows)};
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) layer.weight(r, c) = ReadDouble(in);
    }
    for (Eigen::Index r = 0; r < rows; ++r) layer.bias[r] = ReadDouble(in);
    if (!params.layers.empty() && params.layers.back().weight.rows() != cols) {
      throw std::runtime_error("network file: inconsistent layer shapes");
    }
    params.layers.push_back(std::move(layer));
  }
  return params;
}

}  // namespace curious
