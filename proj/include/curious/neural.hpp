#ifndef CURIOUS_NEURAL_HPP_
#define CURIOUS_NEURAL_HPP_

#include <Eigen/Core>

#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace curious {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Activation { kRelu, kTanh, kIdentity };

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

// Dense feed-forward network: rectifier hidden layers, configurable output.
struct NetworkParams {
  std::vector<DenseLayer> layers;
  Activation output = Activation::kIdentity;

  int input_dim() const { return static_cast<int>(layers.front().weight.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().bias.size()); }
  long parameter_count() const;
  bool SameShape(const NetworkParams& other) const;
  bool operator==(const NetworkParams& other) const;
};

// `sizes` lists every layer width, input first. Weights and biases are drawn
// from U(-1/sqrt(fan_in), 1/sqrt(fan_in)); the last layer uses
// U(-final_scale, final_scale).
NetworkParams InitNetwork(const std::vector<int>& sizes, Activation output,
                          std::mt19937_64& rng, double final_scale = 3e-3);

// Same shapes as `like`, every entry zero.
NetworkParams ZerosLike(const NetworkParams& like);

// Intermediate values of a batched forward pass. Columns are samples.
struct ForwardCache {
  std::vector<Matrix> activations;  // input, then each layer output
};

Vector Forward(const NetworkParams& params, const Vector& input);
Matrix ForwardBatch(const NetworkParams& params, const Matrix& inputs,
                    ForwardCache* cache = nullptr);

struct Gradients {
  NetworkParams params;  // summed over the batch
  Matrix input;          // one column per sample
};

// Gradients of sum(output .* upstream) from a cached forward pass.
Gradients Backward(const NetworkParams& params, const ForwardCache& cache,
                   const Matrix& upstream);
Gradients Backward(const NetworkParams& params, const Vector& input,
                   const Vector& upstream);

struct AdamState {
  NetworkParams first_moment;
  NetworkParams second_moment;
  long step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState MakeAdam(const NetworkParams& params, double learning_rate);

// Bias-corrected Adam update, in place. Throws NumericError on non-finite
// gradients and leaves `params` and `opt` untouched in that case.
void AdamStep(NetworkParams& params, const NetworkParams& grads, AdamState& opt);

// tau * target + (1 - tau) * online.
NetworkParams Polyak(const NetworkParams& target, const NetworkParams& online,
                     double tau);

// Elementwise mean.
NetworkParams Average(std::span<const NetworkParams> sets);

bool AllFinite(const NetworkParams& params);

// Text checkpoint. Values are written as hexadecimal floats so a round trip
// is bit-exact:
//   curious-network 1
//   output <relu|tanh|identity>
//   layers <L>
//   layer <rows> <cols>
//   <rows * cols weights, row-major>
//   <rows biases>
void SaveNetwork(std::ostream& out, const NetworkParams& params);
NetworkParams LoadNetwork(std::istream& in);

}  // namespace curious

#endif  // CURIOUS_NEURAL_HPP_
