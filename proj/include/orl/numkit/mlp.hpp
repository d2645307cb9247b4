#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "orl/numkit/rng.hpp"
#include "orl/numkit/types.hpp"

namespace orl {

enum class OutputActivation : std::uint8_t {
  kNone = 0,
  /// bound * tanh(z)
  kScaledTanh = 1,
};

/// Intermediate values of a batched forward pass, kept for backprop.
struct ForwardPass {
  /// inputs[k] is the input to layer k (inputs[0] is the network input).
  std::vector<Mat> inputs;
  Mat output;
};

struct MlpGradient {
  /// Same layout as MlpNet::params().
  Vec params;
  /// d<upstream, output>/d input, one column per sample.
  Mat input;
};

/// Fully connected network with rectifier hidden layers.
///
/// All parameters live in one contiguous vector: for each layer the weight
/// matrix (row-major, out x in) followed by the bias. Optimizers, target
/// updates and checkpoints operate on that flat vector directly.
class MlpNet {
 public:
  MlpNet() = default;
  /// Zero-initialized network. `dims` = {input, hidden..., output}.
  MlpNet(std::vector<int> dims, OutputActivation head, double output_bound = 1.0);

  /// Weights uniform in +-1/sqrt(fan_in), biases zero.
  static MlpNet make(std::vector<int> dims, OutputActivation head, double output_bound,
                     Rng& rng);

  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  int num_layers() const { return static_cast<int>(dims_.size()) - 1; }
  const std::vector<int>& dims() const { return dims_; }
  OutputActivation head() const { return head_; }
  double output_bound() const { return output_bound_; }

  Vec& params() { return params_; }
  const Vec& params() const { return params_; }
  std::size_t num_params() const { return static_cast<std::size_t>(params_.size()); }

  Eigen::Map<const RowMat> weight(int layer) const;
  Eigen::Map<RowMat> weight(int layer);
  Eigen::Map<const Vec> bias(int layer) const;
  Eigen::Map<Vec> bias(int layer);

  Vec forward(const Vec& x) const;
  /// Batched forward; columns of `x` are samples.
  Mat forward(const Mat& x) const;
  ForwardPass forward_cached(const Mat& x) const;

  /// Exact gradient of sum_i <upstream_i, output_i> with respect to the
  /// parameters (summed over the batch) and to each input column.
  MlpGradient backward(const ForwardPass& pass, const Mat& upstream) const;

  /// Exact (bitwise-value) equality of architecture and parameters.
  bool operator==(const MlpNet& other) const;

 private:
  std::size_t layer_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }

  std::vector<int> dims_;
  std::vector<std::size_t> offsets_;
  OutputActivation head_ = OutputActivation::kNone;
  double output_bound_ = 1.0;
  Vec params_;
};

/// Single-sample convenience wrapper around MlpNet::backward.
MlpGradient mlp_backward(const MlpNet& net, const Vec& x, const Vec& upstream);

/// {input, hidden..., output}
std::vector<int> layer_dims(int input, std::span<const int> hidden, int output);

}  // namespace orl
