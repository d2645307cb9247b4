#include "orl/numkit/mlp.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "orl/errors.hpp"

namespace orl {
namespace {

void check_input_rows(const MlpNet& net, Eigen::Index rows) {
  if (rows != net.input_dim()) {
    throw InvalidInput("mlp: expected input dim " + std::to_string(net.input_dim()) + ", got " +
                       std::to_string(rows));
  }
}

}  // namespace

MlpNet::MlpNet(std::vector<int> dims, OutputActivation head, double output_bound)
    : dims_(std::move(dims)), head_(head), output_bound_(output_bound) {
  if (dims_.size() < 2) throw InvalidInput("mlp: need at least input and output dims");
  for (int d : dims_) {
    if (d <= 0) throw InvalidInput("mlp: layer dims must be positive");
  }
  if (!(output_bound_ > 0.0) || !std::isfinite(output_bound_)) {
    throw InvalidInput("mlp: output bound must be positive and finite");
  }
  std::size_t total = 0;
  for (int k = 0; k < num_layers(); ++k) {
    offsets_.push_back(total);
    const auto in = static_cast<std::size_t>(dims_[k]);
    const auto out = static_cast<std::size_t>(dims_[k + 1]);
    total += out * in + out;
  }
  params_ = Vec::Zero(static_cast<Eigen::Index>(total));
}

MlpNet MlpNet::make(std::vector<int> dims, OutputActivation head, double output_bound, Rng& rng) {
  MlpNet net(std::move(dims), head, output_bound);
  for (int k = 0; k < net.num_layers(); ++k) {
    auto w = net.weight(k);
    const double limit = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
    }
  }
  return net;
}

Eigen::Map<const RowMat> MlpNet::weight(int layer) const {
  return {params_.data() + layer_offset(layer), dims_[layer + 1], dims_[layer]};
}

Eigen::Map<RowMat> MlpNet::weight(int layer) {
  return {params_.data() + layer_offset(layer), dims_[layer + 1], dims_[layer]};
}

Eigen::Map<const Vec> MlpNet::bias(int layer) const {
  const auto w_size = static_cast<std::size_t>(dims_[layer + 1]) * dims_[layer];
  return {params_.data() + layer_offset(layer) + w_size, dims_[layer + 1]};
}

Eigen::Map<Vec> MlpNet::bias(int layer) {
  const auto w_size = static_cast<std::size_t>(dims_[layer + 1]) * dims_[layer];
  return {params_.data() + layer_offset(layer) + w_size, dims_[layer + 1]};
}

Vec MlpNet::forward(const Vec& x) const {
  check_input_rows(*this, x.size());
  Mat batch = x;
  return forward(batch).col(0);
}

Mat MlpNet::forward(const Mat& x) const {
  check_input_rows(*this, x.rows());
  Mat act = x;
  for (int k = 0; k < num_layers(); ++k) {
    Mat z = weight(k) * act;
    z.colwise() += bias(k);
    if (k + 1 < num_layers()) {
      act = z.cwiseMax(0.0);
    } else {
      act = std::move(z);
    }
  }
  if (head_ == OutputActivation::kScaledTanh) {
    act = output_bound_ * act.array().tanh();
  }
  return act;
}

ForwardPass MlpNet::forward_cached(const Mat& x) const {
  check_input_rows(*this, x.rows());
  ForwardPass pass;
  pass.inputs.reserve(static_cast<std::size_t>(num_layers()));
  pass.inputs.push_back(x);
  for (int k = 0; k < num_layers(); ++k) {
    Mat z = weight(k) * pass.inputs.back();
    z.colwise() += bias(k);
    if (k + 1 < num_layers()) {
      pass.inputs.push_back(z.cwiseMax(0.0));
    } else {
      pass.output = std::move(z);
    }
  }
  if (head_ == OutputActivation::kScaledTanh) {
    pass.output = output_bound_ * pass.output.array().tanh();
  }
  return pass;
}

MlpGradient MlpNet::backward(const ForwardPass& pass, const Mat& upstream) const {
  if (upstream.rows() != output_dim() || upstream.cols() != pass.output.cols()) {
    throw InvalidInput("mlp backward: upstream shape does not match forward output");
  }
  MlpGradient grad;
  grad.params = Vec::Zero(params_.size());

  Mat delta;
  if (head_ == OutputActivation::kScaledTanh) {
    // d(b tanh z)/dz = b (1 - tanh^2 z) = b - y^2 / b
    const auto y = pass.output.array();
    delta = upstream.array() * (output_bound_ - y.square() / output_bound_);
  } else {
    delta = upstream;
  }

  for (int k = num_layers() - 1; k >= 0; --k) {
    const Mat& in = pass.inputs[static_cast<std::size_t>(k)];
    const auto out_dim = dims_[k + 1];
    const auto in_dim = dims_[k];
    const std::size_t off = layer_offset(k);
    Eigen::Map<RowMat> dw(grad.params.data() + off, out_dim, in_dim);
    Eigen::Map<Vec> db(grad.params.data() + off + static_cast<std::size_t>(out_dim) * in_dim,
                       out_dim);
    dw.noalias() = delta * in.transpose();
    db = delta.rowwise().sum();
    Mat back = weight(k).transpose() * delta;
    if (k > 0) {
      // Rectifier: the layer input is positive exactly where the unit was active.
      delta = (in.array() > 0.0).select(back.array(), 0.0).matrix();
    } else {
      grad.input = std::move(back);
    }
  }
  return grad;
}

bool MlpNet::operator==(const MlpNet& other) const {
  return dims_ == other.dims_ && head_ == other.head_ && output_bound_ == other.output_bound_ &&
         params_.size() == other.params_.size() && params_ == other.params_;
}

MlpGradient mlp_backward(const MlpNet& net, const Vec& x, const Vec& upstream) {
  check_input_rows(net, x.size());
  if (upstream.size() != net.output_dim()) {
    throw InvalidInput("mlp backward: upstream length does not match output dim");
  }
  const Mat batch = x;
  const ForwardPass pass = net.forward_cached(batch);
  const Mat up = upstream;
  return net.backward(pass, up);
}

std::vector<int> layer_dims(int input, std::span<const int> hidden, int output) {
  std::vector<int> dims;
  dims.reserve(hidden.size() + 2);
  dims.push_back(input);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output);
  return dims;
}

}  // namespace orl
