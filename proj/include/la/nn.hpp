// Copyright 2026 The la20q Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Small differentiable building blocks for the question-asking networks:
// dense layers, MLPs, embedding tables, an LSTM cell, MSE loss and Adam.
// Everything is float64, row-major and single-threaded; gradients are
// accumulated into Parameter::grad by the backward calls and cleared by the
// caller.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "la/rng.hpp"

namespace la::nn {

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

  void fill(double v);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

struct Parameter {
  Parameter() = default;
  Parameter(std::string name, std::vector<std::size_t> shape)
      : name(std::move(name)), value(shape), grad(shape) {}

  void zero_grad() { grad.fill(0.0); }

  std::string name;
  Tensor value;
  Tensor grad;
};

using ParameterList = std::vector<Parameter*>;
using ConstParameterList = std::vector<const Parameter*>;

void zero_grads(const ParameterList& params);

enum class Activation { linear, tanh, sigmoid, relu };

double activate(Activation act, double z);
// d act / d z written in terms of the output y = act(z).
double activation_grad(Activation act, double y);

void init_uniform(Tensor& t, double bound, Rng& rng);

/// y = act(W x + b), W is out x in. Initialized uniform(+-1/sqrt(in)).
class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(const std::string& name, std::size_t in, std::size_t out, Activation act, Rng& rng);

  std::size_t in() const { return weight_.value.cols(); }
  std::size_t out() const { return weight_.value.rows(); }
  Activation activation() const { return act_; }

  void forward(std::span<const double> x, std::span<double> y) const;
  std::vector<double> forward(std::span<const double> x) const;

  // Given the forward input x, output y and dL/dy, accumulates dL/dW and
  // dL/db and writes dL/dx when dx is non-empty.
  void backward(std::span<const double> x, std::span<const double> y,
                std::span<const double> dy, std::span<double> dx);

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  const Parameter& weight() const { return weight_; }
  const Parameter& bias() const { return bias_; }
  ParameterList parameters() { return {&weight_, &bias_}; }

 private:
  Parameter weight_;
  Parameter bias_;
  Activation act_ = Activation::linear;
};

struct MlpTrace {
  std::vector<std::vector<double>> inputs;   // input of each layer
  std::vector<std::vector<double>> outputs;  // activation output, pre-dropout
  std::vector<std::vector<double>> masks;    // inverted-dropout scale, empty if off
  const std::vector<double>& result() const { return outputs.back(); }
};

/// Stack of dense layers; hidden layers share one activation, the last layer
/// has its own. With no hidden sizes this is a single affine map.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name, std::size_t input, const std::vector<std::size_t>& hidden,
      std::size_t output, Activation hidden_act, Activation output_act, Rng& rng);

  std::size_t input_size() const { return layers_.front().in(); }
  std::size_t output_size() const { return layers_.back().out(); }

  std::vector<double> forward(std::span<const double> x) const;
  // Dropout (rate > 0, rng set) applies to hidden outputs only.
  MlpTrace forward_trace(std::span<const double> x, double dropout = 0.0, Rng* rng = nullptr) const;
  std::vector<double> backward(const MlpTrace& trace, std::span<const double> dy);

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  ParameterList parameters();

 private:
  std::vector<DenseLayer> layers_;
};

/// Lookup table mapping an index to a dense row.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(const std::string& name, std::size_t rows, std::size_t dim, Rng& rng);

  std::size_t rows() const { return table_.value.rows(); }
  std::size_t dim() const { return table_.value.cols(); }

  std::span<const double> lookup(std::size_t index) const;
  void accumulate_grad(std::size_t index, std::span<const double> grad);

  Parameter& table() { return table_; }
  const Parameter& table() const { return table_; }
  ParameterList parameters() { return {&table_}; }

 private:
  Parameter table_;
};

struct LstmStepCache {
  std::vector<double> x;
  std::vector<double> h_prev;
  std::vector<double> c_prev;
  std::vector<double> gates;  // [i | f | o | g] after their activations
  std::vector<double> c;
  std::vector<double> tanh_c;
  std::vector<double> h;
};

/// Standard LSTM cell. Weight rows are ordered input, forget, output and
/// candidate gates; columns are [x ; h_prev].
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(const std::string& name, std::size_t input, std::size_t hidden, Rng& rng);

  std::size_t input_size() const { return weight_.value.cols() - hidden_size(); }
  std::size_t hidden_size() const { return weight_.value.rows() / 4; }

  LstmStepCache step(std::span<const double> x, std::span<const double> h_prev,
                     std::span<const double> c_prev) const;

  // One step of backprop. dh and dc are the gradients arriving at h_t and
  // c_t; writes dx (if non-empty), dh_prev and dc_prev.
  void step_backward(const LstmStepCache& cache, std::span<const double> dh,
                     std::span<const double> dc, std::span<double> dx, std::span<double> dh_prev,
                     std::span<double> dc_prev);

  // Runs the cell over the inputs from a zero state.
  std::vector<LstmStepCache> unroll(const std::vector<std::vector<double>>& inputs) const;
  // BPTT given dL/dh_t for every step; returns dL/dx_t for every step.
  std::vector<std::vector<double>> backward_through_time(
      const std::vector<LstmStepCache>& caches, const std::vector<std::vector<double>>& dh_out);

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  const Parameter& weight() const { return weight_; }
  const Parameter& bias() const { return bias_; }
  ParameterList parameters() { return {&weight_, &bias_}; }

 private:
  Parameter weight_;
  Parameter bias_;
};

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;
};

// Mean of (pred - target)^2 and its gradient 2 (pred - target) / n.
LossResult mse_loss(std::span<const double> pred, std::span<const double> target);

/// Bias-corrected Adam. Moments are matched to parameters by position, so a
/// given instance must always be stepped with the same parameter list.
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // Throws InvalidArgument on non-finite gradients, before touching anything.
  void step(const ParameterList& params);

  std::uint64_t steps() const { return t_; }
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

/// Named tensors plus string metadata; text form round-trips exactly.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const;
};

Checkpoint capture(const ConstParameterList& params);
// Copies every parameter's value from the checkpoint (names and shapes must match).
void restore(const Checkpoint& ckpt, const ParameterList& params);

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in, const std::string& source = "<stream>");
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace la::nn
