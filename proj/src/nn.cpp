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

#include "la/nn.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "la/error.hpp"
#include "la/kb.hpp"

namespace la::nn {

namespace {

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw StructuralError(what);
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
  std::size_t n = 1;
  for (auto d : shape_) n *= d;
  data_.assign(n, fill);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void zero_grads(const ParameterList& params) {
  for (auto* p : params) p->zero_grad();
}

double activate(Activation act, double z) {
  switch (act) {
    case Activation::linear:
      return z;
    case Activation::tanh:
      return std::tanh(z);
    case Activation::sigmoid:
      return sigmoid(z);
    case Activation::relu:
      return z > 0.0 ? z : 0.0;
  }
  return z;
}

double activation_grad(Activation act, double y) {
  switch (act) {
    case Activation::linear:
      return 1.0;
    case Activation::tanh:
      return 1.0 - y * y;
    case Activation::sigmoid:
      return y * (1.0 - y);
    case Activation::relu:
      return y > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

void init_uniform(Tensor& t, double bound, Rng& rng) {
  for (auto& v : t.values()) v = rng.uniform(-bound, bound);
}

// --- DenseLayer -------------------------------------------------------------

DenseLayer::DenseLayer(const std::string& name, std::size_t in, std::size_t out, Activation act,
                       Rng& rng)
    : weight_(name + ".weight", {out, in}), bias_(name + ".bias", {out}), act_(act) {
  require(in > 0 && out > 0, "dense layer needs positive sizes");
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  init_uniform(weight_.value, bound, rng);
  init_uniform(bias_.value, bound, rng);
}

void DenseLayer::forward(std::span<const double> x, std::span<double> y) const {
  const std::size_t n_in = in(), n_out = out();
  require(x.size() == n_in && y.size() == n_out,
          "dense forward: expected input " + std::to_string(n_in) + ", got " +
              std::to_string(x.size()));
  const double* w = weight_.value.data();
  for (std::size_t o = 0; o < n_out; ++o) {
    const double* row = w + o * n_in;
    double z = bias_.value[o];
    for (std::size_t i = 0; i < n_in; ++i) z += row[i] * x[i];
    y[o] = activate(act_, z);
  }
}

std::vector<double> DenseLayer::forward(std::span<const double> x) const {
  std::vector<double> y(out());
  forward(x, y);
  return y;
}

void DenseLayer::backward(std::span<const double> x, std::span<const double> y,
                          std::span<const double> dy, std::span<double> dx) {
  const std::size_t n_in = in(), n_out = out();
  require(x.size() == n_in && y.size() == n_out && dy.size() == n_out,
          "dense backward: shape mismatch");
  require(dx.empty() || dx.size() == n_in, "dense backward: dx has wrong size");
  if (!dx.empty()) std::fill(dx.begin(), dx.end(), 0.0);
  const double* w = weight_.value.data();
  double* gw = weight_.grad.data();
  for (std::size_t o = 0; o < n_out; ++o) {
    const double dz = dy[o] * activation_grad(act_, y[o]);
    if (dz == 0.0) continue;
    bias_.grad[o] += dz;
    double* grow = gw + o * n_in;
    for (std::size_t i = 0; i < n_in; ++i) grow[i] += dz * x[i];
    if (!dx.empty()) {
      const double* wrow = w + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) dx[i] += dz * wrow[i];
    }
  }
}

// --- Mlp ----------------------------------------------------------------------

Mlp::Mlp(const std::string& name, std::size_t input, const std::vector<std::size_t>& hidden,
         std::size_t output, Activation hidden_act, Activation output_act, Rng& rng) {
  std::size_t prev = input;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    layers_.emplace_back(name + ".hidden" + std::to_string(i), prev, hidden[i], hidden_act, rng);
    prev = hidden[i];
  }
  layers_.emplace_back(name + ".out", prev, output, output_act, rng);
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  std::vector<double> cur(x.begin(), x.end());
  for (const auto& layer : layers_) cur = layer.forward(cur);
  return cur;
}

MlpTrace Mlp::forward_trace(std::span<const double> x, double dropout, Rng* rng) const {
  MlpTrace trace;
  trace.inputs.reserve(layers_.size());
  trace.outputs.reserve(layers_.size());
  trace.masks.resize(layers_.size());
  std::vector<double> cur(x.begin(), x.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    trace.inputs.push_back(cur);
    trace.outputs.push_back(layers_[l].forward(cur));
    cur = trace.outputs.back();
    const bool hidden = l + 1 < layers_.size();
    if (hidden && dropout > 0.0 && rng != nullptr) {
      auto& mask = trace.masks[l];
      mask.resize(cur.size());
      const double keep_scale = 1.0 / (1.0 - dropout);
      for (std::size_t i = 0; i < cur.size(); ++i) {
        mask[i] = rng->uniform() < dropout ? 0.0 : keep_scale;
        cur[i] *= mask[i];
      }
    }
  }
  return trace;
}

std::vector<double> Mlp::backward(const MlpTrace& trace, std::span<const double> dy) {
  std::vector<double> grad(dy.begin(), dy.end());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    if (!trace.masks[l].empty())
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= trace.masks[l][i];
    std::vector<double> dx(layers_[l].in());
    layers_[l].backward(trace.inputs[l], trace.outputs[l], grad, dx);
    grad = std::move(dx);
  }
  return grad;
}

ParameterList Mlp::parameters() {
  ParameterList out;
  for (auto& layer : layers_) {
    out.push_back(&layer.weight());
    out.push_back(&layer.bias());
  }
  return out;
}

// --- EmbeddingTable -------------------------------------------------------------

EmbeddingTable::EmbeddingTable(const std::string& name, std::size_t rows, std::size_t dim, Rng& rng)
    : table_(name, {rows, dim}) {
  require(rows > 0 && dim > 0, "embedding table needs positive sizes");
  // A lookup is a dense layer on a one-hot input, so fan-in is 1.
  init_uniform(table_.value, 1.0, rng);
}

std::span<const double> EmbeddingTable::lookup(std::size_t index) const {
  if (index >= rows())
    throw InvalidArgument("embedding index " + std::to_string(index) + " >= " +
                          std::to_string(rows()));
  return table_.value.row(index);
}

void EmbeddingTable::accumulate_grad(std::size_t index, std::span<const double> grad) {
  if (index >= rows()) throw InvalidArgument("embedding index out of range");
  require(grad.size() == dim(), "embedding gradient has wrong width");
  auto row = table_.grad.row(index);
  for (std::size_t i = 0; i < grad.size(); ++i) row[i] += grad[i];
}

// --- LstmCell -------------------------------------------------------------------

LstmCell::LstmCell(const std::string& name, std::size_t input, std::size_t hidden, Rng& rng)
    : weight_(name + ".weight", {4 * hidden, input + hidden}), bias_(name + ".bias", {4 * hidden}) {
  require(input > 0 && hidden > 0, "lstm needs positive sizes");
  const double bound = 1.0 / std::sqrt(static_cast<double>(input + hidden));
  init_uniform(weight_.value, bound, rng);
  init_uniform(bias_.value, bound, rng);
}

LstmStepCache LstmCell::step(std::span<const double> x, std::span<const double> h_prev,
                             std::span<const double> c_prev) const {
  const std::size_t H = hidden_size(), I = input_size();
  require(x.size() == I && h_prev.size() == H && c_prev.size() == H, "lstm step: shape mismatch");
  LstmStepCache cache;
  cache.x.assign(x.begin(), x.end());
  cache.h_prev.assign(h_prev.begin(), h_prev.end());
  cache.c_prev.assign(c_prev.begin(), c_prev.end());
  cache.gates.resize(4 * H);
  const std::size_t width = I + H;
  const double* w = weight_.value.data();
  for (std::size_t r = 0; r < 4 * H; ++r) {
    const double* row = w + r * width;
    double z = bias_.value[r];
    for (std::size_t i = 0; i < I; ++i) z += row[i] * x[i];
    for (std::size_t j = 0; j < H; ++j) z += row[I + j] * h_prev[j];
    cache.gates[r] = r < 3 * H ? sigmoid(z) : std::tanh(z);
  }
  cache.c.resize(H);
  cache.tanh_c.resize(H);
  cache.h.resize(H);
  for (std::size_t j = 0; j < H; ++j) {
    const double i_g = cache.gates[j], f_g = cache.gates[H + j], o_g = cache.gates[2 * H + j],
                 g_g = cache.gates[3 * H + j];
    cache.c[j] = f_g * c_prev[j] + i_g * g_g;
    cache.tanh_c[j] = std::tanh(cache.c[j]);
    cache.h[j] = o_g * cache.tanh_c[j];
  }
  return cache;
}

void LstmCell::step_backward(const LstmStepCache& cache, std::span<const double> dh,
                             std::span<const double> dc, std::span<double> dx,
                             std::span<double> dh_prev, std::span<double> dc_prev) {
  const std::size_t H = hidden_size(), I = input_size();
  require(dh.size() == H && dc.size() == H && dh_prev.size() == H && dc_prev.size() == H,
          "lstm backward: shape mismatch");
  require(dx.empty() || dx.size() == I, "lstm backward: dx has wrong size");
  std::vector<double> dz(4 * H);
  for (std::size_t j = 0; j < H; ++j) {
    const double i_g = cache.gates[j], f_g = cache.gates[H + j], o_g = cache.gates[2 * H + j],
                 g_g = cache.gates[3 * H + j];
    const double tc = cache.tanh_c[j];
    const double dc_total = dc[j] + dh[j] * o_g * (1.0 - tc * tc);
    dz[j] = dc_total * g_g * i_g * (1.0 - i_g);
    dz[H + j] = dc_total * cache.c_prev[j] * f_g * (1.0 - f_g);
    dz[2 * H + j] = dh[j] * tc * o_g * (1.0 - o_g);
    dz[3 * H + j] = dc_total * i_g * (1.0 - g_g * g_g);
    dc_prev[j] = dc_total * f_g;
  }
  const std::size_t width = I + H;
  const double* w = weight_.value.data();
  double* gw = weight_.grad.data();
  if (!dx.empty()) std::fill(dx.begin(), dx.end(), 0.0);
  std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
  for (std::size_t r = 0; r < 4 * H; ++r) {
    const double d = dz[r];
    if (d == 0.0) continue;
    bias_.grad[r] += d;
    double* grow = gw + r * width;
    const double* wrow = w + r * width;
    for (std::size_t i = 0; i < I; ++i) {
      grow[i] += d * cache.x[i];
      if (!dx.empty()) dx[i] += d * wrow[i];
    }
    for (std::size_t j = 0; j < H; ++j) {
      grow[I + j] += d * cache.h_prev[j];
      dh_prev[j] += d * wrow[I + j];
    }
  }
}

std::vector<LstmStepCache> LstmCell::unroll(const std::vector<std::vector<double>>& inputs) const {
  const std::size_t H = hidden_size();
  std::vector<LstmStepCache> caches;
  caches.reserve(inputs.size());
  std::vector<double> h(H, 0.0), c(H, 0.0);
  for (const auto& x : inputs) {
    caches.push_back(step(x, h, c));
    h = caches.back().h;
    c = caches.back().c;
  }
  return caches;
}

std::vector<std::vector<double>> LstmCell::backward_through_time(
    const std::vector<LstmStepCache>& caches, const std::vector<std::vector<double>>& dh_out) {
  require(caches.size() == dh_out.size(), "bptt: one gradient per step required");
  const std::size_t H = hidden_size(), I = input_size();
  std::vector<std::vector<double>> dxs(caches.size(), std::vector<double>(I, 0.0));
  std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0), dh(H), dh_prev(H), dc_prev(H);
  for (std::size_t t = caches.size(); t-- > 0;) {
    require(dh_out[t].size() == H, "bptt: gradient has wrong width");
    for (std::size_t j = 0; j < H; ++j) dh[j] = dh_out[t][j] + dh_next[j];
    step_backward(caches[t], dh, dc_next, dxs[t], dh_prev, dc_prev);
    dh_next.swap(dh_prev);
    dc_next.swap(dc_prev);
  }
  return dxs;
}

// --- loss / optimizer ----------------------------------------------------------

LossResult mse_loss(std::span<const double> pred, std::span<const double> target) {
  require(pred.size() == target.size() && !pred.empty(), "mse: shape mismatch");
  LossResult r;
  r.grad.resize(pred.size());
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    r.loss += d * d;
    r.grad[i] = 2.0 * d / n;
  }
  r.loss /= n;
  return r;
}

void Adam::step(const ParameterList& params) {
  for (const auto* p : params)
    for (double g : p->grad.values())
      if (!std::isfinite(g)) throw InvalidArgument("adam: non-finite gradient in " + p->name);

  if (m_.empty()) {
    for (const auto* p : params) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }
  require(m_.size() == params.size(), "adam: parameter list changed between steps");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = *params[k];
    require(m_[k].shape() == p.value.shape(), "adam: parameter shape changed");
    double* val = p.value.data();
    const double* g = p.grad.data();
    double* m = m_[k].data();
    double* v = v_[k].data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      val[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

// --- checkpoints -----------------------------------------------------------------

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

Checkpoint capture(const ConstParameterList& params) {
  Checkpoint ckpt;
  for (const auto* p : params) ckpt.tensors.push_back({p->name, p->value});
  return ckpt;
}

void restore(const Checkpoint& ckpt, const ParameterList& params) {
  for (auto* p : params) {
    const Tensor* t = ckpt.find(p->name);
    if (t == nullptr) throw StructuralError("checkpoint has no tensor '" + p->name + "'");
    if (t->shape() != p->value.shape())
      throw StructuralError("checkpoint tensor '" + p->name + "' has shape " +
                            shape_string(t->shape()) + ", expected " +
                            shape_string(p->value.shape()));
    p->value = *t;
  }
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out << "#la-params v1\n";
  for (const auto& [k, v] : ckpt.meta) out << "meta\t" << k << '\t' << v << '\n';
  for (const auto& [name, t] : ckpt.tensors) {
    out << "tensor\t" << name << '\t' << shape_string(t.shape()) << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i) out << ' ';
      out << format_double(t[i]);
    }
    out << '\n';
  }
}

Checkpoint read_checkpoint(std::istream& in, const std::string& source) {
  Checkpoint ckpt;
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != "#la-params v1")
    throw ParseError(source, 1, "missing '#la-params v1' header");
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string kind;
    std::getline(fields, kind, '\t');
    if (kind == "meta") {
      std::string key, value;
      std::getline(fields, key, '\t');
      std::getline(fields, value);
      ckpt.meta[key] = value;
    } else if (kind == "tensor") {
      std::string name, shape_text;
      std::getline(fields, name, '\t');
      std::getline(fields, shape_text);
      std::vector<std::size_t> shape;
      std::istringstream dims(shape_text);
      std::string d;
      while (std::getline(dims, d, 'x')) {
        std::size_t v = 0;
        auto [p, ec] = std::from_chars(d.data(), d.data() + d.size(), v);
        if (ec != std::errc() || p != d.data() + d.size())
          throw ParseError(source, line_no, "bad tensor shape '" + shape_text + "'");
        shape.push_back(v);
      }
      Tensor t(shape);
      if (!std::getline(in, line)) throw ParseError(source, line_no, "tensor values missing");
      ++line_no;
      const char* p = line.data();
      const char* end = line.data() + line.size();
      for (std::size_t i = 0; i < t.size(); ++i) {
        while (p < end && *p == ' ') ++p;
        auto [next, ec] = std::from_chars(p, end, t[i]);
        if (ec != std::errc()) throw ParseError(source, line_no, "bad value in '" + name + "'");
        p = next;
      }
      while (p < end && *p == ' ') ++p;
      if (p != end) throw ParseError(source, line_no, "too many values for '" + name + "'");
      ckpt.tensors.push_back({name, std::move(t)});
    } else {
      throw ParseError(source, line_no, "unknown record '" + kind + "'");
    }
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_checkpoint(out, ckpt);
  if (!out) throw IoError("failed writing '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_checkpoint(in, path);
}

}  // namespace la::nn
