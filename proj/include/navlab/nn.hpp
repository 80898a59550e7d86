#pragma once

#include <cmath>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "navlab/errors.hpp"
#include "navlab/rng.hpp"

namespace navlab::nn {

using Vector = std::vector<double>;

struct LayerGrad {
  Vector dw, db;
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual int in_size() const = 0;
  virtual int out_size() const = 0;
  virtual void forward(const Vector& in, Vector& out) const = 0;
  // d(in) and parameter gradients for upstream d(out); grads may be null.
  virtual void backward(const Vector& in, const Vector& up, Vector& din,
                        LayerGrad* grads) const = 0;
  virtual Vector* weights() { return nullptr; }
  virtual Vector* biases() { return nullptr; }
  virtual std::unique_ptr<Layer> clone() const = 0;
  virtual nlohmann::ordered_json to_json() const = 0;
};

class Dense : public Layer {
 public:
  Dense(int in, int out) : in_(in), out_(out), w_(in * out, 0.0), b_(out, 0.0) {}

  static std::unique_ptr<Dense> init(int in, int out, Rng& rng) {
    auto l = std::make_unique<Dense>(in, out);
    double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& v : l->w_) v = rng.uniform(-bound, bound);
    return l;
  }

  int in_size() const override { return in_; }
  int out_size() const override { return out_; }

  void forward(const Vector& in, Vector& out) const override {
    out.assign(out_, 0.0);
    for (int o = 0; o < out_; ++o) {
      double acc = b_[o];
      const double* row = &w_[static_cast<size_t>(o) * in_];
      for (int i = 0; i < in_; ++i) acc += row[i] * in[i];
      out[o] = acc;
    }
  }

  void backward(const Vector& in, const Vector& up, Vector& din,
                LayerGrad* grads) const override {
    din.assign(in_, 0.0);
    for (int o = 0; o < out_; ++o) {
      const double* row = &w_[static_cast<size_t>(o) * in_];
      double u = up[o];
      for (int i = 0; i < in_; ++i) din[i] += row[i] * u;
    }
    if (grads) {
      if (grads->dw.empty()) grads->dw.assign(w_.size(), 0.0);
      if (grads->db.empty()) grads->db.assign(b_.size(), 0.0);
      for (int o = 0; o < out_; ++o) {
        double u = up[o];
        double* row = &grads->dw[static_cast<size_t>(o) * in_];
        for (int i = 0; i < in_; ++i) row[i] += u * in[i];
        grads->db[o] += u;
      }
    }
  }

  Vector* weights() override { return &w_; }
  Vector* biases() override { return &b_; }

  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }

  nlohmann::ordered_json to_json() const override {
    return {{"type", "dense"}, {"in", in_}, {"out", out_}, {"w", w_}, {"b", b_}};
  }

  Vector w_, b_;

 private:
  int in_, out_;
};

class Relu : public Layer {
 public:
  explicit Relu(int n) : n_(n) {}
  int in_size() const override { return n_; }
  int out_size() const override { return n_; }

  void forward(const Vector& in, Vector& out) const override {
    out.resize(n_);
    for (int i = 0; i < n_; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
  }

  void backward(const Vector& in, const Vector& up, Vector& din,
                LayerGrad*) const override {
    din.resize(n_);
    for (int i = 0; i < n_; ++i) din[i] = in[i] > 0.0 ? up[i] : 0.0;
  }

  std::unique_ptr<Layer> clone() const override { return std::make_unique<Relu>(*this); }
  nlohmann::ordered_json to_json() const override { return {{"type", "relu"}, {"n", n_}}; }

 private:
  int n_;
};

// 1D convolution with circular padding (the egocircle input is angularly
// periodic). Input layout is channel-major: in[c * len + i].
class Conv1d : public Layer {
 public:
  Conv1d(int ch_in, int ch_out, int kernel, int stride, int len_in)
      : cin_(ch_in), cout_(ch_out), k_(kernel), stride_(stride), len_in_(len_in),
        w_(static_cast<size_t>(ch_out) * ch_in * kernel, 0.0), b_(ch_out, 0.0) {
    if (len_in % stride != 0) throw ShapeMismatch("conv1d: stride must divide length");
    len_out_ = len_in / stride;
  }

  static std::unique_ptr<Conv1d> init(int ci, int co, int k, int s, int len, Rng& rng) {
    auto l = std::make_unique<Conv1d>(ci, co, k, s, len);
    double bound = 1.0 / std::sqrt(static_cast<double>(ci * k));
    for (double& v : l->w_) v = rng.uniform(-bound, bound);
    return l;
  }

  int in_size() const override { return cin_ * len_in_; }
  int out_size() const override { return cout_ * len_out_; }

  void forward(const Vector& in, Vector& out) const override {
    out.assign(out_size(), 0.0);
    int half = k_ / 2;
    for (int co = 0; co < cout_; ++co)
      for (int j = 0; j < len_out_; ++j) {
        double acc = b_[co];
        for (int ci = 0; ci < cin_; ++ci) {
          const double* wrow = &w_[((static_cast<size_t>(co) * cin_) + ci) * k_];
          const double* x = &in[static_cast<size_t>(ci) * len_in_];
          for (int t = 0; t < k_; ++t) {
            int src = (j * stride_ + t - half) % len_in_;
            if (src < 0) src += len_in_;
            acc += wrow[t] * x[src];
          }
        }
        out[static_cast<size_t>(co) * len_out_ + j] = acc;
      }
  }

  void backward(const Vector& in, const Vector& up, Vector& din,
                LayerGrad* grads) const override {
    din.assign(in_size(), 0.0);
    if (grads) {
      if (grads->dw.empty()) grads->dw.assign(w_.size(), 0.0);
      if (grads->db.empty()) grads->db.assign(b_.size(), 0.0);
    }
    int half = k_ / 2;
    for (int co = 0; co < cout_; ++co)
      for (int j = 0; j < len_out_; ++j) {
        double u = up[static_cast<size_t>(co) * len_out_ + j];
        if (grads) grads->db[co] += u;
        for (int ci = 0; ci < cin_; ++ci) {
          const double* wrow = &w_[((static_cast<size_t>(co) * cin_) + ci) * k_];
          double* dx = &din[static_cast<size_t>(ci) * len_in_];
          const double* x = &in[static_cast<size_t>(ci) * len_in_];
          double* dwrow =
              grads ? &grads->dw[((static_cast<size_t>(co) * cin_) + ci) * k_] : nullptr;
          for (int t = 0; t < k_; ++t) {
            int src = (j * stride_ + t - half) % len_in_;
            if (src < 0) src += len_in_;
            dx[src] += wrow[t] * u;
            if (dwrow) dwrow[t] += x[src] * u;
          }
        }
      }
  }

  Vector* weights() override { return &w_; }
  Vector* biases() override { return &b_; }

  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv1d>(*this); }

  nlohmann::ordered_json to_json() const override {
    return {{"type", "conv1d"}, {"ch_in", cin_},    {"ch_out", cout_},
            {"kernel", k_},     {"stride", stride_}, {"len_in", len_in_},
            {"w", w_},          {"b", b_}};
  }

  Vector w_, b_;

 private:
  int cin_, cout_, k_, stride_, len_in_, len_out_;
};

// Shape marker between conv stacks and dense layers; data is already flat.
class Flatten : public Layer {
 public:
  explicit Flatten(int n) : n_(n) {}
  int in_size() const override { return n_; }
  int out_size() const override { return n_; }
  void forward(const Vector& in, Vector& out) const override { out = in; }
  void backward(const Vector&, const Vector& up, Vector& din, LayerGrad*) const override {
    din = up;
  }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }
  nlohmann::ordered_json to_json() const override {
    return {{"type", "flatten"}, {"n", n_}};
  }

 private:
  int n_;
};

struct Gradients {
  std::vector<LayerGrad> layers;

  void scale(double s) {
    for (auto& g : layers) {
      for (double& v : g.dw) v *= s;
      for (double& v : g.db) v *= s;
    }
  }

  void add(const Gradients& o) {
    if (layers.empty()) {
      layers = o.layers;
      return;
    }
    for (size_t i = 0; i < layers.size(); ++i) {
      auto& a = layers[i];
      const auto& b = o.layers[i];
      if (a.dw.empty()) a.dw = b.dw;
      else
        for (size_t j = 0; j < b.dw.size(); ++j) a.dw[j] += b.dw[j];
      if (a.db.empty()) a.db = b.db;
      else
        for (size_t j = 0; j < b.db.size(); ++j) a.db[j] += b.db[j];
    }
  }
};

// Per-layer input activations captured during a forward pass.
struct Tape {
  std::vector<Vector> inputs;
  Vector output;
};

class Net {
 public:
  Net() = default;
  Net(const Net& o) { *this = o; }
  Net& operator=(const Net& o) {
    layers_.clear();
    for (const auto& l : o.layers_) layers_.push_back(l->clone());
    return *this;
  }
  Net(Net&&) = default;
  Net& operator=(Net&&) = default;

  void add(std::unique_ptr<Layer> layer) {
    if (!layers_.empty() && layers_.back()->out_size() != layer->in_size())
      throw ShapeMismatch("layer shapes do not compose");
    layers_.push_back(std::move(layer));
  }

  int in_size() const { return layers_.empty() ? 0 : layers_.front()->in_size(); }
  int out_size() const { return layers_.empty() ? 0 : layers_.back()->out_size(); }
  size_t n_layers() const { return layers_.size(); }
  Layer& layer(size_t i) { return *layers_[i]; }
  const Layer& layer(size_t i) const { return *layers_[i]; }

  Vector forward(const Vector& input) const {
    check_input(input);
    Vector cur = input, next;
    for (const auto& l : layers_) {
      l->forward(cur, next);
      std::swap(cur, next);
    }
    return cur;
  }

  Vector forward(const Vector& input, Tape& tape) const {
    check_input(input);
    tape.inputs.clear();
    Vector cur = input, next;
    for (const auto& l : layers_) {
      tape.inputs.push_back(cur);
      l->forward(cur, next);
      std::swap(cur, next);
    }
    tape.output = cur;
    return cur;
  }

  // Gradients of (output . upstream) w.r.t. parameters and the input.
  Vector backward(const Tape& tape, const Vector& upstream, Gradients& grads) const {
    if (upstream.size() != static_cast<size_t>(out_size()))
      throw ShapeMismatch("backward: upstream size mismatch");
    if (grads.layers.size() != layers_.size()) grads.layers.resize(layers_.size());
    Vector up = upstream, din;
    for (size_t i = layers_.size(); i-- > 0;) {
      layers_[i]->backward(tape.inputs[i], up, din, &grads.layers[i]);
      std::swap(up, din);
    }
    return up;  // gradient w.r.t. the network input
  }

  void sgd_step(const Gradients& grads, double lr) {
    if (lr <= 0.0) throw Error("sgd_step: lr must be positive");
    for (size_t i = 0; i < layers_.size(); ++i) {
      Vector* w = layers_[i]->weights();
      Vector* b = layers_[i]->biases();
      const auto& g = grads.layers[i];
      if (w && !g.dw.empty())
        for (size_t j = 0; j < w->size(); ++j) (*w)[j] -= lr * g.dw[j];
      if (b && !g.db.empty())
        for (size_t j = 0; j < b->size(); ++j) (*b)[j] -= lr * g.db[j];
    }
  }

  size_t n_params() const {
    size_t n = 0;
    for (const auto& l : layers_) {
      auto* self = const_cast<Layer*>(l.get());
      if (auto* w = self->weights()) n += w->size();
      if (auto* b = self->biases()) n += b->size();
    }
    return n;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["format"] = 1;
    j["layers"] = nlohmann::ordered_json::array();
    for (const auto& l : layers_) j["layers"].push_back(l->to_json());
    return j;
  }

  static Net from_json(const nlohmann::ordered_json& j) {
    if (!j.contains("format") || j["format"].get<int>() != 1)
      throw IoError("net checkpoint: unsupported format");
    Net net;
    for (const auto& lj : j["layers"]) {
      std::string type = lj["type"].get<std::string>();
      if (type == "dense") {
        auto l = std::make_unique<Dense>(lj["in"].get<int>(), lj["out"].get<int>());
        l->w_ = lj["w"].get<Vector>();
        l->b_ = lj["b"].get<Vector>();
        net.add(std::move(l));
      } else if (type == "relu") {
        net.add(std::make_unique<Relu>(lj["n"].get<int>()));
      } else if (type == "conv1d") {
        auto l = std::make_unique<Conv1d>(lj["ch_in"].get<int>(), lj["ch_out"].get<int>(),
                                          lj["kernel"].get<int>(), lj["stride"].get<int>(),
                                          lj["len_in"].get<int>());
        l->w_ = lj["w"].get<Vector>();
        l->b_ = lj["b"].get<Vector>();
        net.add(std::move(l));
      } else if (type == "flatten") {
        net.add(std::make_unique<Flatten>(lj["n"].get<int>()));
      } else {
        throw IoError("net checkpoint: unknown layer type " + type);
      }
    }
    return net;
  }

 private:
  void check_input(const Vector& input) const {
    if (layers_.empty()) throw ShapeMismatch("empty network");
    if (input.size() != static_cast<size_t>(in_size()))
      throw ShapeMismatch("input size mismatch");
  }

  std::vector<std::unique_ptr<Layer>> layers_;
};

inline void save_net(const Net& net, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << net.to_json().dump() << "\n";
}

inline Net load_net(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  nlohmann::ordered_json j;
  f >> j;
  return Net::from_json(j);
}

// ---- losses ----

struct LossResult {
  double loss = 0.0;
  Vector grad;  // w.r.t. the prediction/logits
};

inline LossResult cross_entropy(const Vector& logits, int cls) {
  if (cls < 0 || cls >= static_cast<int>(logits.size()))
    throw ShapeMismatch("cross_entropy: class out of range");
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - m);
  double lse = m + std::log(sum);
  LossResult r;
  r.loss = lse - logits[cls];
  r.grad.resize(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) {
    r.grad[i] = std::exp(logits[i] - lse);
    if (static_cast<int>(i) == cls) r.grad[i] -= 1.0;
  }
  return r;
}

inline LossResult mse(const Vector& pred, const Vector& target) {
  if (pred.size() != target.size()) throw ShapeMismatch("mse: size mismatch");
  LossResult r;
  r.grad.resize(pred.size());
  double n = static_cast<double>(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    double d = pred[i] - target[i];
    r.loss += d * d / n;
    r.grad[i] = 2.0 * d / n;
  }
  return r;
}

// ---- reference architectures ----

inline Net make_linear(int n_in, int n_out, uint64_t seed) {
  Rng rng(mix_seed({seed, 0x6c696e656172ull}));
  Net net;
  net.add(Dense::init(n_in, n_out, rng));
  return net;
}

inline Net make_mlp(int n_in, int n_out, uint64_t seed) {
  Rng rng(mix_seed({seed, 0x6d6c70ull}));
  Net net;
  net.add(Dense::init(n_in, 128, rng));
  net.add(std::make_unique<Relu>(128));
  net.add(Dense::init(128, n_out, rng));
  return net;
}

// Convolutional trunk over the periodic range vector, then a dense head.
inline Net make_cnn(int n_in, int n_out, uint64_t seed) {
  Rng rng(mix_seed({seed, 0x636e6eull}));
  Net net;
  net.add(Conv1d::init(1, 8, 5, 2, n_in, rng));
  net.add(std::make_unique<Relu>(8 * (n_in / 2)));
  net.add(Conv1d::init(8, 16, 5, 2, n_in / 2, rng));
  int flat = 16 * (n_in / 4);
  net.add(std::make_unique<Relu>(flat));
  net.add(std::make_unique<Flatten>(flat));
  net.add(Dense::init(flat, 128, rng));
  net.add(std::make_unique<Relu>(128));
  net.add(Dense::init(128, n_out, rng));
  return net;
}

// Same convolutional trunk without the final head; used as a shared feature
// extractor.
inline Net make_cnn_trunk(int n_in, uint64_t seed) {
  Rng rng(mix_seed({seed, 0x7472756e6bull}));
  Net net;
  net.add(Conv1d::init(1, 8, 5, 2, n_in, rng));
  net.add(std::make_unique<Relu>(8 * (n_in / 2)));
  net.add(Conv1d::init(8, 16, 5, 2, n_in / 2, rng));
  int flat = 16 * (n_in / 4);
  net.add(std::make_unique<Relu>(flat));
  net.add(std::make_unique<Flatten>(flat));
  net.add(Dense::init(flat, 128, rng));
  net.add(std::make_unique<Relu>(128));
  return net;
}

}  // namespace navlab::nn
