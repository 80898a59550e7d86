#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "navlab/errors.hpp"
#include "navlab/nn.hpp"
#include "navlab/rewards.hpp"
#include "navlab/robot_sim.hpp"
#include "navlab/tuner_policy.hpp"

namespace navlab {

// ---- parameter grids ----

struct ParamDim {
  std::string name;
  std::vector<double> values;
};

struct ParamSpace {
  std::vector<ParamDim> dims;

  static std::vector<double> f_gp_values() { return {1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0}; }
  static std::vector<double> d_la_values() {
    std::vector<double> v;
    for (int i = 0; i < 10; ++i) v.push_back(1.0 + 0.5 * i);
    return v;
  }

  static ParamSpace two_d() {
    ParamSpace s;
    s.dims = {{"f_gp", f_gp_values()}, {"d_la", d_la_values()}};
    return s;
  }

  static ParamSpace seven_d() {
    ParamSpace s = two_d();
    s.dims.push_back({"selection_cost_hysteresis", {0.8, 0.85, 0.9, 0.95, 1.0}});
    s.dims.push_back({"switching_blocking_period", {0.0, 1.0, 2.0, 4.0}});
    s.dims.push_back({"selection_prefers_initial_plan", {0.7, 0.8, 0.9, 1.0}});
    s.dims.push_back({"inflation_distance", {0.0, 0.1, 0.2, 0.3}});
    s.dims.push_back({"feasibility_check_poses", {1.0, 2.0, 4.0, 8.0}});
    return s;
  }

  int n_branches() const { return static_cast<int>(dims.size()); }

  int dim_index(const std::string& name) const {
    for (size_t i = 0; i < dims.size(); ++i)
      if (dims[i].name == name) return static_cast<int>(i);
    throw Error("ParamSpace: unknown dimension " + name);
  }

  // nearest grid value; ties go to the lower value
  int snap_index(int dim, double value) const {
    const auto& vals = dims[dim].values;
    int best = 0;
    double best_d = kInf;
    for (size_t i = 0; i < vals.size(); ++i) {
      double d = std::abs(vals[i] - value);
      if (d < best_d - 1e-12) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  }

  NavParams apply(const std::vector<int>& idx, NavParams base = {}) const {
    if (idx.size() != dims.size()) throw ShapeMismatch("ParamSpace: index count mismatch");
    NavParams p = base;
    for (size_t i = 0; i < dims.size(); ++i) set_param(p, dims[i].name, dims[i].values[idx[i]]);
    return p;
  }

  std::vector<int> indices_of(const NavParams& p) const {
    std::vector<int> idx(dims.size());
    for (size_t i = 0; i < dims.size(); ++i)
      idx[i] = snap_index(static_cast<int>(i), get_param(p, dims[i].name));
    return idx;
  }

  static void set_param(NavParams& p, const std::string& name, double v) {
    if (name == "f_gp") p.f_gp = v;
    else if (name == "d_la") p.d_la = v;
    else if (name == "selection_cost_hysteresis") p.selection_cost_hysteresis = v;
    else if (name == "switching_blocking_period") p.switching_blocking_period = v;
    else if (name == "selection_prefers_initial_plan") p.selection_prefers_initial_plan = v;
    else if (name == "inflation_distance") p.inflation_distance = v;
    else if (name == "feasibility_check_poses") p.feasibility_check_poses = static_cast<int>(v);
    else throw Error("ParamSpace: unknown parameter " + name);
  }

  static double get_param(const NavParams& p, const std::string& name) {
    if (name == "f_gp") return p.f_gp;
    if (name == "d_la") return p.d_la;
    if (name == "selection_cost_hysteresis") return p.selection_cost_hysteresis;
    if (name == "switching_blocking_period") return p.switching_blocking_period;
    if (name == "selection_prefers_initial_plan") return p.selection_prefers_initial_plan;
    if (name == "inflation_distance") return p.inflation_distance;
    if (name == "feasibility_check_poses") return static_cast<double>(p.feasibility_check_poses);
    throw Error("ParamSpace: unknown parameter " + name);
  }
};

// ---- fixed-parameter baseline ----

class FixedPolicy : public TunerPolicy {
 public:
  explicit FixedPolicy(NavParams params = {}, ParamSpace space = ParamSpace::two_d())
      : params_(params), space_(std::move(space)) {}

  TuneDecision decide(const Observation&, const TunerContext&) const override {
    return {params_, space_.indices_of(params_)};
  }

 private:
  NavParams params_;
  ParamSpace space_;
};

inline std::unique_ptr<TunerPolicy> fixed_policy(NavParams defaults = {}) {
  return std::make_unique<FixedPolicy>(defaults);
}

// ---- best-value curves ----

// Per-density best parameter values fitted from sweep data, one entry per
// discrete spacing.
struct BestValueCurve {
  std::map<std::string, std::array<double, 4>> curves;  // keyed by kSpacings order

  static int spacing_index(double spacing) {
    for (size_t i = 0; i < kSpacings.size(); ++i)
      if (std::abs(kSpacings[i] - spacing) < 1e-9) return static_cast<int>(i);
    throw Error("BestValueCurve: spacing not on the discrete set");
  }

  double value(const std::string& param, double spacing) const {
    auto it = curves.find(param);
    if (it == curves.end()) throw Error("BestValueCurve: no curve for " + param);
    return it->second[spacing_index(spacing)];
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["format"] = 1;
    j["spacings"] = std::vector<double>(kSpacings.begin(), kSpacings.end());
    for (const auto& [name, vals] : curves) j["curves"][name] = vals;
    return j;
  }

  static BestValueCurve from_json(const nlohmann::ordered_json& j) {
    if (!j.contains("format") || j["format"].get<int>() != 1)
      throw IoError("best-value curve file: unsupported format");
    BestValueCurve c;
    for (auto it = j["curves"].begin(); it != j["curves"].end(); ++it) {
      std::array<double, 4> vals{};
      for (int i = 0; i < 4; ++i) vals[i] = it.value()[i].get<double>();
      c.curves[it.key()] = vals;
    }
    return c;
  }
};

// One sweep run outcome, grouped by (parameter value, spacing).
struct SweepRecord {
  double value = 0.0;
  double spacing = 0.0;
  bool success = false;
  double path_length = 0.0;
  double sim_runtime = 0.0;
};

struct SweepDataset {
  std::string param_name;
  std::vector<double> values;
  std::vector<SweepRecord> records;
};

// Best value per spacing: success rate, then mean path length over successes,
// then mean runtime, then the lower value.
inline BestValueCurve fit_best_value_curves(const SweepDataset& data) {
  BestValueCurve curve;
  std::array<double, 4> best{};
  for (size_t si = 0; si < kSpacings.size(); ++si) {
    double best_value = 0.0;
    double best_sr = -1.0, best_pl = kInf, best_rt = kInf;
    for (double v : data.values) {
      int n = 0, succ = 0;
      double pl_sum = 0.0, rt_sum = 0.0;
      for (const auto& r : data.records) {
        if (std::abs(r.value - v) > 1e-9 || std::abs(r.spacing - kSpacings[si]) > 1e-9)
          continue;
        ++n;
        rt_sum += r.sim_runtime;
        if (r.success) {
          ++succ;
          pl_sum += r.path_length;
        }
      }
      if (n == 0)
        throw MissingCell("fit_best_value_curves: no runs for value " +
                          std::to_string(v) + " spacing " + std::to_string(kSpacings[si]));
      double sr = static_cast<double>(succ) / n;
      double pl = succ > 0 ? pl_sum / succ : kInf;
      double rt = rt_sum / n;
      bool better = false;
      if (sr > best_sr + 1e-12) better = true;
      else if (std::abs(sr - best_sr) <= 1e-12) {
        if (pl < best_pl - 1e-9) better = true;
        else if (std::abs(pl - best_pl) <= 1e-9 && rt < best_rt - 1e-9) better = true;
        else if (std::abs(pl - best_pl) <= 1e-9 && std::abs(rt - best_rt) <= 1e-9 &&
                 v < best_value)
          better = true;
      }
      if (better) {
        best_sr = sr;
        best_pl = pl;
        best_rt = rt;
        best_value = v;
      }
    }
    best[si] = best_value;
  }
  curve.curves[data.param_name] = best;
  return curve;
}

inline void merge_curves(BestValueCurve& into, const BestValueCurve& from) {
  for (const auto& [name, vals] : from.curves) into.curves[name] = vals;
}

// Oracle tuner: reads the true local density and applies the curve values;
// parameters without a curve keep their defaults.
class BestValueCurvePolicy : public TunerPolicy {
 public:
  BestValueCurvePolicy(BestValueCurve curve, NavParams base = {},
                       ParamSpace space = ParamSpace::two_d())
      : curve_(std::move(curve)), base_(base), space_(std::move(space)) {}

  TuneDecision decide(const Observation&, const TunerContext& ctx) const override {
    if (!ctx.world) throw Error("BestValueCurvePolicy: world required in context");
    double spacing = local_density(*ctx.world, ctx.position);
    NavParams p = base_;
    for (const auto& [name, vals] : curve_.curves)
      ParamSpace::set_param(p, name, vals[BestValueCurve::spacing_index(spacing)]);
    return {p, space_.indices_of(p)};
  }

  const BestValueCurve& curve() const { return curve_; }

 private:
  BestValueCurve curve_;
  NavParams base_;
  ParamSpace space_;
};

// ---- batch-trained predictors ----

enum class ModelKind { linear, mlp, cnn };
enum class ModelOutput { classifier, regressor };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::linear: return "linear";
    case ModelKind::mlp: return "nn";
    case ModelKind::cnn: return "cnn";
  }
  return "?";
}

struct BatchModel {
  nn::Net net;
  ModelOutput output = ModelOutput::classifier;
  ParamDim dim;               // parameter it predicts
  double norm_lo = 0.0, norm_hi = 1.0;  // regressor label normalization
  double validation_metric = 0.0;       // accuracy or MSE on the held-out split

  // predicted grid index for an observation
  int predict_index(const Observation& obs) const {
    nn::Vector out = net.forward(obs);
    if (output == ModelOutput::classifier) {
      int best = 0;
      for (size_t i = 1; i < out.size(); ++i)
        if (out[i] > out[best]) best = static_cast<int>(i);
      return best;
    }
    double value = norm_lo + out[0] * (norm_hi - norm_lo);
    // snap to the nearest grid value, ties toward the lower one
    int best = 0;
    double best_d = kInf;
    for (size_t i = 0; i < dim.values.size(); ++i) {
      double d = std::abs(dim.values[i] - value);
      if (d < best_d - 1e-12) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  }
};

struct LabeledObservation {
  Observation obs;
  double label;  // parameter value on the grid
};

// Cross-entropy over value indices (classifier) or MSE on normalized values
// (regressor); 90/10 split, returns the best-validation snapshot.
inline BatchModel train_batch_model(ModelKind kind, ModelOutput output,
                                    const ParamDim& dim,
                                    const std::vector<LabeledObservation>& dataset,
                                    uint64_t seed, int epochs = 40, double lr = 1e-2) {
  if (dataset.empty()) throw Error("train_batch_model: empty dataset");
  const int n_in = static_cast<int>(dataset[0].obs.size());
  const int n_out = output == ModelOutput::classifier ? static_cast<int>(dim.values.size()) : 1;

  BatchModel model;
  model.output = output;
  model.dim = dim;
  model.norm_lo = dim.values.front();
  model.norm_hi = dim.values.back();
  switch (kind) {
    case ModelKind::linear: model.net = nn::make_linear(n_in, n_out, seed); break;
    case ModelKind::mlp: model.net = nn::make_mlp(n_in, n_out, seed); break;
    case ModelKind::cnn: model.net = nn::make_cnn(n_in, n_out, seed); break;
  }

  Rng rng(mix_seed({seed, 0x6261746368ull}));
  std::vector<int> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  for (size_t i = order.size() - 1; i > 0; --i)
    std::swap(order[i], order[rng.index(i + 1)]);
  size_t n_val = std::max<size_t>(1, order.size() / 10);
  std::vector<int> val(order.begin(), order.begin() + n_val);
  std::vector<int> train(order.begin() + n_val, order.end());
  if (train.empty()) train = val;

  auto label_index = [&](double label) {
    int best = 0;
    double best_d = kInf;
    for (size_t i = 0; i < dim.values.size(); ++i) {
      double d = std::abs(dim.values[i] - label);
      if (d < best_d - 1e-12) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  };
  auto norm_label = [&](double label) {
    return (label - model.norm_lo) / std::max(model.norm_hi - model.norm_lo, 1e-12);
  };

  auto validate = [&](const nn::Net& net) {
    if (output == ModelOutput::classifier) {
      int hits = 0;
      for (int i : val) {
        nn::Vector out = net.forward(dataset[i].obs);
        int best = 0;
        for (size_t k = 1; k < out.size(); ++k)
          if (out[k] > out[best]) best = static_cast<int>(k);
        if (best == label_index(dataset[i].label)) ++hits;
      }
      return static_cast<double>(hits) / val.size();  // accuracy, higher better
    }
    double sum = 0.0;
    for (int i : val) {
      nn::Vector out = net.forward(dataset[i].obs);
      double d = out[0] - norm_label(dataset[i].label);
      sum += d * d;
    }
    return -sum / val.size();  // negative MSE, higher better
  };

  nn::Net best_net = model.net;
  double best_metric = validate(model.net);
  const int batch = 32;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (size_t i = train.size() - 1; i > 0; --i)
      std::swap(train[i], train[rng.index(i + 1)]);
    for (size_t off = 0; off < train.size(); off += batch) {
      size_t end = std::min(off + batch, train.size());
      nn::Gradients grads;
      for (size_t k = off; k < end; ++k) {
        const auto& ex = dataset[train[k]];
        nn::Tape tape;
        nn::Vector out = model.net.forward(ex.obs, tape);
        nn::LossResult loss =
            output == ModelOutput::classifier
                ? nn::cross_entropy(out, label_index(ex.label))
                : nn::mse(out, {norm_label(ex.label)});
        for (double& g : loss.grad) g /= static_cast<double>(end - off);
        model.net.backward(tape, loss.grad, grads);
      }
      model.net.sgd_step(grads, lr);
    }
    double metric = validate(model.net);
    if (metric > best_metric) {
      best_metric = metric;
      best_net = model.net;
    }
  }
  model.net = best_net;
  model.validation_metric = best_metric;
  return model;
}

// Tuner backed by one batch model per parameter dimension.
class BatchModelPolicy : public TunerPolicy {
 public:
  BatchModelPolicy(std::vector<BatchModel> models, NavParams base = {},
                   ParamSpace space = ParamSpace::two_d())
      : models_(std::move(models)), base_(base), space_(std::move(space)) {}

  TuneDecision decide(const Observation& obs, const TunerContext&) const override {
    NavParams p = base_;
    for (const auto& m : models_)
      ParamSpace::set_param(p, m.dim.name, m.dim.values[m.predict_index(obs)]);
    return {p, space_.indices_of(p)};
  }

 private:
  std::vector<BatchModel> models_;
  NavParams base_;
  ParamSpace space_;
};

// ---- branching Q-network ----

// Shared trunk over the observation with one Q-value head per parameter
// dimension, so the joint action space never has to be enumerated.
struct BranchingQNet {
  nn::Net trunk;               // obs -> feature
  std::vector<nn::Net> heads;  // feature -> Q values, one per branch
  ParamSpace space;

  static BranchingQNet create(const ParamSpace& space, int n_in, uint64_t seed) {
    BranchingQNet q;
    q.space = space;
    q.trunk = nn::make_cnn_trunk(n_in, seed);
    int feat = q.trunk.out_size();
    for (size_t b = 0; b < space.dims.size(); ++b) {
      Rng rng(mix_seed({seed, 0x68656164ull, static_cast<uint64_t>(b)}));
      nn::Net head;
      head.add(nn::Dense::init(feat, static_cast<int>(space.dims[b].values.size()), rng));
      q.heads.push_back(std::move(head));
    }
    return q;
  }

  std::vector<nn::Vector> q_values(const Observation& obs) const {
    nn::Vector feat = trunk.forward(obs);
    std::vector<nn::Vector> out;
    out.reserve(heads.size());
    for (const auto& h : heads) out.push_back(h.forward(feat));
    return out;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["format"] = 1;
    j["trunk"] = trunk.to_json();
    j["heads"] = nlohmann::ordered_json::array();
    for (const auto& h : heads) j["heads"].push_back(h.to_json());
    j["dims"] = nlohmann::ordered_json::array();
    for (const auto& d : space.dims) j["dims"].push_back({{"name", d.name}, {"values", d.values}});
    return j;
  }

  static BranchingQNet from_json(const nlohmann::ordered_json& j) {
    if (!j.contains("format") || j["format"].get<int>() != 1)
      throw IoError("qnet checkpoint: unsupported format");
    BranchingQNet q;
    q.trunk = nn::Net::from_json(j["trunk"]);
    for (const auto& hj : j["heads"]) q.heads.push_back(nn::Net::from_json(hj));
    for (const auto& dj : j["dims"])
      q.space.dims.push_back({dj["name"].get<std::string>(),
                              dj["values"].get<std::vector<double>>()});
    return q;
  }
};

inline void save_qnet(const BranchingQNet& q, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << q.to_json().dump() << "\n";
}

inline BranchingQNet load_qnet(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  nlohmann::ordered_json j;
  f >> j;
  return BranchingQNet::from_json(j);
}

// Epsilon-greedy per branch, independently; greedy ties go to the lowest
// index.
inline std::vector<int> select_action(const BranchingQNet& qnet, const Observation& obs,
                                      double epsilon, Rng& rng) {
  auto q = qnet.q_values(obs);
  std::vector<int> action(q.size());
  for (size_t b = 0; b < q.size(); ++b) {
    if (epsilon > 0.0 && rng.uniform() < epsilon) {
      action[b] = static_cast<int>(rng.index(q[b].size()));
    } else {
      int best = 0;
      for (size_t i = 1; i < q[b].size(); ++i)
        if (q[b][i] > q[b][best]) best = static_cast<int>(i);
      action[b] = best;
    }
  }
  return action;
}

class DqnPolicy : public TunerPolicy {
 public:
  DqnPolicy(const BranchingQNet* qnet, double epsilon, NavParams base = {})
      : qnet_(qnet), epsilon_(epsilon), base_(base) {}

  TuneDecision decide(const Observation& obs, const TunerContext& ctx) const override {
    std::vector<int> action = select_action(*qnet_, obs, epsilon_, *ctx.rng);
    return {qnet_->space.apply(action, base_), action};
  }

 private:
  const BranchingQNet* qnet_;
  double epsilon_;
  NavParams base_;
};

// ---- replay buffer ----

class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity) : capacity_(capacity) {}

  void push(Transition t) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[head_] = std::move(t);  // FIFO eviction
      head_ = (head_ + 1) % capacity_;
    }
  }

  size_t size() const { return data_.size(); }

  // uniform sample of distinct indices (Floyd's algorithm)
  std::vector<const Transition*> sample(size_t batch, Rng& rng) const {
    batch = std::min(batch, data_.size());
    std::vector<size_t> chosen;
    chosen.reserve(batch);
    for (size_t i = data_.size() - batch; i < data_.size(); ++i) {
      size_t j = rng.index(i + 1);
      bool dup = false;
      for (size_t c : chosen)
        if (c == j) {
          dup = true;
          break;
        }
      chosen.push_back(dup ? i : j);
    }
    std::vector<const Transition*> out;
    out.reserve(batch);
    for (size_t i : chosen) out.push_back(&data_[i]);
    return out;
  }

  const Transition& at(size_t i) const { return data_[i]; }

 private:
  size_t capacity_;
  size_t head_ = 0;
  std::vector<Transition> data_;
};

// ---- DQN update ----

struct DqnOptions {
  double gamma = 0.99;
  double lr = 1e-3;
  size_t replay_capacity = 50000;
  size_t batch_size = 64;
  int target_sync = 500;   // updates between target network refreshes
  size_t warmup = 256;     // min transitions before updates start
  double eps_start = 1.0;
  double eps_end = 0.05;
};

// One SGD step on the TD error, averaged over branches and batch. Per branch
// the target is r + gamma * max_a Q_target(s', a), or r on terminal
// transitions.
inline double dqn_update(BranchingQNet& qnet, const BranchingQNet& target,
                         const std::vector<const Transition*>& batch, double gamma,
                         double lr) {
  if (batch.empty()) throw Error("dqn_update: empty batch");
  const size_t n_branches = qnet.heads.size();
  nn::Gradients trunk_grads;
  std::vector<nn::Gradients> head_grads(n_branches);
  double loss_sum = 0.0;
  const double denom = static_cast<double>(batch.size() * n_branches);

  for (const Transition* tr : batch) {
    nn::Tape trunk_tape;
    nn::Vector feat = qnet.trunk.forward(tr->obs, trunk_tape);

    std::vector<double> targets(n_branches);
    if (tr->done) {
      for (size_t b = 0; b < n_branches; ++b) targets[b] = tr->reward;
    } else {
      auto q_next = target.q_values(tr->next_obs);
      for (size_t b = 0; b < n_branches; ++b) {
        double m = q_next[b][0];
        for (double v : q_next[b]) m = std::max(m, v);
        targets[b] = tr->reward + gamma * m;
      }
    }

    nn::Vector feat_up(feat.size(), 0.0);
    for (size_t b = 0; b < n_branches; ++b) {
      nn::Tape head_tape;
      nn::Vector q = qnet.heads[b].forward(feat, head_tape);
      int a = tr->action[b];
      double diff = q[a] - targets[b];
      loss_sum += diff * diff;
      nn::Vector up(q.size(), 0.0);
      up[a] = 2.0 * diff / denom;
      nn::Vector din = qnet.heads[b].backward(head_tape, up, head_grads[b]);
      for (size_t i = 0; i < feat_up.size(); ++i) feat_up[i] += din[i];
    }
    qnet.trunk.backward(trunk_tape, feat_up, trunk_grads);
  }

  qnet.trunk.sgd_step(trunk_grads, lr);
  for (size_t b = 0; b < n_branches; ++b) qnet.heads[b].sgd_step(head_grads[b], lr);
  return loss_sum / denom;
}

// ---- behavior cloning ----

struct CloneExample {
  Observation obs;
  std::vector<int> action;
};

// Fit the Q heads as classifiers on demonstrated actions. Returns the mean
// per-branch agreement on a held-out tenth of the data.
inline double behavior_clone(BranchingQNet& qnet, const std::vector<CloneExample>& data,
                             uint64_t seed, int epochs = 20, double lr = 1e-2) {
  if (data.empty()) return 0.0;
  Rng rng(mix_seed({seed, 0x636c6f6e65ull}));
  std::vector<int> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  for (size_t i = order.size() - 1; i > 0; --i)
    std::swap(order[i], order[rng.index(i + 1)]);
  size_t n_val = std::max<size_t>(1, order.size() / 10);
  std::vector<int> val(order.begin(), order.begin() + n_val);
  std::vector<int> train(order.begin() + n_val, order.end());
  if (train.empty()) train = val;

  const size_t n_branches = qnet.heads.size();
  const int batch = 32;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (size_t i = train.size() - 1; i > 0; --i)
      std::swap(train[i], train[rng.index(i + 1)]);
    for (size_t off = 0; off < train.size(); off += batch) {
      size_t end = std::min(off + static_cast<size_t>(batch), train.size());
      nn::Gradients trunk_grads;
      std::vector<nn::Gradients> head_grads(n_branches);
      for (size_t k = off; k < end; ++k) {
        const auto& ex = data[train[k]];
        nn::Tape trunk_tape;
        nn::Vector feat = qnet.trunk.forward(ex.obs, trunk_tape);
        nn::Vector feat_up(feat.size(), 0.0);
        double scale = 1.0 / static_cast<double>((end - off) * n_branches);
        for (size_t b = 0; b < n_branches; ++b) {
          nn::Tape head_tape;
          nn::Vector logits = qnet.heads[b].forward(feat, head_tape);
          nn::LossResult loss = nn::cross_entropy(logits, ex.action[b]);
          for (double& g : loss.grad) g *= scale;
          nn::Vector din = qnet.heads[b].backward(head_tape, loss.grad, head_grads[b]);
          for (size_t i = 0; i < feat_up.size(); ++i) feat_up[i] += din[i];
        }
        qnet.trunk.backward(trunk_tape, feat_up, trunk_grads);
      }
      qnet.trunk.sgd_step(trunk_grads, lr);
      for (size_t b = 0; b < n_branches; ++b) qnet.heads[b].sgd_step(head_grads[b], lr);
    }
  }

  size_t hits = 0, total = 0;
  for (int i : val) {
    auto q = qnet.q_values(data[i].obs);
    for (size_t b = 0; b < n_branches; ++b) {
      int best = 0;
      for (size_t k = 1; k < q[b].size(); ++k)
        if (q[b][k] > q[b][best]) best = static_cast<int>(k);
      if (best == data[i].action[b]) ++hits;
      ++total;
    }
  }
  return total ? static_cast<double>(hits) / total : 0.0;
}

// ---- DQN training loop ----

enum class TrainMode { scratch, warm_start };

struct TrainEpisodeLog {
  int episode = 0;
  double episode_return = 0.0;
  bool success = false;
  double epsilon = 0.0;
  bool cloning = false;
};

struct TrainResult {
  BranchingQNet qnet;
  std::vector<TrainEpisodeLog> log;
  double clone_agreement = -1.0;  // held-out agreement after warm start
};

// Environment supplier: builds the episode configuration for a training
// episode index (worlds, start/goal, seeds).
using EnvSampler = std::function<EpisodeConfig(int)>;

// Scratch mode: epsilon-greedy rollouts with replay updates on every logged
// transition and periodic target sync. Warm-start mode spends the first fifth
// of the budget collecting best-value demonstrations and cloning them before
// the reinforcement phase.
inline TrainResult train_dqn(const EnvSampler& env_sampler, TrainMode mode, int budget,
                             const ParamSpace& space, uint64_t seed,
                             const BestValueCurve* curve = nullptr,
                             const DqnOptions& options = {}, int n_in = 128,
                             const std::function<void(const TrainEpisodeLog&)>& on_episode = {}) {
  if (budget < 1) throw Error("train_dqn: budget must be >= 1");
  TrainResult result;
  result.qnet = BranchingQNet::create(space, n_in, seed);

  int n_clone = 0;
  if (mode == TrainMode::warm_start) {
    if (!curve) throw Error("train_dqn: warm start requires best-value curves");
    n_clone = std::max(1, static_cast<int>(std::llround(0.2 * budget)));
  }
  const int n_rl = budget - n_clone;

  // demonstration phase
  if (n_clone > 0) {
    BestValueCurvePolicy demo(*curve, NavParams{}, space);
    std::vector<CloneExample> examples;
    for (int ep = 0; ep < n_clone; ++ep) {
      EpisodeConfig cfg = env_sampler(ep);
      EpisodeResult res = run_episode(cfg, demo);
      double ret = 0.0;
      for (const auto& tr : res.transitions) {
        examples.push_back({tr.obs, tr.action});
        ret += tr.reward;
      }
      TrainEpisodeLog log{ep, ret, res.success, 0.0, true};
      result.log.push_back(log);
      if (on_episode) on_episode(log);
    }
    result.clone_agreement = behavior_clone(result.qnet, examples, seed);
  }

  // reinforcement phase
  BranchingQNet target = result.qnet;
  ReplayBuffer replay(options.replay_capacity);
  Rng update_rng(mix_seed({seed, 0x7570646174ull}));
  int updates = 0;
  const int anneal = std::max(1, n_rl / 2);
  for (int ep = 0; ep < n_rl; ++ep) {
    double frac = std::min(1.0, static_cast<double>(ep) / anneal);
    double epsilon = options.eps_start + frac * (options.eps_end - options.eps_start);
    DqnPolicy policy(&result.qnet, epsilon);
    EpisodeConfig cfg = env_sampler(n_clone + ep);
    EpisodeResult res = run_episode(cfg, policy);
    double ret = 0.0;
    for (const auto& tr : res.transitions) {
      ret += tr.reward;
      replay.push(tr);
      if (replay.size() >= std::max(options.warmup, options.batch_size)) {
        auto batch = replay.sample(options.batch_size, update_rng);
        dqn_update(result.qnet, target, batch, options.gamma, options.lr);
        if (++updates % options.target_sync == 0) target = result.qnet;
      }
    }
    TrainEpisodeLog log{n_clone + ep, ret, res.success, epsilon, false};
    result.log.push_back(log);
    if (on_episode) on_episode(log);
  }
  return result;
}

}  // namespace navlab
