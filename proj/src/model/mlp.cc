// Copyright 2026 The YASGD Authors. All Rights Reserved.
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

#include "yasgd/model/mlp.h"

#include <stdexcept>

#include <fmt/core.h>

namespace yasgd::model {
namespace {

template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstRowMap = Eigen::Map<const RowVector<T>>;
template <typename T>
using RowMap = Eigen::Map<RowVector<T>>;

template <typename T>
ConstMatMap<T> WeightOf(const FlatBuffer<T>& buf, int seg) {
  const auto& s = buf.layout->segment(seg);
  return ConstMatMap<T>(buf.values.data() + s.offset, s.shape[0], s.shape[1]);
}

template <typename T>
ConstRowMap<T> VectorOf(const FlatBuffer<T>& buf, int seg) {
  const auto& s = buf.layout->segment(seg);
  return ConstRowMap<T>(buf.values.data() + s.offset, s.len);
}

template <typename T>
MatMap<T> MutableWeightOf(FlatBuffer<T>& buf, int seg) {
  const auto& s = buf.layout->segment(seg);
  return MatMap<T>(buf.values.data() + s.offset, s.shape[0], s.shape[1]);
}

template <typename T>
RowMap<T> MutableVectorOf(FlatBuffer<T>& buf, int seg) {
  const auto& s = buf.layout->segment(seg);
  return RowMap<T>(buf.values.data() + s.offset, s.len);
}

}  // namespace

Mlp::Mlp(ModelSpec spec)
    : spec_(std::move(spec)),
      layout_(std::make_shared<const ParamLayout>(ParamLayout::ForSpec(spec_))) {
  const int layers = static_cast<int>(spec_.layer_dims.size()) - 1;
  layers_.resize(layers);
  int seg = 0;
  for (int l = 0; l < layers; ++l) {
    layers_[l].weight = seg++;
    layers_[l].bias = seg++;
    if (l < spec_.num_hidden() && spec_.use_batchnorm[l]) {
      layers_[l].gamma = seg++;
      layers_[l].beta = seg++;
    }
  }
}

std::vector<BatchNormState> Mlp::MakeBatchNormStates(double momentum, double epsilon) const {
  std::vector<BatchNormState> states(spec_.num_hidden());
  for (int l = 0; l < spec_.num_hidden(); ++l) {
    if (spec_.use_batchnorm[l]) {
      states[l] = BatchNormState::ForFeatures(spec_.layer_dims[l + 1], momentum, epsilon);
    }
  }
  return states;
}

template <typename T>
ForwardResult<T> Mlp::Forward(const FlatBuffer<T>& params, std::span<BatchNormState> bn,
                              const Batch& batch, Mode mode, double label_smoothing) const {
  if (batch.size() == 0) throw std::invalid_argument("Forward: empty batch");
  if (batch.dim != spec_.input_dim() ||
      batch.features.size() != batch.size() * static_cast<std::size_t>(batch.dim)) {
    throw std::invalid_argument(fmt::format("Forward: batch feature dim {} does not match model input {}",
                                            batch.dim, spec_.input_dim()));
  }
  if (params.values.size() != layout_->total_size()) {
    throw std::invalid_argument("Forward: parameter buffer does not match the model layout");
  }
  if (static_cast<int>(bn.size()) != spec_.num_hidden()) {
    throw std::invalid_argument("Forward: need one batch-norm state per hidden layer");
  }
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw std::invalid_argument("Forward: label smoothing must be in [0, 1)");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  const int K = spec_.num_classes();

  ForwardResult<T> result;
  auto& cache = result.cache;
  cache.params = &params;
  cache.mode = mode;
  cache.hidden.resize(spec_.num_hidden());

  RowMatrix<T> h = ConstMatMap<float>(batch.features.data(), n, batch.dim).template cast<T>();
  for (int l = 0; l < spec_.num_hidden(); ++l) {
    auto& hc = cache.hidden[l];
    hc.input = std::move(h);
    const auto& segs = layers_[l];
    RowMatrix<T> y = hc.input * WeightOf(params, segs.weight).transpose();
    y.rowwise() += VectorOf(params, segs.bias);
    if (segs.gamma >= 0) {
      BatchNormState& state = bn[l];
      RowVector<T> mean;
      RowVector<T> var;
      if (mode == Mode::kTrain) {
        mean = y.colwise().mean();
        var = (y.rowwise() - mean).array().square().matrix().colwise().mean();
      } else {
        mean = Eigen::Map<const RowVector<double>>(state.running_mean.data(),
                                                   state.running_mean.size())
                   .template cast<T>();
        var = Eigen::Map<const RowVector<double>>(state.running_var.data(),
                                                  state.running_var.size())
                  .template cast<T>();
      }
      hc.inv_std = (var.array() + static_cast<T>(state.epsilon)).sqrt().inverse().matrix();
      hc.xhat = ((y.rowwise() - mean).array().rowwise() * hc.inv_std.array()).matrix();
      y = (hc.xhat.array().rowwise() * VectorOf(params, segs.gamma).array()).matrix();
      y.rowwise() += VectorOf(params, segs.beta);
      if (mode == Mode::kTrain) {
        const RowVector<double> m = mean.template cast<double>();
        const RowVector<double> v = var.template cast<double>();
        BatchNormUpdate(state, std::span<const double>(m.data(), m.size()),
                        std::span<const double>(v.data(), v.size()));
      }
    }
    h = y.cwiseMax(T(0));
  }
  cache.output_input = std::move(h);

  const auto& out = layers_.back();
  RowMatrix<T> logits = cache.output_input * WeightOf(params, out.weight).transpose();
  logits.rowwise() += VectorOf(params, out.bias);

  const Eigen::Matrix<T, Eigen::Dynamic, 1> row_max = logits.rowwise().maxCoeff();
  const Eigen::Matrix<T, Eigen::Dynamic, 1> log_z =
      row_max.array() +
      (logits.colwise() - row_max).array().exp().rowwise().sum().log();
  cache.probs = (logits.colwise() - log_z).array().exp().matrix();

  const T off = static_cast<T>(label_smoothing / K);
  const T on = static_cast<T>(1.0 - label_smoothing + label_smoothing / K);
  cache.targets = RowMatrix<T>::Constant(n, K, off);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = batch.labels[i];
    if (label < 0 || label >= K) throw std::out_of_range("Forward: label out of range");
    cache.targets(i, label) = on;
  }
  // Per-sample loss: log Z - sum_j v_j x_j, valid because sum_j v_j = 1.
  const Eigen::Matrix<T, Eigen::Dynamic, 1> per_sample =
      log_z - cache.targets.cwiseProduct(logits).rowwise().sum();
  result.loss = per_sample.mean();
  return result;
}

template <typename T>
FlatBuffer<T> Mlp::Backward(const ForwardCache<T>& cache) const {
  FlatBuffer<T> grads(layout_);
  BackwardPass<T> pass(*this, cache, grads);
  while (!pass.done()) pass.Step();
  return grads;
}

std::vector<int> Mlp::Predict(const FlatParams& params, std::span<const BatchNormState> bn,
                              const Batch& batch) const {
  std::vector<BatchNormState> scratch(bn.begin(), bn.end());
  const auto fwd = Forward<float>(params, scratch, batch, Mode::kEval, 0.0);
  std::vector<int> out(batch.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    Eigen::Index arg = 0;
    fwd.cache.probs.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
    out[i] = static_cast<int>(arg);
  }
  return out;
}

template <typename T>
BackwardPass<T>::BackwardPass(const Mlp& model, const ForwardCache<T>& cache, FlatBuffer<T>& grads)
    : model_(model), cache_(cache), grads_(grads), next_layer_(model.num_layers() - 1) {
  if (cache.params == nullptr) throw std::invalid_argument("BackwardPass: cache has no forward pass");
  if (grads.values.size() != model.layout()->total_size()) {
    grads = FlatBuffer<T>(model.layout());
  }
}

template <typename T>
std::vector<int> BackwardPass<T>::Step() {
  if (done()) return {};
  const FlatBuffer<T>& params = *cache_.params;
  const int l = next_layer_--;
  const auto& segs = model_.layer_segments()[l];
  const Eigen::Index n = cache_.probs.rows();
  std::vector<int> completed;

  if (l == model_.num_layers() - 1) {
    const RowMatrix<T> dlogits = (cache_.probs - cache_.targets) / static_cast<T>(n);
    MutableWeightOf(grads_, segs.weight).noalias() = dlogits.transpose() * cache_.output_input;
    MutableVectorOf(grads_, segs.bias) = dlogits.colwise().sum();
    if (l > 0) upstream_.noalias() = dlogits * WeightOf(params, segs.weight);
    completed = {segs.bias, segs.weight};
    return completed;
  }

  const auto& hc = cache_.hidden[l];
  const RowMatrix<T>& activated =
      (l + 1 < static_cast<int>(cache_.hidden.size())) ? cache_.hidden[l + 1].input
                                                       : cache_.output_input;
  RowMatrix<T> dz = (upstream_.array() * (activated.array() > T(0)).template cast<T>()).matrix();
  if (segs.gamma >= 0) {
    MutableVectorOf(grads_, segs.beta) = dz.colwise().sum();
    MutableVectorOf(grads_, segs.gamma) = dz.cwiseProduct(hc.xhat).colwise().sum();
    const RowMatrix<T> dxhat =
        (dz.array().rowwise() * VectorOf(params, segs.gamma).array()).matrix();
    if (cache_.mode == Mode::kTrain) {
      const RowVector<T> sum_dxhat = dxhat.colwise().sum();
      const RowVector<T> sum_dxhat_xhat = dxhat.cwiseProduct(hc.xhat).colwise().sum();
      RowMatrix<T> t = static_cast<T>(n) * dxhat;
      t.rowwise() -= sum_dxhat;
      t -= (hc.xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
      dz = ((t.array().rowwise() * hc.inv_std.array()) / static_cast<T>(n)).matrix();
    } else {
      dz = (dxhat.array().rowwise() * hc.inv_std.array()).matrix();
    }
    completed = {segs.beta, segs.gamma};
  }
  MutableWeightOf(grads_, segs.weight).noalias() = dz.transpose() * hc.input;
  MutableVectorOf(grads_, segs.bias) = dz.colwise().sum();
  if (l > 0) upstream_.noalias() = dz * WeightOf(params, segs.weight);
  completed.push_back(segs.bias);
  completed.push_back(segs.weight);
  return completed;
}

template ForwardResult<float> Mlp::Forward<float>(const FlatBuffer<float>&, std::span<BatchNormState>,
                                                  const Batch&, Mode, double) const;
template ForwardResult<double> Mlp::Forward<double>(const FlatBuffer<double>&,
                                                    std::span<BatchNormState>, const Batch&, Mode,
                                                    double) const;
template FlatBuffer<float> Mlp::Backward<float>(const ForwardCache<float>&) const;
template FlatBuffer<double> Mlp::Backward<double>(const ForwardCache<double>&) const;
template class BackwardPass<float>;
template class BackwardPass<double>;

}  // namespace yasgd::model
