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

#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "yasgd/model/batchnorm.h"
#include "yasgd/model/dataset.h"
#include "yasgd/model/params.h"

namespace yasgd::model {

enum class Mode { kTrain, kEval };

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

template <typename T>
struct HiddenCache {
  RowMatrix<T> input;    // n x in
  RowMatrix<T> xhat;     // n x out, normalized pre-activations (BN only)
  RowVector<T> inv_std;  // 1 x out (BN only)
};

// Everything backward needs. Holds a pointer to the parameters passed to
// Forward, which must outlive the cache.
template <typename T>
struct ForwardCache {
  const FlatBuffer<T>* params = nullptr;
  std::vector<HiddenCache<T>> hidden;
  RowMatrix<T> output_input;  // n x in of the classifier layer (last relu output)
  RowMatrix<T> probs;    // n x K softmax
  RowMatrix<T> targets;  // n x K smoothed labels
  Mode mode = Mode::kEval;
};

template <typename T>
struct ForwardResult {
  T loss{};
  ForwardCache<T> cache;
};

// Segment ids of one affine layer and its optional batch norm.
struct LayerSegments {
  int weight = -1;
  int bias = -1;
  int gamma = -1;
  int beta = -1;
};

class Mlp {
 public:
  explicit Mlp(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  const std::shared_ptr<const ParamLayout>& layout() const { return layout_; }
  const std::vector<LayerSegments>& layer_segments() const { return layers_; }
  int num_layers() const { return static_cast<int>(layers_.size()); }

  // One state per hidden layer; layers without batch norm get an empty state.
  std::vector<BatchNormState> MakeBatchNormStates(double momentum = kDefaultBnMomentum,
                                                  double epsilon = kDefaultBnEpsilon) const;

  // Mean label-smoothed cross-entropy over the batch. Train mode normalizes
  // with batch statistics and folds them into `bn`; eval mode reads the
  // running statistics and leaves `bn` untouched.
  template <typename T>
  ForwardResult<T> Forward(const FlatBuffer<T>& params, std::span<BatchNormState> bn,
                           const Batch& batch, Mode mode, double label_smoothing) const;

  template <typename T>
  FlatBuffer<T> Backward(const ForwardCache<T>& cache) const;

  // Eval-mode predictions, no state changes.
  std::vector<int> Predict(const FlatParams& params, std::span<const BatchNormState> bn,
                           const Batch& batch) const;

 private:
  ModelSpec spec_;
  std::shared_ptr<const ParamLayout> layout_;
  std::vector<LayerSegments> layers_;
};

// Layer-at-a-time backward propagation, last layer first. Each Step() writes
// one layer's gradients and returns the segment ids it completed, in
// backward order; callers can hand those segments to communication while
// earlier layers are still being differentiated.
template <typename T>
class BackwardPass {
 public:
  BackwardPass(const Mlp& model, const ForwardCache<T>& cache, FlatBuffer<T>& grads);

  bool done() const { return next_layer_ < 0; }
  std::vector<int> Step();

 private:
  const Mlp& model_;
  const ForwardCache<T>& cache_;
  FlatBuffer<T>& grads_;
  int next_layer_;
  RowMatrix<T> upstream_;  // dLoss/d(output of layer next_layer_)
};

}  // namespace yasgd::model
