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

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace yasgd::model {

enum class Activation { kRelu };

// Dense network: layer_dims = {input, hidden..., classes}. Batch norm, when
// enabled for a hidden layer, sits between its affine map and the ReLU.
struct ModelSpec {
  std::vector<int> layer_dims;
  std::vector<bool> use_batchnorm;  // one flag per hidden layer
  Activation activation = Activation::kRelu;

  int input_dim() const { return layer_dims.front(); }
  int num_classes() const { return layer_dims.back(); }
  int num_hidden() const { return static_cast<int>(layer_dims.size()) - 2; }

  // Throws std::invalid_argument when the invariants do not hold.
  void Validate() const;

  static ModelSpec Mlp(std::vector<int> dims, bool batchnorm);
};

enum class SegmentKind { kWeight, kBias, kBnGamma, kBnBeta };

const char* SegmentKindName(SegmentKind kind);

struct ParamSegment {
  std::string name;
  std::size_t offset = 0;
  std::size_t len = 0;
  std::vector<int> shape;
  SegmentKind kind = SegmentKind::kWeight;
};

// Segments sorted by offset that exactly tile a flat buffer.
class ParamLayout {
 public:
  ParamLayout() = default;
  explicit ParamLayout(std::vector<ParamSegment> segments);

  static ParamLayout ForSpec(const ModelSpec& spec);

  const std::vector<ParamSegment>& segments() const { return segments_; }
  const ParamSegment& segment(std::size_t i) const { return segments_[i]; }
  std::size_t num_segments() const { return segments_.size(); }
  std::size_t total_size() const { return total_; }

  // Segment ids in the order backward propagation finishes them.
  std::vector<int> BackwardOrder() const;

 private:
  std::vector<ParamSegment> segments_;
  std::size_t total_ = 0;
};

// Checks the tiling invariant; throws std::invalid_argument on overlap, gap,
// misordering or a len/shape mismatch.
void ValidateTiling(std::span<const ParamSegment> segments, std::size_t buffer_size);

// Contiguous buffer partitioned by a shared layout. Float instances are the
// master-precision parameters and gradients; double instances back the
// numerical oracles.
template <typename T>
struct FlatBuffer {
  std::shared_ptr<const ParamLayout> layout;
  std::vector<T> values;

  FlatBuffer() = default;
  explicit FlatBuffer(std::shared_ptr<const ParamLayout> l)
      : layout(std::move(l)), values(layout->total_size(), T{0}) {}

  std::span<T> segment(std::size_t i) {
    const auto& s = layout->segment(i);
    return std::span<T>(values).subspan(s.offset, s.len);
  }
  std::span<const T> segment(std::size_t i) const {
    const auto& s = layout->segment(i);
    return std::span<const T>(values).subspan(s.offset, s.len);
  }

  template <typename U>
  FlatBuffer<U> Cast() const {
    FlatBuffer<U> out;
    out.layout = layout;
    out.values.assign(values.begin(), values.end());
    return out;
  }
};

using FlatParams = FlatBuffer<float>;
using FlatGrads = FlatBuffer<float>;

// Counter-based initialization: weights ~ N(0, 2/fan_in) truncated at two
// standard deviations, biases and betas zero, gammas one. The value of every
// element depends only on (seed, segment index, element index).
FlatParams InitParams(const ModelSpec& spec, std::uint64_t seed);

}  // namespace yasgd::model
