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

#include "yasgd/model/params.h"

#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

#include "yasgd/model/philox.h"

namespace yasgd::model {

void ModelSpec::Validate() const {
  if (layer_dims.size() < 2) throw std::invalid_argument("ModelSpec: need at least 2 layer dims");
  for (int d : layer_dims) {
    if (d < 1) throw std::invalid_argument("ModelSpec: layer dims must be >= 1");
  }
  if (num_classes() < 2) throw std::invalid_argument("ModelSpec: need at least 2 classes");
  if (static_cast<int>(use_batchnorm.size()) != num_hidden()) {
    throw std::invalid_argument(fmt::format("ModelSpec: {} batchnorm flags for {} hidden layers",
                                            use_batchnorm.size(), num_hidden()));
  }
}

ModelSpec ModelSpec::Mlp(std::vector<int> dims, bool batchnorm) {
  ModelSpec spec;
  spec.layer_dims = std::move(dims);
  const int hidden = static_cast<int>(spec.layer_dims.size()) - 2;
  spec.use_batchnorm.assign(hidden > 0 ? hidden : 0, batchnorm);
  spec.Validate();
  return spec;
}

const char* SegmentKindName(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::kWeight: return "weight";
    case SegmentKind::kBias: return "bias";
    case SegmentKind::kBnGamma: return "bn_gamma";
    case SegmentKind::kBnBeta: return "bn_beta";
  }
  return "?";
}

void ValidateTiling(std::span<const ParamSegment> segments, std::size_t buffer_size) {
  std::size_t cursor = 0;
  for (const auto& s : segments) {
    if (s.offset != cursor) {
      throw std::invalid_argument(fmt::format(
          "segment '{}' starts at {} but previous segment ends at {} (overlap or gap)", s.name,
          s.offset, cursor));
    }
    std::size_t product = 1;
    for (int d : s.shape) product *= static_cast<std::size_t>(d);
    if (!s.shape.empty() && product != s.len) {
      throw std::invalid_argument(fmt::format("segment '{}' len {} != product(shape) {}", s.name,
                                              s.len, product));
    }
    cursor += s.len;
  }
  if (cursor != buffer_size) {
    throw std::invalid_argument(
        fmt::format("segments cover {} elements, buffer has {}", cursor, buffer_size));
  }
}

ParamLayout::ParamLayout(std::vector<ParamSegment> segments) : segments_(std::move(segments)) {
  for (const auto& s : segments_) total_ += s.len;
  ValidateTiling(segments_, total_);
}

ParamLayout ParamLayout::ForSpec(const ModelSpec& spec) {
  spec.Validate();
  std::vector<ParamSegment> segs;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::vector<int> shape, SegmentKind kind) {
    std::size_t len = 1;
    for (int d : shape) len *= static_cast<std::size_t>(d);
    segs.push_back({std::move(name), offset, len, std::move(shape), kind});
    offset += len;
  };
  const int layers = static_cast<int>(spec.layer_dims.size()) - 1;
  for (int l = 0; l < layers; ++l) {
    const int in = spec.layer_dims[l];
    const int out = spec.layer_dims[l + 1];
    add(fmt::format("dense{}.weight", l), {out, in}, SegmentKind::kWeight);
    add(fmt::format("dense{}.bias", l), {out}, SegmentKind::kBias);
    if (l < spec.num_hidden() && spec.use_batchnorm[l]) {
      add(fmt::format("bn{}.gamma", l), {out}, SegmentKind::kBnGamma);
      add(fmt::format("bn{}.beta", l), {out}, SegmentKind::kBnBeta);
    }
  }
  return ParamLayout(std::move(segs));
}

std::vector<int> ParamLayout::BackwardOrder() const {
  // Within a layer the batch-norm parameters finish before the affine ones,
  // and layers finish last-to-first, so this is reverse offset order.
  std::vector<int> order(segments_.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = static_cast<int>(segments_.size() - 1 - i);
  }
  return order;
}

FlatParams InitParams(const ModelSpec& spec, std::uint64_t seed) {
  auto layout = std::make_shared<const ParamLayout>(ParamLayout::ForSpec(spec));
  FlatParams params(layout);
  for (std::size_t s = 0; s < layout->num_segments(); ++s) {
    const auto& seg = layout->segment(s);
    auto out = params.segment(s);
    switch (seg.kind) {
      case SegmentKind::kWeight: {
        const int fan_in = seg.shape.at(1);
        const double stddev = std::sqrt(2.0 / fan_in);
        for (std::size_t j = 0; j < seg.len; ++j) {
          // One stream per element keeps every value independent of how the
          // buffer is traversed or partitioned.
          PhiloxStream rng(seed, (std::uint64_t{s} << 40) | j);
          out[j] = static_cast<float>(stddev * SampleTruncatedNormal(rng, 2.0));
        }
        break;
      }
      case SegmentKind::kBnGamma:
        std::fill(out.begin(), out.end(), 1.0f);
        break;
      case SegmentKind::kBias:
      case SegmentKind::kBnBeta:
        std::fill(out.begin(), out.end(), 0.0f);
        break;
    }
  }
  return params;
}

}  // namespace yasgd::model
