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
#include <span>
#include <vector>

namespace yasgd::model {

// Gaussian-mixture classification data: every class owns a few cluster
// centres, samples are a centre plus isotropic noise. Sample i is generated
// from its own counter stream, so any index range can be produced
// independently (the held-out split is just a later index range).
struct DatasetParams {
  std::uint64_t seed = 7;
  std::size_t n = 1;
  int dim = 32;
  int num_classes = 10;
  int clusters_per_class = 2;
  double center_scale = 1.0;
  double noise = 1.0;
  std::size_t first_index = 0;
};

struct Batch {
  int dim = 0;
  std::vector<float> features;  // row-major, size() x dim
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

struct Dataset {
  std::uint64_t seed = 0;
  int dim = 0;
  int num_classes = 0;
  std::vector<float> features;  // row-major, n x dim
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(features).subspan(i * dim, dim);
  }
  Batch Gather(std::span<const std::size_t> indices) const;
  Batch All() const;
};

Dataset GenerateDataset(const DatasetParams& params);
Dataset GenerateDataset(std::uint64_t seed, std::size_t n, int dim, int num_classes);

// Per-epoch partition of a shared permutation. Iterations use consecutive
// global batches of world * batch_per_rank samples; rank r takes the r-th
// slice of each. The tail that does not fill a global batch is dropped,
// except that a final partial iteration is kept when the tail fills at least
// one per-rank batch: ranks whose slice lies inside the tail get a full
// batch, the remaining ranks get an empty one.
struct EpochShard {
  std::vector<std::vector<std::size_t>> batches;  // one entry per iteration

  std::size_t iterations() const { return batches.size(); }
};

std::size_t IterationsPerEpoch(std::size_t n, int world, std::size_t batch_per_rank);

// Number of ranks holding a non-empty batch in the given iteration.
int RanksWithData(std::size_t n, int world, std::size_t batch_per_rank, std::size_t iteration);

std::vector<std::size_t> EpochPermutation(std::uint64_t seed, std::uint64_t epoch, std::size_t n);

// Throws std::invalid_argument for a bad rank/world, or when not even one
// per-rank batch fits in the dataset.
EpochShard Shard(std::size_t n, std::uint64_t shuffle_seed, std::uint64_t epoch, int rank,
                 int world, std::size_t batch_per_rank);
EpochShard Shard(const Dataset& dataset, std::uint64_t epoch, int rank, int world,
                 std::size_t batch_per_rank);

}  // namespace yasgd::model
