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

#include "yasgd/model/dataset.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <fmt/core.h>

#include "yasgd/model/philox.h"

namespace yasgd::model {
namespace {

// Stream-id namespaces so centres, samples and shuffles never share counters.
constexpr std::uint64_t kCenterStream = 1ull << 62;
constexpr std::uint64_t kSampleStream = 2ull << 62;
constexpr std::uint64_t kShuffleStream = 3ull << 62;

}  // namespace

Batch Dataset::Gather(std::span<const std::size_t> indices) const {
  Batch b;
  b.dim = dim;
  b.features.resize(indices.size() * dim);
  b.labels.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    if (src >= size()) throw std::out_of_range("Dataset::Gather: index out of range");
    std::copy_n(features.begin() + src * dim, dim, b.features.begin() + i * dim);
    b.labels[i] = labels[src];
  }
  return b;
}

Batch Dataset::All() const {
  Batch b;
  b.dim = dim;
  b.features = features;
  b.labels = labels;
  return b;
}

Dataset GenerateDataset(const DatasetParams& p) {
  if (p.n < 1) throw std::invalid_argument("GenerateDataset: n must be >= 1");
  if (p.dim < 1 || p.num_classes < 2 || p.clusters_per_class < 1) {
    throw std::invalid_argument("GenerateDataset: bad dimensions");
  }
  const int num_centers = p.num_classes * p.clusters_per_class;
  std::vector<double> centers(static_cast<std::size_t>(num_centers) * p.dim);
  for (int c = 0; c < num_centers; ++c) {
    PhiloxStream rng(p.seed, kCenterStream | static_cast<std::uint64_t>(c));
    for (int j = 0; j < p.dim; ++j) {
      centers[c * p.dim + j] = p.center_scale * SampleTruncatedNormal(rng, 3.0);
    }
  }

  Dataset ds;
  ds.seed = p.seed;
  ds.dim = p.dim;
  ds.num_classes = p.num_classes;
  ds.features.resize(p.n * p.dim);
  ds.labels.resize(p.n);
  for (std::size_t i = 0; i < p.n; ++i) {
    PhiloxStream rng(p.seed, kSampleStream | (p.first_index + i));
    const int center = static_cast<int>(rng.NextBelow(num_centers));
    ds.labels[i] = center % p.num_classes;
    for (int j = 0; j < p.dim; ++j) {
      const double x = centers[center * p.dim + j] + p.noise * SampleTruncatedNormal(rng, 3.0);
      ds.features[i * p.dim + j] = static_cast<float>(x);
    }
  }
  return ds;
}

Dataset GenerateDataset(std::uint64_t seed, std::size_t n, int dim, int num_classes) {
  DatasetParams p;
  p.seed = seed;
  p.n = n;
  p.dim = dim;
  p.num_classes = num_classes;
  return GenerateDataset(p);
}

std::size_t IterationsPerEpoch(std::size_t n, int world, std::size_t batch_per_rank) {
  if (world < 1 || batch_per_rank < 1) throw std::invalid_argument("IterationsPerEpoch: bad sizes");
  const std::size_t global = static_cast<std::size_t>(world) * batch_per_rank;
  const std::size_t full = n / global;
  const std::size_t tail = n % global;
  return full + (tail >= batch_per_rank ? 1 : 0);
}

int RanksWithData(std::size_t n, int world, std::size_t batch_per_rank, std::size_t iteration) {
  const std::size_t global = static_cast<std::size_t>(world) * batch_per_rank;
  const std::size_t full = n / global;
  if (iteration < full) return world;
  if (iteration == full) return static_cast<int>((n % global) / batch_per_rank);
  return 0;
}

std::vector<std::size_t> EpochPermutation(std::uint64_t seed, std::uint64_t epoch, std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  PhiloxStream rng(seed, kShuffleStream | epoch);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.NextBelow(i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

EpochShard Shard(std::size_t n, std::uint64_t shuffle_seed, std::uint64_t epoch, int rank,
                 int world, std::size_t batch_per_rank) {
  if (world < 1 || rank < 0 || rank >= world) {
    throw std::invalid_argument(fmt::format("Shard: rank {} invalid for world {}", rank, world));
  }
  if (batch_per_rank < 1) throw std::invalid_argument("Shard: batch_per_rank must be >= 1");
  if (n < batch_per_rank) {
    throw std::invalid_argument(
        fmt::format("Shard: {} samples cannot fill one per-rank batch of {}", n, batch_per_rank));
  }
  const auto perm = EpochPermutation(shuffle_seed, epoch, n);
  const std::size_t global = static_cast<std::size_t>(world) * batch_per_rank;
  const std::size_t iters = IterationsPerEpoch(n, world, batch_per_rank);
  EpochShard shard;
  shard.batches.resize(iters);
  for (std::size_t it = 0; it < iters; ++it) {
    if (rank >= RanksWithData(n, world, batch_per_rank, it)) continue;
    const std::size_t begin = it * global + static_cast<std::size_t>(rank) * batch_per_rank;
    shard.batches[it].assign(perm.begin() + begin, perm.begin() + begin + batch_per_rank);
  }
  return shard;
}

EpochShard Shard(const Dataset& dataset, std::uint64_t epoch, int rank, int world,
                 std::size_t batch_per_rank) {
  return Shard(dataset.size(), dataset.seed, epoch, rank, world, batch_per_rank);
}

}  // namespace yasgd::model
