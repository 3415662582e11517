// twinbeam - link-level simulation of proactive interference management
// in hybrid near/far-field XL-MIMO indoor networks
// Copyright (C) 2026 the twinbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cstdint>
#include <random>

#include "twinbeam/common.hpp"

namespace twinbeam {

/// Named substreams. Every random draw in a scenario comes from a stream
/// derived from (scenario seed, stream id, step/context indices), so any
/// state can be replayed mid-trajectory bit-exactly.
enum class Stream : std::uint64_t {
    kScatterers   = 1,
    kReflections  = 2,
    kMobility     = 3,
    kHotspot      = 4,
    kInitVelocity = 5,
    kLatent       = 6,
    kModelInit    = 7,
    kShuffle      = 8,
    kTest         = 99,
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Mixes an arbitrary tuple of indices into a 64-bit stream seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0, std::uint64_t d = 0);

/// Deterministic random stream. Distributions are implemented here rather
/// than taken from <random> so that output sequences are pinned by this
/// code, not by the standard library vendor.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    RngStream(std::uint64_t base, Stream stream, std::uint64_t a = 0,
              std::uint64_t b = 0, std::uint64_t c = 0)
        : engine_(derive_seed(base, static_cast<std::uint64_t>(stream), a, b, c)) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01();

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Box-Muller, cosine branch only; two uniforms per draw.
    double normal(double mean = 0.0, double stddev = 1.0);

    Vec3 normal3(double stddev);
    Vec3 uniform_in(const Aabb& box);

    /// Knuth multiplication method; fine for the small means used here.
    int poisson(double lambda);

    std::uint64_t next_u64() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

} // namespace twinbeam
