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

#include "twinbeam/rng.hpp"

#include <cmath>

namespace twinbeam {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c, std::uint64_t d) {
    std::uint64_t s = base;
    std::uint64_t h = splitmix64(s);
    s ^= a + 0x9e3779b97f4a7c15ull;
    h ^= splitmix64(s);
    s ^= b + 0xc2b2ae3d27d4eb4full;
    h ^= splitmix64(s);
    s ^= c + 0x165667b19e3779f9ull;
    h ^= splitmix64(s);
    s ^= d + 0x27d4eb2f165667c5ull;
    h ^= splitmix64(s);
    return h;
}

double RngStream::uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal(double mean, double stddev) {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * M_PI * u2);
}

Vec3 RngStream::normal3(double stddev) {
    return {normal(0.0, stddev), normal(0.0, stddev), normal(0.0, stddev)};
}

Vec3 RngStream::uniform_in(const Aabb& box) {
    return {uniform(box.lo.x, box.hi.x), uniform(box.lo.y, box.hi.y),
            uniform(box.lo.z, box.hi.z)};
}

int RngStream::poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    const double limit = std::exp(-lambda);
    int k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= uniform01();
    } while (p > limit);
    return k - 1;
}

} // namespace twinbeam
