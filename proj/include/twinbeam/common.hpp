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

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace twinbeam {

inline constexpr double kSpeedOfLight = 299792458.0; // m/s

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

/// Cartesian point/vector in meters.
struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    void set(int i, double v) { (i == 0 ? x : (i == 1 ? y : z)) = v; }

    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

/// Axis-aligned box, closed on all faces.
struct Aabb {
    Vec3 lo, hi;

    bool valid() const { return lo.x <= hi.x && lo.y <= hi.y && lo.z <= hi.z; }

    bool contains(const Vec3& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y &&
               p.z >= lo.z && p.z <= hi.z;
    }

    bool contains_strict(const Vec3& p) const {
        return p.x > lo.x && p.x < hi.x && p.y > lo.y && p.y < hi.y &&
               p.z > lo.z && p.z < hi.z;
    }

    Vec3 extent() const { return hi - lo; }
    Vec3 center() const { return (lo + hi) * 0.5; }

    /// Slab test for the open segment (a,b) against the closed box.
    /// Endpoints that only touch a face do not count as an intersection.
    bool intersects_open_segment(const Vec3& a, const Vec3& b) const;
};

/// Summation with pairwise recursion; keeps floating-point drift independent
/// of reduction order so parallel and serial evaluations agree.
double pairwise_sum(std::span<const double> values);

inline double mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return pairwise_sum(values) / static_cast<double>(values.size());
}

/// FNV-1a over raw bytes; used for config fingerprints in output headers.
std::uint64_t fnv1a64(std::string_view bytes);
std::string to_hex(std::uint64_t v);

/// Shortest round-trip text for a double (%.17g).
std::string fmt_g17(double v);

/// Write a whole file atomically (temp file + rename).
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

} // namespace twinbeam
