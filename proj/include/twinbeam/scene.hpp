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

#include <complex>
#include <string>
#include <vector>

#include "twinbeam/common.hpp"

namespace twinbeam {

/// Propagation regime of a link. Near field means per-element spherical
/// distances; far field collapses to the array-center distance.
enum class Regime : int { FarField = 0, NearField = 1 };

inline int regime_rho(Regime r) { return r == Regime::NearField ? 1 : 0; }

/// Uniform planar array on a regular nx-by-ny grid.
struct UpaGeometry {
    int nx = 1;
    int ny = 1;
    double spacing = 0.0;                           // meters
    std::array<double, 9> orientation = {1, 0, 0,   // row-major rotation
                                         0, 1, 0,   // maps local (x,y,0)
                                         0, 0, 1};  // offsets to world frame

    int elements() const { return nx * ny; }

    /// Array diagonal; the aperture used for the field-boundary distance.
    double aperture() const {
        return spacing * std::sqrt(double(nx - 1) * (nx - 1) + double(ny - 1) * (ny - 1));
    }

    /// World positions of all elements for an array centered at `center`.
    /// Order: iy-major, ix-minor.
    std::vector<Vec3> element_positions(const Vec3& center) const;
};

struct Transmitter {
    int index = 0;               // 0 is the serving access point
    Vec3 center;                 // array phase center, meters
    UpaGeometry array;
    double tx_power_w = 0.001;   // watts
    std::vector<Vec3> elements;  // cached world element positions
};

/// Immutable geometric twin of the deployment: room, transmitters with
/// their arrays, blocking boxes and the frozen per-link scatterer pool.
/// Safe for concurrent reads; nothing mutates after validate().
struct Scene {
    Aabb room;
    std::vector<Transmitter> transmitters;
    std::vector<Aabb> obstacles;
    std::vector<Vec3> scatterers;                         // flat pool, per-link chunks
    std::vector<std::complex<double>> reflections;        // parallel to scatterers
    double carrier_hz = 100e9;
    double wavelength = kSpeedOfLight / 100e9;
    double blockage_eta = 0.01;   // attenuation while obstructed
    int paths_per_link = 3;       // L: 1 LoS + (L-1) scattered

    int num_links() const { return static_cast<int>(transmitters.size()); }

    const Transmitter& tx(int k) const;

    double rayleigh(int k) const;

    /// Indices into the scatterer pool belonging to link k.
    std::pair<int, int> scatterer_range(int k) const;

    /// Checks every structural invariant; throws std::invalid_argument.
    void validate() const;
};

// Operations ---------------------------------------------------------------

double distance_to_ue(const Scene& scene, int k, const Vec3& u);

/// Field-boundary distance 2 D^2 / lambda.
double rayleigh_distance(double aperture, double wavelength);

/// Near field iff distance <= rayleigh (boundary included).
Regime classify_regime(double dist, double rayleigh);

/// True iff the open segment (a,b) passes through any obstacle box.
bool los_blocked(const Scene& scene, const Vec3& a, const Vec3& b);

std::vector<double> element_distances(const Scene& scene, int k, const Vec3& u);

// Construction -------------------------------------------------------------

Transmitter make_transmitter(int index, const Vec3& center, const UpaGeometry& geom,
                             double tx_power_w);

/// Draws (L-1) scatterers per link uniformly in the room (rejecting points
/// inside obstacles) and a complex reflection coefficient per scatterer,
/// |alpha| uniform in [0.3, 0.9], phase uniform in [0, 2pi). Frozen under
/// the scenario seed; no-op when the pool was given explicitly.
void populate_scatterers(Scene& scene, std::uint64_t seed);

/// Loads the documented JSON scene description.
Scene load_scene(const std::string& path);
Scene scene_from_json_text(const std::string& text);

} // namespace twinbeam
