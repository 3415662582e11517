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

#include "twinbeam/scene.hpp"

#include <set>
#include <stdexcept>

#include <json.hpp>

#include "twinbeam/rng.hpp"

namespace twinbeam {

using nlohmann::json;

std::vector<Vec3> UpaGeometry::element_positions(const Vec3& center) const {
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(nx) * ny);
    const double cx = 0.5 * (nx - 1);
    const double cy = 0.5 * (ny - 1);
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            const double lx = (ix - cx) * spacing;
            const double ly = (iy - cy) * spacing;
            const auto& r = orientation;
            out.push_back({center.x + r[0] * lx + r[1] * ly,
                           center.y + r[3] * lx + r[4] * ly,
                           center.z + r[6] * lx + r[7] * ly});
        }
    }
    return out;
}

const Transmitter& Scene::tx(int k) const {
    if (k < 0 || k >= num_links())
        throw std::out_of_range("unknown transmitter index " + std::to_string(k));
    return transmitters[static_cast<std::size_t>(k)];
}

double Scene::rayleigh(int k) const {
    const double d = tx(k).array.aperture();
    if (d == 0.0) return 0.0;  // single element: no near field
    return rayleigh_distance(d, wavelength);
}

std::pair<int, int> Scene::scatterer_range(int k) const {
    tx(k);
    const int per_link = paths_per_link - 1;
    return {k * per_link, (k + 1) * per_link};
}

void Scene::validate() const {
    if (!room.valid()) throw std::invalid_argument("room bounds inverted");
    if (carrier_hz <= 0.0) throw std::invalid_argument("carrier frequency must be positive");
    const double expected = kSpeedOfLight / carrier_hz;
    if (std::abs(wavelength - expected) > 1e-12 * expected)
        throw std::invalid_argument("wavelength inconsistent with carrier frequency");
    if (blockage_eta <= 0.0 || blockage_eta > 1.0)
        throw std::invalid_argument("blockage eta must be in (0, 1]");
    if (paths_per_link < 1) throw std::invalid_argument("paths_per_link must be >= 1");

    std::set<int> indices;
    for (const auto& t : transmitters) {
        if (!indices.insert(t.index).second)
            throw std::invalid_argument("duplicate transmitter index");
        if (t.tx_power_w <= 0.0) throw std::invalid_argument("tx power must be positive");
        if (!room.contains(t.center))
            throw std::invalid_argument("transmitter outside room bounds");
        if (t.elements.empty()) throw std::invalid_argument("transmitter without elements");
        for (const auto& box : obstacles) {
            for (const auto& e : t.elements) {
                if (box.contains_strict(e))
                    throw std::invalid_argument("obstacle contains an array element");
            }
        }
    }
    for (const auto& p : scatterers) {
        if (!room.contains(p)) throw std::invalid_argument("scatterer outside room bounds");
    }
    if (!scatterers.empty() && reflections.size() != scatterers.size())
        throw std::invalid_argument("reflections must parallel the scatterer pool");
    for (const auto& a : reflections) {
        if (std::abs(a) > 1.0 + 1e-12)
            throw std::invalid_argument("reflection magnitude exceeds 1");
    }
}

double distance_to_ue(const Scene& scene, int k, const Vec3& u) {
    if (!u.finite()) throw std::invalid_argument("UE position must be finite");
    return distance(u, scene.tx(k).center);
}

double rayleigh_distance(double aperture, double wavelength) {
    if (aperture <= 0.0 || wavelength <= 0.0)
        throw std::invalid_argument("aperture and wavelength must be positive");
    return 2.0 * aperture * aperture / wavelength;
}

Regime classify_regime(double dist, double rayleigh) {
    return dist <= rayleigh ? Regime::NearField : Regime::FarField;
}

bool los_blocked(const Scene& scene, const Vec3& a, const Vec3& b) {
    for (const auto& box : scene.obstacles) {
        if (box.intersects_open_segment(a, b)) return true;
    }
    return false;
}

std::vector<double> element_distances(const Scene& scene, int k, const Vec3& u) {
    const auto& t = scene.tx(k);
    std::vector<double> out;
    out.reserve(t.elements.size());
    for (const auto& e : t.elements) out.push_back(distance(u, e));
    return out;
}

Transmitter make_transmitter(int index, const Vec3& center, const UpaGeometry& geom,
                             double tx_power_w) {
    Transmitter t;
    t.index = index;
    t.center = center;
    t.array = geom;
    t.tx_power_w = tx_power_w;
    t.elements = geom.element_positions(center);
    return t;
}

void populate_scatterers(Scene& scene, std::uint64_t seed) {
    if (!scene.scatterers.empty()) return;
    const int per_link = scene.paths_per_link - 1;
    if (per_link <= 0) return;
    RngStream pos_rng(seed, Stream::kScatterers);
    RngStream refl_rng(seed, Stream::kReflections);
    const int total = scene.num_links() * per_link;
    scene.scatterers.reserve(total);
    scene.reflections.reserve(total);
    for (int i = 0; i < total; ++i) {
        Vec3 p;
        for (int attempt = 0;; ++attempt) {
            p = pos_rng.uniform_in(scene.room);
            bool inside_obstacle = false;
            for (const auto& box : scene.obstacles)
                inside_obstacle = inside_obstacle || box.contains_strict(p);
            if (!inside_obstacle) break;
            if (attempt > 10000)
                throw std::runtime_error("cannot place scatterers outside obstacles");
        }
        scene.scatterers.push_back(p);
        const double mag = refl_rng.uniform(0.3, 0.9);
        const double phase = refl_rng.uniform(0.0, 2.0 * M_PI);
        scene.reflections.push_back(std::polar(mag, phase));
    }
}

namespace {

Vec3 vec3_of(const json& j) {
    if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected [x,y,z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Aabb aabb_of(const json& j) {
    Aabb box{vec3_of(j.at("min")), vec3_of(j.at("max"))};
    if (!box.valid()) throw std::invalid_argument("box min exceeds max");
    return box;
}

} // namespace

Scene scene_from_json_text(const std::string& text) {
    const json j = json::parse(text);
    Scene s;
    s.room = aabb_of(j.at("room"));
    s.carrier_hz = j.at("carrier_frequency_hz").get<double>();
    s.wavelength = kSpeedOfLight / s.carrier_hz;
    s.blockage_eta = j.value("blockage_eta", 0.01);
    s.paths_per_link = j.value("paths_per_link", 3);

    int index = 0;
    for (const auto& tj : j.at("transmitters")) {
        UpaGeometry g;
        g.nx = tj.value("nx", 16);
        g.ny = tj.value("ny", 16);
        if (tj.contains("spacing_m"))
            g.spacing = tj.at("spacing_m").get<double>();
        else
            g.spacing = tj.value("spacing_wavelengths", 0.5) * s.wavelength;
        if (tj.contains("rotation")) {
            const auto& r = tj.at("rotation");
            if (!r.is_array() || r.size() != 9)
                throw std::invalid_argument("rotation must be 9 numbers, row-major");
            for (int i = 0; i < 9; ++i) g.orientation[static_cast<std::size_t>(i)] = r[i].get<double>();
        }
        double power_w = 0.001;
        if (tj.contains("tx_power_w")) power_w = tj.at("tx_power_w").get<double>();
        else if (tj.contains("tx_power_dbm")) power_w = dbm_to_watts(tj.at("tx_power_dbm").get<double>());
        s.transmitters.push_back(make_transmitter(index++, vec3_of(tj.at("center")), g, power_w));
    }

    if (j.contains("obstacles"))
        for (const auto& oj : j.at("obstacles")) s.obstacles.push_back(aabb_of(oj));

    if (j.contains("scatterers")) {
        for (const auto& sj : j.at("scatterers")) s.scatterers.push_back(vec3_of(sj));
        if (j.contains("scatterer_reflections")) {
            for (const auto& rj : j.at("scatterer_reflections"))
                s.reflections.emplace_back(rj[0].get<double>(), rj[1].get<double>());
        } else {
            s.reflections.assign(s.scatterers.size(), std::complex<double>(0.6, 0.0));
        }
    }
    return s;
}

Scene load_scene(const std::string& path) {
    return scene_from_json_text(read_file(path));
}

} // namespace twinbeam
