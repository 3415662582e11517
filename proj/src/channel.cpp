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

#include "twinbeam/channel.hpp"

#include <limits>
#include <stdexcept>

namespace twinbeam {

double path_loss(const PathLossModel& model, double d) {
    if (d <= 0.0) throw std::invalid_argument("distance must be positive");
    return model.c0 * std::pow(d / model.d_ref, -model.alpha);
}

double los_gain(double wavelength, double d) {
    if (d <= 0.0) throw std::invalid_argument("distance must be positive");
    const double a = wavelength / (4.0 * M_PI * d);
    return a * a;
}

arma::cx_vec los_channel(const Scene& scene, int k, const Vec3& u, Regime regime) {
    const auto& t = scene.tx(k);
    const double d = distance_to_ue(scene, k, u);
    if (d <= 0.0) throw std::invalid_argument("UE coincides with the array center");
    const double amp = std::sqrt(los_gain(scene.wavelength, d));
    const double wave = 2.0 * M_PI / scene.wavelength;
    const std::size_t m = t.elements.size();
    arma::cx_vec h(m);
    for (std::size_t i = 0; i < m; ++i) {
        double dist = d;
        if (regime == Regime::NearField) {
            dist = distance(u, t.elements[i]);
            if (dist <= 0.0)
                throw std::invalid_argument("UE coincides with an array element");
        }
        h[i] = std::polar(amp, -wave * dist);
    }
    return h;
}

std::vector<NlosPath> nlos_paths(const Scene& scene, int k, const Vec3& u) {
    const auto [lo, hi] = scene.scatterer_range(k);
    std::vector<NlosPath> paths;
    if (hi == lo) return paths;
    if (static_cast<std::size_t>(hi) > scene.scatterers.size())
        throw std::logic_error("scatterer pool smaller than paths_per_link requires");
    const Vec3 center = scene.tx(k).center;
    paths.reserve(static_cast<std::size_t>(hi - lo));
    for (int i = lo; i < hi; ++i) {
        NlosPath p;
        p.scatterer = scene.scatterers[static_cast<std::size_t>(i)];
        p.reflection = scene.reflections[static_cast<std::size_t>(i)];
        p.r_bs = distance(center, p.scatterer);
        p.r_ue = distance(p.scatterer, u);
        paths.push_back(p);
    }
    return paths;
}

double nlos_path_loss(const NlosPath& path, double wavelength) {
    if (path.r_bs <= 0.0 || path.r_ue <= 0.0)
        throw std::invalid_argument("scattered-path distances must be positive");
    const double a2 = std::norm(path.reflection);
    const double f = 4.0 * M_PI;
    return wavelength * wavelength * a2 / (f * f * path.r_bs * path.r_ue);
}

LinkChannel hybrid_channel(const Scene& scene, int k, const Vec3& u, Regime regime,
                           double blockage, const std::vector<NlosPath>& paths) {
    const auto& t = scene.tx(k);
    const double wave = 2.0 * M_PI / scene.wavelength;
    const std::size_t m = t.elements.size();

    LinkChannel link;
    link.k = k;
    link.regime = regime;
    link.blockage = blockage;

    arma::cx_vec raw = los_channel(scene, k, u, regime);
    link.lambda_los = los_gain(scene.wavelength, distance_to_ue(scene, k, u));

    link.lambda_nlos = 0.0;
    for (const auto& p : paths) {
        const double gain = nlos_path_loss(p, scene.wavelength);
        link.lambda_nlos += gain;
        const double amp = std::sqrt(gain);
        const double refl_phase = std::arg(p.reflection);
        if (regime == Regime::FarField) {
            // The array collapses to a point: one phase for all elements.
            const std::complex<double> c = std::polar(amp, refl_phase - wave * (p.r_bs + p.r_ue));
            raw += c * arma::cx_vec(m, arma::fill::ones);
        } else {
            for (std::size_t i = 0; i < m; ++i) {
                const double dist = distance(t.elements[i], p.scatterer) + p.r_ue;
                raw[i] += std::polar(amp, refl_phase - wave * dist);
            }
        }
    }

    link.lambda_total = link.lambda_los + link.lambda_nlos;
    link.h = raw / std::sqrt(link.lambda_total);
    link.h_eff = std::sqrt(link.lambda_total * blockage) * link.h;
    return link;
}

LinkChannel make_link(const Scene& scene, int k, const Vec3& u) {
    const double d = distance_to_ue(scene, k, u);
    const Regime regime = classify_regime(d, scene.rayleigh(k));
    const double xi = los_blocked(scene, scene.tx(k).center, u) ? scene.blockage_eta : 1.0;
    return hybrid_channel(scene, k, u, regime, xi, nlos_paths(scene, k, u));
}

arma::cx_vec plane_wave_steering(const Scene& scene, int k, const Vec3& point) {
    const auto& t = scene.tx(k);
    const double d = distance(point, t.center);
    if (d <= 0.0) throw std::invalid_argument("steering target coincides with the array");
    const Vec3 dir = (point - t.center) * (1.0 / d);
    const double wave = 2.0 * M_PI / scene.wavelength;
    const std::size_t m = t.elements.size();
    arma::cx_vec a(m);
    for (std::size_t i = 0; i < m; ++i) {
        const Vec3 off = t.elements[i] - t.center;
        a[i] = std::polar(1.0, wave * dir.dot(off));
    }
    return a / std::sqrt(static_cast<double>(m));
}

std::pair<double, double> doppler_and_coherence(double speed, double carrier_hz) {
    if (speed < 0.0 || carrier_hz <= 0.0)
        throw std::invalid_argument("speed must be >= 0 and carrier positive");
    const double fd = speed * carrier_hz / kSpeedOfLight;
    if (fd == 0.0) return {0.0, std::numeric_limits<double>::infinity()};
    return {fd, 0.423 / fd};
}

} // namespace twinbeam
