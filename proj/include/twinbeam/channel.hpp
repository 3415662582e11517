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

#include <armadillo>
#include <complex>
#include <utility>
#include <vector>

#include "twinbeam/scene.hpp"

namespace twinbeam {

/// Reference path-loss law C0 (d / d_ref)^(-alpha).
struct PathLossModel {
    double c0 = 1.0;     // gain at the reference distance
    double d_ref = 1.0;  // meters
    double alpha = 2.0;  // exponent
};

/// One single-bounce scattered path.
struct NlosPath {
    Vec3 scatterer;
    std::complex<double> reflection;  // |alpha| <= 1
    double r_bs = 0.0;                // transmitter to scatterer, meters
    double r_ue = 0.0;                // scatterer to UE, meters
};

/// Synthesized link state. `h` is the unit-large-scale shape: per-path gains
/// are normalized by the total large-scale loss so that
/// h_eff = sqrt(lambda_total * blockage) * h holds exactly as stored.
struct LinkChannel {
    int k = 0;
    Regime regime = Regime::FarField;
    double blockage = 1.0;        // 1 clear, eta obstructed
    arma::cx_vec h;               // normalized hybrid-field shape, length M_k
    double lambda_los = 0.0;      // free-space LoS gain
    double lambda_nlos = 0.0;     // sum of scattered-path gains
    double lambda_total = 0.0;    // lambda_los + lambda_nlos
    arma::cx_vec h_eff;           // sqrt(lambda_total * blockage) * h
};

// Operations ---------------------------------------------------------------

double path_loss(const PathLossModel& model, double d);

/// Free-space gain (lambda / (4 pi d))^2.
double los_gain(double wavelength, double d);

/// Raw line-of-sight component: common amplitude sqrt(los_gain(d_k)) and
/// per-element propagation phase. The phase distance is d_k for far field
/// and the exact element distance for near field.
arma::cx_vec los_channel(const Scene& scene, int k, const Vec3& u, Regime regime);

/// Scattered paths of link k from the frozen scatterer pool.
std::vector<NlosPath> nlos_paths(const Scene& scene, int k, const Vec3& u);

/// Product-distance attenuation lambda^2 |alpha|^2 / ((4 pi)^2 r_bs r_ue).
double nlos_path_loss(const NlosPath& path, double wavelength);

/// Assembles the full hybrid-field link: LoS plus scattered paths, the
/// large-scale decomposition and the effective channel.
LinkChannel hybrid_channel(const Scene& scene, int k, const Vec3& u, Regime regime,
                           double blockage, const std::vector<NlosPath>& paths);

/// Convenience synthesis straight from geometry: classifies the regime,
/// evaluates blockage against the obstacle set and assembles the channel.
LinkChannel make_link(const Scene& scene, int k, const Vec3& u);

/// Unit-norm plane-wave array response toward the direction of `point`,
/// i.e. the classical angular steering vector a[m] ~ exp(j 2pi <p_m - p_k, u_hat> / lambda).
arma::cx_vec plane_wave_steering(const Scene& scene, int k, const Vec3& point);

/// (max Doppler shift Hz, coherence time s). Coherence is +infinity at v = 0.
std::pair<double, double> doppler_and_coherence(double speed, double carrier_hz);

} // namespace twinbeam
