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

#include <string>
#include <vector>

#include "twinbeam/beamform.hpp"
#include "twinbeam/channel.hpp"
#include "twinbeam/rng.hpp"

namespace twinbeam {

struct MobilityState {
    Vec3 position;
    Vec3 velocity;            // m/s
    double noise_sigma = 0.01;  // std of the per-step perturbation, meters
    double v_max = 1.0;         // m/s
};

/// One step of u(t+1) = u(t) + v dt + eps with specular reflection at the
/// room walls; the heading flips on contact, the speed is preserved.
MobilityState mobility_step(const MobilityState& state, const Aabb& room, double dt,
                            RngStream& rng);

struct Hotspot {
    Aabb region;
    double intensity = 3.0;  // expected users
    std::vector<Vec3> users;
};

/// Resamples the user count (Poisson) and i.i.d. uniform positions.
Hotspot hotspot_activate(const Hotspot& hotspot, RngStream& rng);

/// Geometry-implied blockage state of link k: eta when the line of sight
/// to u crosses an obstacle, 1 otherwise.
double blockage_process(const Scene& scene, int k, const Vec3& u);

/// Scenario dynamics shared by the live loop, the genie and the dataset
/// builder. All randomness is drawn from substreams keyed by the absolute
/// step index, so advancing a copied state replays the future bit-exactly.
struct ScenarioConfig {
    double dt = 1e-3;
    double noise_sigma = 0.01;
    double v_max = 1.0;
    Vec3 ue_start;
    Vec3 ue_velocity;
    std::vector<Vec3> served_points;  // default served user per interferer (index k-1)
    Aabb hotspot_region;
    double hotspot_intensity = 3.0;
    int hotspot_step = -1;  // activation step; negative disables
    int t_hist = 4;
    int horizon = 5;
    int t_sim = 100;
};

struct EnvState {
    int t = 0;
    MobilityState ue;
    std::vector<Vec3> served;  // per transmitter; [0] tracks the UE
    Hotspot hotspot;
    bool hotspot_active = false;
    std::vector<int> hotspot_owner;  // per interferer: 1 if serving a hotspot user
};

EnvState init_env(const Scene& scene, const ScenarioConfig& cfg, std::uint64_t seed);

/// Advances to step t+1. Pure in (state, scene, cfg, seed).
void advance_env(EnvState& env, const Scene& scene, const ScenarioConfig& cfg,
                 std::uint64_t seed);

/// Channels between every transmitter and every served point at this instant.
NetworkSnapshot make_snapshot(const Scene& scene, const EnvState& env);

/// Per-step record of the tagged-UE links only (the dataset view).
struct StepRecord {
    Vec3 u;
    std::vector<LinkChannel> tagged;  // per transmitter, to the UE
    std::vector<int> hot_flag;        // per transmitter (0 for the serving AP)
    int hot_count = 0;
};

StepRecord record_step(const Scene& scene, const EnvState& env);

// Dataset ------------------------------------------------------------------

/// Fixed layout of feature and target vectors. Feature order:
/// [history (t_hist+1 steps x links x 2M re/im), u(3), rho(links),
///  xi01(links), hotspot flags(links), hotspot count(1)].
/// Target order: [shapes (horizon x links x 2M), lambda (horizon x links),
///  xi01 (horizon x links), reference interference (horizon)].
struct DatasetDims {
    int links = 0;
    int m_elems = 0;
    int t_hist = 4;
    int horizon = 5;

    int hist_dim() const { return (t_hist + 1) * links * 2 * m_elems; }
    int cond_dim() const { return hist_dim() + 3 + 2 * links; }  // conditioning prefix
    int feature_dim() const { return cond_dim() + links + 1; }
    int shape_dim() const { return horizon * links * 2 * m_elems; }
    int target_dim() const { return shape_dim() + 2 * horizon * links + horizon; }

    int shape_off(int tau, int k) const { return (tau * links + k) * 2 * m_elems; }
    int lambda_off(int tau, int k) const { return shape_dim() + tau * links + k; }
    int xi_off(int tau, int k) const { return shape_dim() + horizon * links + tau * links + k; }
    int iref_off(int tau) const { return shape_dim() + 2 * horizon * links + tau; }
};

struct DtDataset {
    DatasetDims dims;
    std::vector<std::uint64_t> seeds;
    std::string config_hash;
    arma::mat features;          // feature_dim x n_samples
    arma::mat targets;           // target_dim x n_samples
    std::vector<int> scenario_of;
    std::vector<int> step_of;

    int n_samples() const { return static_cast<int>(features.n_cols); }
};

/// Reference beams the dataset interference targets are computed under:
/// per-transmitter uniform (broadside) weights.
arma::cx_vec reference_beam(int m_elems);

/// Runs one scenario and appends every complete (history, horizon) window.
void append_scenario(DtDataset& ds, const Scene& scene, const ScenarioConfig& cfg,
                     std::uint64_t seed);

DtDataset build_dataset(const Scene& scene, const ScenarioConfig& cfg, std::uint64_t seed);

void save_dataset(const DtDataset& ds, const std::string& dir);
DtDataset load_dataset(const std::string& dir);

} // namespace twinbeam
