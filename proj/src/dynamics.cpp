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

#include "twinbeam/dynamics.hpp"

#include <cstring>
#include <filesystem>
#include <stdexcept>

#include <json.hpp>

namespace twinbeam {

using nlohmann::json;

MobilityState mobility_step(const MobilityState& state, const Aabb& room, double dt,
                            RngStream& rng) {
    if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
    MobilityState next = state;
    const Vec3 eps = state.noise_sigma > 0.0 ? rng.normal3(state.noise_sigma) : Vec3{};
    Vec3 u = state.position + state.velocity * dt + eps;
    Vec3 v = state.velocity;
    for (int axis = 0; axis < 3; ++axis) {
        double x = u[axis];
        const double lo = room.lo[axis];
        const double hi = room.hi[axis];
        bool flipped = false;
        while (x < lo || x > hi) {
            if (x < lo) x = lo + (lo - x);
            if (x > hi) x = hi - (x - hi);
            flipped = !flipped;
        }
        u.set(axis, x);
        if (flipped) v.set(axis, -v[axis]);
    }
    next.position = u;
    next.velocity = v;
    return next;
}

Hotspot hotspot_activate(const Hotspot& hotspot, RngStream& rng) {
    if (hotspot.intensity < 0.0) throw std::invalid_argument("intensity must be >= 0");
    Hotspot out = hotspot;
    out.users.clear();
    const int n = rng.poisson(hotspot.intensity);
    out.users.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.users.push_back(rng.uniform_in(hotspot.region));
    return out;
}

double blockage_process(const Scene& scene, int k, const Vec3& u) {
    return los_blocked(scene, scene.tx(k).center, u) ? scene.blockage_eta : 1.0;
}

EnvState init_env(const Scene& scene, const ScenarioConfig& cfg, std::uint64_t seed) {
    EnvState env;
    env.t = 0;
    env.ue.position = cfg.ue_start;
    env.ue.velocity = cfg.ue_velocity;
    const double speed = env.ue.velocity.norm();
    if (speed > cfg.v_max && speed > 0.0) env.ue.velocity = env.ue.velocity * (cfg.v_max / speed);
    env.ue.noise_sigma = cfg.noise_sigma;
    env.ue.v_max = cfg.v_max;

    const int links = scene.num_links();
    env.served.resize(static_cast<std::size_t>(links));
    env.served[0] = env.ue.position;
    for (int k = 1; k < links; ++k) {
        const std::size_t idx = static_cast<std::size_t>(k - 1);
        env.served[static_cast<std::size_t>(k)] =
            idx < cfg.served_points.size() ? cfg.served_points[idx]
                                           : scene.tx(k).center + Vec3{0.3, 0.3, -0.5};
    }
    env.hotspot.region = cfg.hotspot_region;
    env.hotspot.intensity = cfg.hotspot_intensity;
    env.hotspot_active = false;
    env.hotspot_owner.assign(static_cast<std::size_t>(links), 0);
    (void)seed;
    return env;
}

void advance_env(EnvState& env, const Scene& scene, const ScenarioConfig& cfg,
                 std::uint64_t seed) {
    const int t_next = env.t + 1;
    RngStream mob(seed, Stream::kMobility, static_cast<std::uint64_t>(t_next));
    env.ue = mobility_step(env.ue, scene.room, cfg.dt, mob);
    env.served[0] = env.ue.position;

    if (cfg.hotspot_step >= 0 && t_next == cfg.hotspot_step) {
        RngStream hot(seed, Stream::kHotspot, static_cast<std::uint64_t>(t_next));
        env.hotspot = hotspot_activate(env.hotspot, hot);
        env.hotspot_active = true;
        // Each hotspot user attaches to its nearest interferer; an interferer
        // with attached users serves the nearest of them.
        const int links = scene.num_links();
        std::vector<std::vector<Vec3>> assigned(static_cast<std::size_t>(links));
        for (const auto& u : env.hotspot.users) {
            int best = 1;
            double best_d = arma::datum::inf;
            for (int k = 1; k < links; ++k) {
                const double d = distance(u, scene.tx(k).center);
                if (d < best_d) {
                    best_d = d;
                    best = k;
                }
            }
            assigned[static_cast<std::size_t>(best)].push_back(u);
        }
        for (int k = 1; k < links; ++k) {
            const auto& list = assigned[static_cast<std::size_t>(k)];
            if (list.empty()) continue;
            double best_d = arma::datum::inf;
            Vec3 pick = list.front();
            for (const auto& u : list) {
                const double d = distance(u, scene.tx(k).center);
                if (d < best_d) {
                    best_d = d;
                    pick = u;
                }
            }
            env.served[static_cast<std::size_t>(k)] = pick;
            env.hotspot_owner[static_cast<std::size_t>(k)] = 1;
        }
    }
    env.t = t_next;
}

NetworkSnapshot make_snapshot(const Scene& scene, const EnvState& env) {
    NetworkSnapshot snap;
    snap.scene = &scene;
    snap.tagged_pos = env.ue.position;
    snap.served_pos = env.served;
    const int links = scene.num_links();
    snap.links.resize(static_cast<std::size_t>(links));
    for (int k = 0; k < links; ++k) {
        auto& row = snap.links[static_cast<std::size_t>(k)];
        row.reserve(static_cast<std::size_t>(links));
        for (int j = 0; j < links; ++j)
            row.push_back(make_link(scene, k, env.served[static_cast<std::size_t>(j)]));
    }
    return snap;
}

StepRecord record_step(const Scene& scene, const EnvState& env) {
    StepRecord rec;
    rec.u = env.ue.position;
    const int links = scene.num_links();
    rec.tagged.reserve(static_cast<std::size_t>(links));
    for (int k = 0; k < links; ++k) rec.tagged.push_back(make_link(scene, k, env.ue.position));
    rec.hot_flag = env.hotspot_owner;
    rec.hot_count = env.hotspot_active ? static_cast<int>(env.hotspot.users.size()) : 0;
    return rec;
}

arma::cx_vec reference_beam(int m_elems) {
    arma::cx_vec w(static_cast<arma::uword>(m_elems), arma::fill::ones);
    return w / std::sqrt(static_cast<double>(m_elems));
}

namespace {

void fill_feature_column(arma::mat& f, int col, const DatasetDims& dims,
                         const std::vector<StepRecord>& window) {
    // window holds t_hist+1 records, oldest first
    double* out = f.colptr(static_cast<arma::uword>(col));
    int pos = 0;
    for (const auto& rec : window) {
        for (const auto& link : rec.tagged) {
            for (arma::uword m = 0; m < link.h_eff.n_elem; ++m) {
                out[pos++] = link.h_eff[m].real();
                out[pos++] = link.h_eff[m].imag();
            }
        }
    }
    const StepRecord& now = window.back();
    out[pos++] = now.u.x;
    out[pos++] = now.u.y;
    out[pos++] = now.u.z;
    for (const auto& link : now.tagged) out[pos++] = regime_rho(link.regime);
    for (const auto& link : now.tagged) out[pos++] = link.blockage == 1.0 ? 1.0 : 0.0;
    for (int flag : now.hot_flag) out[pos++] = flag;
    out[pos++] = now.hot_count;
    if (pos != dims.feature_dim()) throw std::logic_error("feature layout mismatch");
}

void fill_target_column(arma::mat& tgt, int col, const DatasetDims& dims,
                        const std::vector<StepRecord>& future,
                        const std::vector<double>& powers) {
    double* out = tgt.colptr(static_cast<arma::uword>(col));
    const arma::cx_vec w_ref = reference_beam(dims.m_elems);
    for (int tau = 0; tau < dims.horizon; ++tau) {
        const StepRecord& rec = future[static_cast<std::size_t>(tau)];
        for (int k = 0; k < dims.links; ++k) {
            const auto& link = rec.tagged[static_cast<std::size_t>(k)];
            int pos = dims.shape_off(tau, k);
            for (arma::uword m = 0; m < link.h.n_elem; ++m) {
                out[pos++] = link.h[m].real();
                out[pos++] = link.h[m].imag();
            }
            out[dims.lambda_off(tau, k)] = link.lambda_total;
            out[dims.xi_off(tau, k)] = link.blockage == 1.0 ? 1.0 : 0.0;
        }
        double iref = 0.0;
        for (int k = 1; k < dims.links; ++k) {
            const auto& link = rec.tagged[static_cast<std::size_t>(k)];
            iref += powers[static_cast<std::size_t>(k)] * std::norm(arma::cdot(link.h_eff, w_ref));
        }
        out[dims.iref_off(tau)] = iref;
    }
}

} // namespace

void append_scenario(DtDataset& ds, const Scene& scene, const ScenarioConfig& cfg,
                     std::uint64_t seed) {
    const int links = scene.num_links();
    const int m_elems = scene.tx(0).array.elements();
    for (int k = 1; k < links; ++k) {
        if (scene.tx(k).array.elements() != m_elems)
            throw std::invalid_argument("dataset requires a uniform element count per transmitter");
    }
    if (ds.dims.links == 0) {
        ds.dims.links = links;
        ds.dims.m_elems = m_elems;
        ds.dims.t_hist = cfg.t_hist;
        ds.dims.horizon = cfg.horizon;
        ds.features.set_size(static_cast<arma::uword>(ds.dims.feature_dim()), 0);
        ds.targets.set_size(static_cast<arma::uword>(ds.dims.target_dim()), 0);
    } else if (ds.dims.links != links || ds.dims.m_elems != m_elems ||
               ds.dims.t_hist != cfg.t_hist || ds.dims.horizon != cfg.horizon) {
        throw std::invalid_argument("scenario dimensions differ from the dataset");
    }
    if (cfg.t_hist + cfg.horizon >= cfg.t_sim)
        throw std::invalid_argument("history plus horizon exceed the simulated span");

    std::vector<double> powers;
    for (int k = 0; k < links; ++k) powers.push_back(scene.tx(k).tx_power_w);

    // Roll the whole scenario once; windows index into the same realization,
    // which is exactly the genie continuation used for labels.
    std::vector<StepRecord> records;
    records.reserve(static_cast<std::size_t>(cfg.t_sim));
    EnvState env = init_env(scene, cfg, seed);
    records.push_back(record_step(scene, env));
    for (int t = 1; t < cfg.t_sim; ++t) {
        advance_env(env, scene, cfg, seed);
        records.push_back(record_step(scene, env));
    }

    const int first = cfg.t_hist;
    const int last = cfg.t_sim - 1 - cfg.horizon;  // inclusive
    const int count = last - first + 1;
    if (count <= 0) return;

    const int base = ds.n_samples();
    const int scen = static_cast<int>(ds.seeds.size());
    ds.seeds.push_back(seed);
    ds.features.resize(ds.features.n_rows, static_cast<arma::uword>(base + count));
    ds.targets.resize(ds.targets.n_rows, static_cast<arma::uword>(base + count));

    for (int t = first; t <= last; ++t) {
        std::vector<StepRecord> window(records.begin() + (t - cfg.t_hist),
                                       records.begin() + t + 1);
        std::vector<StepRecord> future(records.begin() + t + 1,
                                       records.begin() + t + 1 + cfg.horizon);
        const int col = base + (t - first);
        fill_feature_column(ds.features, col, ds.dims, window);
        fill_target_column(ds.targets, col, ds.dims, future, powers);
        ds.scenario_of.push_back(scen);
        ds.step_of.push_back(t);
    }
}

DtDataset build_dataset(const Scene& scene, const ScenarioConfig& cfg, std::uint64_t seed) {
    DtDataset ds;
    append_scenario(ds, scene, cfg, seed);
    return ds;
}

void save_dataset(const DtDataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    json manifest;
    manifest["version"] = 1;
    manifest["links"] = ds.dims.links;
    manifest["m_elems"] = ds.dims.m_elems;
    manifest["t_hist"] = ds.dims.t_hist;
    manifest["horizon"] = ds.dims.horizon;
    manifest["n_samples"] = ds.n_samples();
    manifest["seeds"] = ds.seeds;
    manifest["config_hash"] = ds.config_hash;
    manifest["scenario_of"] = ds.scenario_of;
    manifest["step_of"] = ds.step_of;
    atomic_write_file(dir + "/manifest.json", manifest.dump(2) + "\n");

    auto dump = [&](const arma::mat& m, const std::string& name) {
        std::string bytes(reinterpret_cast<const char*>(m.memptr()),
                          m.n_elem * sizeof(double));
        atomic_write_file(dir + "/" + name, bytes);
    };
    dump(ds.features, "features.bin");
    dump(ds.targets, "targets.bin");
}

DtDataset load_dataset(const std::string& dir) {
    const json manifest = json::parse(read_file(dir + "/manifest.json"));
    DtDataset ds;
    ds.dims.links = manifest.at("links").get<int>();
    ds.dims.m_elems = manifest.at("m_elems").get<int>();
    ds.dims.t_hist = manifest.at("t_hist").get<int>();
    ds.dims.horizon = manifest.at("horizon").get<int>();
    ds.seeds = manifest.at("seeds").get<std::vector<std::uint64_t>>();
    ds.config_hash = manifest.at("config_hash").get<std::string>();
    ds.scenario_of = manifest.at("scenario_of").get<std::vector<int>>();
    ds.step_of = manifest.at("step_of").get<std::vector<int>>();
    const int n = manifest.at("n_samples").get<int>();

    auto slurp = [&](arma::mat& m, int rows, const std::string& name) {
        const std::string bytes = read_file(dir + "/" + name);
        if (bytes.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(n) * sizeof(double))
            throw std::runtime_error("dataset blob size mismatch: " + name);
        m.set_size(static_cast<arma::uword>(rows), static_cast<arma::uword>(n));
        std::memcpy(m.memptr(), bytes.data(), bytes.size());
    };
    slurp(ds.features, ds.dims.feature_dim(), "features.bin");
    slurp(ds.targets, ds.dims.target_dim(), "targets.bin");
    return ds;
}

} // namespace twinbeam
