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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twinbeam/metrics.hpp"
#include "twinbeam/predictor.hpp"

namespace twinbeam {

enum class SchemeId {
    ReactiveZf,
    ReactiveHybrid,
    DtDeterministic,
    GenaiRegimeUnaware,
    GenaiRegimeAwareProposed,
    Oracle,
};

const std::vector<SchemeId>& all_schemes();
std::string scheme_name(SchemeId s);
SchemeId parse_scheme(const std::string& name);
bool scheme_needs_model(SchemeId s);
bool scheme_is_predictive(SchemeId s);

/// Experiment description; defaults mirror the published setup: 100 GHz
/// carrier (in the scene file), 16x16 arrays, 1 ms steps, 5-step horizon,
/// 10 sampled futures, -80 dBm noise, 0 dBm transmitters, 5 dB SINR floor,
/// eta 0.01, 3 users per hotspot, 100 simulated steps.
struct ExperimentConfig {
    std::string scene_path = "configs/indoor_default.json";
    int users = 8;                          // interferer count K
    std::vector<int> k_sweep = {2, 4, 6, 8, 10, 12};
    double dt = 1e-3;
    int horizon = 5;                        // T
    int samples = 10;                       // M
    int t_sim = 100;
    int t_hist = 4;
    double v_max = 1.0;
    double sigma2_dbm = -80.0;
    double tx_power_dbm = 0.0;
    double gamma_min_db = 5.0;
    double eta = 0.01;
    double lambda_c = 3.0;
    double mobility_noise = 0.01;           // meters per step
    std::vector<std::string> schemes;       // default: the five benchmarks
    std::vector<std::uint64_t> seeds;       // default 0..19
    std::string out_dir = "out";
    std::string model_path;                 // may contain {K}

    Vec3 ue_start{4.80, 4.70, 1.50};
    Vec3 ue_velocity{0.80, 0.60, 0.0};
    Aabb hotspot_region{{4.2, 4.1, 1.45}, {5.6, 5.5, 1.55}};
    int hotspot_step = 60;
    std::vector<Vec3> served_points;        // per interferer; optional

    GanHyperParams train;
    std::vector<std::uint64_t> train_seeds = {1000, 1001, 1002, 1003, 1004, 1005, 1006, 1007};
    std::uint64_t train_seed = 12345;

    double sigma2_watts() const { return dbm_to_watts(sigma2_dbm); }
    double gamma_min_linear() const { return db_to_linear(gamma_min_db); }
};

ExperimentConfig load_experiment(const std::string& path);
ExperimentConfig experiment_from_json_text(const std::string& text);
std::string experiment_to_json_text(const ExperimentConfig& cfg);

/// Fingerprint of everything except the sweep axes (users, schemes, seeds,
/// output locations); outputs across one sweep share it.
std::string config_hash(const ExperimentConfig& cfg);

/// Scene prepared for a run: loaded, truncated to K+1 transmitters, the
/// config's eta/power applied, scatterers frozen under the seed.
Scene prepare_scene(const ExperimentConfig& cfg, int users, std::uint64_t seed);

ScenarioConfig scenario_of(const ExperimentConfig& cfg);

/// One logged step of the closed loop.
struct TraceRow {
    int t = 0;                     // 0-based within the logged span
    double interference = 0.0;     // realized at the tagged UE
    double sinr0 = 0.0;            // realized tagged SINR
    double min_rate = 0.0;
    double xi0 = 1.0;              // serving-link blockage state
    int rho0 = 0;                  // serving-link regime
    int hotspot = 0;
    double scale2 = 1.0;           // interferer backoff deployed next step
    double sinr_hat_next = 0.0;    // predicted tagged SINR for t+1 under the new beams
    std::vector<double> sinr_users;
    std::vector<double> ihat;      // predicted interference, tau = 1..T
    std::vector<double> icf;       // counterfactual true interference, same beams
};

struct RunResult {
    std::string scheme;
    int users = 0;
    std::uint64_t seed = 0;
    std::string hash;
    int horizon = 0;
    std::vector<TraceRow> rows;
};

RunResult simulate_run(const ExperimentConfig& cfg, SchemeId scheme, int users,
                       std::uint64_t seed, const GenerativeModel* model);

std::string trace_to_csv(const RunResult& run);
RunResult trace_from_csv(const std::string& text);

std::string trace_filename(const std::string& scheme, int users, std::uint64_t seed);

/// Runs the (scheme x K x seed) grid on a small worker pool and writes one
/// trace file per cell into cfg.out_dir.
void run_sweep(const ExperimentConfig& cfg, const std::vector<SchemeId>& schemes,
               const std::vector<int>& k_list, const std::vector<std::uint64_t>& seeds,
               int jobs = 0);

/// Builds the training dataset over cfg.train_seeds at cfg.users.
DtDataset build_experiment_dataset(const ExperimentConfig& cfg);

struct TrainOutcome {
    GenerativeModel model;
    TrainLog log;
};

TrainOutcome train_experiment_model(const ExperimentConfig& cfg, const DtDataset& ds,
                                    const GenerativeModel* resume_from = nullptr);

MetricsReport metrics_of_run(const RunResult& run, const ExperimentConfig& cfg);

/// Reads every trace in `trace_dir`, refuses mixed config hashes, and emits
/// the per-run metrics files, the aggregate table and the figure-ready CSVs.
void evaluate_traces(const std::string& trace_dir, const std::string& out_dir,
                     const ExperimentConfig& cfg);

} // namespace twinbeam
