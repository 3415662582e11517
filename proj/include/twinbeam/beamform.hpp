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

#include <vector>

#include "twinbeam/bundle.hpp"
#include "twinbeam/channel.hpp"

namespace twinbeam {

/// Per-transmitter precoding weights and nominal powers. Weight norms stay
/// in (0, 1]; norms below one reflect deliberate power backoff.
struct BeamformerSet {
    std::vector<arma::cx_vec> weights;
    std::vector<double> powers;  // watts

    double budget_used() const;
};

struct OptimizerConfig {
    double gamma_min = 3.1622776601683795;  // 5 dB, linear
    int max_iters = 50;
    double tol = 1e-6;
    double zf_delta = -1.0;       // < 0: 1e-6 tr(H H^H) / K
    bool regime_aware = true;     // false: far-field treatment of all nulls
    double p_total = -1.0;        // < 0: sum of nominal powers
    double min_scale2 = 0.01;     // floor for the interferer backoff s^2
    double sigma2 = 1e-11;        // noise power, watts
};

struct OptimizerResult {
    BeamformerSet beams;
    std::vector<double> objective;  // entry 0: initial beams, then per iteration
    std::vector<double> budget;     // budget used at the same points
    int iterations = 0;
    bool feasible = true;           // every (m, tau) meets gamma_min after backoff
    arma::umat satisfied;           // samples x horizon, 1 where the constraint holds
    double scale2 = 1.0;            // interferer power backoff applied on exit
    double setup_seconds = 0.0;     // null-space factorization (precomputed once)
    double per_iter_seconds = 0.0;
};

/// Zero-forcing precoder W = H^H (H H^H + delta I)^-1, columns normalized.
/// H is K x M (one row per user). With delta = 0 the rows must be
/// independent; rank deficiency throws and callers regularize instead.
arma::cx_mat zf_precode(const arma::cx_mat& H, double delta = 0.0);

/// Conjugate beam focusing: w = h / ||h||.
arma::cx_vec nf_focus(const arma::cx_vec& h);

struct InterferenceTerm {
    arma::cx_vec h_eff;
    arma::cx_vec w;
    double power = 0.0;
};

double sinr(const arma::cx_vec& h0_eff, const arma::cx_vec& w0, double p0,
            const std::vector<InterferenceTerm>& interferers, double sigma2);

/// Predicted aggregate interference per horizon step for one sampled future:
/// sum over interferers of P_k |h_eff_k(tau)^H w_k|^2.
arma::vec aggregate_interference(const TrajectorySample& sample,
                                 const std::vector<arma::cx_vec>& weights,
                                 const std::vector<double>& powers);

/// Fill in each sample's predicted interference and SINR under `beams`.
void finalize_bundle(TrajectoryBundle& bundle, const BeamformerSet& beams, double sigma2);

/// Interference-aware beam selection over the sampled futures. Interferer
/// beams serve their own directions inside the null space of the tagged
/// UE's predicted channels; the serving beam maximizes the worst-sample
/// predicted SINR; a final proportional backoff of the interferer weights
/// restores the SINR floor when predictions say it is violated.
OptimizerResult proactive_optimize(const TrajectoryBundle& bundle,
                                   const std::vector<arma::cx_vec>& own_dir,
                                   const std::vector<Regime>& regimes,
                                   const std::vector<double>& powers,
                                   const OptimizerConfig& cfg);

/// Everything the reactive baselines need about the current instant:
/// channels between every transmitter and every served point.
struct NetworkSnapshot {
    const Scene* scene = nullptr;
    Vec3 tagged_pos;
    std::vector<Vec3> served_pos;                 // per tx; [0] is the tagged UE
    std::vector<std::vector<LinkChannel>> links;  // links[tx][user]

    const LinkChannel& to_tagged(int k) const { return links[static_cast<std::size_t>(k)][0]; }
    const LinkChannel& own(int k) const {
        return links[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)];
    }
};

/// Benchmark 1: angular zero-forcing from plane-wave steering toward the
/// current user positions; regime-blind.
BeamformerSet reactive_zf_set(const NetworkSnapshot& snap);

/// Benchmark 2: per-link dispatch on the tagged-link regime; far-field
/// links use zero-forcing over the instantaneous channels, near-field
/// links use conjugate focusing on their served user.
BeamformerSet reactive_hybrid_set(const NetworkSnapshot& snap);

struct RealizedStep {
    double interference = 0.0;          // at the tagged UE
    double sinr_tagged = 0.0;
    std::vector<double> sinr_users;     // [0] tagged, then per interferer user
    double min_rate = 0.0;              // min over users of log2(1 + sinr)
};

RealizedStep realize_step(const NetworkSnapshot& snap, const BeamformerSet& beams,
                          double sigma2);

} // namespace twinbeam
