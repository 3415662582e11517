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

#include "twinbeam/beamform.hpp"

#include <chrono>
#include <stdexcept>

namespace twinbeam {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double auto_delta(const arma::cx_mat& G) {
    return 1e-6 * std::abs(arma::trace(G)) / static_cast<double>(G.n_rows);
}

/// Mean over samples of the cumulative predicted interference.
double objective_value(const TrajectoryBundle& bundle,
                       const std::vector<arma::cx_vec>& weights,
                       const std::vector<double>& powers) {
    double acc = 0.0;
    for (const auto& s : bundle.samples)
        acc += arma::accu(aggregate_interference(s, weights, powers));
    return acc / static_cast<double>(bundle.num_samples());
}

/// Serving beam: dominant direction of the sample-averaged outer product,
/// then a few subgradient steps toward the worst sample. Keeps whichever
/// iterate had the best worst-sample gain.
arma::cx_vec serving_beam(const TrajectoryBundle& bundle) {
    const int t_len = bundle.horizon;
    const arma::uword m_elems = bundle.samples[0].h_eff[0].n_rows;

    arma::cx_vec v(m_elems, arma::fill::zeros);
    for (const auto& s : bundle.samples) v += arma::sum(s.h_eff[0], 1);
    if (arma::norm(v) < 1e-300) v.ones();
    v /= arma::norm(v);
    for (int it = 0; it < 12; ++it) {
        arma::cx_vec nv(m_elems, arma::fill::zeros);
        for (const auto& s : bundle.samples)
            for (int t = 0; t < t_len; ++t) {
                const arma::cx_vec h = s.h_eff[0].col(static_cast<arma::uword>(t));
                nv += h * arma::cdot(h, v);
            }
        const double n = arma::norm(nv);
        if (n < 1e-300) break;
        v = nv / n;
    }

    auto worst_gain = [&](const arma::cx_vec& w, int* mi = nullptr, int* ti = nullptr) {
        double best = arma::datum::inf;
        for (int m = 0; m < bundle.num_samples(); ++m)
            for (int t = 0; t < t_len; ++t) {
                const arma::cx_vec h =
                    bundle.samples[static_cast<std::size_t>(m)].h_eff[0].col(static_cast<arma::uword>(t));
                const double g = std::norm(arma::cdot(h, w));
                if (g < best) {
                    best = g;
                    if (mi) *mi = m;
                    if (ti) *ti = t;
                }
            }
        return best;
    };

    arma::cx_vec best_w = v;
    double best_val = worst_gain(v);
    arma::cx_vec w = v;
    for (int step = 0; step < 8; ++step) {
        int mi = 0, ti = 0;
        worst_gain(w, &mi, &ti);
        const arma::cx_vec h =
            bundle.samples[static_cast<std::size_t>(mi)].h_eff[0].col(static_cast<arma::uword>(ti));
        const std::complex<double> ip = arma::cdot(h, w);
        arma::cx_vec dir = h;
        if (std::abs(ip) > 1e-300) dir *= ip / std::abs(ip) / arma::norm(h);
        else dir /= arma::norm(h);
        w = w + 0.3 * dir;
        w /= arma::norm(w);
        const double val = worst_gain(w);
        if (val > best_val) {
            best_val = val;
            best_w = w;
        }
    }
    return best_w;
}

} // namespace

double BeamformerSet::budget_used() const {
    double acc = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        const double n = arma::norm(weights[k]);
        acc += powers[k] * n * n;
    }
    return acc;
}

arma::cx_mat zf_precode(const arma::cx_mat& H, double delta) {
    if (H.n_rows > H.n_cols)
        throw std::invalid_argument("zf_precode needs at most as many users as elements");
    if (delta < 0.0) throw std::invalid_argument("delta must be >= 0");
    arma::cx_mat G = H * H.t();
    if (delta == 0.0) {
        if (arma::rcond(G) < 1e-12)
            throw std::runtime_error("rank-deficient channel matrix; regularize with delta > 0");
    } else {
        G.diag() += delta;
    }
    arma::cx_mat Y;
    if (!arma::solve(Y, G, H))
        throw std::runtime_error("zero-forcing solve failed");
    arma::cx_mat W = Y.t();  // columns w_k
    for (arma::uword k = 0; k < W.n_cols; ++k) {
        const double n = arma::norm(W.col(k));
        if (n < 1e-300) throw std::runtime_error("zero-forcing produced a null beam");
        W.col(k) /= n;
    }
    return W;
}

arma::cx_vec nf_focus(const arma::cx_vec& h) {
    const double n = arma::norm(h);
    if (n <= 0.0) throw std::invalid_argument("cannot focus on a zero channel");
    return h / n;
}

double sinr(const arma::cx_vec& h0_eff, const arma::cx_vec& w0, double p0,
            const std::vector<InterferenceTerm>& interferers, double sigma2) {
    if (sigma2 <= 0.0) throw std::invalid_argument("noise power must be positive");
    const double num = p0 * std::norm(arma::cdot(h0_eff, w0));
    double den = sigma2;
    for (const auto& it : interferers) den += it.power * std::norm(arma::cdot(it.h_eff, it.w));
    return num / den;
}

arma::vec aggregate_interference(const TrajectorySample& sample,
                                 const std::vector<arma::cx_vec>& weights,
                                 const std::vector<double>& powers) {
    const int t_len = static_cast<int>(sample.h_eff.empty() ? 0 : sample.h_eff[0].n_cols);
    arma::vec out(static_cast<arma::uword>(t_len), arma::fill::zeros);
    for (std::size_t k = 1; k < sample.h_eff.size(); ++k) {
        for (int t = 0; t < t_len; ++t) {
            const std::complex<double> ip =
                arma::cdot(sample.h_eff[k].col(static_cast<arma::uword>(t)), weights[k]);
            out[static_cast<arma::uword>(t)] += powers[k] * std::norm(ip);
        }
    }
    return out;
}

void finalize_bundle(TrajectoryBundle& bundle, const BeamformerSet& beams, double sigma2) {
    for (auto& s : bundle.samples) {
        s.interference = aggregate_interference(s, beams.weights, beams.powers);
        s.sinr_hat.set_size(static_cast<arma::uword>(bundle.horizon));
        for (int t = 0; t < bundle.horizon; ++t) {
            const double num =
                beams.powers[0] *
                std::norm(arma::cdot(s.h_eff[0].col(static_cast<arma::uword>(t)), beams.weights[0]));
            s.sinr_hat[static_cast<arma::uword>(t)] =
                num / (s.interference[static_cast<arma::uword>(t)] + sigma2);
        }
    }
}

OptimizerResult proactive_optimize(const TrajectoryBundle& bundle,
                                   const std::vector<arma::cx_vec>& own_dir,
                                   const std::vector<Regime>& regimes,
                                   const std::vector<double>& powers,
                                   const OptimizerConfig& cfg) {
    const int links = bundle.num_links();
    const int m_samp = bundle.num_samples();
    const int t_len = bundle.horizon;
    if (links < 1 || m_samp < 1) throw std::invalid_argument("empty trajectory bundle");
    if (static_cast<int>(own_dir.size()) != links || static_cast<int>(powers.size()) != links ||
        static_cast<int>(regimes.size()) != links)
        throw std::invalid_argument("inconsistent link dimensions");

    OptimizerResult res;
    res.beams.powers = powers;
    res.beams.weights.resize(static_cast<std::size_t>(links));

    const double p_total = cfg.p_total > 0.0 ? cfg.p_total : pairwise_sum(powers);

    // Null-space factorizations are fixed by the predictions; build them once.
    const auto t_setup = Clock::now();
    std::vector<arma::cx_mat> null_basis(static_cast<std::size_t>(links));
    for (int k = 1; k < links; ++k) {
        const arma::uword m_elems = bundle.samples[0].h_eff[static_cast<std::size_t>(k)].n_rows;
        if (!cfg.regime_aware) {
            // Far-field treatment: only the flat common-phase direction of
            // each predicted channel is considered, so the protected
            // subspace collapses to the all-ones vector.
            arma::cx_vec ones(m_elems, arma::fill::ones);
            null_basis[static_cast<std::size_t>(k)] = ones / std::sqrt(static_cast<double>(m_elems));
        } else {
            arma::cx_mat stack(m_elems, static_cast<arma::uword>(m_samp * t_len));
            arma::uword c = 0;
            for (const auto& s : bundle.samples)
                for (int t = 0; t < t_len; ++t)
                    stack.col(c++) = s.h_eff[static_cast<std::size_t>(k)].col(static_cast<arma::uword>(t));
            arma::cx_mat q;
            if (arma::norm(stack, "fro") < 1e-300) {
                q.set_size(m_elems, 0);
            } else {
                q = arma::orth(stack);
            }
            null_basis[static_cast<std::size_t>(k)] = q;
        }
    }
    res.setup_seconds = seconds_since(t_setup);

    // Regime-dispatched initialization: focusing for near-field links,
    // zero-forcing between the own direction and the mean predicted tagged
    // channel for far-field links.
    for (int k = 1; k < links; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        arma::cx_vec mean_tagged(bundle.samples[0].h_eff[ku].n_rows, arma::fill::zeros);
        for (const auto& s : bundle.samples) mean_tagged += arma::sum(s.h_eff[ku], 1);
        if (regimes[ku] == Regime::NearField || arma::norm(mean_tagged) < 1e-300) {
            res.beams.weights[ku] = nf_focus(own_dir[ku]);
        } else {
            arma::cx_mat rows(2, own_dir[ku].n_elem);
            rows.row(0) = own_dir[ku].t();
            rows.row(1) = mean_tagged.t();
            const arma::cx_mat g = rows * rows.t();
            res.beams.weights[ku] = zf_precode(rows, auto_delta(g)).col(0);
        }
    }
    res.beams.weights[0] = serving_beam(bundle);

    res.objective.push_back(objective_value(bundle, res.beams.weights, powers));
    res.budget.push_back(res.beams.budget_used());

    const auto t_iter = Clock::now();
    int iters = 0;
    for (int it = 0; it < cfg.max_iters; ++it) {
        ++iters;
        // (a) serving beam against the worst sampled future
        res.beams.weights[0] = serving_beam(bundle);
        // (b) interferer beams: own direction projected off the protected subspace
        for (int k = 1; k < links; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            const arma::cx_mat& q = null_basis[ku];
            arma::cx_vec g = own_dir[ku] / arma::norm(own_dir[ku]);
            arma::cx_vec w = q.n_cols > 0 ? arma::cx_vec(g - q * (q.t() * g)) : g;
            double n = arma::norm(w);
            if (n < 1e-9) {
                // Served direction sits inside the protected subspace; fall
                // back to the least-aligned element axis.
                arma::cx_vec e(g.n_elem, arma::fill::zeros);
                arma::vec proj(g.n_elem);
                for (arma::uword i = 0; i < g.n_elem; ++i)
                    proj[i] = q.n_cols > 0 ? arma::norm(q.row(i)) : 0.0;
                e[proj.index_min()] = 1.0;
                w = q.n_cols > 0 ? arma::cx_vec(e - q * (q.t() * e)) : e;
                n = arma::norm(w);
            }
            res.beams.weights[ku] = w / n;
        }
        // (c) powers are nominal during iterations; the budget must hold here
        res.objective.push_back(objective_value(bundle, res.beams.weights, powers));
        res.budget.push_back(res.beams.budget_used());
        if (res.beams.budget_used() > p_total + 1e-9)
            throw std::logic_error("power budget violated during optimization");

        const double prev = res.objective[res.objective.size() - 2];
        const double cur = res.objective.back();
        if (cur > prev * (1.0 + 1e-9) + 1e-30)
            throw std::logic_error("objective increased between iterations");
        if (std::abs(prev - cur) <= cfg.tol * std::max(prev, 1e-30)) break;
    }
    res.iterations = iters;
    res.per_iter_seconds = seconds_since(t_iter) / iters;

    // A-posteriori SINR floor: one proportional backoff of every interferer
    // weight, bounded below so interferers keep serving.
    double scale2 = 1.0;
    for (const auto& s : bundle.samples) {
        const arma::vec i_hat = aggregate_interference(s, res.beams.weights, powers);
        for (int t = 0; t < t_len; ++t) {
            const double num =
                powers[0] *
                std::norm(arma::cdot(s.h_eff[0].col(static_cast<arma::uword>(t)), res.beams.weights[0]));
            const double slack = num / cfg.gamma_min - cfg.sigma2;
            const double ih = i_hat[static_cast<arma::uword>(t)];
            if (ih <= 0.0) continue;  // already clean
            scale2 = std::min(scale2, std::max(slack / ih, 0.0));
        }
    }
    res.scale2 = std::max(scale2, cfg.min_scale2);
    if (res.scale2 < 1.0) {
        const double s = std::sqrt(res.scale2);
        for (int k = 1; k < links; ++k) res.beams.weights[static_cast<std::size_t>(k)] *= s;
    }

    res.satisfied.set_size(static_cast<arma::uword>(m_samp), static_cast<arma::uword>(t_len));
    res.feasible = true;
    for (int m = 0; m < m_samp; ++m) {
        const auto& s = bundle.samples[static_cast<std::size_t>(m)];
        const arma::vec i_hat = aggregate_interference(s, res.beams.weights, powers);
        for (int t = 0; t < t_len; ++t) {
            const double num =
                powers[0] *
                std::norm(arma::cdot(s.h_eff[0].col(static_cast<arma::uword>(t)), res.beams.weights[0]));
            const double g = num / (i_hat[static_cast<arma::uword>(t)] + cfg.sigma2);
            const bool ok = g >= cfg.gamma_min * (1.0 - 1e-9);
            res.satisfied(static_cast<arma::uword>(m), static_cast<arma::uword>(t)) = ok ? 1 : 0;
            res.feasible = res.feasible && ok;
        }
    }
    return res;
}

BeamformerSet reactive_zf_set(const NetworkSnapshot& snap) {
    const int links = static_cast<int>(snap.links.size());
    BeamformerSet out;
    out.weights.resize(static_cast<std::size_t>(links));
    out.powers.resize(static_cast<std::size_t>(links));
    for (int k = 0; k < links; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        out.powers[ku] = snap.scene->tx(k).tx_power_w;
        const arma::uword m_elems = static_cast<arma::uword>(snap.scene->tx(k).array.elements());
        arma::cx_mat rows(static_cast<arma::uword>(links), m_elems);
        for (int j = 0; j < links; ++j)
            rows.row(static_cast<arma::uword>(j)) =
                plane_wave_steering(*snap.scene, k, snap.served_pos[static_cast<std::size_t>(j)]).t();
        const arma::cx_mat g = rows * rows.t();
        out.weights[ku] = zf_precode(rows, auto_delta(g)).col(static_cast<arma::uword>(k));
    }
    return out;
}

BeamformerSet reactive_hybrid_set(const NetworkSnapshot& snap) {
    const int links = static_cast<int>(snap.links.size());
    BeamformerSet out;
    out.weights.resize(static_cast<std::size_t>(links));
    out.powers.resize(static_cast<std::size_t>(links));
    for (int k = 0; k < links; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        out.powers[ku] = snap.scene->tx(k).tx_power_w;
        if (snap.to_tagged(k).regime == Regime::NearField) {
            out.weights[ku] = nf_focus(snap.own(k).h_eff);
        } else {
            arma::cx_mat rows(static_cast<arma::uword>(links), snap.own(k).h_eff.n_elem);
            for (int j = 0; j < links; ++j)
                rows.row(static_cast<arma::uword>(j)) =
                    snap.links[ku][static_cast<std::size_t>(j)].h_eff.t();
            const arma::cx_mat g = rows * rows.t();
            out.weights[ku] = zf_precode(rows, auto_delta(g)).col(static_cast<arma::uword>(k));
        }
    }
    return out;
}

RealizedStep realize_step(const NetworkSnapshot& snap, const BeamformerSet& beams,
                          double sigma2) {
    const int links = static_cast<int>(snap.links.size());
    RealizedStep out;
    out.sinr_users.resize(static_cast<std::size_t>(links));

    std::vector<double> leak;
    for (int k = 1; k < links; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        leak.push_back(beams.powers[ku] *
                       std::norm(arma::cdot(snap.to_tagged(k).h_eff, beams.weights[ku])));
    }
    out.interference = pairwise_sum(leak);
    const double num0 =
        beams.powers[0] * std::norm(arma::cdot(snap.to_tagged(0).h_eff, beams.weights[0]));
    out.sinr_tagged = num0 / (out.interference + sigma2);
    out.sinr_users[0] = out.sinr_tagged;

    for (int j = 1; j < links; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const double num =
            beams.powers[ju] * std::norm(arma::cdot(snap.links[ju][ju].h_eff, beams.weights[ju]));
        double den = sigma2;
        for (int i = 0; i < links; ++i) {
            if (i == j) continue;
            const auto iu = static_cast<std::size_t>(i);
            den += beams.powers[iu] *
                   std::norm(arma::cdot(snap.links[iu][ju].h_eff, beams.weights[iu]));
        }
        out.sinr_users[ju] = num / den;
    }

    double min_rate = arma::datum::inf;
    for (double g : out.sinr_users) min_rate = std::min(min_rate, std::log2(1.0 + g));
    out.min_rate = min_rate;
    return out;
}

} // namespace twinbeam
