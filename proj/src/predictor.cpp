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

#include "twinbeam/predictor.hpp"

#include <cstring>
#include <sstream>
#include <stdexcept>

namespace twinbeam {

namespace {

constexpr double kLog10 = 2.302585092994046;  // ln 10
constexpr double kIFloor = 1e-30;             // keeps log10 finite on clean links

double clamp01(double p) { return std::min(1.0 - 1e-12, std::max(1e-12, p)); }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Per-tau aggregate interference assembled from an emitted trajectory
/// under the dataset reference beams, plus its normalized form.
struct AssembledInterference {
    arma::vec phys;  // horizon
    arma::vec z;     // horizon
};

AssembledInterference assemble_interference(const GenerativeModel& m, const arma::vec& emitted) {
    const auto& dims = m.dims;
    AssembledInterference out;
    out.phys.set_size(static_cast<arma::uword>(dims.horizon));
    out.z.set_size(static_cast<arma::uword>(dims.horizon));
    const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(dims.m_elems));
    for (int tau = 0; tau < dims.horizon; ++tau) {
        double acc = 0.0;
        for (int k = 1; k < dims.links; ++k) {
            const int so = dims.shape_off(tau, k);
            double re = 0.0, im = 0.0;
            for (int e = 0; e < dims.m_elems; ++e) {
                const int d_re = so + 2 * e;
                const int d_im = so + 2 * e + 1;
                re += emitted[static_cast<arma::uword>(d_re)] * m.target_std[static_cast<arma::uword>(d_re)] +
                      m.target_mean[static_cast<arma::uword>(d_re)];
                im += emitted[static_cast<arma::uword>(d_im)] * m.target_std[static_cast<arma::uword>(d_im)] +
                      m.target_mean[static_cast<arma::uword>(d_im)];
            }
            // conj(shape) . w_ref with uniform real weights
            const double c2 = (re * re + im * im) * inv_sqrt_m * inv_sqrt_m;
            const int lo = dims.lambda_off(tau, k);
            const double lam =
                std::pow(10.0, emitted[static_cast<arma::uword>(lo)] * m.target_std[static_cast<arma::uword>(lo)] +
                                   m.target_mean[static_cast<arma::uword>(lo)]);
            const double p = emitted[static_cast<arma::uword>(dims.xi_off(tau, k))];
            const double xi_soft = m.blockage_eta + (1.0 - m.blockage_eta) * p;
            acc += m.powers[static_cast<std::size_t>(k)] * lam * xi_soft * c2;
        }
        out.phys[static_cast<arma::uword>(tau)] = acc;
        const int io = dims.iref_off(tau);
        out.z[static_cast<arma::uword>(tau)] =
            (std::log10(acc + kIFloor) - m.target_mean[static_cast<arma::uword>(io)]) /
            m.target_std[static_cast<arma::uword>(io)];
    }
    return out;
}

/// Chain rule of the assembled interference: accumulates
/// g_iz[tau] * d z[tau] / d emitted into g_emitted.
void assemble_backward(const GenerativeModel& m, const arma::vec& emitted,
                       const AssembledInterference& asm_i, const arma::vec& g_iz,
                       arma::vec& g_emitted) {
    const auto& dims = m.dims;
    const double inv_m = 1.0 / static_cast<double>(dims.m_elems);
    for (int tau = 0; tau < dims.horizon; ++tau) {
        const double gz = g_iz[static_cast<arma::uword>(tau)];
        if (gz == 0.0) continue;
        const int io = dims.iref_off(tau);
        const double d_phys =
            gz / (m.target_std[static_cast<arma::uword>(io)] * kLog10 *
                  (asm_i.phys[static_cast<arma::uword>(tau)] + kIFloor));
        for (int k = 1; k < dims.links; ++k) {
            const int so = dims.shape_off(tau, k);
            double re = 0.0, im = 0.0;
            for (int e = 0; e < dims.m_elems; ++e) {
                const int d_re = so + 2 * e;
                const int d_im = so + 2 * e + 1;
                re += emitted[static_cast<arma::uword>(d_re)] * m.target_std[static_cast<arma::uword>(d_re)] +
                      m.target_mean[static_cast<arma::uword>(d_re)];
                im += emitted[static_cast<arma::uword>(d_im)] * m.target_std[static_cast<arma::uword>(d_im)] +
                      m.target_mean[static_cast<arma::uword>(d_im)];
            }
            const int lo = dims.lambda_off(tau, k);
            const double lam =
                std::pow(10.0, emitted[static_cast<arma::uword>(lo)] * m.target_std[static_cast<arma::uword>(lo)] +
                                   m.target_mean[static_cast<arma::uword>(lo)]);
            const double p = emitted[static_cast<arma::uword>(dims.xi_off(tau, k))];
            const double xi_soft = m.blockage_eta + (1.0 - m.blockage_eta) * p;
            const double pk = m.powers[static_cast<std::size_t>(k)];
            const double c2 = (re * re + im * im) * inv_m;

            // d acc / d lambda_z, through lam = 10^(z s + mu)
            g_emitted[static_cast<arma::uword>(lo)] +=
                d_phys * pk * xi_soft * c2 * lam * m.target_std[static_cast<arma::uword>(lo)] * kLog10;
            // d acc / d xi probability
            g_emitted[static_cast<arma::uword>(dims.xi_off(tau, k))] +=
                d_phys * pk * lam * (1.0 - m.blockage_eta) * c2;
            // d acc / d shape entries (z units)
            const double common = d_phys * pk * lam * xi_soft * inv_m;
            for (int e = 0; e < dims.m_elems; ++e) {
                const int d_re = so + 2 * e;
                const int d_im = so + 2 * e + 1;
                g_emitted[static_cast<arma::uword>(d_re)] +=
                    common * 2.0 * re * m.target_std[static_cast<arma::uword>(d_re)];
                g_emitted[static_cast<arma::uword>(d_im)] +=
                    common * 2.0 * im * m.target_std[static_cast<arma::uword>(d_im)];
            }
        }
    }
}

arma::vec normalize_targets(const GenerativeModel& m, const arma::vec& target) {
    // Produces the emitted-space representation of a dataset target column:
    // z-scored shapes, z-scored log lambda, raw {1,0} blockage.
    const auto& dims = m.dims;
    arma::vec out(static_cast<arma::uword>(m.out_dim()));
    for (int tau = 0; tau < dims.horizon; ++tau) {
        for (int k = 0; k < dims.links; ++k) {
            const int so = dims.shape_off(tau, k);
            for (int e = 0; e < 2 * dims.m_elems; ++e) {
                const auto d = static_cast<arma::uword>(so + e);
                out[d] = (target[d] - m.target_mean[d]) / m.target_std[d];
            }
            const auto lo = static_cast<arma::uword>(dims.lambda_off(tau, k));
            out[lo] = (std::log10(target[lo]) - m.target_mean[lo]) / m.target_std[lo];
            const auto xo = static_cast<arma::uword>(dims.xi_off(tau, k));
            out[xo] = target[xo];
        }
    }
    return out;
}

arma::vec target_iz(const GenerativeModel& m, const arma::vec& target) {
    arma::vec out(static_cast<arma::uword>(m.dims.horizon));
    for (int tau = 0; tau < m.dims.horizon; ++tau) {
        const auto io = static_cast<arma::uword>(m.dims.iref_off(tau));
        out[static_cast<arma::uword>(tau)] =
            (std::log10(target[io] + kIFloor) - m.target_mean[io]) / m.target_std[io];
    }
    return out;
}

} // namespace

GenerativeModel init_model(const DtDataset& ds, const GanHyperParams& hp,
                           const std::vector<double>& powers, double blockage_eta,
                           std::uint64_t seed) {
    if (ds.n_samples() < 4) throw std::invalid_argument("dataset too small to train on");
    GenerativeModel m;
    m.dims = ds.dims;
    m.hp = hp;
    m.powers = powers;
    m.blockage_eta = blockage_eta;

    const arma::uword fd = static_cast<arma::uword>(ds.dims.feature_dim());
    m.feat_mean = arma::mean(ds.features, 1);
    m.feat_std = arma::stddev(ds.features, 0, 1);
    for (arma::uword i = 0; i < fd; ++i) m.feat_std[i] = std::max(m.feat_std[i], 1e-9);

    const arma::uword td = static_cast<arma::uword>(ds.dims.target_dim());
    m.target_mean.set_size(td);
    m.target_std.set_size(td);
    arma::mat work = ds.targets;
    // lambda and interference rows switch to log10 before the statistics
    for (int tau = 0; tau < ds.dims.horizon; ++tau) {
        for (int k = 0; k < ds.dims.links; ++k) {
            const auto lo = static_cast<arma::uword>(ds.dims.lambda_off(tau, k));
            work.row(lo) = arma::log10(work.row(lo));
        }
        const auto io = static_cast<arma::uword>(ds.dims.iref_off(tau));
        work.row(io) = arma::log10(work.row(io) + kIFloor);
    }
    m.target_mean = arma::mean(work, 1);
    m.target_std = arma::stddev(work, 0, 1);
    // Residuals are taken in these units: shape entries get an absolute
    // floor, log-scale rows a floor of a twentieth of a decade, so that
    // near-constant dimensions cannot blow the loss up.
    for (arma::uword i = 0; i < td; ++i) m.target_std[i] = std::max(m.target_std[i], 1e-3);
    for (int tau = 0; tau < ds.dims.horizon; ++tau) {
        for (int k = 0; k < ds.dims.links; ++k) {
            const auto lo = static_cast<arma::uword>(ds.dims.lambda_off(tau, k));
            m.target_std[lo] = std::max(m.target_std[lo], 0.05);
            const auto xo = static_cast<arma::uword>(ds.dims.xi_off(tau, k));
            m.target_mean[xo] = 0.0;
            m.target_std[xo] = 1.0;  // blockage rows pass through untouched
        }
        const auto io = static_cast<arma::uword>(ds.dims.iref_off(tau));
        m.target_std[io] = std::max(m.target_std[io], 0.5);
    }

    RngStream rng(seed, Stream::kModelInit);
    std::vector<int> gen_dims{m.cond_dim() + hp.latent_dim};
    for (int i = 0; i < hp.hidden_layers; ++i) gen_dims.push_back(hp.hidden);
    gen_dims.push_back(m.out_dim());
    m.gen.init(gen_dims, rng);

    std::vector<int> disc_dims{m.disc_in_dim()};
    for (int i = 0; i < hp.hidden_layers; ++i) disc_dims.push_back(hp.hidden);
    disc_dims.push_back(1);
    m.disc.init(disc_dims, rng);
    return m;
}

arma::vec emitted_from_raw(const GenerativeModel& m, const arma::vec& raw) {
    arma::vec out = raw;
    for (int tau = 0; tau < m.dims.horizon; ++tau)
        for (int k = 0; k < m.dims.links; ++k) {
            const auto xo = static_cast<arma::uword>(m.dims.xi_off(tau, k));
            out[xo] = sigmoid(raw[xo]);
        }
    return out;
}

double pred_loss(const GenerativeModel& m, const arma::vec& emitted, const arma::vec& target) {
    const arma::vec tz = normalize_targets(m, target);
    double acc = 0.0;
    for (int i = 0; i < m.out_dim(); ++i) {
        const double r = emitted[static_cast<arma::uword>(i)] - tz[static_cast<arma::uword>(i)];
        acc += r * r;
    }
    const AssembledInterference asm_i = assemble_interference(m, emitted);
    const arma::vec iz = target_iz(m, target);
    for (int tau = 0; tau < m.dims.horizon; ++tau) {
        const double r = asm_i.z[static_cast<arma::uword>(tau)] - iz[static_cast<arma::uword>(tau)];
        acc += m.hp.mu * r * r;
    }
    return acc;
}

arma::vec pred_loss_grad(const GenerativeModel& m, const arma::vec& emitted,
                         const arma::vec& target) {
    const arma::vec tz = normalize_targets(m, target);
    arma::vec g(static_cast<arma::uword>(m.out_dim()));
    for (int i = 0; i < m.out_dim(); ++i)
        g[static_cast<arma::uword>(i)] =
            2.0 * (emitted[static_cast<arma::uword>(i)] - tz[static_cast<arma::uword>(i)]);
    const AssembledInterference asm_i = assemble_interference(m, emitted);
    const arma::vec iz = target_iz(m, target);
    arma::vec g_iz(static_cast<arma::uword>(m.dims.horizon));
    for (int tau = 0; tau < m.dims.horizon; ++tau)
        g_iz[static_cast<arma::uword>(tau)] =
            2.0 * m.hp.mu *
            (asm_i.z[static_cast<arma::uword>(tau)] - iz[static_cast<arma::uword>(tau)]);
    assemble_backward(m, emitted, asm_i, g_iz, g);
    return g;
}

double adversarial_value(double d_real, double d_fake) {
    return std::log(clamp01(d_real)) + std::log(1.0 - clamp01(d_fake));
}

std::string TrainLog::to_csv() const {
    std::ostringstream out;
    out << "epoch,disc_loss,adv_value,gen_pred,val_pred,gnorm_adv,gnorm_pred\n";
    for (const auto& r : rows) {
        out << r.epoch << ',' << fmt_g17(r.disc_loss) << ',' << fmt_g17(r.adv_value) << ','
            << fmt_g17(r.gen_pred) << ',' << fmt_g17(r.val_pred) << ',' << fmt_g17(r.gnorm_adv)
            << ',' << fmt_g17(r.gnorm_pred) << '\n';
    }
    return out.str();
}

namespace {

/// Raw-output gradient from an emitted-space gradient: chain through the
/// sigmoid on the blockage block.
arma::vec raw_grad_from_emitted(const GenerativeModel& m, const arma::vec& emitted,
                                arma::vec g) {
    for (int tau = 0; tau < m.dims.horizon; ++tau)
        for (int k = 0; k < m.dims.links; ++k) {
            const auto xo = static_cast<arma::uword>(m.dims.xi_off(tau, k));
            const double p = emitted[xo];
            g[xo] *= p * (1.0 - p);
        }
    return g;
}

arma::vec cond_of(const GenerativeModel& m, const arma::vec& feature_col) {
    arma::vec c(static_cast<arma::uword>(m.cond_dim()));
    for (int i = 0; i < m.cond_dim(); ++i) {
        const auto iu = static_cast<arma::uword>(i);
        // clamp to bound extrapolation on regimes the dataset never visited
        c[iu] = std::clamp((feature_col[iu] - m.feat_mean[iu]) / m.feat_std[iu], -20.0, 20.0);
    }
    return c;
}

double mean_pred_loss(const GenerativeModel& m, const DtDataset& ds,
                      const std::vector<int>& idx, std::uint64_t seed) {
    if (idx.empty()) return 0.0;
    double acc = 0.0;
    RngStream z_rng(seed, Stream::kLatent, 0xa11ce);
    for (int i : idx) {
        const arma::vec cond = cond_of(m, ds.features.col(static_cast<arma::uword>(i)));
        arma::vec in(static_cast<arma::uword>(m.cond_dim() + m.hp.latent_dim));
        in.subvec(0, static_cast<arma::uword>(m.cond_dim() - 1)) = cond;
        for (int z = 0; z < m.hp.latent_dim; ++z)
            in[static_cast<arma::uword>(m.cond_dim() + z)] = z_rng.normal();
        const arma::vec emitted = emitted_from_raw(m, m.gen.forward(in));
        acc += pred_loss(m, emitted, ds.targets.col(static_cast<arma::uword>(i)));
    }
    return acc / static_cast<double>(idx.size());
}

} // namespace

TrainLog train_generative(GenerativeModel& model, const DtDataset& ds, std::uint64_t seed,
                          int start_epoch) {
    const auto& dims = model.dims;
    if (dims.feature_dim() != static_cast<int>(ds.features.n_rows) ||
        dims.target_dim() != static_cast<int>(ds.targets.n_rows))
        throw std::invalid_argument("dataset does not match the model dimensions");

    // Trailing time blocks of every scenario form the validation split.
    std::vector<int> train_idx, val_idx;
    {
        int max_step = 0;
        for (int s : ds.step_of) max_step = std::max(max_step, s);
        const double cut = max_step * (1.0 - model.hp.val_fraction);
        for (int i = 0; i < ds.n_samples(); ++i) {
            if (ds.step_of[static_cast<std::size_t>(i)] <= cut) train_idx.push_back(i);
            else val_idx.push_back(i);
        }
        if (train_idx.empty()) throw std::invalid_argument("empty training split");
    }

    const int cond_dim = model.cond_dim();
    const int latent = model.hp.latent_dim;
    const int out_dim = model.out_dim();
    const int t_len = dims.horizon;
    const double lambda_pred = model.hp.lambda_pred;

    TrainLog log;
    {
        TrainLogRow r;
        r.epoch = start_epoch;
        r.val_pred = mean_pred_loss(model, ds, val_idx, seed);
        r.gen_pred = mean_pred_loss(model, ds, train_idx, seed);
        log.rows.push_back(r);
    }

    for (int epoch = start_epoch; epoch < start_epoch + model.hp.epochs; ++epoch) {
        RngStream shuffle(seed, Stream::kShuffle, static_cast<std::uint64_t>(epoch));
        std::vector<int> order = train_idx;
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(shuffle.next_u64() % i);
            std::swap(order[i - 1], order[j]);
        }
        RngStream z_rng(seed, Stream::kLatent, static_cast<std::uint64_t>(epoch) + 1);

        double ep_dloss = 0.0, ep_adv = 0.0, ep_pred = 0.0;
        double ep_gnorm_adv = 0.0, ep_gnorm_pred = 0.0;
        int n_batches = 0;

        for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(model.hp.batch)) {
            const std::size_t end = std::min(order.size(), pos + static_cast<std::size_t>(model.hp.batch));
            const int bsz = static_cast<int>(end - pos);
            ++n_batches;

            // generator pass for this batch
            arma::mat gen_in(static_cast<arma::uword>(cond_dim + latent), static_cast<arma::uword>(bsz));
            for (int b = 0; b < bsz; ++b) {
                const int i = order[pos + static_cast<std::size_t>(b)];
                gen_in.col(static_cast<arma::uword>(b)).subvec(0, static_cast<arma::uword>(cond_dim - 1)) =
                    cond_of(model, ds.features.col(static_cast<arma::uword>(i)));
                for (int z = 0; z < latent; ++z)
                    gen_in(static_cast<arma::uword>(cond_dim + z), static_cast<arma::uword>(b)) = z_rng.normal();
            }
            Mlp::Trace gen_trace;
            const arma::mat raw = model.gen.forward(gen_in, &gen_trace);

            // discriminator inputs: real and fake trajectories
            arma::mat d_real_in(static_cast<arma::uword>(model.disc_in_dim()), static_cast<arma::uword>(bsz));
            arma::mat d_fake_in(static_cast<arma::uword>(model.disc_in_dim()), static_cast<arma::uword>(bsz));
            std::vector<arma::vec> emitted_cols(static_cast<std::size_t>(bsz));
            std::vector<AssembledInterference> asm_cols(static_cast<std::size_t>(bsz));
            for (int b = 0; b < bsz; ++b) {
                const int i = order[pos + static_cast<std::size_t>(b)];
                const arma::vec target = ds.targets.col(static_cast<arma::uword>(i));
                const arma::vec cond = gen_in.col(static_cast<arma::uword>(b))
                                           .subvec(0, static_cast<arma::uword>(cond_dim - 1));
                const arma::vec real_traj = normalize_targets(model, target);
                const arma::vec real_iz = target_iz(model, target);

                emitted_cols[static_cast<std::size_t>(b)] =
                    emitted_from_raw(model, raw.col(static_cast<arma::uword>(b)));
                asm_cols[static_cast<std::size_t>(b)] =
                    assemble_interference(model, emitted_cols[static_cast<std::size_t>(b)]);

                auto pack = [&](arma::mat& dst, const arma::vec& traj, const arma::vec& iz) {
                    dst.col(static_cast<arma::uword>(b)).subvec(0, static_cast<arma::uword>(cond_dim - 1)) = cond;
                    dst.col(static_cast<arma::uword>(b))
                        .subvec(static_cast<arma::uword>(cond_dim),
                                static_cast<arma::uword>(cond_dim + out_dim - 1)) = traj;
                    dst.col(static_cast<arma::uword>(b))
                        .subvec(static_cast<arma::uword>(cond_dim + out_dim),
                                static_cast<arma::uword>(cond_dim + out_dim + t_len - 1)) = iz;
                };
                pack(d_real_in, real_traj, real_iz);
                pack(d_fake_in, emitted_cols[static_cast<std::size_t>(b)],
                     asm_cols[static_cast<std::size_t>(b)].z);
            }

            // --- discriminator update ---
            Mlp::Trace tr_real, tr_fake;
            const arma::mat s_real = model.disc.forward(d_real_in, &tr_real);
            const arma::mat s_fake = model.disc.forward(d_fake_in, &tr_fake);
            Mlp d_grad = model.disc.zeros_like();
            arma::mat g_real(1, static_cast<arma::uword>(bsz));
            arma::mat g_fake(1, static_cast<arma::uword>(bsz));
            double d_loss = 0.0;
            for (int b = 0; b < bsz; ++b) {
                const double pr = clamp01(sigmoid(s_real(0, static_cast<arma::uword>(b))));
                const double pf = clamp01(sigmoid(s_fake(0, static_cast<arma::uword>(b))));
                const double y = model.hp.label_smooth;
                d_loss += -(y * std::log(pr) + (1.0 - y) * std::log(1.0 - pr)) - std::log(1.0 - pf);
                g_real(0, static_cast<arma::uword>(b)) = pr - y;
                g_fake(0, static_cast<arma::uword>(b)) = pf;
                ep_adv += adversarial_value(pr, pf);
            }
            model.disc.backward(tr_real, g_real / bsz, d_grad);
            model.disc.backward(tr_fake, g_fake / bsz, d_grad);
            model.disc.add_scaled(d_grad, -model.hp.lr_disc);
            ep_dloss += d_loss / bsz;

            // --- generator update (fresh discriminator scores) ---
            Mlp::Trace tr_gen_fake;
            const arma::mat s_gen = model.disc.forward(d_fake_in, &tr_gen_fake);
            Mlp d_sink = model.disc.zeros_like();
            arma::mat g_top(1, static_cast<arma::uword>(bsz));
            for (int b = 0; b < bsz; ++b) {
                const double p = clamp01(sigmoid(s_gen(0, static_cast<arma::uword>(b))));
                g_top(0, static_cast<arma::uword>(b)) = p - 1.0;  // -log D(fake)
            }
            const arma::mat g_disc_in = model.disc.backward(tr_gen_fake, g_top / bsz, d_sink);

            arma::mat g_raw(static_cast<arma::uword>(out_dim), static_cast<arma::uword>(bsz));
            double batch_pred = 0.0;
            double gn_adv = 0.0, gn_pred = 0.0;
            for (int b = 0; b < bsz; ++b) {
                const int i = order[pos + static_cast<std::size_t>(b)];
                const arma::vec& emitted = emitted_cols[static_cast<std::size_t>(b)];
                const arma::vec target = ds.targets.col(static_cast<arma::uword>(i));

                // adversarial part: discriminator input gradient wrt the
                // trajectory block plus its interference block chained
                // through the assembly
                arma::vec g_emit_adv =
                    g_disc_in.col(static_cast<arma::uword>(b))
                        .subvec(static_cast<arma::uword>(cond_dim),
                                static_cast<arma::uword>(cond_dim + out_dim - 1));
                const arma::vec g_iz_adv =
                    g_disc_in.col(static_cast<arma::uword>(b))
                        .subvec(static_cast<arma::uword>(cond_dim + out_dim),
                                static_cast<arma::uword>(cond_dim + out_dim + t_len - 1));
                assemble_backward(model, emitted, asm_cols[static_cast<std::size_t>(b)], g_iz_adv,
                                  g_emit_adv);

                batch_pred += pred_loss(model, emitted, target);
                arma::vec g_emit_pred =
                    lambda_pred / bsz * pred_loss_grad(model, emitted, target);

                const arma::vec raw_adv = raw_grad_from_emitted(model, emitted, g_emit_adv);
                const arma::vec raw_pred = raw_grad_from_emitted(model, emitted, g_emit_pred);
                gn_adv += arma::dot(raw_adv, raw_adv);
                gn_pred += arma::dot(raw_pred, raw_pred);
                g_raw.col(static_cast<arma::uword>(b)) = raw_adv + raw_pred;
            }
            Mlp g_grad = model.gen.zeros_like();
            model.gen.backward(gen_trace, g_raw, g_grad);
            model.gen.add_scaled(g_grad, -model.hp.lr_gen);

            ep_pred += batch_pred / bsz;
            ep_gnorm_adv += std::sqrt(gn_adv);
            ep_gnorm_pred += std::sqrt(gn_pred);

            if (!std::isfinite(ep_pred) || !std::isfinite(ep_dloss))
                throw std::runtime_error("training diverged (non-finite loss) at epoch " +
                                         std::to_string(epoch));
        }

        TrainLogRow r;
        r.epoch = epoch + 1;
        r.disc_loss = ep_dloss / n_batches;
        r.adv_value = ep_adv / static_cast<double>(order.size());
        r.gen_pred = ep_pred / n_batches;
        r.gnorm_adv = ep_gnorm_adv / n_batches;
        r.gnorm_pred = ep_gnorm_pred / n_batches;
        r.val_pred = mean_pred_loss(model, ds, val_idx, seed);
        log.rows.push_back(r);
    }
    model.trained = true;
    return log;
}

TrajectoryBundle generate_trajectories(const GenerativeModel& model,
                                       const arma::vec& features_raw, int num_samples,
                                       RngStream& latent_rng) {
    if (!model.trained) throw std::runtime_error("generative model is untrained");
    if (num_samples < 1) throw std::invalid_argument("need at least one sample");
    const auto& dims = model.dims;

    arma::vec cond = cond_of(model, features_raw);
    TrajectoryBundle bundle;
    bundle.horizon = dims.horizon;
    for (int m = 0; m < num_samples; ++m) {
        arma::vec in(static_cast<arma::uword>(model.cond_dim() + model.hp.latent_dim));
        in.subvec(0, static_cast<arma::uword>(model.cond_dim() - 1)) = cond;
        for (int z = 0; z < model.hp.latent_dim; ++z)
            in[static_cast<arma::uword>(model.cond_dim() + z)] = latent_rng.normal();
        const arma::vec emitted = emitted_from_raw(model, model.gen.forward(in));

        TrajectorySample s;
        s.lambda.set_size(static_cast<arma::uword>(dims.links), static_cast<arma::uword>(dims.horizon));
        s.xi.set_size(arma::size(s.lambda));
        s.h_eff.assign(static_cast<std::size_t>(dims.links),
                       arma::cx_mat(static_cast<arma::uword>(dims.m_elems),
                                    static_cast<arma::uword>(dims.horizon)));
        for (int tau = 0; tau < dims.horizon; ++tau) {
            for (int k = 0; k < dims.links; ++k) {
                const auto lo = static_cast<arma::uword>(dims.lambda_off(tau, k));
                const double lam = std::pow(10.0, emitted[lo] * model.target_std[lo] + model.target_mean[lo]);
                const double p = emitted[static_cast<arma::uword>(dims.xi_off(tau, k))];
                const double xi = p > 0.5 ? 1.0 : model.blockage_eta;  // quantized {1, eta}
                const double amp = std::sqrt(lam * xi);
                s.lambda(static_cast<arma::uword>(k), static_cast<arma::uword>(tau)) = lam;
                s.xi(static_cast<arma::uword>(k), static_cast<arma::uword>(tau)) = xi;
                const int so = dims.shape_off(tau, k);
                for (int e = 0; e < dims.m_elems; ++e) {
                    const auto d_re = static_cast<arma::uword>(so + 2 * e);
                    const auto d_im = static_cast<arma::uword>(so + 2 * e + 1);
                    const double re = emitted[d_re] * model.target_std[d_re] + model.target_mean[d_re];
                    const double im = emitted[d_im] * model.target_std[d_im] + model.target_mean[d_im];
                    s.h_eff[static_cast<std::size_t>(k)](static_cast<arma::uword>(e),
                                                         static_cast<arma::uword>(tau)) =
                        std::complex<double>(amp * re, amp * im);
                }
            }
        }
        bundle.samples.push_back(std::move(s));
    }
    return bundle;
}

namespace {

TrajectorySample sample_from_records(const std::vector<StepRecord>& records) {
    TrajectorySample s;
    const int t_len = static_cast<int>(records.size());
    const int links = static_cast<int>(records[0].tagged.size());
    const arma::uword m_elems = records[0].tagged[0].h_eff.n_elem;
    s.lambda.set_size(static_cast<arma::uword>(links), static_cast<arma::uword>(t_len));
    s.xi.set_size(arma::size(s.lambda));
    s.h_eff.assign(static_cast<std::size_t>(links),
                   arma::cx_mat(m_elems, static_cast<arma::uword>(t_len)));
    for (int t = 0; t < t_len; ++t) {
        for (int k = 0; k < links; ++k) {
            const auto& link = records[static_cast<std::size_t>(t)].tagged[static_cast<std::size_t>(k)];
            s.lambda(static_cast<arma::uword>(k), static_cast<arma::uword>(t)) = link.lambda_total;
            s.xi(static_cast<arma::uword>(k), static_cast<arma::uword>(t)) = link.blockage;
            s.h_eff[static_cast<std::size_t>(k)].col(static_cast<arma::uword>(t)) = link.h_eff;
        }
    }
    return s;
}

} // namespace

TrajectoryBundle deterministic_dt_predict(const Scene& scene, const EnvState& env,
                                          const ScenarioConfig& cfg, int horizon) {
    TrajectoryBundle bundle;
    bundle.horizon = horizon;
    EnvState roll = env;
    roll.ue.noise_sigma = 0.0;  // constant-velocity continuation
    ScenarioConfig det_cfg = cfg;
    det_cfg.hotspot_step = -1;  // environment events persist as currently seen
    std::vector<StepRecord> records;
    for (int tau = 1; tau <= horizon; ++tau) {
        advance_env(roll, scene, det_cfg, 0);
        records.push_back(record_step(scene, roll));
    }
    bundle.samples.push_back(sample_from_records(records));
    return bundle;
}

TrajectoryBundle oracle_predict(const Scene& scene, const EnvState& env,
                                const ScenarioConfig& cfg, std::uint64_t seed, int horizon) {
    TrajectoryBundle bundle;
    bundle.horizon = horizon;
    EnvState roll = env;
    std::vector<StepRecord> records;
    for (int tau = 1; tau <= horizon; ++tau) {
        advance_env(roll, scene, cfg, seed);
        records.push_back(record_step(scene, roll));
    }
    bundle.samples.push_back(sample_from_records(records));
    return bundle;
}

arma::vec prediction_rmse(const arma::mat& predicted, const arma::mat& realized) {
    if (predicted.n_rows != realized.n_rows || predicted.n_cols != realized.n_cols)
        throw std::invalid_argument("prediction and realization lengths differ");
    arma::vec out(predicted.n_rows);
    for (arma::uword tau = 0; tau < predicted.n_rows; ++tau) {
        const arma::rowvec diff = predicted.row(tau) - realized.row(tau);
        out[tau] = std::sqrt(arma::mean(arma::square(diff)));
    }
    return out;
}

// Model artifact -------------------------------------------------------------

namespace {

constexpr std::uint32_t kMagic = 0x4d424754;  // "TGBM"
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& s, std::uint32_t v) { s.append(reinterpret_cast<const char*>(&v), 4); }
void put_f64(std::string& s, double v) { s.append(reinterpret_cast<const char*>(&v), 8); }
void put_vec(std::string& s, const arma::vec& v) {
    put_u32(s, static_cast<std::uint32_t>(v.n_elem));
    s.append(reinterpret_cast<const char*>(v.memptr()), v.n_elem * 8);
}
void put_mlp(std::string& s, const Mlp& m) {
    put_u32(s, static_cast<std::uint32_t>(m.w.size()));
    for (std::size_t i = 0; i < m.w.size(); ++i) {
        put_u32(s, static_cast<std::uint32_t>(m.w[i].n_rows));
        put_u32(s, static_cast<std::uint32_t>(m.w[i].n_cols));
        s.append(reinterpret_cast<const char*>(m.w[i].memptr()), m.w[i].n_elem * 8);
        s.append(reinterpret_cast<const char*>(m.b[i].memptr()), m.b[i].n_elem * 8);
    }
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    explicit Reader(const std::string& b) : buf(b) {}
    std::uint32_t u32() {
        std::uint32_t v;
        need(4);
        std::memcpy(&v, buf.data() + pos, 4);
        pos += 4;
        return v;
    }
    double f64() {
        double v;
        need(8);
        std::memcpy(&v, buf.data() + pos, 8);
        pos += 8;
        return v;
    }
    arma::vec vec() {
        const std::uint32_t n = u32();
        arma::vec v(n);
        need(static_cast<std::size_t>(n) * 8);
        std::memcpy(v.memptr(), buf.data() + pos, static_cast<std::size_t>(n) * 8);
        pos += static_cast<std::size_t>(n) * 8;
        return v;
    }
    Mlp mlp() {
        Mlp m;
        const std::uint32_t layers = u32();
        for (std::uint32_t i = 0; i < layers; ++i) {
            const std::uint32_t rows = u32();
            const std::uint32_t cols = u32();
            arma::mat w(rows, cols);
            need(static_cast<std::size_t>(rows) * cols * 8);
            std::memcpy(w.memptr(), buf.data() + pos, static_cast<std::size_t>(rows) * cols * 8);
            pos += static_cast<std::size_t>(rows) * cols * 8;
            arma::vec b(rows);
            need(static_cast<std::size_t>(rows) * 8);
            std::memcpy(b.memptr(), buf.data() + pos, static_cast<std::size_t>(rows) * 8);
            pos += static_cast<std::size_t>(rows) * 8;
            m.w.push_back(std::move(w));
            m.b.push_back(std::move(b));
        }
        return m;
    }
    void need(std::size_t n) {
        if (pos + n > buf.size()) throw std::runtime_error("truncated model artifact");
    }
};

} // namespace

void save_model(const GenerativeModel& model, const std::string& path) {
    std::string s;
    put_u32(s, kMagic);
    put_u32(s, kVersion);
    put_u32(s, static_cast<std::uint32_t>(model.dims.links));
    put_u32(s, static_cast<std::uint32_t>(model.dims.m_elems));
    put_u32(s, static_cast<std::uint32_t>(model.dims.t_hist));
    put_u32(s, static_cast<std::uint32_t>(model.dims.horizon));
    put_u32(s, static_cast<std::uint32_t>(model.hp.hidden));
    put_u32(s, static_cast<std::uint32_t>(model.hp.hidden_layers));
    put_u32(s, static_cast<std::uint32_t>(model.hp.latent_dim));
    put_u32(s, static_cast<std::uint32_t>(model.hp.epochs));
    put_u32(s, static_cast<std::uint32_t>(model.hp.batch));
    put_u32(s, model.trained ? 1u : 0u);
    put_f64(s, model.hp.lambda_pred);
    put_f64(s, model.hp.mu);
    put_f64(s, model.hp.lr_gen);
    put_f64(s, model.hp.lr_disc);
    put_f64(s, model.hp.label_smooth);
    put_f64(s, model.hp.val_fraction);
    put_f64(s, model.blockage_eta);
    put_u32(s, static_cast<std::uint32_t>(model.powers.size()));
    for (double p : model.powers) put_f64(s, p);
    put_vec(s, model.feat_mean);
    put_vec(s, model.feat_std);
    put_vec(s, model.target_mean);
    put_vec(s, model.target_std);
    put_mlp(s, model.gen);
    put_mlp(s, model.disc);
    atomic_write_file(path, s);
}

GenerativeModel load_model(const std::string& path) {
    const std::string buf = read_file(path);
    Reader r(buf);
    if (r.u32() != kMagic) throw std::runtime_error("not a model artifact: " + path);
    if (r.u32() != kVersion) throw std::runtime_error("unsupported model version");
    GenerativeModel m;
    m.dims.links = static_cast<int>(r.u32());
    m.dims.m_elems = static_cast<int>(r.u32());
    m.dims.t_hist = static_cast<int>(r.u32());
    m.dims.horizon = static_cast<int>(r.u32());
    m.hp.hidden = static_cast<int>(r.u32());
    m.hp.hidden_layers = static_cast<int>(r.u32());
    m.hp.latent_dim = static_cast<int>(r.u32());
    m.hp.epochs = static_cast<int>(r.u32());
    m.hp.batch = static_cast<int>(r.u32());
    m.trained = r.u32() != 0;
    m.hp.lambda_pred = r.f64();
    m.hp.mu = r.f64();
    m.hp.lr_gen = r.f64();
    m.hp.lr_disc = r.f64();
    m.hp.label_smooth = r.f64();
    m.hp.val_fraction = r.f64();
    m.blockage_eta = r.f64();
    const std::uint32_t np = r.u32();
    for (std::uint32_t i = 0; i < np; ++i) m.powers.push_back(r.f64());
    m.feat_mean = r.vec();
    m.feat_std = r.vec();
    m.target_mean = r.vec();
    m.target_std = r.vec();
    m.gen = r.mlp();
    m.disc = r.mlp();
    return m;
}

} // namespace twinbeam
