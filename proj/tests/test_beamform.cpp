#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "twinbeam/beamform.hpp"
#include "twinbeam/rng.hpp"

using namespace twinbeam;

namespace {

arma::cx_vec random_cvec(RngStream& rng, int n) {
    arma::cx_vec v(static_cast<arma::uword>(n));
    for (auto& c : v) c = {rng.normal(), rng.normal()};
    return v;
}

arma::cx_mat random_rows(RngStream& rng, int k, int m) {
    arma::cx_mat h(static_cast<arma::uword>(k), static_cast<arma::uword>(m));
    for (auto& c : h) c = {rng.normal(), rng.normal()};
    return h;
}

/// Bundle with random effective channels; link 0 is the serving link.
TrajectoryBundle random_bundle(RngStream& rng, int links, int m_elems, int m_samp, int t_len,
                               double scale = 1e-3) {
    TrajectoryBundle b;
    b.horizon = t_len;
    for (int m = 0; m < m_samp; ++m) {
        TrajectorySample s;
        s.lambda.set_size(static_cast<arma::uword>(links), static_cast<arma::uword>(t_len));
        s.lambda.fill(1.0);
        s.xi = s.lambda;
        for (int k = 0; k < links; ++k) {
            arma::cx_mat hm(static_cast<arma::uword>(m_elems), static_cast<arma::uword>(t_len));
            for (auto& c : hm) c = std::complex<double>(rng.normal(), rng.normal()) * scale;
            s.h_eff.push_back(hm);
        }
        b.samples.push_back(std::move(s));
    }
    return b;
}

} // namespace

TEST_CASE("zf_precode basics") {
    RngStream rng(1);

    SUBCASE("single user reduces to the matched filter") {
        arma::cx_mat h = random_rows(rng, 1, 8);
        const arma::cx_mat w = zf_precode(h);
        const arma::cx_vec mf = arma::normalise(h.row(0).t());
        // same direction up to a unit-magnitude phase
        const std::complex<double> ip = arma::cdot(mf, w.col(0));
        CHECK(std::abs(std::abs(ip) - 1.0) < 1e-12);
    }

    SUBCASE("orthogonal rows give matched filters") {
        arma::cx_mat h(2, 4, arma::fill::zeros);
        h(0, 0) = {1.0, 1.0};
        h(1, 2) = {0.0, 2.0};
        const arma::cx_mat w = zf_precode(h);
        CHECK(std::abs(arma::cdot(h.row(1).t(), w.col(0))) < 1e-14);
        CHECK(std::abs(std::abs(arma::cdot(arma::normalise(h.row(0).t()), w.col(0))) - 1.0) < 1e-12);
    }

    SUBCASE("forced nulls on random instances") {
        for (int k : {2, 4, 8}) {
            arma::cx_mat h = random_rows(rng, k, 16);
            const arma::cx_mat w = zf_precode(h);
            for (int j = 0; j < k; ++j) {
                for (int c = 0; c < k; ++c) {
                    if (j == c) continue;
                    const std::complex<double> cross = arma::as_scalar(h.row(j) * w.col(c));
                    const double rel = std::abs(cross) /
                                       (arma::norm(h.row(j)) * arma::norm(w.col(c)));
                    CHECK(rel <= 1e-9);
                }
            }
        }
    }

    SUBCASE("rank deficiency without regularization throws") {
        arma::cx_mat h = random_rows(rng, 1, 6);
        arma::cx_mat bad(2, 6);
        bad.row(0) = h.row(0);
        bad.row(1) = h.row(0) * std::complex<double>(2.0, 0.0);
        CHECK_THROWS(zf_precode(bad, 0.0));
        CHECK_NOTHROW(zf_precode(bad, 1e-6));
    }

    SUBCASE("unit norm columns") {
        arma::cx_mat h = random_rows(rng, 3, 12);
        const arma::cx_mat w = zf_precode(h);
        for (arma::uword c = 0; c < w.n_cols; ++c)
            CHECK(arma::norm(w.col(c)) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("nf_focus") {
    RngStream rng(2);
    arma::cx_vec h = random_cvec(rng, 32);

    const arma::cx_vec w = nf_focus(h);
    CHECK(std::norm(arma::cdot(h, w)) ==
          doctest::Approx(arma::norm(h) * arma::norm(h)).epsilon(1e-12));

    const arma::cx_vec w2 = nf_focus(arma::cx_vec(2.0 * h));
    CHECK(arma::norm(w - w2) < 1e-12);

    CHECK_THROWS_AS(nf_focus(arma::cx_vec(4, arma::fill::zeros)), std::invalid_argument);
}

TEST_CASE("sinr") {
    SUBCASE("no interferers with a focused beam") {
        RngStream rng(3);
        arma::cx_vec h = random_cvec(rng, 16);
        const double g = sinr(h, nf_focus(h), 2.0, {}, 1e-3);
        const double n2 = arma::norm(h) * arma::norm(h);
        CHECK(g == doctest::Approx(2.0 * n2 / 1e-3).epsilon(1e-12));
    }

    SUBCASE("interference-dominated scaling") {
        RngStream rng(4);
        arma::cx_vec h0 = random_cvec(rng, 8);
        std::vector<InterferenceTerm> terms;
        for (int i = 0; i < 3; ++i)
            terms.push_back({random_cvec(rng, 8), nf_focus(random_cvec(rng, 8)), 1.0});
        const double tiny = 1e-30;
        const double base = sinr(h0, nf_focus(h0), 1.0, terms, tiny);
        for (auto& t : terms) t.power *= 2.0;
        const double halved = sinr(h0, nf_focus(h0), 1.0, terms, tiny);
        CHECK(halved == doctest::Approx(base / 2).epsilon(1e-9));
    }

    SUBCASE("two-user two-element hand-computed fixture") {
        // h0 = [1, i], w0 = [1, 0], P0 = 2:      numerator = 2 |1|^2    = 2
        // h1 = [0.6, 0.8i], w1 = [1, 1]/sqrt2:   |h1^H w1|^2 = |0.6 - 0.8i|^2 / 2 = 0.5
        // P1 = 3, sigma2 = 0.5:                  denominator = 1.5 + 0.5 = 2
        arma::cx_vec h0{{1.0, 0.0}, {0.0, 1.0}};
        arma::cx_vec w0{{1.0, 0.0}, {0.0, 0.0}};
        arma::cx_vec h1{{0.6, 0.0}, {0.0, 0.8}};
        arma::cx_vec w1{{1.0 / std::sqrt(2.0), 0.0}, {1.0 / std::sqrt(2.0), 0.0}};
        const double g = sinr(h0, w0, 2.0, {{h1, w1, 3.0}}, 0.5);
        CHECK(g == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("aggregate_interference matches a scalar loop") {
    RngStream rng(5);
    TrajectoryBundle b = random_bundle(rng, 4, 8, 3, 5);
    std::vector<arma::cx_vec> w;
    std::vector<double> p;
    for (int k = 0; k < 4; ++k) {
        w.push_back(nf_focus(random_cvec(rng, 8)));
        p.push_back(0.001 * (k + 1));
    }

    SUBCASE("orthogonal weights mean zero interference") {
        std::vector<arma::cx_vec> wz = w;
        for (int k = 1; k < 4; ++k) {
            // build a weight orthogonal to every h_eff of link k (first sample only)
            arma::cx_mat stack = b.samples[0].h_eff[static_cast<std::size_t>(k)];
            arma::cx_mat q = arma::orth(stack);
            arma::cx_vec v(8, arma::fill::zeros);
            v[7] = 1.0;
            wz[static_cast<std::size_t>(k)] = v - q * (q.t() * v);
        }
        const arma::vec i0 = aggregate_interference(b.samples[0], wz, p);
        for (double v : i0) CHECK(v < 1e-24);
    }

    SUBCASE("single aligned interferer") {
        TrajectoryBundle b1 = random_bundle(rng, 2, 8, 1, 1);
        const arma::cx_vec h = b1.samples[0].h_eff[1].col(0);
        const arma::vec i1 =
            aggregate_interference(b1.samples[0], {nf_focus(h), nf_focus(h)}, {1.0, 2.0});
        CHECK(i1[0] == doctest::Approx(2.0 * arma::norm(h) * arma::norm(h)).epsilon(1e-12));
    }

    SUBCASE("random case against a naive loop") {
        const arma::vec got = aggregate_interference(b.samples[1], w, p);
        for (int t = 0; t < 5; ++t) {
            double want = 0.0;
            for (int k = 1; k < 4; ++k) {
                std::complex<double> ip = 0.0;
                for (int m = 0; m < 8; ++m)
                    ip += std::conj(b.samples[1].h_eff[static_cast<std::size_t>(k)](
                              static_cast<arma::uword>(m), static_cast<arma::uword>(t))) *
                          w[static_cast<std::size_t>(k)][static_cast<arma::uword>(m)];
                want += p[static_cast<std::size_t>(k)] * std::norm(ip);
            }
            CHECK(std::abs(got[static_cast<arma::uword>(t)] - want) <=
                  1e-12 * std::max(want, 1e-300));
        }
    }
}

TEST_CASE("proactive_optimize contract") {
    RngStream rng(6);
    OptimizerConfig cfg;
    cfg.sigma2 = 1e-11;
    cfg.gamma_min = db_to_linear(5.0);

    SUBCASE("null-space residual and non-increasing objective") {
        for (int trial = 0; trial < 20; ++trial) {
            TrajectoryBundle b = random_bundle(rng, 4, 16, 3, 4);
            std::vector<arma::cx_vec> own;
            std::vector<double> p(4, 0.001);
            std::vector<Regime> reg(4, trial % 2 ? Regime::NearField : Regime::FarField);
            for (int k = 0; k < 4; ++k) own.push_back(random_cvec(rng, 16));

            const auto res = proactive_optimize(b, own, reg, p, cfg);

            for (std::size_t i = 1; i < res.objective.size(); ++i)
                CHECK(res.objective[i] <= res.objective[i - 1] * (1 + 1e-9) + 1e-30);
            for (double used : res.budget) CHECK(used <= pairwise_sum(p) + 1e-9);

            // every stacked predicted channel of the tagged UE is nulled
            for (int k = 1; k < 4; ++k) {
                const auto& w = res.beams.weights[static_cast<std::size_t>(k)];
                for (const auto& s : b.samples) {
                    for (int t = 0; t < 4; ++t) {
                        const arma::cx_vec h =
                            s.h_eff[static_cast<std::size_t>(k)].col(static_cast<arma::uword>(t));
                        CHECK(std::abs(arma::cdot(h, w)) <= 1e-9 * arma::norm(h));
                    }
                }
            }
        }
    }

    SUBCASE("already orthogonal interferers converge immediately to zero") {
        TrajectoryBundle b = random_bundle(rng, 3, 12, 2, 3);
        std::vector<double> p(3, 0.001);
        std::vector<Regime> reg(3, Regime::NearField);
        std::vector<arma::cx_vec> own;
        own.push_back(random_cvec(rng, 12));
        for (int k = 1; k < 3; ++k) {
            arma::cx_mat stack(12, 6);
            arma::uword c = 0;
            for (const auto& s : b.samples)
                for (int t = 0; t < 3; ++t)
                    stack.col(c++) = s.h_eff[static_cast<std::size_t>(k)].col(static_cast<arma::uword>(t));
            const arma::cx_mat q = arma::orth(stack);
            arma::cx_vec v = random_cvec(rng, 12);
            own.push_back(v - q * (q.t() * v)); // own direction already in the null space
        }
        const auto res = proactive_optimize(b, own, reg, p, cfg);
        CHECK(res.objective.back() < 1e-24);
    }

    SUBCASE("scale invariance of chosen directions") {
        TrajectoryBundle b = random_bundle(rng, 3, 8, 2, 3);
        std::vector<arma::cx_vec> own;
        std::vector<double> p(3, 0.001);
        std::vector<Regime> reg(3, Regime::NearField);
        for (int k = 0; k < 3; ++k) own.push_back(random_cvec(rng, 8));

        TrajectoryBundle b2 = b;
        for (auto& s : b2.samples)
            for (auto& h : s.h_eff) h *= 2.0;
        std::vector<arma::cx_vec> own2;
        for (const auto& v : own) own2.push_back(arma::cx_vec(2.0 * v));

        const auto r1 = proactive_optimize(b, own, reg, p, cfg);
        const auto r2 = proactive_optimize(b2, own2, reg, p, cfg);
        for (int k = 0; k < 3; ++k) {
            const arma::cx_vec a = arma::normalise(r1.beams.weights[static_cast<std::size_t>(k)]);
            const arma::cx_vec c = arma::normalise(r2.beams.weights[static_cast<std::size_t>(k)]);
            CHECK(std::abs(std::abs(arma::cdot(a, c)) - 1.0) < 1e-9);
        }
    }

    SUBCASE("infeasible floor backs off the interferers and flags it") {
        // Serving channel so weak that no backoff can reach the SINR floor.
        TrajectoryBundle b = random_bundle(rng, 3, 8, 2, 3, 1e-9);
        for (auto& s : b.samples) s.h_eff[0] *= 1e-6;
        std::vector<arma::cx_vec> own;
        std::vector<double> p(3, 0.001);
        std::vector<Regime> reg(3, Regime::NearField);
        for (int k = 0; k < 3; ++k) {
            // make the own direction overlap the tagged predictions so nulls stay imperfect
            own.push_back(b.samples[0].h_eff[static_cast<std::size_t>(k)].col(0) +
                          0.01 * random_cvec(rng, 8));
        }
        const auto res = proactive_optimize(b, own, reg, p, cfg);
        CHECK_FALSE(res.feasible);
        CHECK(res.scale2 == doctest::Approx(cfg.min_scale2));
        CHECK(arma::accu(res.satisfied) < res.satisfied.n_elem);
    }
}

TEST_CASE("per-iteration cost stays near linear when the sample count doubles") {
    RngStream rng(7);
    OptimizerConfig cfg;
    cfg.max_iters = 6;
    cfg.tol = 0.0; // run all iterations so the timing is comparable

    auto time_per_iter = [&](int m_samp) {
        TrajectoryBundle b = random_bundle(rng, 9, 128, m_samp, 5);
        std::vector<arma::cx_vec> own;
        std::vector<double> p(9, 0.001);
        std::vector<Regime> reg(9, Regime::NearField);
        for (int k = 0; k < 9; ++k) own.push_back(random_cvec(rng, 128));
        double best = arma::datum::inf;
        for (int rep = 0; rep < 3; ++rep) {
            const auto res = proactive_optimize(b, own, reg, p, cfg);
            best = std::min(best, res.per_iter_seconds);
        }
        return best;
    };

    const double base = time_per_iter(10);
    const double doubled = time_per_iter(20);
    if (base > 50e-6) {
        CHECK(doubled <= 2.5 * base);
    }
}
