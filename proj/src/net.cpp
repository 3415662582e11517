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

#include "twinbeam/net.hpp"

#include <stdexcept>

namespace twinbeam {

void Mlp::init(const std::vector<int>& layer_dims, RngStream& rng) {
    if (layer_dims.size() < 2) throw std::invalid_argument("need input and output dims");
    w.clear();
    b.clear();
    for (std::size_t i = 0; i + 1 < layer_dims.size(); ++i) {
        const int in = layer_dims[i];
        const int out = layer_dims[i + 1];
        const double bound = std::sqrt(6.0 / (in + out));
        arma::mat wi(static_cast<arma::uword>(out), static_cast<arma::uword>(in));
        for (auto& v : wi) v = rng.uniform(-bound, bound);
        w.push_back(std::move(wi));
        b.emplace_back(static_cast<arma::uword>(out), arma::fill::zeros);
    }
}

arma::mat Mlp::forward(const arma::mat& x, Trace* trace) const {
    arma::mat a = x;
    if (trace) {
        trace->act.clear();
        trace->act.push_back(a);
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
        arma::mat z = w[i] * a;
        z.each_col() += b[i];
        a = (i + 1 < w.size()) ? arma::mat(arma::tanh(z)) : z;
        if (trace) trace->act.push_back(a);
    }
    return a;
}

arma::mat Mlp::backward(const Trace& trace, const arma::mat& g_out, Mlp& grad) const {
    if (trace.act.size() != w.size() + 1) throw std::logic_error("trace does not match net");
    arma::mat g = g_out;
    for (std::size_t i = w.size(); i-- > 0;) {
        if (i + 1 < w.size()) {
            // tanh layer: act[i+1] holds tanh(z)
            g %= (1.0 - arma::square(trace.act[i + 1]));
        }
        grad.w[i] += g * trace.act[i].t();
        grad.b[i] += arma::sum(g, 1);
        g = w[i].t() * g;
    }
    return g;
}

Mlp Mlp::zeros_like() const {
    Mlp z;
    for (const auto& wi : w) z.w.emplace_back(arma::size(wi), arma::fill::zeros);
    for (const auto& bi : b) z.b.emplace_back(arma::size(bi), arma::fill::zeros);
    return z;
}

void Mlp::add_scaled(const Mlp& other, double scale) {
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] += scale * other.w[i];
        b[i] += scale * other.b[i];
    }
}

double Mlp::grad_norm() const {
    double acc = 0.0;
    for (const auto& wi : w) acc += arma::accu(arma::square(wi));
    for (const auto& bi : b) acc += arma::accu(arma::square(bi));
    return std::sqrt(acc);
}

int Mlp::param_count() const {
    int n = 0;
    for (const auto& wi : w) n += static_cast<int>(wi.n_elem);
    for (const auto& bi : b) n += static_cast<int>(bi.n_elem);
    return n;
}

std::vector<double> Mlp::flatten() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(param_count()));
    for (const auto& wi : w) out.insert(out.end(), wi.begin(), wi.end());
    for (const auto& bi : b) out.insert(out.end(), bi.begin(), bi.end());
    return out;
}

void Mlp::unflatten(const std::vector<double>& flat) {
    std::size_t pos = 0;
    for (auto& wi : w) {
        std::copy(flat.begin() + pos, flat.begin() + pos + wi.n_elem, wi.begin());
        pos += wi.n_elem;
    }
    for (auto& bi : b) {
        std::copy(flat.begin() + pos, flat.begin() + pos + bi.n_elem, bi.begin());
        pos += bi.n_elem;
    }
    if (pos != flat.size()) throw std::invalid_argument("flat parameter size mismatch");
}

} // namespace twinbeam
