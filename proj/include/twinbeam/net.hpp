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
#include <vector>

#include "twinbeam/rng.hpp"

namespace twinbeam {

/// Fully-connected network, tanh hidden layers, linear output. Columns are
/// samples throughout, so batches run as matrix products.
struct Mlp {
    std::vector<arma::mat> w;  // per layer, out x in
    std::vector<arma::vec> b;

    struct Trace {
        std::vector<arma::mat> act;  // act[0] = input, act[i] = output of layer i
    };

    void init(const std::vector<int>& layer_dims, RngStream& rng);

    arma::mat forward(const arma::mat& x, Trace* trace = nullptr) const;

    /// Accumulates parameter gradients into `grad` (same shape, zeroed by
    /// caller) and returns the gradient with respect to the input.
    arma::mat backward(const Trace& trace, const arma::mat& g_out, Mlp& grad) const;

    Mlp zeros_like() const;
    void add_scaled(const Mlp& other, double scale);
    double grad_norm() const;
    int param_count() const;
    std::vector<double> flatten() const;
    void unflatten(const std::vector<double>& flat);
};

} // namespace twinbeam
