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

namespace twinbeam {

/// One sampled future: per-link effective channels over the horizon plus
/// the per-link large-scale and blockage factors they were assembled from.
struct TrajectorySample {
    std::vector<arma::cx_mat> h_eff;  // [link] -> M_k x T
    arma::mat lambda;                 // (links) x T
    arma::mat xi;                     // (links) x T, entries in {1, eta}
    arma::vec interference;           // T; filled by finalize_bundle
    arma::vec sinr_hat;               // T; filled by finalize_bundle
};

/// M sampled futures over a common horizon. Sample 0 exists even for the
/// deterministic predictors (M = 1).
struct TrajectoryBundle {
    int horizon = 0;
    std::vector<TrajectorySample> samples;

    int num_samples() const { return static_cast<int>(samples.size()); }
    int num_links() const {
        return samples.empty() ? 0 : static_cast<int>(samples[0].h_eff.size());
    }
};

} // namespace twinbeam
