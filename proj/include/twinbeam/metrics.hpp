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

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "twinbeam/common.hpp"

namespace twinbeam {

struct MetricsReport {
    std::string scheme;
    int users = 0;  // interferer count K
    std::uint64_t seed = 0;
    std::string config_hash;
    double avg_interference = 0.0;          // watts
    std::vector<double> sinr_samples;       // linear, pooled across users and steps
    std::vector<double> thresholds_db;      // outage grid
    std::vector<double> outage;             // per grid point
    std::vector<double> rmse_per_horizon;   // tau = 1..T
    double min_rate = 0.0;                  // bits/s/Hz, averaged over steps
};

/// Time average of the interference trace.
double avg_interference(std::span<const double> trace);

/// Fraction of samples strictly below each threshold (linear units).
std::vector<double> outage(std::span<const double> sinr_samples,
                           std::span<const double> gamma_grid);

/// Empirical CDF: sorted (value, fraction <= value) pairs with 1/N steps.
std::vector<std::pair<double, double>> sinr_cdf(std::span<const double> samples);

/// Worst per-user rate min_k log2(1 + gamma_k).
double min_rate(std::span<const double> per_user_sinr);

/// -5 dB to 20 dB in 0.5 dB steps.
std::vector<double> default_threshold_grid_db();

std::string metrics_report_csv(const MetricsReport& r);

} // namespace twinbeam
