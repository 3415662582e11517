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

#include "twinbeam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace twinbeam {

double avg_interference(std::span<const double> trace) {
    if (trace.empty()) throw std::invalid_argument("empty interference trace");
    return pairwise_sum(trace) / static_cast<double>(trace.size());
}

std::vector<double> outage(std::span<const double> sinr_samples,
                           std::span<const double> gamma_grid) {
    if (sinr_samples.empty()) throw std::invalid_argument("no SINR samples");
    std::vector<double> sorted(sinr_samples.begin(), sinr_samples.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out;
    out.reserve(gamma_grid.size());
    const double n = static_cast<double>(sorted.size());
    for (double g : gamma_grid) {
        const auto below = std::lower_bound(sorted.begin(), sorted.end(), g);
        out.push_back(static_cast<double>(below - sorted.begin()) / n);
    }
    return out;
}

std::vector<std::pair<double, double>> sinr_cdf(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("no SINR samples");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, double>> out;
    out.reserve(sorted.size());
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        out.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
    return out;
}

double min_rate(std::span<const double> per_user_sinr) {
    if (per_user_sinr.empty()) throw std::invalid_argument("no users");
    double best = std::log2(1.0 + per_user_sinr[0]);
    for (double g : per_user_sinr) best = std::min(best, std::log2(1.0 + g));
    return best;
}

std::vector<double> default_threshold_grid_db() {
    std::vector<double> grid;
    for (int i = 0; i <= 50; ++i) grid.push_back(-5.0 + 0.5 * i);
    return grid;
}

std::string metrics_report_csv(const MetricsReport& r) {
    std::ostringstream out;
    out << "# config_hash=" << r.config_hash << " seed=" << r.seed << " scheme=" << r.scheme
        << " users=" << r.users << "\n";
    out << "metric,index,value\n";
    out << "avg_interference,0," << fmt_g17(r.avg_interference) << "\n";
    out << "min_rate,0," << fmt_g17(r.min_rate) << "\n";
    for (std::size_t i = 0; i < r.rmse_per_horizon.size(); ++i)
        out << "rmse," << (i + 1) << "," << fmt_g17(r.rmse_per_horizon[i]) << "\n";
    for (std::size_t i = 0; i < r.outage.size(); ++i)
        out << "outage," << fmt_g17(r.thresholds_db[i]) << "," << fmt_g17(r.outage[i]) << "\n";
    return out.str();
}

} // namespace twinbeam
