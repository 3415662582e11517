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

#include <string>
#include <vector>

#include "twinbeam/bundle.hpp"
#include "twinbeam/dynamics.hpp"
#include "twinbeam/net.hpp"

namespace twinbeam {

struct GanHyperParams {
    int hidden = 128;
    int hidden_layers = 2;
    int latent_dim = 16;
    double lambda_pred = 10.0;  // weight of the consistency term
    double mu = 1.0;            // interference-fidelity weight inside it
    double lr_gen = 3e-4;
    double lr_disc = 1e-3;
    int epochs = 24;
    int batch = 16;
    double label_smooth = 0.9;
    double val_fraction = 0.2;  // trailing time blocks per scenario
};

/// Conditional generator/discriminator pair plus the normalization
/// statistics and link powers needed to rebuild physical trajectories.
/// Immutable at inference time.
struct GenerativeModel {
    DatasetDims dims;
    GanHyperParams hp;
    Mlp gen;
    Mlp disc;
    arma::vec feat_mean, feat_std;      // per feature dimension
    arma::vec target_mean, target_std;  // per target dimension (see notes below)
    std::vector<double> powers;         // per link, watts
    double blockage_eta = 0.01;
    bool trained = false;

    int cond_dim() const { return dims.cond_dim(); }
    int out_dim() const { return dims.target_dim() - dims.horizon; }  // no interference head
    int disc_in_dim() const { return cond_dim() + out_dim() + dims.horizon; }
};

/// Normalization conventions: shape dimensions are z-scored raw; lambda and
/// reference-interference dimensions are z-scored in log10; blockage
/// dimensions pass through untouched (sigmoid head against {1,0} targets).
GenerativeModel init_model(const DtDataset& ds, const GanHyperParams& hp,
                           const std::vector<double>& powers, double blockage_eta,
                           std::uint64_t seed);

/// Consistency loss of one emitted trajectory against one dataset target
/// column: summed squared residuals of shapes and large-scale terms plus
/// mu times the squared interference residual, all in normalized units.
/// `emitted` uses the generator layout with the blockage block already
/// mapped through the sigmoid.
double pred_loss(const GenerativeModel& m, const arma::vec& emitted,
                 const arma::vec& target);

/// d pred_loss / d emitted (including the assembled-interference path).
arma::vec pred_loss_grad(const GenerativeModel& m, const arma::vec& emitted,
                         const arma::vec& target);

/// Maps raw generator output (blockage entries are logits) to the emitted
/// trajectory representation.
arma::vec emitted_from_raw(const GenerativeModel& m, const arma::vec& raw);

/// Value of the adversarial objective for one (real, fake) score pair.
double adversarial_value(double d_real, double d_fake);

struct TrainLogRow {
    int epoch = 0;
    double disc_loss = 0.0;
    double adv_value = 0.0;
    double gen_pred = 0.0;     // mean consistency loss on the training split
    double val_pred = 0.0;     // mean consistency loss on the validation split
    double gnorm_adv = 0.0;    // generator gradient norm, adversarial part
    double gnorm_pred = 0.0;   // generator gradient norm, consistency part
};

struct TrainLog {
    std::vector<TrainLogRow> rows;
    std::string to_csv() const;
};

/// Alternating SGD on the adversarial and consistency objectives. Pass a
/// previous model to resume; epochs continue the numbering.
TrainLog train_generative(GenerativeModel& model, const DtDataset& ds, std::uint64_t seed,
                          int start_epoch = 0);

/// Decodes M latent draws into trajectories; blockage quantized to {1, eta},
/// effective channels assembled as sqrt(lambda xi) times the emitted shape.
TrajectoryBundle generate_trajectories(const GenerativeModel& model,
                                       const arma::vec& features_raw, int num_samples,
                                       RngStream& latent_rng);

/// Constant-velocity forward roll with the perturbation disabled; geometry
/// implies blockage and regimes; single trajectory.
TrajectoryBundle deterministic_dt_predict(const Scene& scene, const EnvState& env,
                                          const ScenarioConfig& cfg, int horizon);

/// The realized future of this scenario (genie continuation).
TrajectoryBundle oracle_predict(const Scene& scene, const EnvState& env,
                                const ScenarioConfig& cfg, std::uint64_t seed, int horizon);

/// Root-mean-square error per horizon step; both matrices are horizon x steps.
arma::vec prediction_rmse(const arma::mat& predicted, const arma::mat& realized);

void save_model(const GenerativeModel& model, const std::string& path);
GenerativeModel load_model(const std::string& path);

} // namespace twinbeam
