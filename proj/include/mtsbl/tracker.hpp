// SPDX-License-Identifier: Apache-2.0
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

#ifndef MTSBL_TRACKER_HPP
#define MTSBL_TRACKER_HPP

#include "mtsbl/sbl.hpp"
#include "mtsbl/scenario.hpp"

#include <optional>
#include <utility>

namespace mtsbl {

// Dynamic filtering: the estimate of step t-1 sets the Gamma hyperpriors of
// step t through the closed-form MSE-optimal precision.

enum class TrackMode
{
    DynamicFiltering,   // warm-start c, d from the previous estimate
    Ablation,           // reset c = d = 0.01 at every step
};

const char *to_string(TrackMode mode);

struct BlurOptions
{
    double width = 1.0;             // Gaussian kernel std-dev in grid cells
    std::optional<double> q;        // perturbation variance; default 1e-4 * mean power
};

struct DynamicPrediction
{
    enum class Source { PreviousEstimate, BlurredPreviousEstimate };
    SubcarrierVectors hbar;
    Source source = Source::PreviousEstimate;
};

/// Identity prediction by default; with blur, each user block is circularly
/// convolved with a normalized Gaussian kernel and perturbed with variance q.
DynamicPrediction predict(const SubcarrierVectors &previous, std::size_t n_bs, const std::optional<BlurOptions> &blur,
                          Rng &rng);

/// alpha_opt,l = 1 / mean_n |hbar_l[n]|^2, clamped to 1e12 below 1e-12 power.
RealVector alpha_opt(const DynamicPrediction &prediction, std::size_t n_subcarriers);

/// d_l = 1, c_l = alpha_opt,l, or sqrt(alpha_opt,l) above large_threshold.
std::pair<RealVector, RealVector> hyper_warm_start(const RealVector &alpha_opt, double large_threshold);

struct TrackerConfig
{
    double beta_th = 1e-3;
    std::size_t i_iter = 1000;
    double large_threshold = 1e3;
    TrackMode mode = TrackMode::DynamicFiltering;
    std::optional<BlurOptions> blur;
    bool update_offgrid = true;
    std::uint64_t blur_seed = 0;
};

struct StepRecord
{
    SubcarrierVectors h_hat;      // coefficients on Omega(nu_estimate)
    SubcarrierVectors h_grid;     // the same estimate mapped onto the DFT beamspace
    std::size_t iterations = 0;
    double rho = 0.0;
    RealVector alpha;
    double alpha0 = 0.0;
    OffGridVector nu{1};
    double seconds = 0.0;
};

struct TrackRecord
{
    std::vector<StepRecord> steps;
};

TrackRecord track(const std::vector<MeasurementBatch> &measurements, const OffGridDictionary &dict,
                  const TrackerConfig &cfg);

} // namespace mtsbl

#endif
