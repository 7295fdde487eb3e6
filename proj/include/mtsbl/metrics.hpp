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

#ifndef MTSBL_METRICS_HPP
#define MTSBL_METRICS_HPP

#include "mtsbl/types.hpp"

namespace mtsbl {

inline constexpr double kDefaultSupportThreshold = 0.05;

struct StepMetrics
{
    double rmse_norm = 0.0;
    double nmse = 0.0;
    double support_f1 = 0.0;
    double iterations = 0.0;
};

/// sqrt(mean_n (||est[n]|| - ||truth[n]||)^2)
double rmse_channel_norm(const SubcarrierVectors &estimate, const SubcarrierVectors &truth);

/// mean_n ||est[n] - truth[n]||^2 / ||truth[n]||^2
double nmse(const SubcarrierVectors &estimate, const SubcarrierVectors &truth);

/// F1 score between two index sets.
double support_f1(const std::vector<std::size_t> &estimate, const std::vector<std::size_t> &truth);

/// Indices whose RMS magnitude over subcarriers exceeds rel_threshold * peak.
std::vector<std::size_t> magnitude_support(const SubcarrierVectors &h, double rel_threshold);

/// F1 between the thresholded supports of estimate and truth.
double support_f1(const SubcarrierVectors &estimate, const SubcarrierVectors &truth,
                  double rel_threshold = kDefaultSupportThreshold);

StepMetrics score_step(const SubcarrierVectors &estimate, const SubcarrierVectors &truth, std::size_t iterations,
                       double rel_threshold = kDefaultSupportThreshold);

struct Summary
{
    double mean = 0.0;
    double std = 0.0;   // population convention (divide by K)
};

struct AggregateRow
{
    Summary rmse_norm, nmse, support_f1, iterations;
};

/// Mean and population standard deviation across realizations, per time step.
std::vector<AggregateRow> aggregate(const std::vector<std::vector<StepMetrics>> &realizations);

} // namespace mtsbl

#endif
