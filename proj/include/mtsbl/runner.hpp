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

#ifndef MTSBL_RUNNER_HPP
#define MTSBL_RUNNER_HPP

#include "mtsbl/config.hpp"

#include <functional>
#include <iosfwd>

namespace mtsbl {

inline constexpr const char *kMetricsHeader = "t,realization,rmse_norm,nmse,support_f1,iterations,mode,seed";

/// Metrics of one realization under one tracking mode, indexed by t.
struct ModeRun
{
    TrackMode mode;
    std::vector<StepMetrics> steps;
    std::vector<double> norm_estimate;   // mean_n ||h_hat[n]||
};

struct RealizationRun
{
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::vector<double> norm_truth;      // mean_n ||h[n]||
    std::vector<ModeRun> modes;
};

std::vector<TrackMode> modes_of(RunMode mode);

/// One seeded realization in every requested mode; the scenario is shared by the modes.
RealizationRun run_realization(const RunConfig &cfg, std::size_t index);

/// Writes the CSV rows of one realization in t-major order within each mode.
void write_metrics_rows(std::ostream &out, const RealizationRun &run);

/// Runs every realization on cfg.workers threads and writes metrics.csv,
/// summary.csv, manifest.json and, on request, truth.csv and the figures into
/// cfg.output_dir. Returns 0 on success and 1 after a numerical failure, in
/// which case metrics.csv ends with a FAILED marker row.
int run(const RunConfig &cfg, std::ostream &log);

using RealizationFn = std::function<RealizationRun(const RunConfig &, std::size_t)>;

/// As above with a replaceable per-realization step.
int run(const RunConfig &cfg, std::ostream &log, const RealizationFn &realize);

} // namespace mtsbl

#endif
