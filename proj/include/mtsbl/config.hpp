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

#ifndef MTSBL_CONFIG_HPP
#define MTSBL_CONFIG_HPP

#include "mtsbl/scenario.hpp"
#include "mtsbl/metrics.hpp"
#include "mtsbl/tracker.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace mtsbl {

inline constexpr const char *kVersion = "0.1.0";

enum class RunMode
{
    DynamicFiltering,
    Ablation,
    Both,
};

const char *to_string(RunMode mode);
RunMode parse_run_mode(const std::string &text);

// Experiment configuration. Grammar (INI, every key optional):
//
//   [scenario]  n_bs m_users pilot_len n_subcarriers snr_db aoa_min_deg aoa_max_deg
//               angular_spread_deg paths_per_user drift_deg_per_step t_steps
//               env_change_at gain_ar_coeff max_delay_samples
//   [algorithm] beta_th i_iter large_threshold mode update_offgrid
//               offgrid_reference blur_width blur_q
//   [run]       realizations base_seed workers output_dir emit_plots
//               support_threshold write_truth
//
// Unknown sections or keys are rejected. Setting blur_width (or blur_q) enables
// the blurred prediction. A manifest.json written by a previous run can be
// passed instead of an INI file; its "config" object uses the same layout.
struct RunConfig
{
    ScenarioConfig scenario;
    double beta_th = 1e-3;
    std::size_t i_iter = 1000;
    std::size_t realizations = 100;
    RunMode mode = RunMode::DynamicFiltering;
    double large_threshold = 1e3;
    std::optional<BlurOptions> blur;
    bool update_offgrid = true;
    PhaseReference offgrid_reference = PhaseReference::ArrayCentre;
    std::filesystem::path output_dir = "results";
    bool emit_plots = false;
    std::uint64_t base_seed = 1;
    std::size_t workers = 1;
    double support_threshold = kDefaultSupportThreshold;
    bool write_truth = false;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    TrackerConfig tracker(TrackMode mode, std::uint64_t seed) const;
};

class ConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Reads an INI file, or a run manifest when the extension is .json.
RunConfig parse_config(const std::filesystem::path &path);
/// INI text, for tests and embedding.
RunConfig parse_config_text(const std::string &ini);

/// Every field with its effective value, in the section layout parse_config reads.
nlohmann::json config_to_json(const RunConfig &cfg);
/// The same settings in the INI grammar; parse_config_text reads it back.
std::string config_to_ini(const RunConfig &cfg);

} // namespace mtsbl

#endif
