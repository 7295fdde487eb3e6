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

#ifndef MTSBL_SCENARIO_HPP
#define MTSBL_SCENARIO_HPP

#include "mtsbl/dictionary.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>

namespace mtsbl {

using Rng = std::mt19937_64;

// Synthetic multi-user uplink scenario: each user is a cluster of far-field
// paths around a random centre angle; angles drift between time steps and the
// whole environment can be redrawn at one step.
struct ScenarioConfig
{
    std::size_t n_bs = 64;
    std::size_t m_users = 2;
    std::size_t pilot_len = 4;
    std::size_t n_subcarriers = 40;
    double snr_db = 10.0;
    double aoa_min_deg = -80.0;
    double aoa_max_deg = 80.0;
    double angular_spread_deg = 2.0;
    std::size_t paths_per_user = 3;
    double drift_deg_per_step = 0.5;
    std::size_t t_steps = 50;                     // tracked steps t = 1..T after the t = 0 training step
    std::optional<std::size_t> env_change_at;     // step at which all users are redrawn
    std::uint64_t rng_seed = 1;
    double gain_ar_coeff = 0.999;                 // AR(1) coefficient of the path gains
    double max_delay_samples = 16.0;              // per-user delay drawn from [0, max)

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    /// Number of simulated steps, t = 0..horizon()-1.
    std::size_t horizon() const;
};

struct UserPaths
{
    std::vector<double> aoa_rad;   // physical angles of arrival
    std::vector<cplx> gain;
    double delay = 0.0;            // in samples; common to the cluster
};

/// Spatial frequency for a half-wavelength ULA, wrapped to [0, 2*pi).
double spatial_angle(double aoa_rad);

struct ChannelSnapshot
{
    std::vector<UserPaths> users;
    /// Beamspace channel per subcarrier, user blocks of N_BS stacked in user order.
    SubcarrierVectors h;
    /// Beams above 1% of the peak energy (identical on every subcarrier).
    std::vector<std::size_t> support;
};

struct ChannelTruth
{
    std::size_t n_bs = 0;
    std::size_t m_users = 0;
    std::size_t n_subcarriers = 0;
    std::vector<ChannelSnapshot> steps;
};

struct MeasurementBatch
{
    SubcarrierVectors y;
    double alpha0 = 0.0;      // true noise precision, +inf when noiseless
};

/// Mutually orthogonal pilots (scaled DFT rows), identical on every subcarrier.
PilotSet generate_pilots(std::size_t m_users, std::size_t pilot_len, std::span<const double> power,
                         std::size_t n_subcarriers);

/// Projects the multipath response of each user onto the DFT grid.
ChannelSnapshot snapshot_from_paths(std::vector<UserPaths> users, std::size_t n_bs, std::size_t n_subcarriers);

/// Beam indices whose energy (averaged over subcarriers) exceeds rel_energy times the peak.
std::vector<std::size_t> significant_beams(const SubcarrierVectors &h, double rel_energy);

ChannelTruth generate_channel(const ScenarioConfig &cfg, Rng &rng);

/// y[n] = Upsilon[n] h[n] + noise, noise variance set from snr_db; snr_db = +inf is noiseless.
MeasurementBatch synthesize_measurement(const ChannelSnapshot &truth, const OffGridDictionary &dict, double snr_db,
                                        Rng &rng);
/// Same with an explicit noise variance.
MeasurementBatch synthesize_measurement_with_noise(const ChannelSnapshot &truth, const OffGridDictionary &dict,
                                                   double noise_var, Rng &rng);

/// Everything one Monte-Carlo realization needs.
struct Realization
{
    ChannelTruth truth;
    OffGridDictionary dict;            // nu = 0
    std::vector<MeasurementBatch> measurements;
};

Realization simulate(const ScenarioConfig &cfg, PhaseReference ref = PhaseReference::ArrayCentre);

/// Audit dump of the beamspace truth: t,n,l,re,im.
void write_truth_csv(std::ostream &out, const ChannelTruth &truth);

/// Circularly-symmetric complex Gaussian with the given variance.
cplx complex_normal(Rng &rng, double variance);

} // namespace mtsbl

#endif
