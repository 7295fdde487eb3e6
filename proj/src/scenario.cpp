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

#include "mtsbl/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace mtsbl {

namespace {

double deg2rad(double deg) { return deg * kPi / 180.0; }

void fail(const std::string &field, const std::string &why)
{
    throw std::invalid_argument("scenario." + field + ": " + why);
}

UserPaths draw_user(const ScenarioConfig &cfg, Rng &rng)
{
    std::uniform_real_distribution<double> centre_dist(cfg.aoa_min_deg, cfg.aoa_max_deg);
    const double centre = cfg.aoa_min_deg == cfg.aoa_max_deg ? cfg.aoa_min_deg : centre_dist(rng);
    const double half = 0.5 * cfg.angular_spread_deg;
    std::uniform_real_distribution<double> offset_dist(-half, half);
    std::uniform_real_distribution<double> delay_dist(0.0, cfg.max_delay_samples);

    UserPaths user;
    const double path_power = 1.0 / static_cast<double>(cfg.paths_per_user);
    for (std::size_t p = 0; p < cfg.paths_per_user; ++p)
    {
        const double offset = half > 0.0 ? offset_dist(rng) : 0.0;
        user.aoa_rad.push_back(deg2rad(std::clamp(centre + offset, -90.0, 90.0)));
        user.gain.push_back(complex_normal(rng, path_power));
    }
    user.delay = cfg.max_delay_samples > 0.0 ? delay_dist(rng) : 0.0;
    return user;
}

void evolve_user(const ScenarioConfig &cfg, UserPaths &user, Rng &rng)
{
    std::uniform_real_distribution<double> step_dist(-cfg.drift_deg_per_step, cfg.drift_deg_per_step);
    const double step = cfg.drift_deg_per_step > 0.0 ? deg2rad(step_dist(rng)) : 0.0;
    for (double &aoa : user.aoa_rad)
        aoa = std::clamp(aoa + step, -kPi / 2.0, kPi / 2.0);

    const double rho = cfg.gain_ar_coeff;
    const double innovation = (1.0 - rho * rho) / static_cast<double>(cfg.paths_per_user);
    for (cplx &g : user.gain)
        g = rho * g + (innovation > 0.0 ? complex_normal(rng, innovation) : cplx{});
}

} // namespace

void ScenarioConfig::validate() const
{
    if (n_bs == 0)
        fail("n_bs", "must be at least 1");
    if (m_users == 0)
        fail("m_users", "must be at least 1");
    if (pilot_len < m_users)
        fail("pilot_len", "must be >= m_users for orthogonal pilots");
    if (n_subcarriers == 0)
        fail("n_subcarriers", "must be at least 1");
    if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
        fail("snr_db", "must be finite or +inf (noiseless)");
    if (aoa_min_deg > aoa_max_deg)
        fail("aoa_min_deg", "empty angle range");
    if (aoa_min_deg < -90.0 || aoa_max_deg > 90.0)
        fail("aoa_min_deg", "angle range must lie within [-90, 90] degrees");
    if (!(angular_spread_deg >= 0.0))
        fail("angular_spread_deg", "must be >= 0");
    if (paths_per_user == 0)
        fail("paths_per_user", "must be at least 1");
    if (!(drift_deg_per_step >= 0.0))
        fail("drift_deg_per_step", "must be >= 0");
    if (t_steps < 1)
        fail("t_steps", "must be at least 1");
    if (!(gain_ar_coeff >= 0.0 && gain_ar_coeff <= 1.0))
        fail("gain_ar_coeff", "must lie in [0, 1]");
    if (!(max_delay_samples >= 0.0))
        fail("max_delay_samples", "must be >= 0");
}

std::size_t ScenarioConfig::horizon() const
{
    return std::max(t_steps, env_change_at.value_or(0)) + 1;
}

double spatial_angle(double aoa_rad)
{
    double theta = kPi * std::sin(aoa_rad);
    if (theta < 0.0)
        theta += 2.0 * kPi;
    return theta;
}

cplx complex_normal(Rng &rng, double variance)
{
    std::normal_distribution<double> dist(0.0, std::sqrt(0.5 * variance));
    const double re = dist(rng);
    const double im = dist(rng);
    return {re, im};
}

PilotSet generate_pilots(std::size_t m_users, std::size_t pilot_len, std::span<const double> power,
                         std::size_t n_subcarriers)
{
    if (m_users == 0 || n_subcarriers == 0)
        throw std::invalid_argument("generate_pilots: need at least one user and one subcarrier");
    if (pilot_len < m_users)
        throw std::invalid_argument("generate_pilots: pilot length " + std::to_string(pilot_len) +
                                    " cannot hold " + std::to_string(m_users) + " orthogonal pilots");
    if (power.size() != m_users)
        throw std::invalid_argument("generate_pilots: one power per user required");

    PilotSet pilots(m_users);
    const auto len = static_cast<Eigen::Index>(pilot_len);
    for (std::size_t m = 0; m < m_users; ++m)
    {
        if (!(power[m] > 0.0))
            throw std::invalid_argument("generate_pilots: pilot power must be positive");
        ComplexVector x(len);
        const double amp = std::sqrt(power[m] / static_cast<double>(pilot_len));
        for (Eigen::Index i = 0; i < len; ++i)
        {
            const double phase = -2.0 * kPi * static_cast<double>(m) * static_cast<double>(i) / static_cast<double>(pilot_len);
            x(i) = std::polar(amp, phase);
        }
        pilots[m].assign(n_subcarriers, x);
    }
    return pilots;
}

ChannelSnapshot snapshot_from_paths(std::vector<UserPaths> users, std::size_t n_bs, std::size_t n_subcarriers)
{
    const auto nb = static_cast<Eigen::Index>(n_bs);
    const ComplexMatrix f = dft_matrix(n_bs);

    // Antenna-domain response at n = 0 with unit-modulus array entries, so a unit
    // gain gives unit power per antenna. The cluster delay only rotates it across
    // subcarriers.
    const double array_gain = std::sqrt(static_cast<double>(n_bs));
    std::vector<ComplexVector> beams;
    for (const auto &user : users)
    {
        ComplexVector g = ComplexVector::Zero(nb);
        for (std::size_t p = 0; p < user.aoa_rad.size(); ++p)
            g += array_gain * user.gain[p] * steering_vector(n_bs, spatial_angle(user.aoa_rad[p]));
        beams.push_back(f.adjoint() * g);
    }

    ChannelSnapshot snap;
    snap.h.reserve(n_subcarriers);
    for (std::size_t n = 0; n < n_subcarriers; ++n)
    {
        ComplexVector h(nb * static_cast<Eigen::Index>(users.size()));
        for (std::size_t m = 0; m < users.size(); ++m)
        {
            const cplx rot = std::polar(1.0, -2.0 * kPi * static_cast<double>(n) * users[m].delay /
                                                 static_cast<double>(n_subcarriers));
            h.segment(static_cast<Eigen::Index>(m) * nb, nb) = rot * beams[m];
        }
        snap.h.push_back(std::move(h));
    }
    snap.users = std::move(users);
    snap.support = significant_beams(snap.h, 0.01);
    return snap;
}

std::vector<std::size_t> significant_beams(const SubcarrierVectors &h, double rel_energy)
{
    if (h.empty())
        return {};
    RealVector energy = RealVector::Zero(h.front().size());
    for (const auto &v : h)
        energy += v.cwiseAbs2();
    const double peak = energy.maxCoeff();
    std::vector<std::size_t> support;
    if (peak <= 0.0)
        return support;
    for (Eigen::Index l = 0; l < energy.size(); ++l)
        if (energy(l) > rel_energy * peak)
            support.push_back(static_cast<std::size_t>(l));
    return support;
}

ChannelTruth generate_channel(const ScenarioConfig &cfg, Rng &rng)
{
    cfg.validate();
    ChannelTruth truth;
    truth.n_bs = cfg.n_bs;
    truth.m_users = cfg.m_users;
    truth.n_subcarriers = cfg.n_subcarriers;

    std::vector<UserPaths> users;
    for (std::size_t m = 0; m < cfg.m_users; ++m)
        users.push_back(draw_user(cfg, rng));

    const std::size_t steps = cfg.horizon();
    for (std::size_t t = 0; t < steps; ++t)
    {
        if (t > 0)
        {
            if (cfg.env_change_at && *cfg.env_change_at == t)
                for (auto &user : users)
                    user = draw_user(cfg, rng);
            else
                for (auto &user : users)
                    evolve_user(cfg, user, rng);
        }
        truth.steps.push_back(snapshot_from_paths(users, cfg.n_bs, cfg.n_subcarriers));
    }
    return truth;
}

MeasurementBatch synthesize_measurement_with_noise(const ChannelSnapshot &truth, const OffGridDictionary &dict,
                                                   double noise_var, Rng &rng)
{
    if (truth.h.size() != dict.n_subcarriers())
        throw std::invalid_argument("synthesize_measurement: subcarrier count mismatch");
    if (!(noise_var >= 0.0))
        throw std::invalid_argument("synthesize_measurement: noise variance must be >= 0");

    MeasurementBatch batch;
    batch.alpha0 = noise_var > 0.0 ? 1.0 / noise_var : std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < truth.h.size(); ++n)
    {
        const ComplexMatrix ups = stacked_dictionary(dict, n);
        if (ups.cols() != truth.h[n].size())
            throw std::invalid_argument("synthesize_measurement: channel/dictionary dimension mismatch");
        ComplexVector y = ups * truth.h[n];
        if (noise_var > 0.0)
            for (Eigen::Index i = 0; i < y.size(); ++i)
                y(i) += complex_normal(rng, noise_var);
        batch.y.push_back(std::move(y));
    }
    return batch;
}

MeasurementBatch synthesize_measurement(const ChannelSnapshot &truth, const OffGridDictionary &dict, double snr_db,
                                        Rng &rng)
{
    if (std::isnan(snr_db))
        throw std::invalid_argument("synthesize_measurement: SNR is NaN");
    if (snr_db == std::numeric_limits<double>::infinity())
        return synthesize_measurement_with_noise(truth, dict, 0.0, rng);

    // Mean received signal energy per complex sample, averaged over subcarriers.
    double energy = 0.0;
    std::size_t samples = 0;
    for (std::size_t n = 0; n < truth.h.size(); ++n)
    {
        const ComplexVector s = stacked_dictionary(dict, n) * truth.h[n];
        energy += s.squaredNorm();
        samples += static_cast<std::size_t>(s.size());
    }
    if (samples == 0 || energy <= 0.0)
        throw std::invalid_argument("synthesize_measurement: SNR undefined for a zero signal");
    const double signal_per_sample = energy / static_cast<double>(samples);
    return synthesize_measurement_with_noise(truth, dict, signal_per_sample * std::pow(10.0, -snr_db / 10.0), rng);
}

Realization simulate(const ScenarioConfig &cfg, PhaseReference ref)
{
    cfg.validate();
    Rng rng(cfg.rng_seed);
    const std::vector<double> power(cfg.m_users, 1.0);
    Realization out{generate_channel(cfg, rng),
                    OffGridDictionary(cfg.n_bs, generate_pilots(cfg.m_users, cfg.pilot_len, power, cfg.n_subcarriers), ref),
                    {}};
    for (const auto &snap : out.truth.steps)
        out.measurements.push_back(synthesize_measurement(snap, out.dict, cfg.snr_db, rng));
    return out;
}

void write_truth_csv(std::ostream &out, const ChannelTruth &truth)
{
    out << "t,n,l,re,im\n";
    out.precision(17);
    for (std::size_t t = 0; t < truth.steps.size(); ++t)
        for (std::size_t n = 0; n < truth.steps[t].h.size(); ++n)
        {
            const ComplexVector &h = truth.steps[t].h[n];
            for (Eigen::Index l = 0; l < h.size(); ++l)
                out << t << ',' << n << ',' << l << ',' << h(l).real() << ',' << h(l).imag() << '\n';
        }
}

} // namespace mtsbl
