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

#include "mtsbl/tracker.hpp"

#include <chrono>
#include <cmath>

namespace mtsbl {

namespace {

constexpr double kInactivePower = 1e-12;

ComplexVector blur_blocks(const ComplexVector &h, std::size_t n_bs, double width)
{
    const auto nb = static_cast<Eigen::Index>(n_bs);
    RealVector kernel(nb);
    for (Eigen::Index k = 0; k < nb; ++k)
    {
        const double dist = static_cast<double>(std::min(k, nb - k));   // circular distance
        kernel(k) = std::exp(-0.5 * dist * dist / (width * width));
    }
    kernel /= kernel.sum();

    ComplexVector out = ComplexVector::Zero(h.size());
    for (Eigen::Index block = 0; block < h.size() / nb; ++block)
        for (Eigen::Index r = 0; r < nb; ++r)
            for (Eigen::Index k = 0; k < nb; ++k)
                if (kernel(k) != 0.0)
                    out(block * nb + r) += kernel(k) * h(block * nb + (r - k + nb) % nb);
    return out;
}

} // namespace

const char *to_string(TrackMode mode)
{
    return mode == TrackMode::DynamicFiltering ? "df" : "ablation";
}

DynamicPrediction predict(const SubcarrierVectors &previous, std::size_t n_bs, const std::optional<BlurOptions> &blur,
                          Rng &rng)
{
    DynamicPrediction out;
    if (!blur)
    {
        out.hbar = previous;
        return out;
    }
    if (!(blur->width > 0.0))
        throw std::invalid_argument("predict: blur kernel width must be positive");

    out.source = DynamicPrediction::Source::BlurredPreviousEstimate;
    double power = 0.0;
    std::size_t count = 0;
    for (const auto &h : previous)
    {
        if (static_cast<std::size_t>(h.size()) % n_bs != 0)
            throw std::invalid_argument("predict: channel length is not a multiple of N_BS");
        out.hbar.push_back(blur_blocks(h, n_bs, blur->width));
        power += h.squaredNorm();
        count += static_cast<std::size_t>(h.size());
    }
    const double q = blur->q.value_or(count > 0 ? 1e-4 * power / static_cast<double>(count) : 0.0);
    if (q < 0.0)
        throw std::invalid_argument("predict: perturbation variance must be >= 0");
    if (q > 0.0)
        for (auto &h : out.hbar)
            for (Eigen::Index l = 0; l < h.size(); ++l)
                h(l) += complex_normal(rng, q);
    return out;
}

RealVector alpha_opt(const DynamicPrediction &prediction, std::size_t n_subcarriers)
{
    if (prediction.hbar.empty() || prediction.hbar.size() != n_subcarriers)
        throw std::invalid_argument("alpha_opt: prediction must cover every subcarrier");
    RealVector power = RealVector::Zero(prediction.hbar.front().size());
    for (const auto &h : prediction.hbar)
        power += h.cwiseAbs2();
    power /= static_cast<double>(n_subcarriers);

    RealVector out(power.size());
    for (Eigen::Index l = 0; l < power.size(); ++l)
        out(l) = power(l) < kInactivePower ? kAlphaCeiling : 1.0 / power(l);
    return out;
}

std::pair<RealVector, RealVector> hyper_warm_start(const RealVector &alpha_opt, double large_threshold)
{
    RealVector c(alpha_opt.size());
    for (Eigen::Index l = 0; l < c.size(); ++l)
        c(l) = alpha_opt(l) <= large_threshold ? alpha_opt(l) : std::sqrt(alpha_opt(l));
    return {c, RealVector::Ones(alpha_opt.size())};
}

TrackRecord track(const std::vector<MeasurementBatch> &measurements, const OffGridDictionary &dict,
                  const TrackerConfig &cfg)
{
    if (measurements.empty())
        throw std::invalid_argument("track: no measurements");

    OffGridDictionary work = dict;
    Hyperparameters hyper = Hyperparameters::initial(dict.n_coeffs());
    work.nu = OffGridVector(dict.n_bs());
    Rng blur_rng(cfg.blur_seed);

    EmOptions options;
    options.beta_th = cfg.beta_th;
    options.max_iter = cfg.i_iter;
    options.update_offgrid = cfg.update_offgrid;

    TrackRecord record;
    for (std::size_t t = 0; t < measurements.size(); ++t)
    {
        const auto start = std::chrono::steady_clock::now();
        EmResult em = [&] {
            try
            {
                return run_em(measurements[t].y, work, hyper, options);
            }
            catch (const NumericalError &e)
            {
                throw NumericalError(std::string(e.what()) + " [time step " + std::to_string(t) + "]", e.subcarrier(),
                                     e.iteration(), static_cast<long>(t));
            }
        }();

        StepRecord step;
        step.iterations = em.state.iter;
        step.rho = em.state.rho;
        step.alpha = em.hyper.alpha;
        step.alpha0 = em.hyper.alpha0;
        step.nu = em.nu_estimate;
        for (const auto &h : em.h_hat)
            step.h_grid.push_back(to_grid_beamspace(h, work, em.nu_estimate));
        step.h_hat = em.h_hat;

        // alpha, alpha0 and nu carry over; only the Gamma hyperpriors are reset.
        hyper = em.hyper;
        work.nu = em.nu;
        if (cfg.mode == TrackMode::DynamicFiltering)
        {
            const DynamicPrediction pred = predict(em.h_hat, dict.n_bs(), cfg.blur, blur_rng);
            std::tie(hyper.c, hyper.d) = hyper_warm_start(alpha_opt(pred, dict.n_subcarriers()), cfg.large_threshold);
        }
        else
        {
            hyper.c.setConstant(0.01);
            hyper.d.setConstant(0.01);
        }

        step.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        record.steps.push_back(std::move(step));
    }
    return record;
}

} // namespace mtsbl
