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

#include "mtsbl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

namespace mtsbl {

namespace {

void check_pair(const SubcarrierVectors &estimate, const SubcarrierVectors &truth, const char *who)
{
    if (estimate.size() != truth.size() || truth.empty())
        throw std::invalid_argument(std::string(who) + ": subcarrier count mismatch");
    for (std::size_t n = 0; n < truth.size(); ++n)
        if (estimate[n].size() != truth[n].size())
            throw std::invalid_argument(std::string(who) + ": dimension mismatch on subcarrier " + std::to_string(n));
}

Summary summarize(const std::vector<double> &values)
{
    const auto k = static_cast<double>(values.size());
    Summary s;
    for (double v : values)
        s.mean += v;
    s.mean /= k;
    for (double v : values)
        s.std += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(s.std / k);
    return s;
}

} // namespace

double rmse_channel_norm(const SubcarrierVectors &estimate, const SubcarrierVectors &truth)
{
    check_pair(estimate, truth, "rmse_channel_norm");
    double acc = 0.0;
    for (std::size_t n = 0; n < truth.size(); ++n)
    {
        const double gap = estimate[n].norm() - truth[n].norm();
        acc += gap * gap;
    }
    return std::sqrt(acc / static_cast<double>(truth.size()));
}

double nmse(const SubcarrierVectors &estimate, const SubcarrierVectors &truth)
{
    check_pair(estimate, truth, "nmse");
    double acc = 0.0;
    for (std::size_t n = 0; n < truth.size(); ++n)
    {
        const double ref = truth[n].squaredNorm();
        if (!(ref > 0.0))
            throw std::invalid_argument("nmse: zero-energy reference on subcarrier " + std::to_string(n));
        acc += (estimate[n] - truth[n]).squaredNorm() / ref;
    }
    return acc / static_cast<double>(truth.size());
}

double support_f1(const std::vector<std::size_t> &estimate, const std::vector<std::size_t> &truth)
{
    if (truth.empty())
        throw std::invalid_argument("support_f1: empty truth support");
    std::vector<std::size_t> est = estimate, ref = truth;
    std::sort(est.begin(), est.end());
    std::sort(ref.begin(), ref.end());
    std::vector<std::size_t> common;
    std::set_intersection(est.begin(), est.end(), ref.begin(), ref.end(), std::back_inserter(common));
    return 2.0 * static_cast<double>(common.size()) / static_cast<double>(est.size() + ref.size());
}

std::vector<std::size_t> magnitude_support(const SubcarrierVectors &h, double rel_threshold)
{
    if (!(rel_threshold > 0.0 && rel_threshold < 1.0))
        throw std::invalid_argument("support threshold must lie in (0, 1)");
    if (h.empty())
        return {};
    RealVector rms = RealVector::Zero(h.front().size());
    for (const auto &v : h)
        rms += v.cwiseAbs2();
    rms = rms.cwiseSqrt();
    const double peak = rms.maxCoeff();
    std::vector<std::size_t> out;
    if (peak <= 0.0)
        return out;
    for (Eigen::Index l = 0; l < rms.size(); ++l)
        if (rms(l) > rel_threshold * peak)
            out.push_back(static_cast<std::size_t>(l));
    return out;
}

double support_f1(const SubcarrierVectors &estimate, const SubcarrierVectors &truth, double rel_threshold)
{
    check_pair(estimate, truth, "support_f1");
    return support_f1(magnitude_support(estimate, rel_threshold), magnitude_support(truth, rel_threshold));
}

StepMetrics score_step(const SubcarrierVectors &estimate, const SubcarrierVectors &truth, std::size_t iterations,
                       double rel_threshold)
{
    StepMetrics m;
    m.rmse_norm = rmse_channel_norm(estimate, truth);
    m.nmse = nmse(estimate, truth);
    m.support_f1 = support_f1(estimate, truth, rel_threshold);
    m.iterations = static_cast<double>(iterations);
    return m;
}

std::vector<AggregateRow> aggregate(const std::vector<std::vector<StepMetrics>> &realizations)
{
    if (realizations.empty())
        throw std::invalid_argument("aggregate: no realizations");
    const std::size_t steps = realizations.front().size();
    for (const auto &r : realizations)
        if (r.size() != steps)
            throw std::invalid_argument("aggregate: realizations have different lengths");

    std::vector<AggregateRow> out(steps);
    std::vector<double> rmse, err, f1, iters;
    for (std::size_t t = 0; t < steps; ++t)
    {
        rmse.clear();
        err.clear();
        f1.clear();
        iters.clear();
        for (const auto &r : realizations)
        {
            rmse.push_back(r[t].rmse_norm);
            err.push_back(r[t].nmse);
            f1.push_back(r[t].support_f1);
            iters.push_back(r[t].iterations);
        }
        out[t] = {summarize(rmse), summarize(err), summarize(f1), summarize(iters)};
    }
    return out;
}

} // namespace mtsbl
