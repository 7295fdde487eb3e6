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

#include "mtsbl/dictionary.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace mtsbl {

namespace {

void require_positive_size(std::size_t n_bs, const char *who)
{
    if (n_bs == 0)
        throw std::invalid_argument(std::string(who) + ": antenna count must be at least 1");
}

// Slack for offsets produced by clipping at exactly +-delta/2.
constexpr double kBoxSlack = 1e-12;

} // namespace

ComplexVector steering_vector(std::size_t n_bs, double theta)
{
    require_positive_size(n_bs, "steering_vector");
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_bs));
    ComplexVector a(static_cast<Eigen::Index>(n_bs));
    for (Eigen::Index r = 0; r < a.size(); ++r)
        a(r) = scale * std::polar(1.0, -static_cast<double>(r) * theta);
    return a;
}

ComplexMatrix dft_matrix(std::size_t n_bs)
{
    require_positive_size(n_bs, "dft_matrix");
    const double delta = grid_spacing(n_bs);
    ComplexMatrix f(static_cast<Eigen::Index>(n_bs), static_cast<Eigen::Index>(n_bs));
    for (Eigen::Index k = 0; k < f.cols(); ++k)
        f.col(k) = steering_vector(n_bs, delta * static_cast<double>(k));
    return f;
}

const char *to_string(PhaseReference ref)
{
    return ref == PhaseReference::FirstElement ? "first" : "centre";
}

PhaseReference parse_phase_reference(const std::string &text)
{
    if (text == "first")
        return PhaseReference::FirstElement;
    if (text == "centre" || text == "center")
        return PhaseReference::ArrayCentre;
    throw std::invalid_argument("unknown phase reference '" + text + "' (expected first or centre)");
}

ComplexMatrix dft_derivative_matrix(std::size_t n_bs, PhaseReference ref)
{
    require_positive_size(n_bs, "dft_derivative_matrix");
    const double centre = ref == PhaseReference::ArrayCentre ? 0.5 * static_cast<double>(n_bs - 1) : 0.0;
    ComplexMatrix d = dft_matrix(n_bs);
    // d/dtheta exp(-j (r - c) theta) = -j (r - c) exp(-j (r - c) theta)
    for (Eigen::Index r = 0; r < d.rows(); ++r)
        d.row(r) *= cplx(0.0, -(static_cast<double>(r) - centre));
    return d;
}

OffGridVector::OffGridVector(std::size_t n_bs)
    : values_(RealVector::Zero(static_cast<Eigen::Index>(n_bs))), delta_(grid_spacing(n_bs))
{
    require_positive_size(n_bs, "OffGridVector");
}

OffGridVector::OffGridVector(RealVector values, std::size_t n_bs)
    : values_(std::move(values)), delta_(grid_spacing(n_bs))
{
    require_positive_size(n_bs, "OffGridVector");
    if (static_cast<std::size_t>(values_.size()) != n_bs)
        throw std::invalid_argument("OffGridVector: expected " + std::to_string(n_bs) + " offsets, got " +
                                    std::to_string(values_.size()));
    const double bound = half_width() + kBoxSlack;
    for (Eigen::Index r = 0; r < values_.size(); ++r)
        if (!std::isfinite(values_(r)) || std::abs(values_(r)) > bound)
            throw std::invalid_argument("OffGridVector: offset " + std::to_string(r) + " outside [-delta/2, delta/2]");
}

OffGridVector OffGridVector::clipped(const RealVector &values, std::size_t n_bs)
{
    const double half = 0.5 * grid_spacing(n_bs);
    return OffGridVector(values.cwiseMax(-half).cwiseMin(half), n_bs);
}

ComplexMatrix steering_offgrid(const ComplexMatrix &f_base, const ComplexMatrix &f_deriv, const OffGridVector &nu)
{
    if (f_base.rows() != f_deriv.rows() || f_base.cols() != f_deriv.cols() ||
        static_cast<std::size_t>(f_base.cols()) != nu.size())
        throw std::invalid_argument("steering_offgrid: dimension mismatch");
    return f_base + f_deriv * nu.values().cast<cplx>().asDiagonal();
}

ComplexMatrix user_dictionary(const ComplexVector &pilot, const ComplexMatrix &omega)
{
    if (pilot.size() == 0)
        throw std::invalid_argument("user_dictionary: empty pilot");
    const Eigen::Index n_bs = omega.rows();
    ComplexMatrix out(n_bs * pilot.size(), omega.cols());
    for (Eigen::Index i = 0; i < pilot.size(); ++i)
        out.middleRows(i * n_bs, n_bs) = pilot(i) * omega;
    return out;
}

OffGridDictionary::OffGridDictionary(std::size_t n_bs, PilotSet pilot_set, PhaseReference ref)
    : f_base(dft_matrix(n_bs)), f_deriv(dft_derivative_matrix(n_bs, ref)), nu(n_bs), pilots(std::move(pilot_set))
{
    if (pilots.empty())
        throw std::invalid_argument("OffGridDictionary: no users");
    for (const auto &user : pilots)
        if (user.size() != pilots.front().size())
            throw std::invalid_argument("OffGridDictionary: users disagree on subcarrier count");
    pilot_len();
}

std::size_t OffGridDictionary::pilot_len() const
{
    const auto len = static_cast<std::size_t>(pilots.front().front().size());
    if (len == 0)
        throw std::invalid_argument("OffGridDictionary: empty pilot");
    for (const auto &user : pilots)
        for (const auto &x : user)
            if (static_cast<std::size_t>(x.size()) != len)
                throw std::invalid_argument("OffGridDictionary: unequal pilot lengths across users");
    return len;
}

ComplexMatrix OffGridDictionary::pilot_gram(std::size_t n) const
{
    const auto m_users = static_cast<Eigen::Index>(n_users());
    ComplexMatrix g(m_users, m_users);
    for (Eigen::Index m = 0; m < m_users; ++m)
        for (Eigen::Index k = 0; k < m_users; ++k)
            g(m, k) = pilots[m][n].dot(pilots[k][n]);
    return g;
}

ComplexMatrix stacked_dictionary(const OffGridDictionary &dict, std::size_t n)
{
    const std::size_t len = dict.pilot_len();
    if (n >= dict.n_subcarriers())
        throw std::out_of_range("stacked_dictionary: subcarrier index out of range");
    const ComplexMatrix omega = dict.omega();
    const auto n_bs = static_cast<Eigen::Index>(dict.n_bs());
    ComplexMatrix out(n_bs * static_cast<Eigen::Index>(len), n_bs * static_cast<Eigen::Index>(dict.n_users()));
    for (std::size_t m = 0; m < dict.n_users(); ++m)
        out.middleCols(static_cast<Eigen::Index>(m) * n_bs, n_bs) = user_dictionary(dict.pilots[m][n], omega);
    return out;
}

GramSpectrum gram_eigenstructure(std::span<const double> power, const ComplexMatrix &omega)
{
    if (power.empty())
        throw std::invalid_argument("gram_eigenstructure: no users");
    for (double p : power)
        if (!(p > 0.0))
            throw std::invalid_argument("gram_eigenstructure: pilot power must be positive");

    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(omega.adjoint() * omega, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw NumericalError("gram_eigenstructure: eigensolver failed");

    GramSpectrum out;
    out.omega_eigenvalues = solver.eigenvalues();
    const Eigen::Index n_bs = omega.cols();
    out.eigenvalues.resize(static_cast<Eigen::Index>(power.size()) * n_bs);
    for (std::size_t m = 0; m < power.size(); ++m)
        out.eigenvalues.segment(static_cast<Eigen::Index>(m) * n_bs, n_bs) = power[m] * out.omega_eigenvalues;
    out.note = "valid for mutually orthogonal pilots with per-user power p (Gram = diag(p) kron Omega^H Omega)";
    return out;
}

} // namespace mtsbl
