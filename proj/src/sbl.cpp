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

#include "mtsbl/sbl.hpp"

#include <cmath>
#include <algorithm>
#include <optional>
#include <sstream>

namespace mtsbl {

namespace {

using Index = Eigen::Index;

// The stacked dictionary is [x_1 kron Omega, ..., x_M kron Omega]; all products
// with it are done blockwise so the (N_BS L) x (N_BS M) matrix is never formed.
struct Structure
{
    const OffGridDictionary &dict;
    ComplexMatrix omega;
    ComplexMatrix omega_gram;
    Index nb;
    Index users;
    Index len;

    Structure(const OffGridDictionary &d, const ComplexMatrix &om)
        : dict(d), omega(om), omega_gram(om.adjoint() * om), nb(om.rows()),
          users(static_cast<Index>(d.n_users())), len(static_cast<Index>(d.pilot_len())) {}

    cplx pilot(Index m, std::size_t n, Index i) const { return dict.pilots[static_cast<std::size_t>(m)][n](i); }

    // sum_m x_{m,i}[n] h_m
    ComplexVector mix(std::size_t n, Index i, const ComplexVector &h) const
    {
        ComplexVector z = ComplexVector::Zero(nb);
        for (Index m = 0; m < users; ++m)
            z += pilot(m, n, i) * h.segment(m * nb, nb);
        return z;
    }

    ComplexVector apply(std::size_t n, const ComplexVector &h) const
    {
        ComplexVector out(nb * len);
        for (Index i = 0; i < len; ++i)
            out.segment(i * nb, nb) = omega * mix(n, i, h);
        return out;
    }

    ComplexVector apply_adjoint(std::size_t n, const ComplexVector &y) const
    {
        ComplexVector out(nb * users);
        for (Index m = 0; m < users; ++m)
        {
            ComplexVector acc = ComplexVector::Zero(nb);
            for (Index i = 0; i < len; ++i)
                acc += std::conj(pilot(m, n, i)) * y.segment(i * nb, nb);
            out.segment(m * nb, nb) = omega.adjoint() * acc;
        }
        return out;
    }

    ComplexMatrix gram(std::size_t n) const
    {
        const ComplexMatrix pg = dict.pilot_gram(n);
        ComplexMatrix g(nb * users, nb * users);
        for (Index m = 0; m < users; ++m)
            for (Index k = 0; k < users; ++k)
                g.block(m * nb, k * nb, nb, nb) = pg(m, k) * omega_gram;
        return g;
    }

    bool same_pilots(std::size_t n, std::size_t prev) const
    {
        for (const auto &user : dict.pilots)
            if (user[n] != user[prev])
                return false;
        return true;
    }
};

void check_dimensions(const SubcarrierVectors &y, const OffGridDictionary &dict)
{
    if (y.size() != dict.n_subcarriers())
        throw std::invalid_argument("sbl: measurement count does not match the subcarrier count");
    for (const auto &v : y)
        if (static_cast<std::size_t>(v.size()) != dict.n_measurements())
            throw std::invalid_argument("sbl: measurement length does not match N_BS * L");
}

void check_posterior(const PosteriorStats &posterior, std::size_t subcarriers, std::size_t coeffs)
{
    if (posterior.size() != subcarriers)
        throw std::invalid_argument("sbl: posterior does not cover every subcarrier");
    for (const auto &p : posterior)
        if (static_cast<std::size_t>(p.mu.size()) != coeffs || static_cast<std::size_t>(p.sigma.rows()) != coeffs)
            throw std::invalid_argument("sbl: posterior dimension mismatch");
}

ComplexMatrix precision_matrix(const ComplexMatrix &gram, const Hyperparameters &hyper)
{
    ComplexMatrix prec = hyper.alpha0 * gram;
    prec.diagonal() += hyper.alpha.cast<cplx>();
    return prec;
}

Eigen::LLT<ComplexMatrix> factorize(const ComplexMatrix &prec, long subcarrier)
{
    Eigen::LLT<ComplexMatrix> llt(prec);
    if (llt.info() != Eigen::Success)
    {
        const RealVector diag = prec.diagonal().real();
        std::ostringstream msg;
        msg << "posterior precision is not positive definite on subcarrier " << subcarrier
            << " (diagonal range ratio " << diag.maxCoeff() / diag.minCoeff() << ")";
        throw NumericalError(msg.str(), subcarrier);
    }
    return llt;
}

PosteriorEntry posterior_from(const Eigen::LLT<ComplexMatrix> &llt, const ComplexVector &ups_h_y, double alpha0)
{
    PosteriorEntry out;
    out.sigma = llt.solve(ComplexMatrix::Identity(ups_h_y.size(), ups_h_y.size()));
    out.mu = alpha0 * llt.solve(ups_h_y);
    return out;
}

ComplexMatrix omega_from(const OffGridDictionary &dict, const RealVector &nu)
{
    return dict.f_base + dict.f_deriv * nu.cast<cplx>().asDiagonal();
}

} // namespace

Hyperparameters Hyperparameters::initial(std::size_t n_coeffs)
{
    Hyperparameters h;
    const auto size = static_cast<Index>(n_coeffs);
    h.alpha = RealVector::Ones(size);
    h.alpha0 = 1.0;
    h.c = RealVector::Constant(size, 0.01);
    h.d = RealVector::Constant(size, 0.01);
    h.a = 0.01;
    h.b = 0.01;
    return h;
}

void Hyperparameters::validate() const
{
    if (alpha.size() == 0 || c.size() != alpha.size() || d.size() != alpha.size())
        throw std::invalid_argument("Hyperparameters: alpha, c and d must have the same nonzero length");
    if (!(alpha.array() > 0.0).all() || !(alpha0 > 0.0))
        throw std::invalid_argument("Hyperparameters: precisions must be positive");
    if (!(c.array() >= 0.0).all() || !(d.array() >= 0.0).all() || !(a >= 0.0) || !(b >= 0.0))
        throw std::invalid_argument("Hyperparameters: Gamma parameters must be nonnegative");
}

PosteriorEntry posterior_stats(const ComplexMatrix &upsilon, const ComplexVector &y, const Hyperparameters &hyper,
                               long subcarrier)
{
    hyper.validate();
    if (upsilon.rows() != y.size() || static_cast<std::size_t>(upsilon.cols()) != hyper.size())
        throw std::invalid_argument("posterior_stats: dimension mismatch");
    const auto llt = factorize(precision_matrix(upsilon.adjoint() * upsilon, hyper), subcarrier);
    return posterior_from(llt, upsilon.adjoint() * y, hyper.alpha0);
}

PosteriorStats posterior_all(const SubcarrierVectors &y, const OffGridDictionary &dict, const Hyperparameters &hyper)
{
    hyper.validate();
    check_dimensions(y, dict);
    if (hyper.size() != dict.n_coeffs())
        throw std::invalid_argument("posterior_all: hyperparameter length does not match M * N_BS");

    const Structure s(dict, dict.omega());
    PosteriorStats out;
    out.reserve(y.size());
    std::optional<Eigen::LLT<ComplexMatrix>> llt;
    for (std::size_t n = 0; n < y.size(); ++n)
    {
        // Identical pilots give identical Gram matrices; reuse the factorization.
        if (!llt || !s.same_pilots(n, n - 1))
            llt = factorize(precision_matrix(s.gram(n), hyper), static_cast<long>(n));
        if (n > 0 && s.same_pilots(n, n - 1))
        {
            PosteriorEntry e;
            e.sigma = out.back().sigma;
            e.mu = hyper.alpha0 * llt->solve(s.apply_adjoint(n, y[n]));
            out.push_back(std::move(e));
        }
        else
        {
            out.push_back(posterior_from(*llt, s.apply_adjoint(n, y[n]), hyper.alpha0));
        }
    }
    return out;
}

RealVector update_alpha(const Hyperparameters &hyper, const PosteriorStats &posterior)
{
    if (posterior.empty())
        throw std::invalid_argument("update_alpha: empty posterior");
    check_posterior(posterior, posterior.size(), hyper.size());
    const auto tasks = static_cast<double>(posterior.size());

    RealVector second_moment = RealVector::Zero(hyper.alpha.size());
    for (const auto &p : posterior)
        second_moment += p.sigma.diagonal().real() + p.mu.cwiseAbs2();

    RealVector alpha(hyper.alpha.size());
    for (Index l = 0; l < alpha.size(); ++l)
    {
        const double denom = hyper.d(l) + second_moment(l);
        if (!(denom > 0.0))
            throw NumericalError("update_alpha: nonpositive denominator at coefficient " + std::to_string(l));
        alpha(l) = std::clamp((hyper.c(l) - 1.0 + tasks) / denom, kAlphaFloor, kAlphaCeiling);
    }
    return alpha;
}

ResidualTerms residual_terms(const PosteriorStats &posterior, const SubcarrierVectors &y, const OffGridDictionary &dict)
{
    check_dimensions(y, dict);
    check_posterior(posterior, y.size(), dict.n_coeffs());
    const Structure s(dict, dict.omega());
    ResidualTerms out;
    for (std::size_t n = 0; n < y.size(); ++n)
    {
        out.fit += (y[n] - s.apply(n, posterior[n].mu)).squaredNorm();
        out.spread += (s.gram(n).array() * posterior[n].sigma.transpose().array()).sum().real();
    }
    return out;
}

double update_alpha0(const Hyperparameters &hyper, const PosteriorStats &posterior, const SubcarrierVectors &y,
                     const OffGridDictionary &dict)
{
    const ResidualTerms terms = residual_terms(posterior, y, dict);
    const double numer =
        static_cast<double>(dict.n_measurements()) * static_cast<double>(y.size()) + hyper.a - 1.0;
    const double denom = terms.total() + hyper.b;
    if (!(denom > 0.0))
        throw NumericalError("update_alpha0: zero denominator (exact noiseless fit with vanishing covariance)");
    if (!(numer > 0.0))
        throw NumericalError("update_alpha0: nonpositive numerator " + std::to_string(numer) +
                             " (noise precision would not be positive)");
    const double alpha0 = numer / denom;
    if (!std::isfinite(alpha0))
        throw NumericalError("update_alpha0: non-finite noise precision");
    return alpha0;
}

OffGridSystem assemble_offgrid_system(const PosteriorStats &posterior, const SubcarrierVectors &y,
                                      const OffGridDictionary &dict)
{
    check_dimensions(y, dict);
    check_posterior(posterior, y.size(), dict.n_coeffs());
    const Structure s(dict, dict.f_base);
    const Index nb = s.nb;

    const ComplexMatrix dd = dict.f_deriv.adjoint() * dict.f_deriv;
    const ComplexMatrix df = dict.f_deriv.adjoint() * dict.f_base;

    OffGridSystem sys{RealMatrix::Zero(nb, nb), RealVector::Zero(nb)};
    for (std::size_t n = 0; n < y.size(); ++n)
    {
        const PosteriorEntry &p = posterior[n];
        const ComplexMatrix second = p.sigma + p.mu * p.mu.adjoint();
        for (Index i = 0; i < s.len; ++i)
        {
            // z = sum_m x_{m,i} h_m has mean zm and second moment r.
            const ComplexVector zm = s.mix(n, i, p.mu);
            ComplexMatrix r = ComplexMatrix::Zero(nb, nb);
            for (Index m = 0; m < s.users; ++m)
                for (Index k = 0; k < s.users; ++k)
                    r += (s.pilot(m, n, i) * std::conj(s.pilot(k, n, i))) * second.block(m * nb, k * nb, nb, nb);

            const ComplexVector dy = dict.f_deriv.adjoint() * y[n].segment(i * nb, nb);
            sys.lhs += (dd.array() * r.transpose().array()).real().matrix();
            sys.rhs += (zm.conjugate().array() * dy.array()).real().matrix();
            sys.rhs -= (df.array() * r.transpose().array()).rowwise().sum().real().matrix();
        }
    }
    return sys;
}

RealVector solve_offgrid_unclipped(const OffGridSystem &system, const RealVector &current)
{
    const Index nb = system.lhs.rows();
    const double trace = system.lhs.trace();
    if (!(trace > 0.0))
        return current;

    Eigen::LLT<RealMatrix> llt(system.lhs);
    if (llt.info() == Eigen::Success && llt.rcond() > 1e-14)
        return llt.solve(system.rhs);

    const double eps = 1e-8 * trace / static_cast<double>(nb);
    RealMatrix damped = system.lhs;
    damped.diagonal().array() += eps;
    return damped.ldlt().solve(system.rhs);
}

OffGridVector update_offgrid(const PosteriorStats &posterior, const SubcarrierVectors &y, const OffGridDictionary &dict)
{
    const OffGridSystem sys = assemble_offgrid_system(posterior, y, dict);
    return OffGridVector::clipped(solve_offgrid_unclipped(sys, dict.nu.values()), dict.n_bs());
}

double offgrid_objective(const PosteriorStats &posterior, const SubcarrierVectors &y, const OffGridDictionary &dict,
                         const RealVector &nu)
{
    check_dimensions(y, dict);
    check_posterior(posterior, y.size(), dict.n_coeffs());
    if (static_cast<std::size_t>(nu.size()) != dict.n_bs())
        throw std::invalid_argument("offgrid_objective: nu has the wrong length");

    const ComplexMatrix omega = omega_from(dict, nu);
    const Index nb = omega.rows();
    double total = 0.0;
    for (std::size_t n = 0; n < y.size(); ++n)
    {
        ComplexMatrix ups(nb * static_cast<Index>(dict.pilot_len()), nb * static_cast<Index>(dict.n_users()));
        for (std::size_t m = 0; m < dict.n_users(); ++m)
            ups.middleCols(static_cast<Index>(m) * nb, nb) = user_dictionary(dict.pilots[m][n], omega);
        total += (y[n] - ups * posterior[n].mu).squaredNorm();
        total += (ups.adjoint() * ups * posterior[n].sigma).trace().real();
    }
    return total;
}

LogLikelihoodTerms marginal_log_likelihood(const SubcarrierVectors &y, const OffGridDictionary &dict,
                                           const Hyperparameters &hyper)
{
    hyper.validate();
    check_dimensions(y, dict);
    const Structure s(dict, dict.omega());
    const auto samples = static_cast<double>(dict.n_measurements());
    const double log_alpha_sum = hyper.alpha.array().log().sum();

    LogLikelihoodTerms out;
    for (std::size_t n = 0; n < y.size(); ++n)
    {
        Eigen::LLT<ComplexMatrix> llt(precision_matrix(s.gram(n), hyper));
        if (llt.info() != Eigen::Success)
            throw NumericalError("marginal_log_likelihood: covariance is not positive definite", static_cast<long>(n));
        const double log_det_prec = 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
        // |C| = |diag(alpha) + alpha0 G| |diag(alpha)|^-1 alpha0^-K
        out.log_det += log_det_prec - log_alpha_sum - samples * std::log(hyper.alpha0);

        const ComplexVector uy = s.apply_adjoint(n, y[n]);
        const ComplexVector mu = hyper.alpha0 * llt.solve(uy);
        out.quadratic += hyper.alpha0 * (y[n].squaredNorm() - uy.dot(mu).real());
    }
    const auto tasks = static_cast<double>(y.size());
    out.prior = 2.0 * tasks * (hyper.c.array() * hyper.alpha.array().log() - hyper.d.array() * hyper.alpha.array()).sum();
    return out;
}

EmResult run_em(const SubcarrierVectors &y, const OffGridDictionary &dict, const Hyperparameters &hyper_init,
                const EmOptions &options)
{
    hyper_init.validate();
    check_dimensions(y, dict);
    if (!(options.beta_th > 0.0) || options.max_iter == 0)
        throw std::invalid_argument("run_em: need beta_th > 0 and max_iter >= 1");

    OffGridDictionary work = dict;
    Hyperparameters hyper = hyper_init;
    ConvergenceState state;
    PosteriorStats posterior;
    OffGridVector nu_estimate = work.nu;

    while (true)
    {
        ++state.iter;
        nu_estimate = work.nu;
        try
        {
            posterior = posterior_all(y, work, hyper);
            if (options.track_log_likelihood)
                state.log_likelihood.push_back(marginal_log_likelihood(y, work, hyper).value());
            if (options.observer)
                options.observer(IterationLog{state.iter, posterior, hyper, work.nu});

            const RealVector previous = hyper.alpha;
            hyper.alpha = update_alpha(hyper, posterior);
            hyper.alpha0 = update_alpha0(hyper, posterior, y, work);
            if (options.update_offgrid)
                work.nu = update_offgrid(posterior, y, work);
            if (state.iter > 1)
                state.rho = (hyper.alpha - previous).norm() / previous.norm();
        }
        catch (const NumericalError &e)
        {
            throw NumericalError(std::string(e.what()) + " [EM iteration " + std::to_string(state.iter) + "]",
                                 e.subcarrier(), static_cast<long>(state.iter), e.time_step());
        }
        if (state.rho <= options.beta_th || state.iter >= options.max_iter)
            break;
    }

    EmResult out{{}, hyper, work.nu, nu_estimate, state, std::move(posterior)};
    for (const auto &p : out.posterior)
    {
        ComplexVector h = p.mu;
        for (Index l = 0; l < h.size(); ++l)
            if (hyper.alpha(l) >= kAlphaCeiling)
                h(l) = 0.0;
        out.h_hat.push_back(std::move(h));
    }
    return out;
}

ComplexVector to_grid_beamspace(const ComplexVector &h, const OffGridDictionary &dict, const OffGridVector &nu)
{
    const ComplexMatrix map = dict.f_base.adjoint() * steering_offgrid(dict.f_base, dict.f_deriv, nu);
    const auto nb = static_cast<Index>(dict.n_bs());
    if (h.size() % nb != 0)
        throw std::invalid_argument("to_grid_beamspace: length is not a multiple of N_BS");
    ComplexVector out(h.size());
    for (Index m = 0; m < h.size() / nb; ++m)
        out.segment(m * nb, nb) = map * h.segment(m * nb, nb);
    return out;
}

} // namespace mtsbl
