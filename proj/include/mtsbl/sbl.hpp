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

#ifndef MTSBL_SBL_HPP
#define MTSBL_SBL_HPP

#include "mtsbl/dictionary.hpp"

#include <functional>
#include <limits>

namespace mtsbl {

// Multi-task sparse Bayesian learning. All subcarriers share the prior
// precisions alpha (one per beam and user) and the noise precision alpha0;
// each subcarrier has its own Gaussian posterior over the beamspace channel.

inline constexpr double kAlphaFloor = 1e-10;
inline constexpr double kAlphaCeiling = 1e12;

struct Hyperparameters
{
    RealVector alpha;     // prior precision per coefficient, length M*N_BS
    double alpha0 = 1.0;  // noise precision
    RealVector c, d;      // Gamma shape / scale for each alpha_l
    double a = 0.0;       // Gamma shape / scale for alpha0
    double b = 0.0;

    /// alpha = 1, alpha0 = 1, a = b = c_l = d_l = 0.01.
    static Hyperparameters initial(std::size_t n_coeffs);

    std::size_t size() const { return static_cast<std::size_t>(alpha.size()); }
    void validate() const;
};

struct PosteriorEntry
{
    ComplexVector mu;
    ComplexMatrix sigma;
};

using PosteriorStats = std::vector<PosteriorEntry>;

/// Sigma = (diag(alpha) + alpha0 U^H U)^-1, mu = alpha0 Sigma U^H y, through a
/// Cholesky factorization of the posterior precision.
PosteriorEntry posterior_stats(const ComplexMatrix &upsilon, const ComplexVector &y, const Hyperparameters &hyper,
                               long subcarrier = -1);

/// Posterior for every subcarrier using the Kronecker structure of the dictionary.
PosteriorStats posterior_all(const SubcarrierVectors &y, const OffGridDictionary &dict, const Hyperparameters &hyper);

RealVector update_alpha(const Hyperparameters &hyper, const PosteriorStats &posterior);

/// Residual energy split used by the noise update and the off-grid objective.
struct ResidualTerms
{
    double fit = 0.0;        // sum_n ||y[n] - U[n] mu[n]||^2
    double spread = 0.0;     // sum_n tr(U[n]^H U[n] Sigma[n])
    double total() const { return fit + spread; }
};

ResidualTerms residual_terms(const PosteriorStats &posterior, const SubcarrierVectors &y, const OffGridDictionary &dict);

double update_alpha0(const Hyperparameters &hyper, const PosteriorStats &posterior, const SubcarrierVectors &y,
                     const OffGridDictionary &dict);

/// The expected residual sum_n E||y[n] - U_nu[n] h[n]||^2 is quadratic in nu:
/// J(nu) = const - 2 b^T nu + nu^T A nu.
struct OffGridSystem
{
    RealMatrix lhs;   // A
    RealVector rhs;   // b
};

OffGridSystem assemble_offgrid_system(const PosteriorStats &posterior, const SubcarrierVectors &y,
                                      const OffGridDictionary &dict);

/// Minimizer of the quadratic without the box constraint. Falls back to
/// (A + eps I) with eps = 1e-8 tr(A)/N_BS when A is singular; returns
/// `current` when A vanishes.
RealVector solve_offgrid_unclipped(const OffGridSystem &system, const RealVector &current);

OffGridVector update_offgrid(const PosteriorStats &posterior, const SubcarrierVectors &y, const OffGridDictionary &dict);

/// sum_n ||y - U_nu mu||^2 + tr(U_nu^H U_nu Sigma) evaluated on dense dictionaries at arbitrary nu.
double offgrid_objective(const PosteriorStats &posterior, const SubcarrierVectors &y, const OffGridDictionary &dict,
                         const RealVector &nu);

struct LogLikelihoodTerms
{
    double log_det = 0.0;    // sum_n log|C[n]|
    double quadratic = 0.0;  // sum_n y^H C^-1 y
    double prior = 0.0;      // 2N sum_l (c_l log alpha_l - d_l alpha_l)
    double value() const { return log_det + quadratic + prior; }
};

/// Marginal log-likelihood objective up to constants, evaluated in the
/// coefficient space via the determinant lemma and Woodbury identity.
LogLikelihoodTerms marginal_log_likelihood(const SubcarrierVectors &y, const OffGridDictionary &dict,
                                           const Hyperparameters &hyper);

struct ConvergenceState
{
    double rho = std::numeric_limits<double>::infinity();
    std::size_t iter = 0;
    std::vector<double> log_likelihood;   // filled when requested
};

struct IterationLog
{
    std::size_t iter;
    const PosteriorStats &posterior;
    const Hyperparameters &hyper;   // hyperparameters the posterior was computed with
    const OffGridVector &nu;
};

struct EmOptions
{
    double beta_th = 1e-3;
    std::size_t max_iter = 1000;
    bool update_offgrid = true;
    bool track_log_likelihood = false;
    std::function<void(const IterationLog &)> observer;
};

struct EmResult
{
    SubcarrierVectors h_hat;          // final mu with pruned coefficients zeroed
    Hyperparameters hyper;
    OffGridVector nu;                 // offsets after the last update (carried forward)
    OffGridVector nu_estimate;        // offsets the final mu was computed with
    ConvergenceState state;
    PosteriorStats posterior;
};

/// The EM loop: posterior -> alpha -> alpha0 -> nu -> rho, until rho <= beta_th
/// or max_iter iterations. The dictionary nu is the starting point.
EmResult run_em(const SubcarrierVectors &y, const OffGridDictionary &dict, const Hyperparameters &hyper_init,
                const EmOptions &options);

/// Maps coefficients on Omega(nu) back to the DFT beamspace: F^H Omega(nu) h per user block.
ComplexVector to_grid_beamspace(const ComplexVector &h, const OffGridDictionary &dict, const OffGridVector &nu);

} // namespace mtsbl

#endif
