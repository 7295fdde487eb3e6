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

#ifndef MTSBL_DICTIONARY_HPP
#define MTSBL_DICTIONARY_HPP

#include "mtsbl/types.hpp"

#include <span>

namespace mtsbl {

// Beamspace dictionaries for a uniform linear array with N_BS elements.
//
// Grid convention: antenna index r = 0..N_BS-1, grid angle theta_k = 2*pi*k/N_BS,
// steering entry a_r(theta) = exp(-j*r*theta)/sqrt(N_BS). The off-grid steering
// matrix is the first-order Taylor expansion of the steering columns around the
// grid, Omega(nu) = F + dF * diag(nu), with |nu_k| <= delta/2 and delta = 2*pi/N_BS.
//
// The expansion point of the array phase is selectable. With the first element
// as reference, dF_rk = -j r F_rk. With the array centre c = (N_BS-1)/2 as
// reference, dF_rk = -j (r - c) F_rk: column k is then the derivative of
// exp(j c nu) a(theta_k + nu), which spans the same line as a(theta_k + nu) but
// whose linearization error is four times smaller.

/// Width of one grid cell in radians.
inline double grid_spacing(std::size_t n_bs) { return 2.0 * kPi / static_cast<double>(n_bs); }

/// Exact (unit-norm) steering vector at spatial angle theta.
ComplexVector steering_vector(std::size_t n_bs, double theta);

enum class PhaseReference
{
    FirstElement,
    ArrayCentre,
};

const char *to_string(PhaseReference ref);
/// Throws std::invalid_argument on anything but "first" / "centre".
PhaseReference parse_phase_reference(const std::string &text);

ComplexMatrix dft_matrix(std::size_t n_bs);
ComplexMatrix dft_derivative_matrix(std::size_t n_bs, PhaseReference ref = PhaseReference::FirstElement);

/// Off-grid offsets, one per grid point, boxed to [-delta/2, delta/2].
class OffGridVector
{
public:
    /// All-zero offsets for an n_bs-point grid.
    explicit OffGridVector(std::size_t n_bs);
    /// Throws std::invalid_argument if any component leaves the box.
    OffGridVector(RealVector values, std::size_t n_bs);

    /// Projects arbitrary values onto the box.
    static OffGridVector clipped(const RealVector &values, std::size_t n_bs);

    const RealVector &values() const { return values_; }
    double delta() const { return delta_; }
    std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
    double half_width() const { return 0.5 * delta_; }

private:
    RealVector values_;
    double delta_;
};

ComplexMatrix steering_offgrid(const ComplexMatrix &f_base, const ComplexMatrix &f_deriv, const OffGridVector &nu);

/// x (L x 1) kron Omega (N_BS x N_BS) -> (N_BS*L) x N_BS.
ComplexMatrix user_dictionary(const ComplexVector &pilot, const ComplexMatrix &omega);

/// pilots[m][n] is the training vector x_m[n] of user m on subcarrier n.
using PilotSet = std::vector<std::vector<ComplexVector>>;

/// Shared dictionary components. Per-subcarrier dictionaries are assembled on
/// demand; only the pilots differ across subcarriers.
struct OffGridDictionary
{
    ComplexMatrix f_base;
    ComplexMatrix f_deriv;
    OffGridVector nu;
    PilotSet pilots;

    OffGridDictionary(std::size_t n_bs, PilotSet pilot_set, PhaseReference ref = PhaseReference::ArrayCentre);

    std::size_t n_bs() const { return static_cast<std::size_t>(f_base.rows()); }
    std::size_t n_users() const { return pilots.size(); }
    std::size_t n_subcarriers() const { return pilots.empty() ? 0 : pilots.front().size(); }
    /// Common pilot length; throws if users disagree.
    std::size_t pilot_len() const;
    std::size_t n_coeffs() const { return n_bs() * n_users(); }
    std::size_t n_measurements() const { return n_bs() * pilot_len(); }

    ComplexMatrix omega() const { return steering_offgrid(f_base, f_deriv, nu); }

    /// M x M pilot cross-correlation G[m][k] = x_m[n]^H x_k[n].
    ComplexMatrix pilot_gram(std::size_t n) const;
};

/// [x_1 kron Omega, ..., x_M kron Omega] for subcarrier n with the current nu.
ComplexMatrix stacked_dictionary(const OffGridDictionary &dict, std::size_t n);

struct GramSpectrum
{
    /// lambda = p kron varsigma, entry m*N_BS + r.
    RealVector eigenvalues;
    /// varsigma, eigenvalues of Omega^H Omega in ascending order.
    RealVector omega_eigenvalues;
    std::string note;
};

/// Eigenvalues of the stacked Gram matrix under orthogonal pilots with powers p.
GramSpectrum gram_eigenstructure(std::span<const double> power, const ComplexMatrix &omega);

} // namespace mtsbl

#endif
