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

#include "doctest.h"
#include "test_util.hpp"

#include "mtsbl/dictionary.hpp"
#include "mtsbl/scenario.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

using namespace mtsbl;

namespace {

const cplx J(0.0, 1.0);

// Entry (r, k) of the normalized DFT written out from its closed form.
cplx dft_entry(std::size_t n_bs, std::size_t r, std::size_t k)
{
    const double theta = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n_bs);
    return std::exp(-J * (static_cast<double>(r) * theta)) / std::sqrt(static_cast<double>(n_bs));
}

ComplexMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64 &rng)
{
    std::normal_distribution<double> g;
    ComplexMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = cplx(g(rng), g(rng));
    return m;
}

OffGridVector random_nu(std::size_t n_bs, std::mt19937_64 &rng)
{
    const double half = 0.5 * grid_spacing(n_bs);
    std::uniform_real_distribution<double> u(-half, half);
    RealVector v(static_cast<Eigen::Index>(n_bs));
    for (auto &x : v)
        x = u(rng);
    return OffGridVector(v, n_bs);
}

RealVector sorted(RealVector v)
{
    std::sort(v.begin(), v.end());
    return v;
}

} // namespace

TEST_CASE("dft_matrix small cases")
{
    CHECK(dft_matrix(1).isApprox(ComplexMatrix::Ones(1, 1)));
    ComplexMatrix two(2, 2);
    two << 1, 1, 1, -1;
    two /= std::sqrt(2.0);
    CHECK((dft_matrix(2) - two).cwiseAbs().maxCoeff() < 1e-15);
    CHECK_THROWS_AS(dft_matrix(0), std::invalid_argument);
}

TEST_CASE("dft_matrix follows the closed form and is unitary")
{
    for (std::size_t n : {1u, 2u, 3u, 8u, 17u, 64u})
    {
        const ComplexMatrix f = dft_matrix(n);
        double gap = 0.0;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t k = 0; k < n; ++k)
                gap = std::max(gap, std::abs(f(r, k) - dft_entry(n, r, k)));
        CHECK(gap < 1e-13);
        const ComplexMatrix gram = f.adjoint() * f;
        CHECK((gram - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("dft_derivative_matrix closed form, first-element reference")
{
    CHECK(dft_derivative_matrix(1).cwiseAbs().maxCoeff() == 0.0);
    const ComplexMatrix d2 = dft_derivative_matrix(2);
    CHECK(std::abs(d2(1, 0) - (-J / std::sqrt(2.0))) < 1e-15);
    CHECK(std::abs(d2(0, 1)) == 0.0);
    CHECK_THROWS_AS(dft_derivative_matrix(0), std::invalid_argument);
    CHECK_THROWS_AS(dft_derivative_matrix(0, PhaseReference::ArrayCentre), std::invalid_argument);
}

TEST_CASE("dft_derivative_matrix matches central finite differences")
{
    const std::size_t n = 16;
    const double step = 1e-6;
    for (PhaseReference ref : {PhaseReference::FirstElement, PhaseReference::ArrayCentre})
    {
        const double c = ref == PhaseReference::ArrayCentre ? 0.5 * (n - 1) : 0.0;
        // Column family whose derivative the matrix holds: exp(j c t) a(theta_k + t).
        auto column = [&](std::size_t k, double t) {
            return ComplexVector(std::exp(J * (c * t)) * steering_vector(n, grid_spacing(n) * k + t));
        };
        const ComplexMatrix d = dft_derivative_matrix(n, ref);
        for (std::size_t k = 0; k < n; ++k)
        {
            const ComplexVector fd = (column(k, step) - column(k, -step)) / (2.0 * step);
            CHECK((fd - d.col(k)).norm() / d.col(k).norm() < 1e-6);
        }
    }
}

TEST_CASE("the centred derivative column spans the same steering line")
{
    // exp(j c t) a(theta + t) is a scalar multiple of a(theta + t), so the
    // projection of the exact steering vector onto the column family is lossless.
    const std::size_t n = 12;
    const double c = 0.5 * (n - 1);
    const double t = 0.37 * grid_spacing(n);
    const ComplexVector a = steering_vector(n, 3 * grid_spacing(n) + t);
    const ComplexVector b = std::exp(J * (c * t)) * a;
    CHECK(std::abs(std::abs(a.dot(b)) - 1.0) < 1e-12);
}

TEST_CASE("phase reference names round-trip")
{
    CHECK(parse_phase_reference("first") == PhaseReference::FirstElement);
    CHECK(parse_phase_reference("centre") == PhaseReference::ArrayCentre);
    CHECK(parse_phase_reference(to_string(PhaseReference::ArrayCentre)) == PhaseReference::ArrayCentre);
    CHECK_THROWS_AS(parse_phase_reference("middle"), std::invalid_argument);
}

TEST_CASE("OffGridVector enforces the box")
{
    const std::size_t n = 8;
    const double half = 0.5 * grid_spacing(n);
    CHECK(OffGridVector(n).values().isZero());
    CHECK_NOTHROW(OffGridVector(RealVector::Constant(n, half), n));
    CHECK_THROWS_AS(OffGridVector(RealVector::Constant(n, 1.01 * half), n), std::invalid_argument);
    CHECK_THROWS_AS(OffGridVector(RealVector::Constant(n - 1, 0.0), n), std::invalid_argument);
    RealVector wild(n);
    wild << -1, 1, 0, 0.1, -0.1, 5, -5, half;
    const OffGridVector clipped = OffGridVector::clipped(wild, n);
    CHECK(clipped.values().cwiseAbs().maxCoeff() <= half);
    CHECK(clipped.values()(3) == doctest::Approx(0.1 > half ? half : 0.1));
    CHECK(clipped.values()(0) == -half);
}

TEST_CASE("steering_offgrid examples")
{
    const std::size_t n = 8;
    const ComplexMatrix f = dft_matrix(n), d = dft_derivative_matrix(n);
    CHECK(steering_offgrid(f, d, OffGridVector(n)) == f);

    const double half = 0.5 * grid_spacing(n);
    const ComplexMatrix omega = steering_offgrid(f, d, OffGridVector(RealVector::Constant(n, half), n));
    for (std::size_t k = 0; k < n; ++k)
        CHECK((omega.col(k) - (f.col(k) + half * d.col(k))).norm() < 1e-14);

    CHECK_THROWS_AS(steering_offgrid(f, dft_derivative_matrix(4), OffGridVector(n)), std::invalid_argument);
    CHECK_THROWS_AS(steering_offgrid(f, d, OffGridVector(4)), std::invalid_argument);
}

TEST_CASE("small offsets give a second-order Taylor remainder")
{
    const std::size_t n = 16;
    for (PhaseReference ref : {PhaseReference::FirstElement, PhaseReference::ArrayCentre})
    {
        const double c = ref == PhaseReference::ArrayCentre ? 0.5 * (n - 1) : 0.0;
        const ComplexMatrix f = dft_matrix(n), d = dft_derivative_matrix(n, ref);
        double previous = 0.0;
        for (double frac : {1.0 / 20, 1.0 / 40, 1.0 / 80})
        {
            const double t = frac * grid_spacing(n);
            const ComplexMatrix omega = steering_offgrid(f, d, OffGridVector(RealVector::Constant(n, t), n));
            double err = 0.0;
            for (std::size_t k = 0; k < n; ++k)
            {
                const ComplexVector exact = std::exp(J * (c * t)) * steering_vector(n, grid_spacing(n) * k + t);
                err = std::max(err, (omega.col(k) - exact).norm());
            }
            if (previous > 0.0)
                CHECK(rel_err(previous / err, 4.0) < 0.05);   // halving t quarters the error
            previous = err;
        }
    }
}

TEST_CASE("user_dictionary is the Kronecker product")
{
    std::mt19937_64 rng(7);
    const ComplexMatrix omega = random_matrix(3, 3, rng);
    ComplexVector one(1);
    one << 1.0;
    CHECK(user_dictionary(one, omega) == omega);

    ComplexVector p(2);
    p << 2.0, 0.0;
    ComplexMatrix expect = ComplexMatrix::Zero(4, 2);
    expect(0, 0) = expect(1, 1) = 2.0;
    CHECK(user_dictionary(p, ComplexMatrix::Identity(2, 2)) == expect);

    const ComplexVector x = random_matrix(4, 1, rng);
    const ComplexMatrix u = user_dictionary(x, omega);
    CHECK((u.adjoint() * u - x.squaredNorm() * (omega.adjoint() * omega)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(user_dictionary(ComplexVector(0), omega), std::invalid_argument);
}

TEST_CASE("stacked_dictionary block structure")
{
    std::mt19937_64 rng(11);
    const std::size_t n_bs = 6, n_sub = 2;

    SUBCASE("single user equals the user dictionary")
    {
        const PilotSet pilots{{random_matrix(3, 1, rng), random_matrix(3, 1, rng)}};
        OffGridDictionary dict(n_bs, pilots);
        dict.nu = random_nu(n_bs, rng);
        for (std::size_t n = 0; n < n_sub; ++n)
            CHECK(stacked_dictionary(dict, n) == user_dictionary(pilots[0][n], dict.omega()));
    }
    SUBCASE("orthogonal pilots give P kron Omega^H Omega")
    {
        const std::vector<double> power{1.0, 2.5};
        OffGridDictionary dict(n_bs, generate_pilots(2, 4, power, n_sub));
        for (int trial = 0; trial < 5; ++trial)
        {
            dict.nu = random_nu(n_bs, rng);
            const ComplexMatrix u = stacked_dictionary(dict, 1);
            const ComplexMatrix og = dict.omega().adjoint() * dict.omega();
            ComplexMatrix expect = ComplexMatrix::Zero(2 * n_bs, 2 * n_bs);
            expect.topLeftCorner(n_bs, n_bs) = power[0] * og;
            expect.bottomRightCorner(n_bs, n_bs) = power[1] * og;
            CHECK((u.adjoint() * u - expect).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
    SUBCASE("non-orthogonal pilots couple the blocks")
    {
        const ComplexVector x1 = random_matrix(3, 1, rng), x2 = random_matrix(3, 1, rng);
        OffGridDictionary dict(n_bs, PilotSet{{x1}, {x2}});
        dict.nu = random_nu(n_bs, rng);
        const ComplexMatrix u = stacked_dictionary(dict, 0);
        const ComplexMatrix og = dict.omega().adjoint() * dict.omega();
        const ComplexMatrix off = (u.adjoint() * u).topRightCorner(n_bs, n_bs);
        CHECK((off - x1.dot(x2) * og).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(dict.pilot_gram(0)(0, 1) == x1.dot(x2));
    }
    SUBCASE("unequal pilot lengths are rejected")
    {
        CHECK_THROWS_AS(OffGridDictionary(n_bs, PilotSet{{random_matrix(2, 1, rng)}, {random_matrix(3, 1, rng)}}),
                        std::invalid_argument);
    }
    SUBCASE("subcarrier index is checked")
    {
        OffGridDictionary dict(n_bs, PilotSet{{random_matrix(2, 1, rng)}});
        CHECK_THROWS_AS(stacked_dictionary(dict, 1), std::out_of_range);
    }
}

TEST_CASE("gram_eigenstructure examples")
{
    const std::vector<double> unit{1.0};
    const GramSpectrum flat = gram_eigenstructure(unit, dft_matrix(5));
    CHECK((flat.omega_eigenvalues.array() - 1.0).abs().maxCoeff() < 1e-12);

    const std::vector<double> p{1.0, 4.0};
    const GramSpectrum s = gram_eigenstructure(p, dft_matrix(4));
    RealVector expect(8);
    expect << 1, 1, 1, 1, 4, 4, 4, 4;
    CHECK((sorted(s.eigenvalues) - expect).cwiseAbs().maxCoeff() < 1e-12);

    const std::vector<double> bad{1.0, 0.0};
    CHECK_THROWS_AS(gram_eigenstructure(bad, dft_matrix(4)), std::invalid_argument);
    CHECK_THROWS_AS(gram_eigenstructure(std::vector<double>{}, dft_matrix(4)), std::invalid_argument);
}

TEST_CASE("gram_eigenstructure matches a dense eigensolver")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pw(0.2, 3.0);
    for (int trial = 0; trial < 20; ++trial)
    {
        const std::size_t n_bs = 2 + trial % 7, m = 1 + trial % 2;
        std::vector<double> power(m);
        for (auto &x : power)
            x = pw(rng);
        OffGridDictionary dict(n_bs, generate_pilots(m, m + 1, power, 1),
                               trial % 2 ? PhaseReference::ArrayCentre : PhaseReference::FirstElement);
        dict.nu = random_nu(n_bs, rng);
        const ComplexMatrix u = stacked_dictionary(dict, 0);
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> dense(u.adjoint() * u);
        const GramSpectrum s = gram_eigenstructure(power, dict.omega());
        CHECK((sorted(s.eigenvalues) - sorted(dense.eigenvalues())).cwiseAbs().maxCoeff() < 1e-10);
    }
}
