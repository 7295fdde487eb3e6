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

#ifndef MTSBL_TYPES_HPP
#define MTSBL_TYPES_HPP

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mtsbl {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// One complex vector per subcarrier.
using SubcarrierVectors = std::vector<ComplexVector>;

inline constexpr double kPi = std::numbers::pi;

/// Raised when a Hermitian solve, a degenerate update or a likelihood
/// evaluation breaks down. Carries the location inside the estimation loop
/// where it happened; -1 marks "not applicable".
class NumericalError : public std::runtime_error
{
public:
    NumericalError(const std::string &what, long subcarrier = -1, long iteration = -1, long time_step = -1)
        : std::runtime_error(what), subcarrier_(subcarrier), iteration_(iteration), time_step_(time_step) {}

    long subcarrier() const { return subcarrier_; }
    long iteration() const { return iteration_; }
    long time_step() const { return time_step_; }

private:
    long subcarrier_;
    long iteration_;
    long time_step_;
};

} // namespace mtsbl

#endif
