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

#ifndef MTSBL_SVG_PLOT_HPP
#define MTSBL_SVG_PLOT_HPP

#include <filesystem>
#include <string>
#include <vector>

namespace mtsbl {

struct PlotSeries
{
    std::string label;
    std::vector<double> x, y;
    bool dashed = false;
};

struct PlotSpec
{
    std::string title;
    std::string x_label;
    std::string y_label;
};

/// Minimal static line chart. Non-finite points are skipped.
std::string render_svg_plot(const PlotSpec &spec, const std::vector<PlotSeries> &series);
void write_svg_plot(const std::filesystem::path &path, const PlotSpec &spec, const std::vector<PlotSeries> &series);

} // namespace mtsbl

#endif
