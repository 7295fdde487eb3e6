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

#include "mtsbl/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mtsbl {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 55;
const char *const kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string &text)
{
    std::string out;
    for (char ch : text)
    {
        switch (ch)
        {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += ch;
        }
    }
    return out;
}

struct Range
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v)
    {
        if (std::isfinite(v))
        {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void settle()
    {
        if (!std::isfinite(lo))
            lo = 0.0, hi = 1.0;
        if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi)))
            lo -= 0.5, hi += 0.5;
    }
};

} // namespace

std::string render_svg_plot(const PlotSpec &spec, const std::vector<PlotSeries> &series)
{
    Range xr, yr;
    for (const auto &s : series)
    {
        if (s.x.size() != s.y.size())
            throw std::invalid_argument("render_svg_plot: series '" + s.label + "' has mismatched x/y lengths");
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
                xr.add(s.x[i]), yr.add(s.y[i]);
    }
    xr.settle();
    yr.settle();
    const double pad = 0.05 * (yr.hi - yr.lo);
    yr.lo -= pad;
    yr.hi += pad;

    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto py = [&](double y) { return kTop + (1.0 - (y - yr.lo) / (yr.hi - yr.lo)) * ph; };

    std::ostringstream svg;
    svg.precision(6);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(spec.title)
        << "</text>\n";
    svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 5; ++i)
    {
        const double fx = xr.lo + (xr.hi - xr.lo) * i / 5.0, fy = yr.lo + (yr.hi - yr.lo) * i / 5.0;
        svg << "<line x1=\"" << px(fx) << "\" y1=\"" << kTop + ph << "\" x2=\"" << px(fx) << "\" y2=\"" << kTop + ph + 5
            << "\" stroke=\"black\"/>";
        svg << "<text x=\"" << px(fx) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">" << fx << "</text>\n";
        svg << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << py(fy) << "\" x2=\"" << kLeft + pw << "\" y2=\"" << py(fy)
            << "\" stroke=\"#dddddd\"/>";
        svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << py(fy) + 4 << "\" text-anchor=\"end\">" << fy << "</text>\n";
    }
    svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
        << escape(spec.x_label) << "</text>\n";
    svg << "<text transform=\"translate(16," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
        << escape(spec.y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k)
    {
        const auto &s = series[k];
        const char *colour = kColours[k % std::size(kColours)];
        svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.8\""
            << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
                svg << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        svg << "\"/>\n";
        const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
        svg << "<line x1=\"" << kLeft + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 34 << "\" y2=\"" << ly
            << "\" stroke=\"" << colour << "\" stroke-width=\"1.8\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "")
            << "/>";
        svg << "<text x=\"" << kLeft + pw + 40 << "\" y=\"" << ly + 4 << "\">" << escape(s.label) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_svg_plot(const std::filesystem::path &path, const PlotSpec &spec, const std::vector<PlotSeries> &series)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << render_svg_plot(spec, series);
}

} // namespace mtsbl
