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

#include "mtsbl/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mtsbl {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>> kSchema = {
    {"scenario",
     {"n_bs", "m_users", "pilot_len", "n_subcarriers", "snr_db", "aoa_min_deg", "aoa_max_deg", "angular_spread_deg",
      "paths_per_user", "drift_deg_per_step", "t_steps", "env_change_at", "gain_ar_coeff", "max_delay_samples"}},
    {"algorithm",
     {"beta_th", "i_iter", "large_threshold", "mode", "update_offgrid", "offgrid_reference", "blur_width", "blur_q"}},
    {"run", {"realizations", "base_seed", "workers", "output_dir", "emit_plots", "support_threshold", "write_truth"}},
};

[[noreturn]] void fail(const std::string &field, const std::string &why)
{
    throw ConfigError(field + ": " + why);
}

std::string trimmed(const std::string &s)
{
    const auto first = s.find_first_not_of(" \t\r\"");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\"");
    return s.substr(first, last - first + 1);
}

class Reader
{
public:
    explicit Reader(const pt::ptree &tree) : tree_(tree)
    {
        for (const auto &[section, body] : tree)
        {
            const auto known = kSchema.find(section);
            if (!body.data().empty())
                fail(section, "top-level keys are not allowed; use [scenario], [algorithm] or [run]");
            if (known == kSchema.end())
                fail(section, "unknown section");
            for (const auto &[key, value] : body)
                if (!known->second.count(key))
                    fail(section + "." + key, "unknown key");
        }
    }

    std::optional<std::string> raw(const std::string &path) const
    {
        const auto node = tree_.get_optional<std::string>(pt::ptree::path_type(path, '.'));
        if (!node)
            return std::nullopt;
        return trimmed(*node);
    }

    void real(const std::string &path, double &out) const
    {
        if (auto text = raw(path))
        {
            double v = 0.0;
            const auto [end, ec] = std::from_chars(text->data(), text->data() + text->size(), v);
            if (ec != std::errc() || end != text->data() + text->size() || text->empty())
                fail(path, "expected a number, got '" + *text + "'");
            out = v;
        }
    }

    template <typename Int>
    void count(const std::string &path, Int &out) const
    {
        if (auto text = raw(path))
        {
            long long v = 0;
            const auto [end, ec] = std::from_chars(text->data(), text->data() + text->size(), v);
            if (ec != std::errc() || end != text->data() + text->size() || text->empty())
                fail(path, "expected an integer, got '" + *text + "'");
            if (v < 0)
                fail(path, "must be non-negative, got " + *text);
            out = static_cast<Int>(v);
        }
    }

    void flag(const std::string &path, bool &out) const
    {
        if (auto text = raw(path))
        {
            std::string v = *text;
            std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return std::tolower(ch); });
            if (v == "true" || v == "1" || v == "yes" || v == "on")
                out = true;
            else if (v == "false" || v == "0" || v == "no" || v == "off")
                out = false;
            else
                fail(path, "expected true or false, got '" + *text + "'");
        }
    }

private:
    const pt::ptree &tree_;
};

RunConfig from_tree(const pt::ptree &tree)
{
    const Reader in(tree);
    RunConfig cfg;
    ScenarioConfig &s = cfg.scenario;

    in.count("scenario.n_bs", s.n_bs);
    in.count("scenario.m_users", s.m_users);
    in.count("scenario.pilot_len", s.pilot_len);
    in.count("scenario.n_subcarriers", s.n_subcarriers);
    in.real("scenario.snr_db", s.snr_db);
    in.real("scenario.aoa_min_deg", s.aoa_min_deg);
    in.real("scenario.aoa_max_deg", s.aoa_max_deg);
    in.real("scenario.angular_spread_deg", s.angular_spread_deg);
    in.count("scenario.paths_per_user", s.paths_per_user);
    in.real("scenario.drift_deg_per_step", s.drift_deg_per_step);
    in.count("scenario.t_steps", s.t_steps);
    if (auto text = in.raw("scenario.env_change_at"); text && !text->empty() && *text != "none")
    {
        std::size_t at = 0;
        in.count("scenario.env_change_at", at);
        s.env_change_at = at;
    }
    in.real("scenario.gain_ar_coeff", s.gain_ar_coeff);
    in.real("scenario.max_delay_samples", s.max_delay_samples);

    in.real("algorithm.beta_th", cfg.beta_th);
    in.count("algorithm.i_iter", cfg.i_iter);
    in.real("algorithm.large_threshold", cfg.large_threshold);
    if (auto text = in.raw("algorithm.mode"))
    {
        try
        {
            cfg.mode = parse_run_mode(*text);
        }
        catch (const std::invalid_argument &e)
        {
            fail("algorithm.mode", e.what());
        }
    }
    in.flag("algorithm.update_offgrid", cfg.update_offgrid);
    if (auto text = in.raw("algorithm.offgrid_reference"))
    {
        try
        {
            cfg.offgrid_reference = parse_phase_reference(*text);
        }
        catch (const std::invalid_argument &e)
        {
            fail("algorithm.offgrid_reference", e.what());
        }
    }
    if (in.raw("algorithm.blur_width") || in.raw("algorithm.blur_q"))
    {
        BlurOptions blur;
        in.real("algorithm.blur_width", blur.width);
        if (in.raw("algorithm.blur_q"))
        {
            double q = 0.0;
            in.real("algorithm.blur_q", q);
            blur.q = q;
        }
        cfg.blur = blur;
    }

    in.count("run.realizations", cfg.realizations);
    in.count("run.base_seed", cfg.base_seed);
    in.count("run.workers", cfg.workers);
    if (auto text = in.raw("run.output_dir"))
        cfg.output_dir = *text;
    in.flag("run.emit_plots", cfg.emit_plots);
    in.real("run.support_threshold", cfg.support_threshold);
    in.flag("run.write_truth", cfg.write_truth);

    cfg.validate();
    return cfg;
}

RunConfig parse_ini_stream(std::istream &in, const std::string &origin)
{
    pt::ptree tree;
    try
    {
        pt::read_ini(in, tree);
    }
    catch (const pt::ini_parser_error &e)
    {
        throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    return from_tree(tree);
}

std::string json_scalar(const nlohmann::json &v)
{
    return v.is_string() ? v.get<std::string>() : v.dump();
}

RunConfig parse_manifest(std::istream &in, const std::string &origin)
{
    nlohmann::json doc;
    try
    {
        doc = nlohmann::json::parse(in);
    }
    catch (const nlohmann::json::parse_error &e)
    {
        throw ConfigError(origin + ": " + e.what());
    }
    const nlohmann::json &cfg = doc.contains("config") ? doc.at("config") : doc;
    if (!cfg.is_object())
        throw ConfigError(origin + ": config must be an object");
    pt::ptree tree;
    for (const auto &[section, body] : cfg.items())
    {
        if (!body.is_object())
            fail(section, "expected an object of keys");
        pt::ptree node;
        for (const auto &[key, value] : body.items())
        {
            if (value.is_null())
                continue;
            if (value.is_structured())
                fail(section + "." + key, "expected a scalar");
            node.put(pt::ptree::path_type(key, '\0'), json_scalar(value));
        }
        tree.add_child(pt::ptree::path_type(section, '\0'), node);
    }
    return from_tree(tree);
}

} // namespace

const char *to_string(RunMode mode)
{
    switch (mode)
    {
    case RunMode::DynamicFiltering:
        return "df";
    case RunMode::Ablation:
        return "ablation";
    case RunMode::Both:
        return "both";
    }
    return "?";
}

RunMode parse_run_mode(const std::string &text)
{
    if (text == "df")
        return RunMode::DynamicFiltering;
    if (text == "ablation")
        return RunMode::Ablation;
    if (text == "both")
        return RunMode::Both;
    throw std::invalid_argument("unknown mode '" + text + "' (expected df, ablation or both)");
}

void RunConfig::validate() const
{
    try
    {
        scenario.validate();
    }
    catch (const ConfigError &)
    {
        throw;
    }
    catch (const std::invalid_argument &e)
    {
        throw ConfigError(e.what());
    }
    if (!(beta_th > 0.0) || !std::isfinite(beta_th))
        fail("algorithm.beta_th", "must be > 0");
    if (i_iter < 1)
        fail("algorithm.i_iter", "must be >= 1");
    if (!(large_threshold > 0.0))
        fail("algorithm.large_threshold", "must be > 0");
    if (blur)
    {
        if (!(blur->width > 0.0))
            fail("algorithm.blur_width", "must be > 0");
        if (blur->q && !(*blur->q >= 0.0))
            fail("algorithm.blur_q", "must be >= 0");
    }
    if (realizations < 1)
        fail("run.realizations", "must be >= 1");
    if (workers < 1)
        fail("run.workers", "must be >= 1");
    if (!(support_threshold > 0.0 && support_threshold < 1.0))
        fail("run.support_threshold", "must lie in (0, 1)");
    if (output_dir.empty())
        fail("run.output_dir", "must not be empty");
}

TrackerConfig RunConfig::tracker(TrackMode track_mode, std::uint64_t seed) const
{
    TrackerConfig out;
    out.beta_th = beta_th;
    out.i_iter = i_iter;
    out.large_threshold = large_threshold;
    out.mode = track_mode;
    out.blur = blur;
    out.update_offgrid = update_offgrid;
    out.blur_seed = seed;
    return out;
}

RunConfig parse_config(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path.string() + ": cannot open config file");
    if (path.extension() == ".json")
        return parse_manifest(in, path.string());
    return parse_ini_stream(in, path.string());
}

RunConfig parse_config_text(const std::string &ini)
{
    std::istringstream in(ini);
    return parse_ini_stream(in, "<config>");
}

nlohmann::json config_to_json(const RunConfig &cfg)
{
    const ScenarioConfig &s = cfg.scenario;
    nlohmann::json out;
    out["scenario"] = {
        {"n_bs", s.n_bs},
        {"m_users", s.m_users},
        {"pilot_len", s.pilot_len},
        {"n_subcarriers", s.n_subcarriers},
        // JSON has no infinity; the noiseless setting is kept as text
        {"snr_db", std::isfinite(s.snr_db) ? nlohmann::json(s.snr_db) : nlohmann::json("inf")},
        {"aoa_min_deg", s.aoa_min_deg},
        {"aoa_max_deg", s.aoa_max_deg},
        {"angular_spread_deg", s.angular_spread_deg},
        {"paths_per_user", s.paths_per_user},
        {"drift_deg_per_step", s.drift_deg_per_step},
        {"t_steps", s.t_steps},
        {"env_change_at", s.env_change_at ? nlohmann::json(*s.env_change_at) : nlohmann::json(nullptr)},
        {"gain_ar_coeff", s.gain_ar_coeff},
        {"max_delay_samples", s.max_delay_samples},
    };
    out["algorithm"] = {
        {"beta_th", cfg.beta_th},
        {"i_iter", cfg.i_iter},
        {"large_threshold", cfg.large_threshold},
        {"mode", to_string(cfg.mode)},
        {"update_offgrid", cfg.update_offgrid},
        {"offgrid_reference", to_string(cfg.offgrid_reference)},
        {"blur_width", cfg.blur ? nlohmann::json(cfg.blur->width) : nlohmann::json(nullptr)},
        {"blur_q", cfg.blur && cfg.blur->q ? nlohmann::json(*cfg.blur->q) : nlohmann::json(nullptr)},
    };
    out["run"] = {
        {"realizations", cfg.realizations},
        {"base_seed", cfg.base_seed},
        {"workers", cfg.workers},
        {"output_dir", cfg.output_dir.string()},
        {"emit_plots", cfg.emit_plots},
        {"support_threshold", cfg.support_threshold},
        {"write_truth", cfg.write_truth},
    };
    return out;
}

std::string config_to_ini(const RunConfig &cfg)
{
    const nlohmann::json doc = config_to_json(cfg);
    std::ostringstream out;
    for (const auto &[section, body] : doc.items())
    {
        out << '[' << section << "]\n";
        for (const auto &[key, value] : body.items())
            if (!value.is_null())
                out << key << " = " << json_scalar(value) << '\n';
        out << '\n';
    }
    return out.str();
}

} // namespace mtsbl
