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

// Experiment driver: mtsbl_sim --config run.ini --output out/ --mode both --plots

#include "mtsbl/runner.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char **argv)
{
    CLI::App app{"MT-SBL channel tracking simulator"};
    app.set_version_flag("--version", mtsbl::kVersion);

    std::string config_path, output_dir, mode;
    std::uint64_t base_seed = 0;
    std::size_t workers = 0, realizations = 0;
    bool plots = false;

    app.add_option("--config", config_path, "INI config or a previous manifest.json")->check(CLI::ExistingFile);
    app.add_option("--output", output_dir, "output directory (overrides run.output_dir)");
    app.add_option("--seeds", base_seed, "base seed; realization i uses base + i");
    app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--realizations", realizations, "number of realizations")->check(CLI::PositiveNumber);
    app.add_option("--mode", mode, "tracking mode")->check(CLI::IsMember({"df", "ablation", "both"}));
    app.add_flag("--plots", plots, "write fig_iterations.svg, fig_rmse.svg and fig_track.svg");
    CLI11_PARSE(app, argc, argv);

    try
    {
        mtsbl::RunConfig cfg = config_path.empty() ? mtsbl::RunConfig{} : mtsbl::parse_config(config_path);
        if (!output_dir.empty())
            cfg.output_dir = output_dir;
        if (app.count("--seeds"))
            cfg.base_seed = base_seed;
        if (app.count("--workers"))
            cfg.workers = workers;
        if (app.count("--realizations"))
            cfg.realizations = realizations;
        if (!mode.empty())
            cfg.mode = mtsbl::parse_run_mode(mode);
        if (plots)
            cfg.emit_plots = true;
        cfg.validate();
        return mtsbl::run(cfg, std::cerr);
    }
    catch (const mtsbl::ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
