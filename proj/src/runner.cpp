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

#include "mtsbl/runner.hpp"

#include "mtsbl/svg_plot.hpp"

#include <atomic>
#include <charconv>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

namespace mtsbl {

namespace {

// Shortest round-trip text, so identical doubles always print identically.
std::string fmt(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double mean_norm(const SubcarrierVectors &h)
{
    double acc = 0.0;
    for (const auto &v : h)
        acc += v.norm();
    return h.empty() ? 0.0 : acc / static_cast<double>(h.size());
}

std::ofstream open_output(const std::filesystem::path &path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    return out;
}

nlohmann::json manifest_for(const RunConfig &cfg)
{
    nlohmann::json seeds = nlohmann::json::array();
    for (std::size_t i = 0; i < cfg.realizations; ++i)
        seeds.push_back(cfg.base_seed + i);
    std::vector<std::string> outputs{"manifest.json", "config.ini", "metrics.csv", "summary.csv"};
    if (cfg.write_truth)
        outputs.emplace_back("truth.csv");
    if (cfg.emit_plots)
        outputs.insert(outputs.end(), {"fig_iterations.svg", "fig_rmse.svg", "fig_track.svg"});
    return {
        {"tool", "mtsbl_sim"},
        {"version", kVersion},
        {"config", config_to_json(cfg)},
        {"seeds", seeds},
        {"defaults",
         {
             {"seed_rule", "seed = base_seed + realization index; every mode of a realization shares the scenario"},
             {"initial_hyperparameters", "alpha = 1, alpha0 = 1, a = b = c = d = 0.01, nu = 0"},
             {"ablation_reset", "c = d = 0.01 at every step"},
             {"pilots", "scaled DFT rows, identical on all subcarriers, unit power per user"},
             {"channel_scale", "unit average power per antenna"},
             {"support_rule", "RMS magnitude over subcarriers above support_threshold * peak"},
             {"scoring_basis", "estimates mapped to the DFT beamspace via F^H Omega(nu)"},
             {"std_convention", "population (divide by the number of realizations)"},
         }},
        {"outputs", outputs},
    };
}

void write_summary(const std::filesystem::path &path, const std::vector<RealizationRun> &runs,
                   const std::vector<TrackMode> &modes)
{
    std::ofstream out = open_output(path);
    out << "t,mode,rmse_norm_mean,rmse_norm_std,nmse_mean,nmse_std,support_f1_mean,support_f1_std,"
           "iterations_mean,iterations_std\n";
    for (std::size_t k = 0; k < modes.size(); ++k)
    {
        std::vector<std::vector<StepMetrics>> per_seed;
        for (const auto &r : runs)
            per_seed.push_back(r.modes[k].steps);
        const auto rows = aggregate(per_seed);
        for (std::size_t t = 0; t < rows.size(); ++t)
        {
            const auto &a = rows[t];
            out << t << ',' << to_string(modes[k]) << ',' << fmt(a.rmse_norm.mean) << ',' << fmt(a.rmse_norm.std) << ','
                << fmt(a.nmse.mean) << ',' << fmt(a.nmse.std) << ',' << fmt(a.support_f1.mean) << ','
                << fmt(a.support_f1.std) << ',' << fmt(a.iterations.mean) << ',' << fmt(a.iterations.std) << '\n';
        }
    }
}

void write_plots(const std::filesystem::path &dir, const std::vector<RealizationRun> &runs,
                 const std::vector<TrackMode> &modes)
{
    std::vector<PlotSeries> iters, rmse, track;
    for (std::size_t k = 0; k < modes.size(); ++k)
    {
        std::vector<std::vector<StepMetrics>> per_seed;
        for (const auto &r : runs)
            per_seed.push_back(r.modes[k].steps);
        const auto rows = aggregate(per_seed);
        PlotSeries si{to_string(modes[k]), {}, {}, k > 0}, sr = si;
        for (std::size_t t = 0; t < rows.size(); ++t)
        {
            si.x.push_back(static_cast<double>(t));
            si.y.push_back(rows[t].iterations.mean);
            sr.x.push_back(static_cast<double>(t));
            sr.y.push_back(rows[t].rmse_norm.mean);
        }
        iters.push_back(std::move(si));
        rmse.push_back(std::move(sr));
    }

    const RealizationRun &first = runs.front();
    PlotSeries truth{"true", {}, {}, false};
    for (std::size_t t = 0; t < first.norm_truth.size(); ++t)
    {
        truth.x.push_back(static_cast<double>(t));
        truth.y.push_back(first.norm_truth[t]);
    }
    track.push_back(truth);
    for (const auto &m : first.modes)
    {
        PlotSeries s{std::string("estimated (") + to_string(m.mode) + ")", truth.x, m.norm_estimate, true};
        track.push_back(std::move(s));
    }

    const std::string n_runs = std::to_string(runs.size());
    write_svg_plot(dir / "fig_iterations.svg", {"EM iterations per time step (mean of " + n_runs + ")", "t", "iterations"},
                   iters);
    write_svg_plot(dir / "fig_rmse.svg", {"RMSE of the virtual-channel norm (mean of " + n_runs + ")", "t", "RMSE"},
                   rmse);
    write_svg_plot(dir / "fig_track.svg",
                   {"Virtual-channel norm, realization seed " + std::to_string(first.seed), "t",
                    "mean over subcarriers of ||h||"},
                   track);
}

} // namespace

std::vector<TrackMode> modes_of(RunMode mode)
{
    switch (mode)
    {
    case RunMode::DynamicFiltering:
        return {TrackMode::DynamicFiltering};
    case RunMode::Ablation:
        return {TrackMode::Ablation};
    case RunMode::Both:
        return {TrackMode::DynamicFiltering, TrackMode::Ablation};
    }
    return {};
}

RealizationRun run_realization(const RunConfig &cfg, std::size_t index)
{
    RealizationRun out;
    out.index = index;
    out.seed = cfg.base_seed + index;

    ScenarioConfig scenario = cfg.scenario;
    scenario.rng_seed = out.seed;
    const Realization sim = simulate(scenario, cfg.offgrid_reference);
    for (const auto &snap : sim.truth.steps)
        out.norm_truth.push_back(mean_norm(snap.h));

    for (TrackMode mode : modes_of(cfg.mode))
    {
        const TrackRecord rec = track(sim.measurements, sim.dict, cfg.tracker(mode, out.seed));
        ModeRun m{mode, {}, {}};
        for (std::size_t t = 0; t < rec.steps.size(); ++t)
        {
            m.steps.push_back(score_step(rec.steps[t].h_grid, sim.truth.steps[t].h, rec.steps[t].iterations,
                                         cfg.support_threshold));
            m.norm_estimate.push_back(mean_norm(rec.steps[t].h_grid));
        }
        out.modes.push_back(std::move(m));
    }
    return out;
}

void write_metrics_rows(std::ostream &out, const RealizationRun &run)
{
    for (const auto &m : run.modes)
        for (std::size_t t = 0; t < m.steps.size(); ++t)
        {
            const StepMetrics &s = m.steps[t];
            out << t << ',' << run.index << ',' << fmt(s.rmse_norm) << ',' << fmt(s.nmse) << ',' << fmt(s.support_f1)
                << ',' << fmt(s.iterations) << ',' << to_string(m.mode) << ',' << run.seed << '\n';
        }
}

int run(const RunConfig &cfg, std::ostream &log)
{
    return run(cfg, log, run_realization);
}

int run(const RunConfig &cfg, std::ostream &log, const RealizationFn &realize)
{
    cfg.validate();
    std::filesystem::create_directories(cfg.output_dir);
    {
        std::ofstream manifest = open_output(cfg.output_dir / "manifest.json");
        manifest << manifest_for(cfg).dump(2) << '\n';
    }
    {
        std::ofstream ini = open_output(cfg.output_dir / "config.ini");
        ini << config_to_ini(cfg);
    }
    if (cfg.write_truth)
    {
        ScenarioConfig scenario = cfg.scenario;
        scenario.rng_seed = cfg.base_seed;
        Rng rng(scenario.rng_seed);
        std::ofstream truth = open_output(cfg.output_dir / "truth.csv");
        write_truth_csv(truth, generate_channel(scenario, rng));
    }

    std::ofstream csv = open_output(cfg.output_dir / "metrics.csv");
    csv << kMetricsHeader << '\n';
    csv.flush();

    // Workers finish in any order; rows are committed strictly by realization index.
    std::vector<RealizationRun> done(cfg.realizations);
    std::map<std::size_t, std::string> failures;
    std::size_t next_commit = 0;
    bool stopped = false;
    std::mutex lock;
    std::atomic<std::size_t> next_task{0};
    std::atomic<bool> abort{false};

    auto commit = [&] {
        while (!stopped && next_commit < cfg.realizations)
        {
            if (auto f = failures.find(next_commit); f != failures.end())
            {
                csv << "FAILED," << next_commit << ",,,,,," << cfg.base_seed + next_commit << '\n';
                csv.flush();
                log << "realization " << next_commit << " (seed " << cfg.base_seed + next_commit
                    << ") failed: " << f->second << '\n';
                stopped = true;
                return;
            }
            if (done[next_commit].modes.empty())
                return;
            write_metrics_rows(csv, done[next_commit]);
            csv.flush();
            ++next_commit;
        }
    };

    auto worker = [&] {
        for (;;)
        {
            const std::size_t i = next_task.fetch_add(1);
            if (i >= cfg.realizations || abort.load())
                return;
            RealizationRun result;
            std::string error;
            try
            {
                result = realize(cfg, i);
            }
            catch (const std::exception &e)
            {
                error = e.what();
            }
            std::lock_guard guard(lock);
            if (error.empty())
                done[i] = std::move(result);
            else
            {
                failures.emplace(i, error);
                abort.store(true);
            }
            commit();
        }
    };

    const std::size_t n_workers = std::min(cfg.workers, cfg.realizations);
    {
        std::vector<std::jthread> pool;
        for (std::size_t k = 0; k < n_workers; ++k)
            pool.emplace_back(worker);
    }
    // Realizations skipped after the abort leave a gap before the failed index;
    // the marker row then follows the last contiguous committed realization.
    if (!failures.empty() && !stopped)
    {
        const auto &[index, error] = *failures.begin();
        csv << "FAILED," << index << ",,,,,," << cfg.base_seed + index << '\n';
        csv.flush();
        log << "realization " << index << " (seed " << cfg.base_seed + index << ") failed: " << error << '\n';
    }
    if (!failures.empty())
        return 1;

    write_summary(cfg.output_dir / "summary.csv", done, modes_of(cfg.mode));
    if (cfg.emit_plots)
        write_plots(cfg.output_dir, done, modes_of(cfg.mode));
    log << "wrote " << cfg.realizations << " realization(s) to " << cfg.output_dir.string() << '\n';
    return 0;
}

} // namespace mtsbl
