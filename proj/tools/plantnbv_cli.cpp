#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "plantnbv/harness.hpp"
#include "verify.hpp"

namespace {

using namespace plantnbv;

ExperimentConfig load_config(const std::string& config_path, const std::string& out_dir,
                             int workers, std::uint64_t seed, bool seed_set) {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig::desk_default()
                                               : ExperimentConfig::load(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (workers > 0) cfg.workers = workers;
    if (seed_set) cfg.master_seed = seed;
    return cfg;
}

void print_summary_excerpt(const AggregateResult& aggregate) {
    std::printf("%-16s %-12s %8s %8s %10s\n", "planner", "attention", "f1@3",
                "f1@final", "views>=0.8");
    for (const AggregateCell& cell : aggregate.cells) {
        const int last = aggregate.max_views - 1;
        const int v3 = std::min(2, last);
        std::printf("%-16s %-12s %8.3f %8.3f %10.1f\n", cell.planner.c_str(),
                    cell.attention.c_str(), cell.mean_f1[v3], cell.mean_f1[last],
                    cell.median_views_to_threshold.empty()
                        ? -1.0
                        : cell.median_views_to_threshold.front());
    }
}

int run_single_trial(const ExperimentConfig& base, const std::string& planner,
                     const std::string& attention, std::uint64_t plant_seed,
                     double orientation_deg) {
    ExperimentConfig cfg = base;
    cfg.planners = {planner};
    cfg.plant_seeds = {plant_seed};
    cfg.orientations_deg = {orientation_deg};
    if (!attention.empty()) cfg.attention_targets = {attention};
    cfg.output_dir = (std::filesystem::path(base.output_dir) / "trial").string();

    const AggregateResult aggregate = run_experiment(cfg);
    std::printf("trial: planner=%s plant_seed=%llu orientation=%g\n", planner.c_str(),
                static_cast<unsigned long long>(plant_seed), orientation_deg);
    for (const std::string& target : cfg.attention_targets) {
        const AggregateCell* cell = aggregate.find(planner_group(planner), target);
        if (cell == nullptr) continue;
        std::printf("  target %s\n", target.c_str());
        for (int v = 0; v < aggregate.max_views; ++v) {
            std::printf("    view %2d: f1=%.4f chamfer=%s\n", v + 1, cell->mean_f1[v],
                        std::isfinite(cell->mean_chamfer[v])
                            ? (std::to_string(cell->mean_chamfer[v]).c_str())
                            : "n/a");
        }
    }
    std::printf("artifacts under %s\n", cfg.output_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attention-driven next-best-view planning workbench"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int workers = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    app.add_option("--config", config_path, "JSON config file (defaults: desk-scale study)");
    app.add_option("--out", out_dir, "output directory override");
    app.add_option("--workers", workers, "worker thread count (0 = hardware)");
    auto* seed_opt = app.add_option("--seed", seed, "master seed override");

    auto* run_cmd = app.add_subcommand("run", "run the full study from the config");
    bool paper_replica = false;
    run_cmd->add_flag("--paper-replica", paper_replica,
                      "use the 10 plants x 12 orientations protocol");

    auto* sweep_cmd = app.add_subcommand("sweep", "run a sensitivity sweep");
    std::string axis;
    sweep_cmd->add_option("--axis", axis, "occlusion | candidates | resolution")->required();

    auto* trial_cmd = app.add_subcommand("trial", "run one trial with a verbose trace");
    std::string planner = "nbv_leaf_nodes";
    std::string attention;
    std::uint64_t plant_seed = 1;
    double orientation = 0.0;
    trial_cmd->add_option("--planner", planner, "planner name (nbv_<roi> | predefined_<n> | random)");
    trial_cmd->add_option("--attention", attention, "evaluation target (default: all)");
    trial_cmd->add_option("--plant-seed", plant_seed, "plant seed");
    trial_cmd->add_option("--orientation", orientation, "plant yaw in degrees");

    auto* plot_cmd = app.add_subcommand("plot", "re-render plots from a summary.csv");
    std::string summary_path;
    plot_cmd->add_option("summary", summary_path, "path to summary.csv")->required();

    auto* oracle_cmd = app.add_subcommand("oracle", "run the brute-force verification suites");

    CLI11_PARSE(app, argc, argv);
    seed_set = seed_opt->count() > 0;

    try {
        if (app.got_subcommand(run_cmd)) {
            ExperimentConfig cfg = load_config(config_path, out_dir, workers, seed, seed_set);
            if (paper_replica && config_path.empty()) {
                const std::string keep_out = cfg.output_dir;
                cfg = ExperimentConfig::paper_replica();
                cfg.output_dir = keep_out;
                if (workers > 0) cfg.workers = workers;
                if (seed_set) cfg.master_seed = seed;
            }
            const AggregateResult aggregate = run_experiment(cfg);
            print_summary_excerpt(aggregate);
            std::printf("artifacts under %s\n", cfg.output_dir.c_str());
            return 0;
        }
        if (app.got_subcommand(sweep_cmd)) {
            const ExperimentConfig cfg =
                load_config(config_path, out_dir, workers, seed, seed_set);
            const auto results = run_sweep(cfg, axis);
            for (const auto& [level, aggregate] : results) {
                std::printf("== %s = %s ==\n", axis.c_str(), level.c_str());
                print_summary_excerpt(aggregate);
            }
            return 0;
        }
        if (app.got_subcommand(trial_cmd)) {
            const ExperimentConfig cfg =
                load_config(config_path, out_dir, workers, seed, seed_set);
            return run_single_trial(cfg, planner, attention, plant_seed, orientation);
        }
        if (app.got_subcommand(plot_cmd)) {
            const std::filesystem::path summary(summary_path);
            const std::vector<TrialRow> rows =
                read_trials_csv((summary.parent_path() / "trials.csv").string());
            // Thresholds and view count are recovered from the rows.
            int max_views = 1;
            for (const TrialRow& row : rows) max_views = std::max(max_views, row.view);
            const AggregateResult aggregate = aggregate_rows(rows, {0.8, 0.9}, max_views);
            const std::string plot_dir =
                out_dir.empty() ? (summary.parent_path() / "plots").string() : out_dir;
            const auto written = emit_plots(aggregate, plot_dir);
            for (const std::string& path : written) std::printf("wrote %s\n", path.c_str());
            return 0;
        }
        if (app.got_subcommand(oracle_cmd)) {
            const int failures = plantnbv::verify::run_all_oracles(std::cout);
            std::printf("%s\n", failures == 0 ? "all oracle suites passed"
                                              : "oracle suites FAILED");
            return failures == 0 ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
