#include "bearingreg/csv.hpp"
#include "bearingreg/errors.hpp"
#include "bearingreg/scenario.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

namespace {

using namespace bearingreg;

struct CommonArgs {
    std::string scenario_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> generations;
    std::optional<std::string> mode;
};

ScenarioConfig load_with_overrides(const CommonArgs& args) {
    ScenarioConfig cfg = load_scenario(args.scenario_path);
    if (args.seed) {
        cfg.seed = *args.seed;
    }
    if (args.generations) {
        cfg.ga.generations = *args.generations;
    }
    if (args.mode) {
        if (*args.mode == "distributed") {
            cfg.mode = ScenarioMode::distributed;
        } else if (*args.mode == "centralized") {
            cfg.mode = ScenarioMode::centralized;
        } else {
            throw ConfigError("unknown mode: " + *args.mode);
        }
    }
    cfg.validate();
    return cfg;
}

std::string out_path(const CommonArgs& args, const std::string& name) {
    std::filesystem::create_directories(args.out_dir);
    return (std::filesystem::path(args.out_dir) / name).string();
}

PairingPlan plan_of(const ScenarioConfig& cfg) {
    std::vector<int> ids;
    for (const auto& s : cfg.sensors) {
        ids.push_back(s.id);
    }
    return plan_pairing(ids);
}

std::vector<BearingReport> simulate_reports(const ScenarioConfig& cfg, const PairingPlan& plan,
                                            TruthData* truth_out) {
    std::mt19937_64 rng(derive_seed(cfg.seed, 0));
    TruthData truth = generate_truth(cfg, rng);
    std::vector<BearingReport> reports = generate_bearings(truth, cfg.sensors, rng);
    if (cfg.mode == ScenarioMode::centralized) {
        const auto detections =
            apply_detection_and_clutter(reports, cfg.clutter, cfg.sensors, cfg.steps, rng);
        AssociationSettings assoc;
        assoc.persistence = cfg.persistence;
        reports = prune_and_associate(detections, plan, cfg.sensors, assoc);
    }
    if (truth_out) {
        *truth_out = std::move(truth);
    }
    return reports;
}

int cmd_simulate(const CommonArgs& args) {
    const ScenarioConfig cfg = load_with_overrides(args);
    const PairingPlan plan = plan_of(cfg);
    TruthData truth;
    const auto reports = simulate_reports(cfg, plan, &truth);

    CsvWriter truth_csv(out_path(args, "truth.csv"),
                        {"run", "k", "target", "x", "vx", "y", "vy"});
    for (std::size_t t = 0; t < truth.size(); ++t) {
        for (int k = 0; k < cfg.steps; ++k) {
            const auto& s = truth[t][k];
            truth_csv.row({"0", CsvWriter::num(k), CsvWriter::num(static_cast<int>(t)),
                           CsvWriter::num(s[0]), CsvWriter::num(s[1]),
                           CsvWriter::num(s[2]), CsvWriter::num(s[3])});
        }
    }

    CsvWriter reports_csv(out_path(args, "reports.csv"),
                          {"run", "k", "sensor", "target_or_null", "bearing_rad"});
    for (const auto& r : reports) {
        reports_csv.row({"0", CsvWriter::num(r.time), CsvWriter::num(r.sensor_id),
                         r.target ? CsvWriter::num(*r.target) : "",
                         CsvWriter::num(r.angle)});
    }
    std::cout << "wrote " << reports.size() << " reports for " << cfg.targets.size()
              << " targets over " << cfg.steps << " steps\n";
    return 0;
}

int cmd_register(const CommonArgs& args, std::optional<int> window) {
    ScenarioConfig cfg = load_with_overrides(args);
    if (window) {
        cfg.ga.window_size = *window;
    }
    const PairingPlan plan = plan_of(cfg);
    const auto reports = simulate_reports(cfg, plan, nullptr);
    const PseudoBatch batch = build_pseudo_measurements(reports, plan, cfg.sensors);
    if (batch.empty()) {
        throw NoDataError("no usable pseudo-measurements in the scenario");
    }

    GASettings settings = cfg.ga;
    settings.seed = derive_seed(cfg.seed, 1);

    CsvWriter est_csv(out_path(args, "bias_estimates.csv"), [&] {
        std::vector<std::string> header = {"window_index"};
        for (const auto& s : cfg.sensors) {
            header.push_back("b" + std::to_string(s.id));
        }
        header.push_back("nll");
        return header;
    }());
    CsvWriter fit_csv(out_path(args, "fitness_history.csv"),
                      {"window_index", "generation", "best_nll"});

    auto emit = [&](int window_index, const BiasEstimate& est) {
        std::vector<std::string> row = {CsvWriter::num(window_index)};
        for (int s = 0; s < est.bias.size(); ++s) {
            row.push_back(CsvWriter::num(est.bias[s]));
        }
        row.push_back(CsvWriter::num(est.nll));
        est_csv.row(row);
        for (std::size_t g = 0; g < est.fitness_history.size(); ++g) {
            fit_csv.row({CsvWriter::num(window_index), CsvWriter::num(static_cast<int>(g)),
                         CsvWriter::num(est.fitness_history[g])});
        }
    };

    if (window) {
        const auto estimates = estimate_bias_windowed(batch, plan, cfg.sensors, settings);
        for (const auto& we : estimates) {
            emit(we.window_index, we.estimate);
        }
        std::cout << estimates.size() << " window estimates written\n";
    } else {
        const BiasEstimate est = estimate_bias_batch(batch, plan, cfg.sensors, settings);
        emit(0, est);
        std::cout << "batch estimate written (nll " << est.nll << ")\n";
    }
    return 0;
}

int cmd_crlb(const CommonArgs& args) {
    const ScenarioConfig cfg = load_with_overrides(args);
    const PairingPlan plan = plan_of(cfg);

    Eigen::VectorXd b(cfg.sensors.size());
    for (std::size_t s = 0; s < cfg.sensors.size(); ++s) {
        b[s] = cfg.sensors[s].true_bias;
    }
    const BiasVector b_true(b, cfg.ga.lower_bound, cfg.ga.upper_bound);

    const auto frames = true_bearing_frames(cfg);
    const CrlbResult result = crlb(fim(frames, plan, cfg.sensors, b_true));

    CsvWriter csv(out_path(args, "crlb.csv"), {"sensor_id", "sqrt_crlb_rad"});
    for (std::size_t s = 0; s < cfg.sensors.size(); ++s) {
        csv.row({CsvWriter::num(cfg.sensors[s].id),
                 CsvWriter::num(result.sqrt_diagonal[static_cast<int>(s)])});
    }
    std::cout << "sqrt-CRLB range [" << result.sqrt_diagonal.minCoeff() << ", "
              << result.sqrt_diagonal.maxCoeff() << "] rad\n";
    return 0;
}

int cmd_mc(const CommonArgs& args, int runs, std::optional<double> scale) {
    ScenarioConfig cfg = load_with_overrides(args);
    if (scale) {
        cfg.crlb_scale = *scale;
    }
    const MonteCarloResult result = monte_carlo(cfg, runs);

    CsvWriter table(out_path(args, "bias_table.csv"),
                    {"sensor", "sqrt_crlb", "rmse"});
    for (std::size_t s = 0; s < cfg.sensors.size(); ++s) {
        table.row({CsvWriter::num(cfg.sensors[s].id),
                   CsvWriter::num(result.crlb.sqrt_diagonal[static_cast<int>(s)]),
                   CsvWriter::num(result.bias_rmse[static_cast<int>(s)])});
    }

    if (!result.rmse_corrected.values.empty()) {
        CsvWriter curves(out_path(args, "rmse_curves.csv"),
                         {"k", "rmse_uncorrected", "rmse_corrected", "sqrt_crlb_position"});
        const int start = result.rmse_corrected.start_time;
        for (std::size_t i = 0; i < result.rmse_corrected.values.size(); ++i) {
            const int k = start + static_cast<int>(i);
            const double floor = (k < static_cast<int>(result.position_floor.size()))
                                     ? result.position_floor[k]
                                     : 0.0;
            curves.row({CsvWriter::num(k),
                        CsvWriter::num(result.rmse_uncorrected.values[i]),
                        CsvWriter::num(result.rmse_corrected.values[i]),
                        CsvWriter::num(floor)});
        }
    }

    std::cout << "runs " << runs << " (failed " << result.failed_runs << "), bias RMSE per sensor:";
    for (int s = 0; s < result.bias_rmse.size(); ++s) {
        std::cout << " " << result.bias_rmse[s];
    }
    std::cout << "\nwall " << result.wall_seconds << " s\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bearing-only sensor registration: simulation, bias estimation, "
                 "CRLB and tracking experiments"};
    app.require_subcommand(1);

    CommonArgs args;
    int runs = 100;
    std::optional<int> window;
    std::optional<double> scale;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", args.scenario_path, "scenario JSON file")->required();
        cmd->add_option("--out", args.out_dir, "output directory");
        cmd->add_option("--seed", args.seed, "override scenario seed");
        cmd->add_option("--generations", args.generations, "override GA generations");
        cmd->add_option("--mode", args.mode, "distributed or centralized");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "write truth and report dumps");
    add_common(simulate);

    CLI::App* reg = app.add_subcommand("register", "estimate sensor biases");
    add_common(reg);
    reg->add_option("--window", window, "windowed mode with this window size");

    CLI::App* crlb_cmd = app.add_subcommand("crlb", "bias CRLB for the scenario");
    add_common(crlb_cmd);

    CLI::App* mc = app.add_subcommand("mc", "Monte Carlo registration + tracking battery");
    add_common(mc);
    mc->add_option("--runs", runs, "number of Monte Carlo runs");
    mc->add_option("--scale", scale, "CRLB variance inflation scale");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            return cmd_simulate(args);
        }
        if (reg->parsed()) {
            return cmd_register(args, window);
        }
        if (crlb_cmd->parsed()) {
            return cmd_crlb(args);
        }
        if (mc->parsed()) {
            return cmd_mc(args, runs, scale);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidArgumentError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
