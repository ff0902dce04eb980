#include "bearingreg/scenario.hpp"

#include "bearingreg/errors.hpp"

#include <json.hpp>

#include <fstream>

namespace bearingreg {

using nlohmann::json;

namespace {

ScenarioConfig parse_scenario(const json& j) {
    ScenarioConfig cfg;
    cfg.steps = j.value("steps", cfg.steps);
    cfg.sample_time = j.value("sample_time", cfg.sample_time);
    cfg.truth_q = j.value("truth_q", cfg.truth_q);
    cfg.tracker_q = j.value("tracker_q", cfg.tracker_q);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.crlb_scale = j.value("crlb_scale", cfg.crlb_scale);
    cfg.persistence = j.value("persistence", cfg.persistence);

    const std::string mode = j.value("mode", std::string("distributed"));
    if (mode == "distributed") {
        cfg.mode = ScenarioMode::distributed;
    } else if (mode == "centralized") {
        cfg.mode = ScenarioMode::centralized;
    } else {
        throw ConfigError("scenario: unknown mode '" + mode + "'");
    }

    if (!j.contains("sensors") || !j["sensors"].is_array()) {
        throw ConfigError("scenario: 'sensors' array required");
    }
    for (const auto& js : j["sensors"]) {
        SensorConfig s;
        s.id = js.at("id").get<int>();
        s.position = Position2D(js.at("x").get<double>(), js.at("y").get<double>());
        s.sigma_theta = js.at("sigma_theta").get<double>();
        s.true_bias = js.value("bias", 0.0);
        cfg.sensors.push_back(s);
    }

    if (!j.contains("targets") || !j["targets"].is_array()) {
        throw ConfigError("scenario: 'targets' array required");
    }
    for (const auto& jt : j["targets"]) {
        Eigen::Vector4d t;
        t << jt.at("x").get<double>(), jt.value("vx", 0.0),
             jt.at("y").get<double>(), jt.value("vy", 0.0);
        cfg.targets.push_back(t);
    }

    if (j.contains("clutter")) {
        const auto& jc = j["clutter"];
        cfg.clutter.lambda = jc.value("lambda", cfg.clutter.lambda);
        cfg.clutter.volume = jc.value("volume", cfg.clutter.volume);
        cfg.clutter.p_d = jc.value("pd", cfg.clutter.p_d);
    }

    if (j.contains("ga")) {
        const auto& jg = j["ga"];
        cfg.ga.lower_bound = jg.value("lower_bound", cfg.ga.lower_bound);
        cfg.ga.upper_bound = jg.value("upper_bound", cfg.ga.upper_bound);
        cfg.ga.generations = jg.value("generations", cfg.ga.generations);
        cfg.ga.tolerance = jg.value("tolerance", cfg.ga.tolerance);
        cfg.ga.population_size = jg.value("population_size", cfg.ga.population_size);
        cfg.ga.polish = jg.value("polish", cfg.ga.polish);
        if (jg.contains("window_size")) {
            cfg.ga.window_size = jg["window_size"].get<int>();
        }
    }

    cfg.validate();
    return cfg;
}

} // namespace

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("scenario file not found: " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("scenario parse error in " + path + ": " + e.what());
    }
    try {
        return parse_scenario(j);
    } catch (const json::exception& e) {
        throw ConfigError("scenario field error in " + path + ": " + e.what());
    }
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
    json j;
    j["steps"] = cfg.steps;
    j["sample_time"] = cfg.sample_time;
    j["truth_q"] = cfg.truth_q;
    j["tracker_q"] = cfg.tracker_q;
    j["seed"] = cfg.seed;
    j["crlb_scale"] = cfg.crlb_scale;
    j["persistence"] = cfg.persistence;
    j["mode"] = cfg.mode == ScenarioMode::distributed ? "distributed" : "centralized";

    j["sensors"] = json::array();
    for (const auto& s : cfg.sensors) {
        j["sensors"].push_back({{"id", s.id},
                                {"x", s.position.x()},
                                {"y", s.position.y()},
                                {"sigma_theta", s.sigma_theta},
                                {"bias", s.true_bias}});
    }
    j["targets"] = json::array();
    for (const auto& t : cfg.targets) {
        j["targets"].push_back({{"x", t[0]}, {"vx", t[1]}, {"y", t[2]}, {"vy", t[3]}});
    }
    j["clutter"] = {{"lambda", cfg.clutter.lambda},
                    {"volume", cfg.clutter.volume},
                    {"pd", cfg.clutter.p_d}};
    json jg = {{"lower_bound", cfg.ga.lower_bound},
               {"upper_bound", cfg.ga.upper_bound},
               {"generations", cfg.ga.generations},
               {"tolerance", cfg.ga.tolerance},
               {"population_size", cfg.ga.population_size},
               {"polish", cfg.ga.polish}};
    if (cfg.ga.window_size) {
        jg["window_size"] = *cfg.ga.window_size;
    }
    j["ga"] = jg;
    return j.dump(2) + "\n";
}

void save_scenario(const ScenarioConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write scenario file: " + path);
    }
    out << scenario_to_json(cfg);
}

} // namespace bearingreg
