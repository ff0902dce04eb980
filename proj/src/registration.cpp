#include "bearingreg/registration.hpp"

#include "bearingreg/errors.hpp"
#include "bearingreg/geometry.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <string>

namespace bearingreg {

void GASettings::validate() const {
    if (!(lower_bound < upper_bound)) {
        throw InvalidArgumentError("GASettings: lower bound must be below upper bound");
    }
    if (generations < 1) {
        throw InvalidArgumentError("GASettings: generations must be >= 1");
    }
    if (population_size < 4) {
        throw InvalidArgumentError("GASettings: population size must be >= 4");
    }
    if (window_size && *window_size < 1) {
        throw InvalidArgumentError("GASettings: window size must be >= 1");
    }
}

PairingPlan plan_pairing(std::vector<int> sensor_ids) {
    std::sort(sensor_ids.begin(), sensor_ids.end());
    const int n = static_cast<int>(sensor_ids.size());
    if (n < 3) {
        throw InsufficientSensorsError(
            "plan_pairing: at least three sensors are required for bias observability");
    }
    PairingPlan plan;
    if (n % 2 == 0) {
        plan.mode = PairingPlan::Mode::even;
        for (int i = 0; i < n; i += 2) {
            plan.pairs.emplace_back(sensor_ids[i], sensor_ids[i + 1]);
        }
    } else {
        plan.mode = PairingPlan::Mode::odd;
        plan.pairs.emplace_back(sensor_ids[0], sensor_ids[1]);
        plan.pairs.emplace_back(sensor_ids[0], sensor_ids[2]);
        for (int i = 3; i + 1 < n; i += 2) {
            plan.pairs.emplace_back(sensor_ids[i], sensor_ids[i + 1]);
        }
    }
    return plan;
}

PseudoBatch build_pseudo_measurements(const std::vector<BearingReport>& reports,
                                      const PairingPlan& plan,
                                      const std::vector<SensorConfig>& sensors) {
    if (plan.pairs.size() < 2) {
        throw InsufficientSensorsError("build_pseudo_measurements: plan needs two pairs");
    }
    const int n_sensors = static_cast<int>(sensors.size());

    std::map<std::pair<int, int>, std::vector<std::optional<double>>> grouped;
    for (const auto& r : reports) {
        if (!r.target) {
            continue;
        }
        auto& slot = grouped[{r.time, *r.target}];
        if (slot.empty()) {
            slot.resize(n_sensors);
        }
        slot[sensor_index(sensors, r.sensor_id)] = r.angle;
    }

    std::set<int> plan_sensor_idx;
    for (const auto& [a, b] : plan.pairs) {
        plan_sensor_idx.insert(sensor_index(sensors, a));
        plan_sensor_idx.insert(sensor_index(sensors, b));
    }

    PseudoBatch batch;
    for (const auto& [key, slot] : grouped) {
        bool complete = true;
        for (int idx : plan_sensor_idx) {
            if (!slot[idx]) {
                complete = false;
                break;
            }
        }
        if (!complete) {
            ++batch.skipped_incomplete;
            continue;
        }

        MeasurementGroup group;
        group.time = key.first;
        group.target = key.second;
        group.angles.resize(n_sensors, 0.0);
        for (int idx = 0; idx < n_sensors; ++idx) {
            group.angles[idx] = slot[idx].value_or(0.0);
        }

        // Triangulate every planned pair once, then difference adjacent pairs.
        std::vector<Position2D> points(plan.pairs.size());
        std::vector<Covariance2x2> covs(plan.pairs.size());
        bool degenerate = false;
        try {
            for (std::size_t p = 0; p < plan.pairs.size(); ++p) {
                const int i = sensor_index(sensors, plan.pairs[p].first);
                const int j = sensor_index(sensors, plan.pairs[p].second);
                points[p] = triangulate(sensors[i], sensors[j],
                                        group.angles[i], group.angles[j]);
                Covariance2x2 r_polar = Covariance2x2::Zero();
                r_polar(0, 0) = sensors[i].sigma_theta * sensors[i].sigma_theta;
                r_polar(1, 1) = sensors[j].sigma_theta * sensors[j].sigma_theta;
                covs[p] = transform_covariance(
                    pair_jacobian(sensors[i], sensors[j], points[p]), r_polar);
            }
        } catch (const DegenerateGeometryError&) {
            degenerate = true;
        }
        if (degenerate) {
            ++batch.skipped_degenerate;
            continue;
        }

        const int group_index = static_cast<int>(batch.groups.size());
        batch.groups.push_back(std::move(group));
        for (std::size_t p = 0; p + 1 < plan.pairs.size(); ++p) {
            PseudoMeasurement m;
            m.time = key.first;
            m.target = key.second;
            m.pair_a = static_cast<int>(p);
            m.pair_b = static_cast<int>(p + 1);
            m.z = points[p] - points[p + 1];
            m.r_w = covs[p] + covs[p + 1];
            batch.measurements.push_back(m);
            batch.group_of.push_back(group_index);
        }
    }
    return batch;
}

namespace {

constexpr double kLogTwoPi = 1.8378770664093453; // log(2 pi)

/// Precomputed per-measurement quantities for repeated likelihood evaluation.
struct PreparedNll {
    const PseudoBatch* batch = nullptr;
    const PairingPlan* plan = nullptr;
    const std::vector<SensorConfig>* sensors = nullptr;
    std::vector<Eigen::Matrix2d> r_inv;
    std::vector<double> half_logdet;

    PreparedNll(const PseudoBatch& b, const PairingPlan& p,
                const std::vector<SensorConfig>& s)
        : batch(&b), plan(&p), sensors(&s) {
        r_inv.reserve(b.measurements.size());
        half_logdet.reserve(b.measurements.size());
        for (const auto& m : b.measurements) {
            const double det = m.r_w.determinant();
            Eigen::LLT<Eigen::Matrix2d> llt(m.r_w);
            if (llt.info() != Eigen::Success || !(det > 0.0)) {
                throw InvalidCovarianceError(
                    "neg_log_likelihood: pseudo-measurement covariance not positive definite");
            }
            r_inv.push_back(m.r_w.inverse());
            half_logdet.push_back(0.5 * std::log(det));
        }
    }

    double operator()(const BiasVector& bias) const {
        double total = 0.0;
        std::vector<double> corrected;
        for (std::size_t k = 0; k < batch->measurements.size(); ++k) {
            const auto& m = batch->measurements[k];
            const auto& group = batch->groups[batch->group_of[k]];
            corrected = group.angles;
            for (std::size_t s = 0; s < corrected.size(); ++s) {
                corrected[s] -= bias.offsets[static_cast<int>(s)];
            }
            const Eigen::Vector2d h =
                h_of_b(*plan, m.pair_a, m.pair_b, *sensors, corrected, bias);
            const Eigen::Vector2d r = m.z - h;
            total += 0.5 * r.dot(r_inv[k] * r) + half_logdet[k] + kLogTwoPi;
        }
        return total;
    }
};

} // namespace

double neg_log_likelihood(const PseudoBatch& batch, const PairingPlan& plan,
                          const std::vector<SensorConfig>& sensors,
                          const BiasVector& bias) {
    if (bias.size() != static_cast<int>(sensors.size())) {
        throw InvalidArgumentError("neg_log_likelihood: bias dimension mismatch");
    }
    if (!bias.within_bounds()) {
        throw InvalidArgumentError("neg_log_likelihood: bias outside its box bounds");
    }
    return PreparedNll(batch, plan, sensors)(bias);
}

BiasEstimate estimate_bias_batch(const PseudoBatch& batch, const PairingPlan& plan,
                                 const std::vector<SensorConfig>& sensors,
                                 const GASettings& settings,
                                 const std::optional<Eigen::MatrixXd>& warm_start) {
    settings.validate();
    if (batch.empty()) {
        throw NoDataError("estimate_bias_batch: no pseudo-measurements");
    }

    const int dim = static_cast<int>(sensors.size());
    const PreparedNll prepared(batch, plan, sensors);
    const Objective objective = [&](const Eigen::VectorXd& genes) {
        return prepared(BiasVector(genes, settings.lower_bound, settings.upper_bound));
    };

    GaOptions options;
    options.lower_bound = settings.lower_bound;
    options.upper_bound = settings.upper_bound;
    options.generations = settings.generations;
    options.tolerance = settings.tolerance;
    options.population_size = settings.population_size;
    options.seed = settings.seed;
    options.polish = settings.polish;

    const GaResult ga = minimize_ga(objective, dim, options, warm_start);

    BiasEstimate estimate;
    estimate.bias = BiasVector(ga.best, settings.lower_bound, settings.upper_bound);
    estimate.nll = ga.best_fitness;
    estimate.fitness_history = ga.fitness_history;
    estimate.final_population = ga.final_population;
    estimate.generations_run = ga.generations_run;
    return estimate;
}

std::vector<WindowEstimate> estimate_bias_windowed(const PseudoBatch& batch,
                                                   const PairingPlan& plan,
                                                   const std::vector<SensorConfig>& sensors,
                                                   const GASettings& settings) {
    settings.validate();
    if (batch.empty()) {
        throw NoDataError("estimate_bias_windowed: no pseudo-measurements");
    }
    const int window = settings.window_size.value_or(10);

    int t_min = batch.measurements.front().time;
    int t_max = t_min;
    for (const auto& m : batch.measurements) {
        t_min = std::min(t_min, m.time);
        t_max = std::max(t_max, m.time);
    }

    std::vector<WindowEstimate> out;
    std::optional<Eigen::MatrixXd> warm;
    int window_index = 0;
    for (int end = t_min + window - 1; end <= t_max; end += window, ++window_index) {
        PseudoBatch cumulative;
        cumulative.groups = batch.groups;
        for (std::size_t k = 0; k < batch.measurements.size(); ++k) {
            if (batch.measurements[k].time <= end) {
                cumulative.measurements.push_back(batch.measurements[k]);
                cumulative.group_of.push_back(batch.group_of[k]);
            }
        }
        if (cumulative.empty()) {
            continue;
        }
        GASettings window_settings = settings;
        window_settings.seed =
            (window_index == 0) ? settings.seed : derive_seed(settings.seed, window_index);
        WindowEstimate we;
        we.window_index = window_index;
        we.last_time = end;
        we.estimate = estimate_bias_batch(cumulative, plan, sensors, window_settings, warm);
        warm = we.estimate.final_population;
        out.push_back(std::move(we));
    }
    return out;
}

} // namespace bearingreg
