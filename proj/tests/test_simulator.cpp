#include "bearingreg/simulator.hpp"

#include "bearingreg/errors.hpp"
#include "bearingreg/geometry.hpp"
#include "support/scenarios.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>
#include <string>

using namespace bearingreg;
using namespace bearingreg::testsupport;

TEST(GenerateTruth, NoiseFreeStraightLines) {
    ScenarioConfig cfg = four_sensor_scenario(Eigen::VectorXd::Zero(4));
    cfg.truth_q = 0.0;
    cfg.steps = 50;
    std::mt19937_64 rng(cfg.seed);
    const TruthData truth = generate_truth(cfg, rng);
    for (std::size_t t = 0; t < cfg.targets.size(); ++t) {
        for (int k = 0; k < cfg.steps; ++k) {
            EXPECT_DOUBLE_EQ(truth[t][k][0], cfg.targets[t][0] + k * cfg.targets[t][1]);
            EXPECT_DOUBLE_EQ(truth[t][k][2], cfg.targets[t][2] + k * cfg.targets[t][3]);
        }
    }
}

TEST(GenerateTruth, VelocityIncrementVarianceMatchesModel) {
    ScenarioConfig cfg = four_sensor_scenario(Eigen::VectorXd::Zero(4));
    cfg.targets.resize(1);
    cfg.steps = 10001;
    cfg.truth_q = 0.001;
    std::mt19937_64 rng(123);
    const TruthData truth = generate_truth(cfg, rng);

    double sum = 0.0, sum_sq = 0.0;
    const int n = cfg.steps - 1;
    for (int k = 0; k < n; ++k) {
        const double dv = truth[0][k + 1][1] - truth[0][k][1];
        sum += dv;
        sum_sq += dv * dv;
    }
    const double var = sum_sq / n - (sum / n) * (sum / n);
    EXPECT_NEAR(var, cfg.truth_q * cfg.sample_time, 0.05 * cfg.truth_q);
}

TEST(GenerateTruth, DeterministicForFixedSeed) {
    ScenarioConfig cfg = four_sensor_scenario(Eigen::VectorXd::Zero(4));
    cfg.steps = 20;
    std::mt19937_64 rng_a(42), rng_b(42);
    const TruthData a = generate_truth(cfg, rng_a);
    const TruthData b = generate_truth(cfg, rng_b);
    for (std::size_t t = 0; t < a.size(); ++t) {
        for (int k = 0; k < cfg.steps; ++k) {
            EXPECT_EQ(a[t][k], b[t][k]);
        }
    }
}

TEST(GenerateBearings, ExactWhenUnbiasedNoiseless) {
    auto sensors = square_sensors(Eigen::VectorXd::Zero(4));
    for (auto& s : sensors) {
        s.sigma_theta = 0.0; // bypass noise draw entirely
    }
    ScenarioConfig cfg = four_sensor_scenario(Eigen::VectorXd::Zero(4));
    cfg.truth_q = 0.0;
    cfg.steps = 5;
    std::mt19937_64 rng(1);
    const TruthData truth = generate_truth(cfg, rng);
    const auto reports = generate_bearings(truth, sensors, rng);
    ASSERT_EQ(reports.size(), 4u * cfg.targets.size() * cfg.steps);
    for (const auto& r : reports) {
        const auto& s = truth[*r.target][r.time];
        const double expected =
            bearing_from(sensors[sensor_index(sensors, r.sensor_id)].position,
                         Position2D(s[0], s[2]));
        EXPECT_DOUBLE_EQ(r.angle, expected);
    }
}

TEST(GenerateBearings, NoiseMomentsMatch) {
    auto sensors = square_sensors(Eigen::VectorXd::Zero(4));
    sensors[0].true_bias = 0.04;
    ScenarioConfig cfg;
    cfg.sensors = sensors;
    cfg.targets = {Eigen::Vector4d{4000.0, 0.0, 3000.0, 0.0}};
    cfg.steps = 100000;
    cfg.truth_q = 0.0;
    std::mt19937_64 rng(77);
    const TruthData truth = generate_truth(cfg, rng);
    const auto reports = generate_bearings(truth, sensors, rng);

    const double true_angle = bearing_from(sensors[0].position, Position2D(4000.0, 3000.0));
    double sum = 0.0, sum_sq = 0.0;
    int n = 0;
    for (const auto& r : reports) {
        if (r.sensor_id != 1) {
            continue;
        }
        const double err = r.angle - true_angle;
        sum += err;
        sum_sq += err * err;
        ++n;
    }
    ASSERT_EQ(n, cfg.steps);
    const double mean = sum / n;
    const double std_dev = std::sqrt(sum_sq / n - mean * mean);
    EXPECT_NEAR(std_dev, kSigmaTheta, 0.02 * kSigmaTheta);
    const double stderr_mean = std_dev / std::sqrt(static_cast<double>(n));
    EXPECT_NEAR(mean, 0.04, 3.0 * stderr_mean);
}

TEST(ApplyDetectionAndClutter, PassThroughWithoutClutter) {
    ScenarioConfig cfg = four_sensor_scenario(kBiasTest1);
    cfg.steps = 10;
    std::mt19937_64 rng(5);
    const TruthData truth = generate_truth(cfg, rng);
    const auto reports = generate_bearings(truth, cfg.sensors, rng);
    ClutterModel clutter; // lambda 0, pd 1
    const auto detections =
        apply_detection_and_clutter(reports, clutter, cfg.sensors, cfg.steps, rng);
    ASSERT_EQ(detections.size(), reports.size());
    std::multiset<double> before, after;
    for (const auto& r : reports) {
        before.insert(r.angle);
    }
    for (const auto& d : detections) {
        EXPECT_FALSE(d.target.has_value());
        after.insert(d.angle);
    }
    EXPECT_EQ(before, after);
}

TEST(ApplyDetectionAndClutter, PoissonClutterMoments) {
    const auto sensors = square_sensors(Eigen::VectorXd::Zero(4));
    ClutterModel clutter;
    clutter.lambda = 0.5;
    clutter.p_d = 0.7;
    const int scans = 100000;
    std::mt19937_64 rng(99);

    std::vector<SensorConfig> one_sensor = {sensors[0]};
    const auto detections =
        apply_detection_and_clutter({}, clutter, one_sensor, scans, rng);

    std::map<int, int> count_hist;
    std::vector<int> per_scan(scans, 0);
    for (const auto& d : detections) {
        per_scan[d.time] += 1;
        EXPECT_GT(d.angle, -std::numbers::pi);
        EXPECT_LE(d.angle, std::numbers::pi);
    }
    double total = 0.0;
    int zeros = 0;
    for (int c : per_scan) {
        total += c;
        count_hist[c] += 1;
        if (c == 0) {
            ++zeros;
        }
    }
    const double mean = total / scans;
    const double expected_mean = clutter.lambda * clutter.volume; // pi
    EXPECT_NEAR(mean, expected_mean, 0.02 * expected_mean);

    const double p0 = static_cast<double>(zeros) / scans;
    const double expected_p0 = std::exp(-expected_mean);
    const double se_p0 = std::sqrt(expected_p0 * (1.0 - expected_p0) / scans);
    EXPECT_NEAR(p0, expected_p0, 3.0 * se_p0);
}

// Chi-square goodness of fit of clutter counts against Poisson(lambda V) at
// the 1% level.
TEST(ApplyDetectionAndClutter, ClutterCountsPassPoissonGof) {
    const auto sensors = square_sensors(Eigen::VectorXd::Zero(4));
    ClutterModel clutter;
    clutter.lambda = 0.5;
    const int scans = 100000;
    std::mt19937_64 rng(123456);
    std::vector<SensorConfig> one_sensor = {sensors[0]};
    const auto detections =
        apply_detection_and_clutter({}, clutter, one_sensor, scans, rng);

    std::vector<int> per_scan(scans, 0);
    for (const auto& d : detections) {
        per_scan[d.time] += 1;
    }
    const double mu = clutter.lambda * clutter.volume;
    const int max_bin = 10; // counts >= max_bin pooled
    std::vector<double> observed(max_bin + 1, 0.0);
    for (int c : per_scan) {
        observed[std::min(c, max_bin)] += 1.0;
    }
    std::vector<double> expected(max_bin + 1, 0.0);
    double pmf = std::exp(-mu);
    double tail = 1.0;
    for (int m = 0; m < max_bin; ++m) {
        expected[m] = scans * pmf;
        tail -= pmf;
        pmf *= mu / (m + 1);
    }
    expected[max_bin] = scans * tail;

    double chi2 = 0.0;
    for (int m = 0; m <= max_bin; ++m) {
        ASSERT_GT(expected[m], 5.0);
        const double diff = observed[m] - expected[m];
        chi2 += diff * diff / expected[m];
    }
    // chi2.ppf(0.99, 10) = 23.209
    EXPECT_LT(chi2, 23.209);
}

namespace {

std::multiset<std::string> z_signature(const PseudoBatch& batch) {
    std::multiset<std::string> sig;
    for (const auto& m : batch.measurements) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%d|%.6f|%.6f", m.time, m.z.x(), m.z.y());
        sig.insert(buf);
    }
    return sig;
}

} // namespace

TEST(PruneAndAssociate, RecoversLabelsWithoutClutter) {
    ScenarioConfig cfg = four_sensor_scenario(kBiasTest1);
    cfg.steps = 20;
    const PairingPlan plan = plan_pairing({1, 2, 3, 4});
    std::mt19937_64 rng(9);
    const TruthData truth = generate_truth(cfg, rng);
    const auto reports = generate_bearings(truth, cfg.sensors, rng);
    ClutterModel clutter; // lambda 0, pd 1
    const auto detections =
        apply_detection_and_clutter(reports, clutter, cfg.sensors, cfg.steps, rng);
    const auto labeled = prune_and_associate(detections, plan, cfg.sensors, {});

    // identical pseudo-measurements as the distributed path, up to relabeling
    const PseudoBatch direct = build_pseudo_measurements(reports, plan, cfg.sensors);
    const PseudoBatch via_assoc = build_pseudo_measurements(labeled, plan, cfg.sensors);
    EXPECT_EQ(direct.size(), via_assoc.size());
    EXPECT_EQ(z_signature(direct), z_signature(via_assoc));

    // and the provisional partition matches the true one: every label maps to
    // exactly one true target's bearing set
    std::map<int, std::set<int>> label_to_targets;
    for (const auto& r : labeled) {
        bool found = false;
        for (const auto& orig : reports) {
            if (orig.time == r.time && orig.sensor_id == r.sensor_id &&
                orig.angle == r.angle) {
                label_to_targets[*r.target].insert(*orig.target);
                found = true;
                break;
            }
        }
        EXPECT_TRUE(found);
    }
    for (const auto& [label, targets] : label_to_targets) {
        EXPECT_EQ(targets.size(), 1u);
    }
}

TEST(PruneAndAssociate, FalseRetentionStaysLow) {
    ScenarioConfig cfg = centralized_scenario(kBiasTest1);
    cfg.steps = 100;
    const PairingPlan plan = plan_pairing({1, 2, 3, 4});
    std::mt19937_64 rng(31);
    const TruthData truth = generate_truth(cfg, rng);
    const auto true_reports = generate_bearings(truth, cfg.sensors, rng);

    std::set<std::pair<int, long long>> true_angle_keys;
    for (const auto& r : true_reports) {
        true_angle_keys.insert({r.sensor_id, llround(r.angle * 1e12)});
    }

    const auto detections = apply_detection_and_clutter(true_reports, cfg.clutter,
                                                        cfg.sensors, cfg.steps, rng);
    const auto labeled = prune_and_associate(detections, plan, cfg.sensors, {});
    ASSERT_GT(labeled.size(), 0u);

    int false_reports = 0;
    for (const auto& r : labeled) {
        if (!true_angle_keys.count({r.sensor_id, llround(r.angle * 1e12)})) {
            ++false_reports;
        }
    }
    EXPECT_LT(static_cast<double>(false_reports) / labeled.size(), 0.05);
}

TEST(PruneAndAssociate, SingleStepCoincidenceDroppedByPersistence) {
    const auto sensors = square_sensors(Eigen::VectorXd::Zero(4));
    const PairingPlan plan = plan_pairing({1, 2, 3, 4});
    // one fabricated consistent quadruple at a single time step
    const Position2D ghost(5200.0, 4800.0);
    std::vector<BearingReport> detections;
    for (int s = 0; s < 4; ++s) {
        detections.push_back(
            {s + 1, 3, bearing_from(sensors[s].position, ghost), std::nullopt});
    }
    const auto labeled = prune_and_associate(detections, plan, sensors, {});
    EXPECT_TRUE(labeled.empty());
}

TEST(CentralizedMatchesDistributedWithoutClutter, PipelineEquivalence) {
    ScenarioConfig base = four_sensor_scenario(kBiasTest1);
    base.steps = 40;

    ScenarioConfig central = base;
    central.mode = ScenarioMode::centralized;
    central.clutter.lambda = 0.0;
    central.clutter.p_d = 1.0;

    const MonteCarloResult distributed = monte_carlo(base, 1, 1);
    const MonteCarloResult centralized = monte_carlo(central, 1, 1);
    ASSERT_EQ(distributed.failed_runs, 0);
    ASSERT_EQ(centralized.failed_runs, 0);
    for (int s = 0; s < 4; ++s) {
        EXPECT_EQ(distributed.bias_errors(0, s), centralized.bias_errors(0, s));
    }
}

TEST(MonteCarlo, SingleRunMatchesDirectPipeline) {
    ScenarioConfig cfg = four_sensor_scenario(kBiasTest1);
    cfg.steps = 30;
    cfg.ga.generations = 20;

    const MonteCarloResult mc = monte_carlo(cfg, 1, 1);
    ASSERT_EQ(mc.failed_runs, 0);

    // direct invocation with the derived seeds
    std::mt19937_64 rng(derive_seed(cfg.seed, 0));
    const TruthData truth = generate_truth(cfg, rng);
    const auto reports = generate_bearings(truth, cfg.sensors, rng);
    const PairingPlan plan = plan_pairing({1, 2, 3, 4});
    const PseudoBatch batch = build_pseudo_measurements(reports, plan, cfg.sensors);
    GASettings settings = cfg.ga;
    settings.seed = derive_seed(cfg.seed, 1);
    const BiasEstimate est = estimate_bias_batch(batch, plan, cfg.sensors, settings);

    for (int s = 0; s < 4; ++s) {
        EXPECT_EQ(mc.bias_errors(0, s), est.bias[s] - cfg.sensors[s].true_bias);
    }
}

TEST(MonteCarlo, RmseAggregationIsColumnwiseRootMeanSquare) {
    ScenarioConfig cfg = four_sensor_scenario(kBiasTest1);
    cfg.steps = 25;
    cfg.ga.generations = 12;
    const MonteCarloResult mc = monte_carlo(cfg, 3, 2);
    ASSERT_EQ(mc.failed_runs, 0);
    for (int s = 0; s < 4; ++s) {
        double sum_sq = 0.0;
        for (int r = 0; r < mc.bias_errors.rows(); ++r) {
            sum_sq += mc.bias_errors(r, s) * mc.bias_errors(r, s);
        }
        EXPECT_NEAR(mc.bias_rmse[s], std::sqrt(sum_sq / mc.bias_errors.rows()), 1e-15);
    }
}

TEST(MonteCarlo, DeterministicAcrossThreadCounts) {
    ScenarioConfig cfg = four_sensor_scenario(kBiasTest1);
    cfg.steps = 20;
    cfg.ga.generations = 10;
    const MonteCarloResult one = monte_carlo(cfg, 4, 1);
    const MonteCarloResult two = monte_carlo(cfg, 4, 2);
    for (int r = 0; r < 4; ++r) {
        for (int s = 0; s < 4; ++s) {
            EXPECT_EQ(one.bias_errors(r, s), two.bias_errors(r, s));
        }
    }
}

TEST(ScenarioValidation, RejectsBadConfigs) {
    ScenarioConfig cfg = four_sensor_scenario(kBiasTest1);
    cfg.steps = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);

    cfg = four_sensor_scenario(kBiasTest1);
    cfg.sensors[1].id = cfg.sensors[0].id;
    EXPECT_THROW(cfg.validate(), ConfigError);

    cfg = four_sensor_scenario(kBiasTest1);
    cfg.sensors[2].sigma_theta = 0.0;
    EXPECT_THROW(cfg.validate(), ConfigError);

    cfg = four_sensor_scenario(kBiasTest1);
    cfg.clutter.p_d = 0.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}
