#pragma once

#include "bearingreg/crlb.hpp"
#include "bearingreg/registration.hpp"
#include "bearingreg/tracker.hpp"
#include "bearingreg/types.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace bearingreg {

/// False-alarm model: Poisson(lambda * volume) clutter bearings per
/// sensor-scan, uniform over the bearing domain, with detection probability
/// p_d for true reports.
struct ClutterModel {
    double lambda = 0.0;                    // false alarms per unit volume per scan
    double volume = 6.283185307179586;      // rad, full bearing circle
    double p_d = 1.0;

    void validate() const;
};

enum class ScenarioMode { distributed, centralized };

struct ScenarioConfig {
    std::vector<SensorConfig> sensors;
    std::vector<Eigen::Vector4d> targets; // initial [x, v_x, y, v_y]
    int steps = 100;
    double sample_time = 1.0;  // s
    double truth_q = 0.001;    // m^2/s^3
    double tracker_q = 0.1;    // m^2/s^3, local tracker mismatch
    ScenarioMode mode = ScenarioMode::distributed;
    ClutterModel clutter;
    std::uint64_t seed = 1;
    GASettings ga;
    double crlb_scale = 10.0;
    int persistence = 3; // centralized pruning, consecutive confirmations

    void validate() const;
};

/// Candidate gating knobs for centralized association.
struct AssociationSettings {
    int persistence = 3;
    int miss_limit = 3;
    double gate_chi2 = 9.2103403719761818; // chi-square(2) at 99%
    double gate_radius = 600.0;            // m, track-to-candidate distance
    /// Largest per-sensor offset the cross-pair gate must absorb; inflates the
    /// gating covariance since uncorrected biases shift z_b systematically.
    double bias_allowance = 0.05; // rad
};

using TruthData = std::vector<std::vector<Eigen::Vector4d>>; // [target][step]

/// NCV propagation of every target with truth process noise.
TruthData generate_truth(const ScenarioConfig& cfg, std::mt19937_64& rng);

/// Wrapped theta + b_s + N(0, sigma_s^2) for every sensor/target/step, labeled
/// with the target index.
std::vector<BearingReport> generate_bearings(const TruthData& truth,
                                             const std::vector<SensorConfig>& sensors,
                                             std::mt19937_64& rng);

/// Centralized front end: keep each true report with probability p_d, append
/// Poisson(lambda * V) clutter bearings uniform on (-pi, pi], strip labels.
std::vector<BearingReport> apply_detection_and_clutter(
    const std::vector<BearingReport>& reports, const ClutterModel& clutter,
    const std::vector<SensorConfig>& sensors, int steps, std::mt19937_64& rng);

/// Recover provisional target labels from unlabeled detections: per-scan
/// cross-pair triangulation candidates gated on the Mahalanobis distance of
/// their difference, tracked over time, and released only after persisting.
std::vector<BearingReport> prune_and_associate(const std::vector<BearingReport>& detections,
                                               const PairingPlan& plan,
                                               const std::vector<SensorConfig>& sensors,
                                               const AssociationSettings& settings);

/// True bearings per (target, step) for CRLB evaluation, from noise-free
/// propagation of the scenario's targets.
std::vector<BearingFrame> true_bearing_frames(const ScenarioConfig& cfg);

struct MonteCarloResult {
    Eigen::VectorXd bias_rmse;     // rad, per sensor
    Eigen::MatrixXd bias_errors;   // runs x sensors
    CrlbResult crlb;               // scenario-level bound
    RmseCurve rmse_uncorrected;    // averaged over targets
    RmseCurve rmse_corrected;
    std::vector<double> position_floor; // m, corrected measurement-noise floor
    int failed_runs = 0;
    double wall_seconds = 0.0;
};

/// Full pipeline battery: per run, simulate -> (centralized: clutter + prune)
/// -> register -> correct -> track, with per-run seeds derived from the
/// scenario seed. Tracking curves are produced in distributed mode. Run
/// failures are counted, not fatal.
MonteCarloResult monte_carlo(const ScenarioConfig& cfg, int runs, int threads = 0);

/// Thread cap from BEARING_REG_THREADS, defaulting to the hardware count.
int thread_budget();

} // namespace bearingreg
