#pragma once

#include "bearingreg/bias_model.hpp"
#include "bearingreg/ga.hpp"
#include "bearingreg/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace bearingreg {

/// Bias pseudo-measurement for one target/time/pair-of-pairs: the difference
/// of the two pair triangulations and its covariance.
struct PseudoMeasurement {
    int time = 0;
    int target = 0;
    Eigen::Vector2d z = Eigen::Vector2d::Zero();
    Covariance2x2 r_w = Covariance2x2::Identity();
    int pair_a = 0; // indices into PairingPlan::pairs
    int pair_b = 1;
};

/// Bearings backing one (time, target) group, index-aligned with the sensor
/// list. Needed to evaluate the measurement model h(b).
struct MeasurementGroup {
    int time = 0;
    int target = 0;
    std::vector<double> angles;
};

/// Pseudo-measurements plus the bearing groups they were built from.
/// measurements[i].group indexes into groups.
struct PseudoBatch {
    std::vector<PseudoMeasurement> measurements;
    std::vector<MeasurementGroup> groups;
    std::vector<int> group_of; // per measurement
    int skipped_incomplete = 0;
    int skipped_degenerate = 0;

    bool empty() const { return measurements.empty(); }
    std::size_t size() const { return measurements.size(); }
};

/// Genetic-algorithm estimator settings (bounds, generations, tolerance per
/// the batch defaults; window variant uses 50 generations and window 10).
struct GASettings {
    double lower_bound = -0.05; // rad
    double upper_bound = 0.05;  // rad
    int generations = 100;
    double tolerance = 1e-15;
    int population_size = 60;
    std::optional<int> window_size;
    std::uint64_t seed = 0;
    bool polish = true;

    void validate() const;
};

struct BiasEstimate {
    BiasVector bias;
    double nll = 0.0;
    std::vector<double> fitness_history;
    Eigen::MatrixXd final_population;
    int generations_run = 0;
};

struct WindowEstimate {
    int window_index = 0;
    int last_time = 0; // last time step included
    BiasEstimate estimate;
};

/// Pair the sensors for pseudo-measurement generation: disjoint pairs in id
/// order for even counts; odd counts share the first sensor between the first
/// two pairs. Throws InsufficientSensorsError below three sensors.
PairingPlan plan_pairing(std::vector<int> sensor_ids);

/// Build one pseudo-measurement per (time, target, adjacent pair-of-pairs)
/// from labeled reports. Groups missing a sensor of the plan or hitting
/// degenerate geometry are skipped and counted.
PseudoBatch build_pseudo_measurements(const std::vector<BearingReport>& reports,
                                      const PairingPlan& plan,
                                      const std::vector<SensorConfig>& sensors);

/// Negative log-likelihood of the bias vector:
///   sum_k 1/2 (z_k - h_k(b))^T R_w^-1 (z_k - h_k(b)) + 1/2 log det R_w + log(2 pi).
/// h_k is evaluated through h_of_b at the candidate-corrected base angles
/// (measured bearings minus b), which makes the residual the mismatch of the
/// two bias-corrected triangulations.
double neg_log_likelihood(const PseudoBatch& batch, const PairingPlan& plan,
                          const std::vector<SensorConfig>& sensors,
                          const BiasVector& bias);

/// Batch maximum-likelihood estimate over the box bounds. Deterministic for a
/// fixed seed. `warm_start` seeds the initial population when provided.
BiasEstimate estimate_bias_batch(const PseudoBatch& batch, const PairingPlan& plan,
                                 const std::vector<SensorConfig>& sensors,
                                 const GASettings& settings,
                                 const std::optional<Eigen::MatrixXd>& warm_start = std::nullopt);

/// Real-time variant: after every `window_size` time steps re-estimate on all
/// data seen so far, seeding each window's population from the previous
/// window's final population. A single window is identical to the batch
/// estimator on the same data and seed.
std::vector<WindowEstimate> estimate_bias_windowed(const PseudoBatch& batch,
                                                   const PairingPlan& plan,
                                                   const std::vector<SensorConfig>& sensors,
                                                   const GASettings& settings);

} // namespace bearingreg
