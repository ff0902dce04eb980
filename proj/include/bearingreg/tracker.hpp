#pragma once

#include "bearingreg/bias_model.hpp"
#include "bearingreg/crlb.hpp"
#include "bearingreg/types.hpp"

#include <optional>
#include <vector>

namespace bearingreg {

/// Nearly-constant-velocity motion model with discretized continuous
/// white-noise acceleration, state [x, v_x, y, v_y].
struct MotionModel {
    double sample_time = 1.0; // s
    double q_x = 0.0;         // m^2/s^3
    double q_y = 0.0;         // m^2/s^3
};

/// State transition matrix F (block [1 T; 0 1] per axis) and process noise Q
/// (per-axis q * [T^3/3 T^2/2; T^2/2 T]).
std::pair<Eigen::Matrix4d, Eigen::Matrix4d> transition_matrices(const MotionModel& model);

/// Time update: mean <- F mean, cov <- F cov F^T + Q.
TrackState kf_predict(const TrackState& state, const MotionModel& model);

/// Measurement update with H selecting (x, y), Joseph-form covariance.
/// Throws NumericalFailureError when the innovation covariance is not PD.
TrackState kf_update(const TrackState& state, const Position2D& z,
                     const Covariance2x2& r);

/// Bearing reports after bias removal, with per-sensor variances inflated by
/// the scaled CRLB of the bias estimate.
struct CorrectedBearings {
    std::vector<BearingReport> reports;
    std::vector<double> variances; // rad^2, index-aligned with the sensor list
};

/// angle <- wrap(angle - b_hat_s); variance_s <- sigma_s^2 + scale * CRLB_ss.
/// Without a CRLB (or with scale 0) the variances stay at sigma_s^2.
CorrectedBearings correct_bearings(const std::vector<BearingReport>& reports,
                                   const std::vector<SensorConfig>& sensors,
                                   const BiasVector& b_hat,
                                   const std::optional<CrlbResult>& crlb_result,
                                   double scale);

struct TrackPoint {
    int time = 0;
    Eigen::Vector4d mean = Eigen::Vector4d::Zero();
    Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
};

struct TrackHistory {
    int target = 0;
    std::vector<TrackPoint> points; // consecutive time steps from initialization
};

/// Track every labeled target: triangulate each planned pair per step,
/// initialize by two-point differencing from the first two usable steps, then
/// Kalman predict + sequential updates. Degenerate pair triangulations are
/// skipped for that step.
std::vector<TrackHistory> run_tracker(const CorrectedBearings& corrected,
                                      const PairingPlan& plan,
                                      const std::vector<SensorConfig>& sensors,
                                      const MotionModel& model);

struct RmseCurve {
    int start_time = 0;
    std::vector<double> values; // m, one per step
};

/// Per-step RMSE over runs of one target's position error. All runs must share
/// the same time base; `truth` holds the true position per step from time 0.
RmseCurve position_rmse(const std::vector<TrackHistory>& runs,
                        const std::vector<Position2D>& truth);

} // namespace bearingreg
