#include "bearingreg/tracker.hpp"

#include "bearingreg/errors.hpp"
#include "bearingreg/geometry.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <map>

namespace bearingreg {

std::pair<Eigen::Matrix4d, Eigen::Matrix4d> transition_matrices(const MotionModel& model) {
    if (!(model.sample_time > 0.0)) {
        throw InvalidArgumentError("transition_matrices: sample time must be positive");
    }
    if (model.q_x < 0.0 || model.q_y < 0.0) {
        throw InvalidArgumentError("transition_matrices: noise intensity must be >= 0");
    }
    const double t = model.sample_time;
    Eigen::Matrix4d f = Eigen::Matrix4d::Identity();
    f(0, 1) = t;
    f(2, 3) = t;

    Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
    const double t3 = t * t * t / 3.0;
    const double t2 = t * t / 2.0;
    q(0, 0) = t3 * model.q_x;
    q(0, 1) = q(1, 0) = t2 * model.q_x;
    q(1, 1) = t * model.q_x;
    q(2, 2) = t3 * model.q_y;
    q(2, 3) = q(3, 2) = t2 * model.q_y;
    q(3, 3) = t * model.q_y;
    return {f, q};
}

TrackState kf_predict(const TrackState& state, const MotionModel& model) {
    const auto [f, q] = transition_matrices(model);
    TrackState out;
    out.mean = f * state.mean;
    out.covariance = f * state.covariance * f.transpose() + q;
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
    return out;
}

TrackState kf_update(const TrackState& state, const Position2D& z,
                     const Covariance2x2& r) {
    Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
    h(0, 0) = 1.0;
    h(1, 2) = 1.0;

    const Eigen::Matrix2d s = h * state.covariance * h.transpose() + r;
    Eigen::LLT<Eigen::Matrix2d> llt(s);
    if (llt.info() != Eigen::Success) {
        throw NumericalFailureError("kf_update: innovation covariance not positive definite");
    }
    const Eigen::Matrix<double, 4, 2> gain =
        state.covariance * h.transpose() * s.inverse();

    TrackState out;
    out.mean = state.mean + gain * (z - h * state.mean);
    const Eigen::Matrix4d ikh = Eigen::Matrix4d::Identity() - gain * h;
    out.covariance = ikh * state.covariance * ikh.transpose() +
                     gain * r * gain.transpose();
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
    return out;
}

CorrectedBearings correct_bearings(const std::vector<BearingReport>& reports,
                                   const std::vector<SensorConfig>& sensors,
                                   const BiasVector& b_hat,
                                   const std::optional<CrlbResult>& crlb_result,
                                   double scale) {
    if (scale < 0.0) {
        throw InvalidArgumentError("correct_bearings: scale must be >= 0");
    }
    if (b_hat.size() != static_cast<int>(sensors.size())) {
        throw InvalidArgumentError("correct_bearings: bias dimension mismatch");
    }
    if (!b_hat.within_bounds()) {
        throw InvalidArgumentError("correct_bearings: bias outside its box bounds");
    }

    CorrectedBearings out;
    out.variances.resize(sensors.size());
    for (std::size_t s = 0; s < sensors.size(); ++s) {
        double inflation = 0.0;
        if (scale > 0.0 && crlb_result) {
            inflation = scale * crlb_result->covariance_bound(static_cast<int>(s),
                                                              static_cast<int>(s));
        }
        out.variances[s] = sensors[s].sigma_theta * sensors[s].sigma_theta + inflation;
    }
    out.reports.reserve(reports.size());
    for (const auto& r : reports) {
        BearingReport c = r;
        const int idx = sensor_index(sensors, r.sensor_id);
        const double b = b_hat[idx];
        if (b != 0.0) {
            c.angle = wrap_angle(r.angle - b);
        }
        out.reports.push_back(c);
    }
    return out;
}

namespace {

struct StepMeasurement {
    Position2D z;
    Covariance2x2 r;
};

/// Per-step pair measurements for one target, skipping degenerate pairs.
std::map<int, std::vector<StepMeasurement>> collect_measurements(
    const std::vector<const BearingReport*>& reports, const PairingPlan& plan,
    const std::vector<SensorConfig>& sensors, const std::vector<double>& variances) {
    std::map<int, std::vector<std::optional<double>>> by_time;
    for (const auto* r : reports) {
        auto& slot = by_time[r->time];
        if (slot.empty()) {
            slot.resize(sensors.size());
        }
        slot[sensor_index(sensors, r->sensor_id)] = r->angle;
    }

    std::map<int, std::vector<StepMeasurement>> out;
    for (const auto& [time, slot] : by_time) {
        for (const auto& [id_i, id_j] : plan.pairs) {
            const int i = sensor_index(sensors, id_i);
            const int j = sensor_index(sensors, id_j);
            if (!slot[i] || !slot[j]) {
                continue;
            }
            try {
                const Position2D pt = triangulate(sensors[i], sensors[j], *slot[i], *slot[j]);
                Covariance2x2 r_polar = Covariance2x2::Zero();
                r_polar(0, 0) = variances[i];
                r_polar(1, 1) = variances[j];
                const Covariance2x2 r = transform_covariance(
                    pair_jacobian(sensors[i], sensors[j], pt), r_polar);
                out[time].push_back({pt, r});
            } catch (const DegenerateGeometryError&) {
                // pair unusable this step
            }
        }
    }
    return out;
}

} // namespace

std::vector<TrackHistory> run_tracker(const CorrectedBearings& corrected,
                                      const PairingPlan& plan,
                                      const std::vector<SensorConfig>& sensors,
                                      const MotionModel& model) {
    std::map<int, std::vector<const BearingReport*>> by_target;
    for (const auto& r : corrected.reports) {
        if (r.target) {
            by_target[*r.target].push_back(&r);
        }
    }

    std::vector<TrackHistory> histories;
    for (const auto& [target, reports] : by_target) {
        const auto steps = collect_measurements(reports, plan, sensors, corrected.variances);
        if (steps.size() < 2) {
            continue;
        }

        // Two-point differencing over the first two usable steps.
        auto it = steps.begin();
        const int t0 = it->first;
        const StepMeasurement m0 = it->second.front();
        ++it;
        const int t1 = it->first;
        const StepMeasurement m1 = it->second.front();
        const double dt = (t1 - t0) * model.sample_time;

        TrackState state;
        state.mean << m1.z.x(), (m1.z.x() - m0.z.x()) / dt,
                      m1.z.y(), (m1.z.y() - m0.z.y()) / dt;
        Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
        const Covariance2x2 vel_cov = (m0.r + m1.r) / (dt * dt);
        const int pos_idx[2] = {0, 2};
        const int vel_idx[2] = {1, 3};
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                cov(pos_idx[a], pos_idx[b]) = m1.r(a, b);
                cov(vel_idx[a], vel_idx[b]) = vel_cov(a, b);
                cov(pos_idx[a], vel_idx[b]) = m1.r(a, b) / dt;
                cov(vel_idx[a], pos_idx[b]) = m1.r(b, a) / dt;
            }
        }
        state.covariance = cov;

        // Remaining measurements of the init step refine the state.
        for (std::size_t k = 1; k < it->second.size(); ++k) {
            state = kf_update(state, it->second[k].z, it->second[k].r);
        }

        TrackHistory history;
        history.target = target;
        history.points.push_back({t1, state.mean, state.covariance});

        const int t_end = steps.rbegin()->first;
        for (int time = t1 + 1; time <= t_end; ++time) {
            state = kf_predict(state, model);
            const auto found = steps.find(time);
            if (found != steps.end()) {
                for (const auto& m : found->second) {
                    state = kf_update(state, m.z, m.r);
                }
            }
            history.points.push_back({time, state.mean, state.covariance});
        }
        histories.push_back(std::move(history));
    }
    return histories;
}

RmseCurve position_rmse(const std::vector<TrackHistory>& runs,
                        const std::vector<Position2D>& truth) {
    if (runs.empty()) {
        throw InvalidArgumentError("position_rmse: no runs");
    }
    const int start = runs.front().points.front().time;
    const std::size_t length = runs.front().points.size();
    for (const auto& run : runs) {
        if (run.points.front().time != start || run.points.size() != length) {
            throw InvalidArgumentError("position_rmse: runs have mismatched time bases");
        }
    }
    if (truth.size() < start + length) {
        throw InvalidArgumentError("position_rmse: truth shorter than track history");
    }

    RmseCurve curve;
    curve.start_time = start;
    curve.values.resize(length, 0.0);
    for (std::size_t k = 0; k < length; ++k) {
        double sum_sq = 0.0;
        for (const auto& run : runs) {
            const auto& p = run.points[k];
            const double ex = p.mean[0] - truth[start + k].x();
            const double ey = p.mean[2] - truth[start + k].y();
            sum_sq += ex * ex + ey * ey;
        }
        curve.values[k] = std::sqrt(sum_sq / runs.size());
    }
    return curve;
}

} // namespace bearingreg
