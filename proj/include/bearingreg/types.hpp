#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

namespace bearingreg {

using Position2D = Eigen::Vector2d;
using Covariance2x2 = Eigen::Matrix2d;

/// A fixed bearing-only sensor. `true_bias` is only meaningful in simulation;
/// estimators never read it.
struct SensorConfig {
    int id = 0;
    Position2D position = Position2D::Zero();
    double sigma_theta = 0.0; // rad, > 0
    double true_bias = 0.0;   // rad
};

/// One associated measurement report: a bearing from one sensor at one time
/// step, optionally labeled with the target it belongs to (distributed mode).
struct BearingReport {
    int sensor_id = 0;
    int time = 0;
    double angle = 0.0; // rad, wrapped to (-pi, pi]
    std::optional<int> target;
};

/// Length-S vector of per-sensor angular offsets with box bounds.
struct BiasVector {
    Eigen::VectorXd offsets;
    double lower_bound = -0.05; // rad
    double upper_bound = 0.05;  // rad

    BiasVector() = default;
    explicit BiasVector(Eigen::VectorXd values, double lower = -0.05, double upper = 0.05)
        : offsets(std::move(values)), lower_bound(lower), upper_bound(upper) {}

    static BiasVector zeros(int size, double lower = -0.05, double upper = 0.05) {
        return BiasVector(Eigen::VectorXd::Zero(size), lower, upper);
    }

    int size() const { return static_cast<int>(offsets.size()); }
    double operator[](int i) const { return offsets[i]; }

    bool within_bounds() const {
        return (offsets.array() >= lower_bound).all() && (offsets.array() <= upper_bound).all();
    }
};

/// NCV track state [x, v_x, y, v_y] with covariance.
struct TrackState {
    Eigen::Vector4d mean = Eigen::Vector4d::Zero();
    Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
};

/// Seed derivation for per-run generators: splitmix64 over (master, stream).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace bearingreg
