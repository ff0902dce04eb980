#pragma once

#include "bearingreg/types.hpp"

namespace bearingreg {

// Angle convention used throughout: a bearing is the angle of (target - sensor)
// measured counterclockwise from the +x axis, theta = atan2(y - y_s, x - x_s),
// wrapped to (-pi, pi]. The Jacobian rows below fix this convention:
// d theta / dx = -(y - y_s) / r^2, d theta / dy = (x - x_s) / r^2.

/// Tolerance below which |tan(theta_i) - tan(theta_j)| counts as parallel rays.
inline constexpr double kTanDiffTolerance = 1e-9;
/// Tolerance below which |cos(theta)| counts as a tangent singularity.
inline constexpr double kCosTolerance = 1e-6;

/// Wrap an angle into (-pi, pi]. Idempotent. Throws InvalidArgumentError on
/// non-finite input.
double wrap_angle(double angle);

/// Bearing from `sensor` to `target`, wrapped to (-pi, pi].
/// Throws DegenerateGeometryError when the points coincide.
double bearing_from(const Position2D& sensor, const Position2D& target);

/// Intersect the bearing lines of two sensors. The result satisfies the
/// tangent-form intersection equations wherever those are defined; internally
/// a sin/cos parametrization is used for robustness. Throws
/// DegenerateGeometryError for near-parallel rays (|tan_i - tan_j| below
/// kTanDiffTolerance, which includes targets on the sensor baseline) or when
/// either angle is within kCosTolerance of +-pi/2.
Position2D triangulate(const SensorConfig& si, const SensorConfig& sj,
                       double theta_i, double theta_j);

/// 2x2 Jacobian of the bearing pair w.r.t. the Cartesian point p; row r holds
/// [d theta_r/dx, d theta_r/dy] for r in {i, j}. Throws
/// DegenerateGeometryError when p coincides with either sensor.
Eigen::Matrix2d pair_jacobian(const SensorConfig& si, const SensorConfig& sj,
                              const Position2D& p);

/// Polar-to-Cartesian covariance transform (J^T R_polar^-1 J)^-1, symmetrized.
/// R_polar must be diagonal with positive entries; J must be invertible.
Covariance2x2 transform_covariance(const Eigen::Matrix2d& jacobian,
                                   const Covariance2x2& r_polar);

} // namespace bearingreg
