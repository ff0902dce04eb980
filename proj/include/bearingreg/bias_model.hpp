#pragma once

#include "bearingreg/types.hpp"

#include <vector>

namespace bearingreg {

/// Expansion coefficients of the biased two-sensor triangulation in powers of
/// tan(b_i) and tan(b_j). With t_i = tan(theta_i), t_j = tan(theta_j),
/// u = tan(b_i), v = tan(b_j) the biased intersection is
///
///   x(u, v) = (d_x + b_x_i u + b_x_j v + b_x_ij uv) / (d + b u - b v + d uv)
///   y(u, v) = (d_y + b_y_i u + b_y_j v + b_y_ij uv) / (d + b u - b v + d uv)
///
/// so the unbiased position is (d_x/d, d_y/d).
struct FactorTerms {
    double d = 0.0;      // t_i - t_j
    double b = 0.0;      // 1 + t_i t_j
    double d_x = 0.0;
    double b_x_i = 0.0;
    double b_x_j = 0.0;
    double b_x_ij = 0.0;
    double d_y = 0.0;
    double b_y_i = 0.0;
    double b_y_j = 0.0;
    double b_y_ij = 0.0;
};

/// Bias-induced Cartesian shift of a pair triangulation.
struct BiasOffset2D {
    double beta_x = 0.0; // m
    double beta_y = 0.0; // m

    Eigen::Vector2d vec() const { return {beta_x, beta_y}; }
};

/// Sensor pairing used to build pseudo-measurements. Even sensor counts use
/// disjoint pairs; odd counts share the first sensor between the first two
/// pairs.
struct PairingPlan {
    enum class Mode { even, odd };
    Mode mode = Mode::even;
    std::vector<std::pair<int, int>> pairs; // sensor ids
};

/// Compute the ten expansion coefficients at the given base angles.
/// Throws DegenerateGeometryError at tangent singularities or when d
/// vanishes.
FactorTerms factor_terms(const SensorConfig& si, const SensorConfig& sj,
                         double theta_i, double theta_j);

/// (d_x/d, d_y/d). Equals triangulate(si, sj, theta_i, theta_j).
Position2D unbiased_position(const FactorTerms& ft);

/// Exact bias-induced offset: triangulate with (theta + b) minus triangulate
/// with theta. Zero bias returns exactly (0, 0).
BiasOffset2D bias_offset(const SensorConfig& si, const SensorConfig& sj,
                         double theta_i, double theta_j, double b_i, double b_j);

/// Pseudo-measurement model for one pair-of-pairs: the difference of the two
/// pairs' bias offsets evaluated at the given base angles,
///   h = [beta_x(pair_a) - beta_x(pair_b), beta_y(pair_a) - beta_y(pair_b)].
///
/// `angles` holds one bearing per sensor of `sensors` (index-aligned);
/// `bias` likewise. `pair_a`/`pair_b` index plan.pairs.
Eigen::Vector2d h_of_b(const PairingPlan& plan, int pair_a, int pair_b,
                       const std::vector<SensorConfig>& sensors,
                       const std::vector<double>& angles,
                       const BiasVector& bias);

/// Index of sensor `id` within `sensors`; throws InvalidArgumentError when
/// absent.
int sensor_index(const std::vector<SensorConfig>& sensors, int id);

} // namespace bearingreg
