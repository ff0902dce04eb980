#include "bearingreg/bias_model.hpp"

#include "bearingreg/errors.hpp"
#include "bearingreg/geometry.hpp"

#include <cmath>
#include <string>

namespace bearingreg {

int sensor_index(const std::vector<SensorConfig>& sensors, int id) {
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        if (sensors[i].id == id) {
            return static_cast<int>(i);
        }
    }
    throw InvalidArgumentError("unknown sensor id " + std::to_string(id));
}

FactorTerms factor_terms(const SensorConfig& si, const SensorConfig& sj,
                         double theta_i, double theta_j) {
    if (std::abs(std::cos(theta_i)) < kCosTolerance ||
        std::abs(std::cos(theta_j)) < kCosTolerance) {
        throw DegenerateGeometryError("factor_terms: bearing within tolerance of +-pi/2");
    }
    const double ti = std::tan(theta_i);
    const double tj = std::tan(theta_j);
    const double xi = si.position.x(), yi = si.position.y();
    const double xj = sj.position.x(), yj = sj.position.y();

    FactorTerms ft;
    ft.d = ti - tj;
    if (std::abs(ft.d) < kTanDiffTolerance) {
        throw DegenerateGeometryError("factor_terms: vanishing tangent difference");
    }
    ft.b = 1.0 + ti * tj;
    ft.d_x = xi * ti - xj * tj + (yj - yi);
    ft.b_x_i = -(yj - yi) * ti + xj * ti * tj + xi;
    ft.b_x_j = -(yj - yi) * tj - xi * ti * tj - xj;
    ft.b_x_ij = xj * ti - xi * tj + (yj - yi) * ti * tj;
    ft.d_y = yj * ti - yi * tj + (xi - xj) * ti * tj;
    ft.b_y_i = (xi - xj) * tj + yi * ti * tj + yj;
    ft.b_y_j = (xi - xj) * ti - yj * ti * tj - yi;
    ft.b_y_ij = yi * ti - yj * tj + (xi - xj);
    return ft;
}

Position2D unbiased_position(const FactorTerms& ft) {
    if (std::abs(ft.d) < kTanDiffTolerance) {
        throw DegenerateGeometryError("unbiased_position: vanishing denominator");
    }
    return Position2D(ft.d_x / ft.d, ft.d_y / ft.d);
}

BiasOffset2D bias_offset(const SensorConfig& si, const SensorConfig& sj,
                         double theta_i, double theta_j, double b_i, double b_j) {
    if (b_i == 0.0 && b_j == 0.0) {
        return {};
    }
    const Position2D biased = triangulate(si, sj, theta_i + b_i, theta_j + b_j);
    const Position2D base = triangulate(si, sj, theta_i, theta_j);
    return {biased.x() - base.x(), biased.y() - base.y()};
}

Eigen::Vector2d h_of_b(const PairingPlan& plan, int pair_a, int pair_b,
                       const std::vector<SensorConfig>& sensors,
                       const std::vector<double>& angles,
                       const BiasVector& bias) {
    if (angles.size() != sensors.size()) {
        throw InvalidArgumentError("h_of_b: one bearing per sensor required");
    }
    if (bias.size() != static_cast<int>(sensors.size())) {
        throw InvalidArgumentError("h_of_b: bias dimension must match sensor count");
    }
    auto offset = [&](int pair_index) {
        const auto& [id_i, id_j] = plan.pairs.at(pair_index);
        const int i = sensor_index(sensors, id_i);
        const int j = sensor_index(sensors, id_j);
        return bias_offset(sensors[i], sensors[j], angles[i], angles[j],
                           bias[i], bias[j]);
    };
    const BiasOffset2D beta_a = offset(pair_a);
    const BiasOffset2D beta_b = offset(pair_b);
    return Eigen::Vector2d(beta_a.beta_x - beta_b.beta_x,
                           beta_a.beta_y - beta_b.beta_y);
}

} // namespace bearingreg
