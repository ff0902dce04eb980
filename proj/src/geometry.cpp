#include "bearingreg/geometry.hpp"

#include "bearingreg/errors.hpp"

#include <cmath>
#include <numbers>

namespace bearingreg {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
} // namespace

double wrap_angle(double angle) {
    if (!std::isfinite(angle)) {
        throw InvalidArgumentError("wrap_angle: non-finite angle");
    }
    double w = std::remainder(angle, kTwoPi); // [-pi, pi]
    if (w <= -kPi) {
        w += kTwoPi;
    }
    return w;
}

double bearing_from(const Position2D& sensor, const Position2D& target) {
    const double dx = target.x() - sensor.x();
    const double dy = target.y() - sensor.y();
    if (dx * dx + dy * dy < 1e-12) {
        throw DegenerateGeometryError("bearing_from: target coincides with sensor");
    }
    return wrap_angle(std::atan2(dy, dx));
}

Position2D triangulate(const SensorConfig& si, const SensorConfig& sj,
                       double theta_i, double theta_j) {
    const double ci = std::cos(theta_i);
    const double cj = std::cos(theta_j);
    if (std::abs(ci) < kCosTolerance || std::abs(cj) < kCosTolerance) {
        throw DegenerateGeometryError("triangulate: bearing within tolerance of +-pi/2");
    }
    const double ti = std::tan(theta_i);
    const double tj = std::tan(theta_j);
    if (std::abs(ti - tj) < kTanDiffTolerance) {
        throw DegenerateGeometryError(
            "triangulate: rays near-parallel or target on the sensor baseline");
    }

    // Line intersection in sin/cos form; algebraically identical to the
    // tangent-form equations
    //   x = (y_j - y_i + x_i tan_i - x_j tan_j) / (tan_i - tan_j)
    //   y = (y_j tan_i - y_i tan_j + (x_i - x_j) tan_i tan_j) / (tan_i - tan_j)
    // wherever both are defined, but conditioned on sin(theta_i - theta_j)
    // rather than on the individual cosines.
    const double si_i = std::sin(theta_i);
    const double si_j = std::sin(theta_j);
    const double det = si_i * cj - ci * si_j; // sin(theta_i - theta_j)
    const double dx = sj.position.x() - si.position.x();
    const double dy = sj.position.y() - si.position.y();
    const double ri = (dy * cj - dx * si_j) / det;
    return Position2D(si.position.x() + ri * ci, si.position.y() + ri * si_i);
}

Eigen::Matrix2d pair_jacobian(const SensorConfig& si, const SensorConfig& sj,
                              const Position2D& p) {
    Eigen::Matrix2d jac;
    const SensorConfig* sensors[2] = {&si, &sj};
    for (int r = 0; r < 2; ++r) {
        const double dx = p.x() - sensors[r]->position.x();
        const double dy = p.y() - sensors[r]->position.y();
        const double r2 = dx * dx + dy * dy;
        if (r2 < 1e-12) {
            throw DegenerateGeometryError("pair_jacobian: point coincides with a sensor");
        }
        jac(r, 0) = -dy / r2;
        jac(r, 1) = dx / r2;
    }
    return jac;
}

Covariance2x2 transform_covariance(const Eigen::Matrix2d& jacobian,
                                   const Covariance2x2& r_polar) {
    if (!(r_polar(0, 0) > 0.0) || !(r_polar(1, 1) > 0.0)) {
        throw InvalidCovarianceError("transform_covariance: polar variances must be positive");
    }
    const Eigen::Vector2d inv_var(1.0 / r_polar(0, 0), 1.0 / r_polar(1, 1));
    const Eigen::Matrix2d info = jacobian.transpose() * inv_var.asDiagonal() * jacobian;
    const double det = info(0, 0) * info(1, 1) - info(0, 1) * info(1, 0);
    if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
        throw DegenerateGeometryError("transform_covariance: singular Jacobian");
    }
    Covariance2x2 cov = info.inverse();
    cov = 0.5 * (cov + cov.transpose()).eval();
    if (!(cov(0, 0) > 0.0) || !(cov.determinant() > 0.0)) {
        throw DegenerateGeometryError("transform_covariance: result not positive definite");
    }
    return cov;
}

} // namespace bearingreg
