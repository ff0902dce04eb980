#pragma once

// Independent closed-form route for the bias-induced triangulation offset,
// used as a cross-check oracle against the exact-difference implementation.
// Derived by expanding tan(theta + b) in the triangulation equations and
// collecting powers of tan(b_i), tan(b_j); kept free of library internals.

#include <Eigen/Dense>
#include <cmath>

namespace bearingreg::testsupport {

inline Eigen::Vector2d closed_form_bias_offset(double xi, double yi, double xj, double yj,
                                               double theta_i, double theta_j,
                                               double b_i, double b_j) {
    const double ti = std::tan(theta_i);
    const double tj = std::tan(theta_j);
    const double u = std::tan(b_i);
    const double v = std::tan(b_j);

    const double d = ti - tj;
    const double b = 1.0 + ti * tj;
    const double d_x = xi * ti - xj * tj + (yj - yi);
    const double b_x_i = -(yj - yi) * ti + xj * ti * tj + xi;
    const double b_x_j = -(yj - yi) * tj - xi * ti * tj - xj;
    const double b_x_ij = xj * ti - xi * tj + (yj - yi) * ti * tj;
    const double d_y = yj * ti - yi * tj + (xi - xj) * ti * tj;
    const double b_y_i = (xi - xj) * tj + yi * ti * tj + yj;
    const double b_y_j = (xi - xj) * ti - yj * ti * tj - yi;
    const double b_y_ij = yi * ti - yj * tj + (xi - xj);

    const double den = d + b * u - b * v + d * u * v;
    const double beta_x = (b_x_i * u + b_x_j * v + b_x_ij * u * v) / den -
                          (d_x * b * u - d_x * b * v + d_x * d * u * v) / (d * den);
    const double beta_y = (b_y_i * u + b_y_j * v + b_y_ij * u * v) / den -
                          (d_y * b * u - d_y * b * v + d_y * d * u * v) / (d * den);
    return {beta_x, beta_y};
}

} // namespace bearingreg::testsupport
