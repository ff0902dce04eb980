#include "bearingreg/crlb.hpp"

#include "bearingreg/errors.hpp"
#include "bearingreg/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace bearingreg {

namespace {
constexpr double kFdStep = 1e-6; // rad
}

Eigen::MatrixXd jacobian_h_wrt_b(const PairingPlan& plan, int pair_a, int pair_b,
                                 const std::vector<SensorConfig>& sensors,
                                 const std::vector<double>& angles,
                                 const BiasVector& bias) {
    const int n = static_cast<int>(sensors.size());
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2, n);
    for (int s = 0; s < n; ++s) {
        BiasVector plus = bias;
        BiasVector minus = bias;
        plus.offsets[s] += kFdStep;
        minus.offsets[s] -= kFdStep;
        const Eigen::Vector2d hp = h_of_b(plan, pair_a, pair_b, sensors, angles, plus);
        const Eigen::Vector2d hm = h_of_b(plan, pair_a, pair_b, sensors, angles, minus);
        jac.col(s) = (hp - hm) / (2.0 * kFdStep);
    }
    return jac;
}

FisherInfo fim(const std::vector<BearingFrame>& frames, const PairingPlan& plan,
               const std::vector<SensorConfig>& sensors, const BiasVector& b_true) {
    if (plan.pairs.size() < 2) {
        throw InsufficientSensorsError("fim: plan needs two pairs");
    }
    const int n = static_cast<int>(sensors.size());
    FisherInfo info;
    info.matrix = Eigen::MatrixXd::Zero(n, n);
    int used = 0;

    for (const auto& frame : frames) {
        if (static_cast<int>(frame.angles.size()) != n) {
            throw InvalidArgumentError("fim: frame angle count must match sensor count");
        }
        try {
            // Pair triangulations and covariances at the true bias.
            std::vector<Covariance2x2> covs(plan.pairs.size());
            for (std::size_t p = 0; p < plan.pairs.size(); ++p) {
                const int i = sensor_index(sensors, plan.pairs[p].first);
                const int j = sensor_index(sensors, plan.pairs[p].second);
                const Position2D pt =
                    triangulate(sensors[i], sensors[j],
                                frame.angles[i] + b_true[i], frame.angles[j] + b_true[j]);
                Covariance2x2 r_polar = Covariance2x2::Zero();
                r_polar(0, 0) = sensors[i].sigma_theta * sensors[i].sigma_theta;
                r_polar(1, 1) = sensors[j].sigma_theta * sensors[j].sigma_theta;
                covs[p] = transform_covariance(
                    pair_jacobian(sensors[i], sensors[j], pt), r_polar);
            }
            for (std::size_t p = 0; p + 1 < plan.pairs.size(); ++p) {
                const Eigen::MatrixXd jac = jacobian_h_wrt_b(
                    plan, static_cast<int>(p), static_cast<int>(p + 1), sensors,
                    frame.angles, b_true);
                const Covariance2x2 r_w = covs[p] + covs[p + 1];
                info.matrix += jac.transpose() * r_w.inverse() * jac;
            }
            ++used;
        } catch (const DegenerateGeometryError&) {
            ++info.skipped_frames;
        }
    }
    if (used == 0) {
        throw NoDataError("fim: no usable (target, time) frames");
    }
    info.matrix = 0.5 * (info.matrix + info.matrix.transpose()).eval();
    return info;
}

CrlbResult crlb(const FisherInfo& info) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info.matrix);
    if (eig.info() != Eigen::Success) {
        throw NumericalFailureError("crlb: eigendecomposition failed");
    }
    const Eigen::VectorXd values = eig.eigenvalues();
    const double lambda_max = values.maxCoeff();
    const double lambda_min = values.minCoeff();
    if (!(lambda_min > 0.0) || lambda_max / lambda_min > 1e12) {
        int weakest = 0;
        values.minCoeff(&weakest);
        std::ostringstream msg;
        msg << "crlb: Fisher information is singular or ill-conditioned; "
               "unobservable bias direction [";
        const Eigen::VectorXd dir = eig.eigenvectors().col(weakest);
        for (int i = 0; i < dir.size(); ++i) {
            msg << (i ? ", " : "") << dir[i];
        }
        msg << "]";
        throw UnobservableBiasError(msg.str());
    }
    CrlbResult result;
    result.covariance_bound = eig.eigenvectors() *
                              values.cwiseInverse().asDiagonal() *
                              eig.eigenvectors().transpose();
    result.covariance_bound =
        0.5 * (result.covariance_bound + result.covariance_bound.transpose()).eval();
    result.sqrt_diagonal = result.covariance_bound.diagonal().cwiseSqrt();
    return result;
}

} // namespace bearingreg
