#pragma once

#include "bearingreg/bias_model.hpp"
#include "bearingreg/types.hpp"

#include <vector>

namespace bearingreg {

/// Fisher information of the bias vector, rad^-2.
struct FisherInfo {
    Eigen::MatrixXd matrix;
    int skipped_frames = 0; // degenerate (target, time) blocks
};

struct CrlbResult {
    Eigen::MatrixXd covariance_bound; // rad^2
    Eigen::VectorXd sqrt_diagonal;    // rad
};

/// True bearings of every sensor toward one target at one time step,
/// index-aligned with the sensor list.
struct BearingFrame {
    std::vector<double> angles;
};

/// Jacobian of the pair-of-pairs measurement model w.r.t. the bias vector,
/// 2 x S, by central finite differences with step 1e-6 rad at the given base
/// angles. Columns of sensors outside the two pairs are zero.
Eigen::MatrixXd jacobian_h_wrt_b(const PairingPlan& plan, int pair_a, int pair_b,
                                 const std::vector<SensorConfig>& sensors,
                                 const std::vector<double>& angles,
                                 const BiasVector& bias);

/// Fisher information of the stacked pseudo-measurement model: the sum over
/// frames and adjacent pair-of-pairs of H^T R_w^-1 H, evaluated at the true
/// bias and true bearings. Degenerate frames are skipped and counted.
/// Throws NoDataError when no frame is usable.
FisherInfo fim(const std::vector<BearingFrame>& frames, const PairingPlan& plan,
               const std::vector<SensorConfig>& sensors, const BiasVector& b_true);

/// Invert the information matrix. Throws UnobservableBiasError (reporting the
/// weakest direction) when the condition number exceeds 1e12.
CrlbResult crlb(const FisherInfo& info);

} // namespace bearingreg
