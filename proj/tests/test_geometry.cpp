#include "bearingreg/geometry.hpp"

#include "bearingreg/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace bearingreg;

namespace {
constexpr double kPi = std::numbers::pi;

SensorConfig sensor_at(int id, double x, double y, double sigma = 0.01) {
    SensorConfig s;
    s.id = id;
    s.position = Position2D(x, y);
    s.sigma_theta = sigma;
    return s;
}
} // namespace

TEST(WrapAngle, Examples) {
    EXPECT_DOUBLE_EQ(wrap_angle(0.0), 0.0);
    EXPECT_DOUBLE_EQ(wrap_angle(3.0 * kPi), kPi);
    EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
}

TEST(WrapAngle, IdempotentAndModular) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-50.0, 50.0);
    for (int i = 0; i < 2000; ++i) {
        const double a = dist(rng);
        const double w = wrap_angle(a);
        EXPECT_GT(w, -kPi);
        EXPECT_LE(w, kPi);
        EXPECT_DOUBLE_EQ(wrap_angle(w), w);
        EXPECT_NEAR(std::remainder(w - a, 2.0 * kPi), 0.0, 1e-9);
    }
}

TEST(WrapAngle, RejectsNonFinite) {
    EXPECT_THROW(wrap_angle(std::nan("")), InvalidArgumentError);
    EXPECT_THROW(wrap_angle(std::numeric_limits<double>::infinity()), InvalidArgumentError);
}

TEST(BearingFrom, Examples) {
    EXPECT_DOUBLE_EQ(bearing_from({0.0, 0.0}, {5.0, 5.0}), kPi / 4.0);
    EXPECT_DOUBLE_EQ(bearing_from({10.0, 0.0}, {5.0, 5.0}), 3.0 * kPi / 4.0);
    EXPECT_DOUBLE_EQ(bearing_from({0.0, 0.0}, {1.0, 0.0}), 0.0);
}

TEST(BearingFrom, CoincidentPointsRejected) {
    EXPECT_THROW(bearing_from({1.0, 2.0}, {1.0, 2.0}), DegenerateGeometryError);
}

TEST(Triangulate, SymmetricIntersection) {
    const auto si = sensor_at(1, 0.0, 0.0);
    const auto sj = sensor_at(2, 10.0, 0.0);
    const Position2D p = triangulate(si, sj, kPi / 4.0, 3.0 * kPi / 4.0);
    EXPECT_NEAR(p.x(), 5.0, 1e-12);
    EXPECT_NEAR(p.y(), 5.0, 1e-12);
}

TEST(Triangulate, BaselineTargetRejected) {
    const auto si = sensor_at(1, 0.0, 0.0);
    const auto sj = sensor_at(2, 10.0, 0.0);
    EXPECT_THROW(triangulate(si, sj, 0.0, kPi), DegenerateGeometryError);
}

TEST(Triangulate, TangentSingularityRejected) {
    const auto si = sensor_at(1, 0.0, 0.0);
    const auto sj = sensor_at(2, 10.0, 0.0);
    EXPECT_THROW(triangulate(si, sj, kPi / 2.0, kPi / 4.0), DegenerateGeometryError);
}

TEST(Triangulate, RoundTripRecoversRandomTargets) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coord(1000.0, 5000.0);
    const auto si = sensor_at(1, 0.0, 0.0);
    const auto sj = sensor_at(2, 800.0, -300.0);
    for (int i = 0; i < 1000; ++i) {
        const Position2D target(coord(rng), coord(rng));
        const double ti = bearing_from(si.position, target);
        const double tj = bearing_from(sj.position, target);
        const Position2D rec = triangulate(si, sj, ti, tj);
        EXPECT_NEAR((rec - target).norm(), 0.0, 1e-9);
        // bearings of the recovered point line up modulo pi
        EXPECT_NEAR(std::remainder(bearing_from(si.position, rec) - ti, kPi), 0.0, 1e-9);
    }
}

// The sin/cos intersection must agree with the tangent-form expressions on
// non-degenerate inputs.
TEST(Triangulate, MatchesTangentForm) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> coord(-4000.0, 4000.0);
    std::uniform_real_distribution<double> angle(-1.4, 1.4);
    int checked = 0;
    while (checked < 500) {
        const auto si = sensor_at(1, coord(rng), coord(rng));
        const auto sj = sensor_at(2, coord(rng), coord(rng));
        const double ti = angle(rng);
        const double tj = angle(rng);
        if (std::abs(std::tan(ti) - std::tan(tj)) < 1e-3) {
            continue;
        }
        const Position2D p = triangulate(si, sj, ti, tj);
        const double tan_i = std::tan(ti), tan_j = std::tan(tj);
        const double den = tan_i - tan_j;
        const double x = (sj.position.y() - si.position.y() + si.position.x() * tan_i -
                          sj.position.x() * tan_j) / den;
        const double y = (sj.position.y() * tan_i - si.position.y() * tan_j +
                          (si.position.x() - sj.position.x()) * tan_i * tan_j) / den;
        EXPECT_NEAR(p.x(), x, 1e-8 * (1.0 + std::abs(x)));
        EXPECT_NEAR(p.y(), y, 1e-8 * (1.0 + std::abs(y)));
        ++checked;
    }
}

TEST(PairJacobian, HandValues) {
    const auto si = sensor_at(1, 0.0, 0.0);
    const auto sj = sensor_at(2, 10.0, 0.0);
    const Eigen::Matrix2d jac = pair_jacobian(si, sj, {5.0, 5.0});
    EXPECT_NEAR(jac(0, 0), -0.1, 1e-12);
    EXPECT_NEAR(jac(0, 1), 0.1, 1e-12);
    EXPECT_NEAR(jac(1, 0), -0.1, 1e-12);
    EXPECT_NEAR(jac(1, 1), -0.1, 1e-12);
}

TEST(PairJacobian, AxisAlignedRow) {
    const auto si = sensor_at(1, 3.0, 2.0);
    const auto sj = sensor_at(2, 0.0, 50.0);
    const double d = 7.0;
    const Eigen::Matrix2d jac = pair_jacobian(si, sj, {3.0 + d, 2.0});
    EXPECT_NEAR(jac(0, 0), 0.0, 1e-15);
    EXPECT_NEAR(jac(0, 1), 1.0 / d, 1e-15);
}

TEST(PairJacobian, MatchesCentralDifferences) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> coord(500.0, 4000.0);
    const auto si = sensor_at(1, 0.0, 0.0);
    const auto sj = sensor_at(2, 1000.0, 200.0);
    const double h = 1e-6;
    for (int trial = 0; trial < 200; ++trial) {
        const Position2D p(coord(rng), coord(rng));
        const Eigen::Matrix2d jac = pair_jacobian(si, sj, p);
        const SensorConfig* sensors[2] = {&si, &sj};
        for (int r = 0; r < 2; ++r) {
            const double dx =
                (bearing_from(sensors[r]->position, p + Position2D(h, 0.0)) -
                 bearing_from(sensors[r]->position, p - Position2D(h, 0.0))) / (2.0 * h);
            const double dy =
                (bearing_from(sensors[r]->position, p + Position2D(0.0, h)) -
                 bearing_from(sensors[r]->position, p - Position2D(0.0, h))) / (2.0 * h);
            // 1e-5 relative to the row scale; the difference quotient itself
            // carries ~eps/(2h) of cancellation noise on near-zero entries
            const double tol = 1e-5 * jac.row(r).norm();
            EXPECT_NEAR(jac(r, 0), dx, tol);
            EXPECT_NEAR(jac(r, 1), dy, tol);
        }
    }
}

TEST(PairJacobian, SensorCoincidenceRejected) {
    const auto si = sensor_at(1, 0.0, 0.0);
    const auto sj = sensor_at(2, 10.0, 0.0);
    EXPECT_THROW(pair_jacobian(si, sj, {0.0, 0.0}), DegenerateGeometryError);
}

TEST(TransformCovariance, Identity) {
    const Covariance2x2 out =
        transform_covariance(Eigen::Matrix2d::Identity(), Covariance2x2::Identity());
    EXPECT_NEAR((out - Covariance2x2::Identity()).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

// At the symmetric (5,5) geometry both diagonal entries equal 50 sigma^2.
TEST(TransformCovariance, ClosedFormSymmetricCase) {
    const auto si = sensor_at(1, 0.0, 0.0);
    const auto sj = sensor_at(2, 10.0, 0.0);
    const double sigma2 = 1e-4;
    const Eigen::Matrix2d jac = pair_jacobian(si, sj, {5.0, 5.0});
    Covariance2x2 r_polar = Covariance2x2::Zero();
    r_polar(0, 0) = r_polar(1, 1) = sigma2;
    const Covariance2x2 out = transform_covariance(jac, r_polar);
    EXPECT_NEAR(out(0, 0), 50.0 * sigma2, 1e-12);
    EXPECT_NEAR(out(1, 1), 50.0 * sigma2, 1e-12);
    EXPECT_NEAR(out(0, 1), 0.0, 1e-12);

    // direct evaluation of the transform definition
    const Eigen::Matrix2d direct =
        (jac.transpose() * r_polar.inverse() * jac).inverse();
    EXPECT_NEAR((out - direct).cwiseAbs().maxCoeff(), 0.0, 1e-10);
}

TEST(TransformCovariance, SymmetricPositiveDefiniteOnRandomGeometry) {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> coord(500.0, 8000.0);
    std::uniform_real_distribution<double> sig(0.005, 0.05);
    const auto si = sensor_at(1, 0.0, 0.0);
    const auto sj = sensor_at(2, 10000.0, 0.0);
    for (int trial = 0; trial < 300; ++trial) {
        const Position2D p(coord(rng), coord(rng));
        Covariance2x2 r_polar = Covariance2x2::Zero();
        r_polar(0, 0) = sig(rng) * sig(rng);
        r_polar(1, 1) = sig(rng) * sig(rng);
        const Covariance2x2 out = transform_covariance(pair_jacobian(si, sj, p), r_polar);
        EXPECT_LT((out - out.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        Eigen::SelfAdjointEigenSolver<Covariance2x2> eig(out);
        EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
    }
}

TEST(TransformCovariance, RejectsBadInputs) {
    Covariance2x2 r_polar = Covariance2x2::Zero();
    EXPECT_THROW(transform_covariance(Eigen::Matrix2d::Identity(), r_polar),
                 InvalidCovarianceError);
    r_polar(0, 0) = r_polar(1, 1) = 1.0;
    Eigen::Matrix2d singular;
    singular << 1.0, 1.0, 1.0, 1.0;
    EXPECT_THROW(transform_covariance(singular, r_polar), DegenerateGeometryError);
}
