#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "qshnn/manifold.hpp"
#include "qshnn/quaternion.hpp"
#include "qshnn/rng.hpp"

#include <cmath>

using namespace qshnn;
using qshnn::testing::least_squares_projection_oracle;
using qshnn::testing::random_mat;
using qshnn::testing::random_matrix4;
using qshnn::testing::random_quaternion;

TEST_CASE("projection fixes manifold members and recovers coordinates") {
    SplitMix64 rng(21);
    for (int t = 0; t < 100; ++t) {
        const Quaternion q = random_quaternion(rng);
        const auto [projected, coeff] = project_block(left_mult_matrix(q));
        CHECK((projected - left_mult_matrix(q)).norm() < 1e-14);
        CHECK(coeff.c1 == doctest::Approx(q.s).epsilon(1e-14));
        CHECK(coeff.ci == doctest::Approx(q.x).epsilon(1e-14));
        CHECK(coeff.cj == doctest::Approx(q.y).epsilon(1e-14));
        CHECK(coeff.ck == doctest::Approx(q.z).epsilon(1e-14));
    }
}

TEST_CASE("projection of diag(1,2,3,4)") {
    const Matrix4 m = Eigen::Vector4d(1, 2, 3, 4).asDiagonal();
    const auto [projected, coeff] = project_block(m);
    CHECK((projected - 2.5 * Matrix4::Identity()).norm() == 0.0);
    CHECK(coeff.c1 == 2.5);
    CHECK(coeff.ci == 0.0);
    CHECK(coeff.cj == 0.0);
    CHECK(coeff.ck == 0.0);
    CHECK((projected - least_squares_projection_oracle(m)).norm() < 1e-12);
}

TEST_CASE("projection equals the normal-equation least-squares oracle") {
    SplitMix64 rng(22);
    for (int t = 0; t < 1000; ++t) {
        const Matrix4 m = random_matrix4(rng);
        const Matrix4 projected = project_block(m).first;
        const Matrix4 oracle = least_squares_projection_oracle(m);
        CHECK((projected - oracle).norm() < 1e-12);
        CHECK((m - projected).norm() <= (m - oracle).norm() + 1e-12);
    }
}

TEST_CASE("projection is idempotent and linear") {
    SplitMix64 rng(23);
    for (int t = 0; t < 200; ++t) {
        const Matrix4 m = random_matrix4(rng);
        const Matrix4 n = random_matrix4(rng);
        const Matrix4 pm = project_block(m).first;
        CHECK((project_block(pm).first - pm).norm() < 1e-13);

        const double a = rng.uniform_symmetric();
        const double b = rng.uniform_symmetric();
        const Matrix4 combined = project_block(a * m + b * n).first;
        const Matrix4 separate = a * pm + b * project_block(n).first;
        CHECK((combined - separate).norm() < 1e-12);
    }
}

TEST_CASE("projection is Frobenius-optimal against random manifold members") {
    SplitMix64 rng(24);
    for (int t = 0; t < 50; ++t) {
        const Matrix4 m = random_matrix4(rng);
        const Matrix4 pm = project_block(m).first;
        const double best = (m - pm).norm();
        for (int a = 0; a < 100; ++a) {
            const Matrix4 candidate = left_mult_matrix(random_quaternion(rng));
            CHECK((m - candidate).norm() >= best - 1e-12);
            // Pythagoras: the residual is orthogonal to the manifold
            const double lhs = (m - candidate).squaredNorm();
            const double rhs = (m - pm).squaredNorm() + (pm - candidate).squaredNorm();
            CHECK(std::abs(lhs - rhs) < 1e-10);
        }
    }
}

TEST_CASE("basis matrices are orthogonal with squared norm 4") {
    const Matrix4 basis[4] = {left_mult_matrix(Quaternion::one()), left_mult_matrix(Quaternion::i()),
                              left_mult_matrix(Quaternion::j()), left_mult_matrix(Quaternion::k())};
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            const double inner = basis[a].cwiseProduct(basis[b]).sum();
            CHECK(inner == (a == b ? 4.0 : 0.0));
        }
    }
}

TEST_CASE("block-wise projection of full weight matrices") {
    SplitMix64 rng(25);

    // already block-quaternionic: unchanged
    Mat quaternionic(8, 8);
    for (int bi = 0; bi < 2; ++bi) {
        for (int bj = 0; bj < 2; ++bj) {
            quaternionic.block<4, 4>(4 * bi, 4 * bj) = left_mult_matrix(random_quaternion(rng));
        }
    }
    CHECK((project_weight_matrix(quaternionic) - quaternionic).norm() < 1e-14);
    CHECK(quaternionicity_residual(quaternionic) < 1e-14);

    // n = 1 reduces to the single-block projection
    const Mat diag = Eigen::Vector4d(1, 2, 3, 4).asDiagonal().toDenseMatrix();
    CHECK((project_weight_matrix(diag) - 2.5 * Mat::Identity(4, 4)).norm() == 0.0);
    CHECK(quaternionicity_residual(diag) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-14));

    // random matrices project onto the manifold with zero residual
    for (int t = 0; t < 20; ++t) {
        const Mat w = random_mat(rng, 12, 12);
        CHECK(quaternionicity_residual(w) >= 0.0);
        CHECK(quaternionicity_residual(project_weight_matrix(w)) < 1e-12);
    }
}

TEST_CASE("shape errors on non-4n dimensions") {
    CHECK_THROWS_AS(project_weight_matrix(Mat::Zero(6, 6)), std::invalid_argument);
    CHECK_THROWS_AS(project_weight_matrix(Mat::Zero(8, 4)), std::invalid_argument);
    CHECK_THROWS_AS(quaternionicity_residual(Mat::Zero(3, 3)), std::invalid_argument);
}
