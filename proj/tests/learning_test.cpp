#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "qshnn/learning.hpp"
#include "qshnn/harness.hpp"
#include "qshnn/manifold.hpp"
#include "qshnn/rng.hpp"

#include <cmath>

using namespace qshnn;
using qshnn::testing::finite_difference_gradient;
using qshnn::testing::random_vec;

TEST_CASE("sensitivity matrix special cases") {
    NetworkConfig cfg = NetworkConfig::with_constant_bias(1);

    CHECK((sensitivity_matrix(Mat::Zero(4, 4), Vec::Zero(4), cfg) - Mat::Identity(4, 4)).norm() ==
          0.0);

    // saturated states: phi' ~ 0, S ~ I
    const Mat w = 0.9 * Mat::Identity(4, 4);
    const Vec huge = Vec::Constant(4, 40.0);
    CHECK((sensitivity_matrix(w, huge, cfg) - Mat::Identity(4, 4)).norm() < 1e-12);

    // W = 0.5 I at the origin: S = 0.5 I
    CHECK((sensitivity_matrix(0.5 * Mat::Identity(4, 4), Vec::Zero(4), cfg) -
           0.5 * Mat::Identity(4, 4))
              .norm() == 0.0);
}

TEST_CASE("gradient vanishes at the target") {
    SplitMix64 rng(51);
    NetworkConfig cfg = NetworkConfig::with_constant_bias(1);
    const Mat w = initial_weights(cfg, rng.next(), 1e-12);
    const Vec q_star = random_vec(rng, 4);
    CHECK(weight_gradient(w, q_star, q_star, cfg).norm() == 0.0);
}

TEST_CASE("gradient with zero weights reduces to the outer product") {
    NetworkConfig cfg = NetworkConfig::with_constant_bias(1, 0.3);
    const Mat w = Mat::Zero(4, 4);
    const Vec q_star = (cfg.mu / cfg.gamma) * cfg.bias;
    const Vec q_d = Eigen::Vector4d(0.1, -0.2, 0.4, 0.0);
    const Mat grad = weight_gradient(w, q_star, q_d, cfg);
    const Vec delta = q_star - q_d;
    for (Eigen::Index i = 0; i < 4; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) {
            CHECK(grad(i, j) == doctest::Approx(delta[i] * std::tanh(q_star[j])).epsilon(1e-14));
        }
    }
}

TEST_CASE("gradient matches finite differences through the equilibrium pipeline") {
    SplitMix64 rng(52);
    NetworkConfig cfg = NetworkConfig::with_constant_bias(1);
    for (int t = 0; t < 5; ++t) {
        const Mat w = initial_weights(cfg, rng.next(), 1e-12);
        const Vec q_star = find_equilibrium(w, cfg, Vec::Zero(4), 1e-12, 100.0);
        const Vec q_d = 0.8 * random_vec(rng, 4);
        const Mat grad = weight_gradient(w, q_star, q_d, cfg);
        const Mat fd = finite_difference_gradient(w, q_d, cfg, 1e-5);
        CHECK((grad - fd).cwiseAbs().maxCoeff() < 1e-4);
    }
}

TEST_CASE("singular sensitivity matrix raises a gradient error") {
    NetworkConfig cfg = NetworkConfig::with_constant_bias(1);
    // W = I at the origin gives S = I - I = 0
    CHECK_THROWS_AS(weight_gradient(Mat::Identity(4, 4), Vec::Zero(4), Vec::Ones(4), cfg),
                    std::runtime_error);
}

TEST_CASE("loss-normalized variant scales by 1/E") {
    SplitMix64 rng(53);
    NetworkConfig cfg = NetworkConfig::with_constant_bias(1);
    const Mat w = initial_weights(cfg, rng.next(), 1e-12);
    const Vec q_star = random_vec(rng, 4);
    const Vec q_d = random_vec(rng, 4);
    const Mat plain = weight_gradient(w, q_star, q_d, cfg, false);
    const Mat scaled = weight_gradient(w, q_star, q_d, cfg, true);
    const double e = 0.5 * (q_star - q_d).norm();
    CHECK((plain / e - scaled).norm() < 1e-12);
}

TEST_CASE("a small gradient step almost never increases the loss") {
    SplitMix64 rng(54);
    NetworkConfig cfg = NetworkConfig::with_constant_bias(1);
    int improved = 0;
    const int trials = 40;
    for (int t = 0; t < trials; ++t) {
        const Mat w = initial_weights(cfg, rng.next(), 1e-12);
        const Vec q_star = find_equilibrium(w, cfg, Vec::Zero(4), 1e-11, 100.0);
        const Vec q_d = 0.8 * random_vec(rng, 4);
        const double loss_before = 0.5 * (q_star - q_d).squaredNorm();

        const Mat stepped = w - 1e-3 * weight_gradient(w, q_star, q_d, cfg);
        const Vec q_after = find_equilibrium(stepped, cfg, q_star, 1e-11, 100.0);
        const double loss_after = 0.5 * (q_after - q_d).squaredNorm();
        if (loss_after <= loss_before) {
            ++improved;
        }
    }
    CHECK(improved >= (trials * 95) / 100);
}

TEST_CASE("accuracy counts components within tau") {
    const Vec q_d = Eigen::Vector4d(0.5, -0.5, 0.25, 0.0);
    CHECK(accuracy(q_d, q_d, 1e-6) == 1.0);

    Vec off = q_d;
    off[0] += 0.1;
    off[1] -= 0.1;
    CHECK(accuracy(off, q_d, 1e-6) == 0.5);

    SplitMix64 rng(55);
    for (int t = 0; t < 50; ++t) {
        const Vec a = random_vec(rng, 8);
        const Vec b = random_vec(rng, 8);
        double prev = 0.0;
        for (double tau : {1e-4, 1e-2, 0.1, 0.5, 1.0, 2.0}) {
            const double now = accuracy(a, b, tau);
            CHECK(now >= prev);
            prev = now;
        }
    }
}

TEST_CASE("GHR loss gradient per neuron") {
    SplitMix64 rng(56);

    const Vec q_d = random_vec(rng, 8);
    const auto zero_grads = ghr_loss_gradient(q_d, q_d);
    for (const Quaternion& g : zero_grads) {
        CHECK(g.norm() < 1e-9);
    }

    // single neuron: conjugate-side GHR derivative of |q - d|^2 is (q - d)/2
    for (int t = 0; t < 20; ++t) {
        const Vec q = random_vec(rng, 4);
        const Vec d = random_vec(rng, 4);
        const auto grads = ghr_loss_gradient(q, d);
        REQUIRE(grads.size() == 1);
        const Quaternion expected = 0.5 * Quaternion{q[0] - d[0], q[1] - d[1], q[2] - d[2], q[3] - d[3]};
        CHECK((grads[0] - expected).norm() < 1e-6);
    }
}

TEST_CASE("training on the untrained equilibrium converges within one period") {
    NetworkConfig cfg = NetworkConfig::with_constant_bias(2);
    TrainConfig tcfg;
    tcfg.seed = 7;

    const Mat w0 = initial_weights(cfg, tcfg.seed, tcfg.epsilon);
    const Vec untrained = find_equilibrium(w0, cfg, Vec::Zero(8), cfg.integrator.tol, 100.0);

    const TrainingReport report = train(cfg, tcfg, untrained);
    CHECK(report.stop_reason == StopReason::Converged);
    CHECK(report.iterations_used <= tcfg.projection_period);
    CHECK(report.final_loss() < tcfg.tau);
    CHECK(report.final_accuracy() == 1.0);
}

TEST_CASE("QSHNN training converges and preserves block structure") {
    NetworkConfig cfg = NetworkConfig::with_constant_bias(2);
    TrainConfig tcfg;
    tcfg.seed = 99;
    const Vec targets = 0.6 * generate_targets(2, 1234);

    const TrainingReport report = train(cfg, tcfg, targets);
    REQUIRE(report.stop_reason == StopReason::Converged);
    CHECK(report.final_loss() < tcfg.tau);
    CHECK(report.final_accuracy() == 1.0);
    CHECK(report.iterations_used % tcfg.projection_period == 0);
    CHECK(quaternionicity_residual(report.final_weights) < 1e-12);

    // the projection left its mark at every period boundary
    for (std::size_t k = 0; k < report.quaternionicity_history.size(); ++k) {
        if ((k + 1) % static_cast<std::size_t>(tcfg.projection_period) == 0) {
            CHECK(report.quaternionicity_history[k] < 1e-12);
        }
    }
}

TEST_CASE("SHNN training converges but keeps no quaternionic structure") {
    NetworkConfig cfg = NetworkConfig::with_constant_bias(2);
    TrainConfig tcfg = TrainConfig::defaults_for(TrainMode::SHNN);
    tcfg.seed = 99;
    const Vec targets = 0.6 * generate_targets(2, 1234);

    const TrainingReport report = train(cfg, tcfg, targets);
    REQUIRE(report.stop_reason == StopReason::Converged);
    CHECK(report.final_loss() < tcfg.tau);
    CHECK(quaternionicity_residual(report.final_weights) > 0.1);
}

TEST_CASE("SHNN loss decreases monotonically at a small fixed rate") {
    NetworkConfig cfg = NetworkConfig::with_constant_bias(2);
    TrainConfig tcfg = TrainConfig::defaults_for(TrainMode::SHNN);
    tcfg.seed = 5;
    tcfg.eta = 0.01;
    tcfg.eta_max = 0.01;  // adaptation may only shrink
    tcfg.max_iters = 400;

    const Vec targets = 0.5 * generate_targets(2, 77);
    const TrainingReport report = train(cfg, tcfg, targets);
    for (std::size_t k = 10; k + 1 < report.loss_history.size(); ++k) {
        CHECK(report.loss_history[k + 1] <= report.loss_history[k] + 1e-15);
    }
}

TEST_CASE("targets outside the open unit range are rejected") {
    NetworkConfig cfg = NetworkConfig::with_constant_bias(1);
    TrainConfig tcfg;
    Vec bad = Vec::Constant(4, 0.5);
    bad[2] = 1.0;
    CHECK_THROWS_AS(train(cfg, tcfg, bad), std::invalid_argument);
    bad[2] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(train(cfg, tcfg, bad), std::invalid_argument);
}

TEST_CASE("training reports divergence instead of propagating integrator blow-up") {
    NetworkConfig cfg = NetworkConfig::with_constant_bias(1);
    cfg.gamma = 1500.0;  // RK4-unstable at dt = 0.01
    cfg.integrator.dt = 0.01;
    TrainConfig tcfg;
    const Vec targets = Vec::Constant(4, 0.2);
    const TrainingReport report = train(cfg, tcfg, targets);
    CHECK(report.stop_reason == StopReason::Divergence);
}
