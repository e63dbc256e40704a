#pragma once

#include "qshnn/dynamics.hpp"
#include "qshnn/quaternion.hpp"
#include "qshnn/types.hpp"

#include <cstdint>
#include <vector>

namespace qshnn {

enum class TrainMode { QSHNN, SHNN };

/// Hyper-parameters of the projection-based learning loop. The learning
/// rate adapts within [eta_min, eta_max]: halved (and the step retried)
/// when an iteration raises the loss, grown by 5% when it lowers it.
struct TrainConfig {
    double eta = 0.05;
    double eta_min = 0.001;
    double eta_max = 0.2;
    int projection_period = 10;
    int max_iters = 0;  // 0 resolves to the mode default: 30000 QSHNN, 10000 SHNN
    double tau = 1e-6;
    TrainMode mode = TrainMode::QSHNN;
    std::uint64_t seed = 0;
    double epsilon = 1e-12;  // normalization guard W / (epsilon + ||W||_inf)
    /// Scales the gradient by 1/E with E = 0.5 ||q* - q_d||; kept for
    /// comparison only, the default update is the plain quadratic-loss
    /// gradient.
    bool loss_normalized_gradient = false;

    static TrainConfig defaults_for(TrainMode mode) {
        TrainConfig cfg;
        cfg.mode = mode;
        cfg.max_iters = (mode == TrainMode::QSHNN) ? 30000 : 10000;
        return cfg;
    }
};

enum class StopReason { Converged, MaxIters, Divergence };

struct TrainingReport {
    std::vector<double> loss_history;       // MSE per iteration
    std::vector<double> accuracy_history;   // fraction of components within tau
    std::vector<double> quaternionicity_history;
    std::vector<double> eta_history;
    std::vector<double> margin1_history;    // max constraint-1 margin per iteration
    std::vector<double> margin2_history;    // max constraint-2 margin per iteration
    Mat final_weights;
    Vec final_equilibrium;
    StopReason stop_reason = StopReason::MaxIters;
    int iterations_used = 0;
    std::uint64_t seed = 0;
    TrainMode mode = TrainMode::QSHNN;
    bool repaired_at_init = false;
    StabilityReport final_stability;

    double final_loss() const { return loss_history.empty() ? 0.0 : loss_history.back(); }
    double final_accuracy() const {
        return accuracy_history.empty() ? 0.0 : accuracy_history.back();
    }
};

/// S = I - (mu/gamma) W diag(phi'(q*)); its linear solves propagate
/// equilibrium shifts to weight perturbations.
Mat sensitivity_matrix(const Mat& w, const Vec& q_star, const NetworkConfig& cfg);

/// Gradient of the quadratic loss 0.5 ||q*(W) - q_d||^2 through the
/// equilibrium condition: entry (i,j) is (mu/gamma) phi(q*_j) (delta^T S^-1)_i
/// with delta = q* - q_d. Computed as one linear solve S^T y = delta followed
/// by the outer product y phi(q*)^T; throws std::runtime_error when S is
/// singular (a weight-constraint violation). With loss_normalized = true the
/// result carries the additional 1/E factor, E = 0.5 ||delta||.
Mat weight_gradient(const Mat& w, const Vec& q_star, const Vec& q_d, const NetworkConfig& cfg,
                    bool loss_normalized = false);

/// Fraction of components with |q*_i - d_i| < tau.
double accuracy(const Vec& q_star, const Vec& q_d, double tau);

/// Left GHR derivative of the quadratic loss with respect to each neuron's
/// conjugate quaternion state (rotation factor 1). A validation utility for
/// the structure-preserving descent direction; not used by train().
std::vector<Quaternion> ghr_loss_gradient(const Vec& q_star, const Vec& q_d);

/// Seeded U(-1,1) weight initialization (row-major fill) followed by
/// infinity-norm normalization and the constraint repair rescale.
Mat initial_weights(const NetworkConfig& cfg, std::uint64_t seed, double epsilon,
                    bool* repaired = nullptr);

/// Projection-based training loop: per iteration one warm-started
/// equilibrium solve, the strict-gradient weight update (retried with a
/// halved learning rate when the measured loss rose), and in QSHNN mode a
/// block-wise projection every projection_period iterations. Stops when
/// ||delta||^2 < tau, accuracy = 1.0 and (QSHNN) the iteration index is
/// divisible by the projection period. Targets must be finite with every
/// component inside (-1, 1).
TrainingReport train(const NetworkConfig& cfg, const TrainConfig& tcfg, const Vec& targets);

}  // namespace qshnn
