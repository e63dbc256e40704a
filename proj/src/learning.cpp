#include "qshnn/learning.hpp"

#include "qshnn/manifold.hpp"
#include "qshnn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qshnn {

Mat sensitivity_matrix(const Mat& w, const Vec& q_star, const NetworkConfig& cfg) {
    if (w.rows() != w.cols() || q_star.size() != w.rows()) {
        throw std::invalid_argument("sensitivity_matrix: dimension mismatch");
    }
    const Vec phi_prime = activation_derivative(q_star, cfg.activation);
    Mat s = -(cfg.mu / cfg.gamma) * w;
    s *= phi_prime.asDiagonal();
    s += Mat::Identity(w.rows(), w.cols());
    return s;
}

Mat weight_gradient(const Mat& w, const Vec& q_star, const Vec& q_d, const NetworkConfig& cfg,
                    bool loss_normalized) {
    const Vec delta = q_star - q_d;
    const Mat s = sensitivity_matrix(w, q_star, cfg);

    Eigen::FullPivLU<Mat> lu(s.transpose());
    if (!lu.isInvertible()) {
        throw std::runtime_error(
            "weight_gradient: singular sensitivity matrix (weight constraint violated)");
    }
    const Vec y = lu.solve(delta);
    const Vec phi = apply_activation(q_star, cfg.activation);

    Mat grad = (cfg.mu / cfg.gamma) * (y * phi.transpose());
    if (loss_normalized) {
        const double e = 0.5 * delta.norm();
        if (e > 0.0) {
            grad /= e;
        } else {
            grad.setZero();
        }
    }
    return grad;
}

double accuracy(const Vec& q_star, const Vec& q_d, double tau) {
    if (tau <= 0.0) {
        throw std::invalid_argument("accuracy needs tau > 0");
    }
    if (q_star.size() != q_d.size()) {
        throw std::invalid_argument("accuracy: dimension mismatch");
    }
    const auto hits = ((q_star - q_d).cwiseAbs().array() < tau).count();
    return static_cast<double>(hits) / static_cast<double>(q_star.size());
}

std::vector<Quaternion> ghr_loss_gradient(const Vec& q_star, const Vec& q_d) {
    if (q_star.size() != q_d.size() || q_star.size() % 4 != 0) {
        throw std::invalid_argument("ghr_loss_gradient: states must be matching 4n vectors");
    }
    std::vector<Quaternion> grads;
    grads.reserve(static_cast<std::size_t>(q_star.size() / 4));
    for (Eigen::Index m = 0; m < q_star.size(); m += 4) {
        const Quaternion state{q_star[m], q_star[m + 1], q_star[m + 2], q_star[m + 3]};
        const Quaternion target{q_d[m], q_d[m + 1], q_d[m + 2], q_d[m + 3]};
        const auto loss = [&target](const Quaternion& p) {
            return Quaternion{(p - target).squared_norm(), 0.0, 0.0, 0.0};
        };
        grads.push_back(ghr_derivative(loss, state, Quaternion::one(), /*conjugate_side=*/true));
    }
    return grads;
}

Mat initial_weights(const NetworkConfig& cfg, std::uint64_t seed, double epsilon, bool* repaired) {
    SplitMix64 rng(seed);
    Mat w(cfg.dim(), cfg.dim());
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            w(i, j) = rng.uniform_symmetric();
        }
    }
    w = normalize_weights(w, epsilon);
    return repair_constraints(w, cfg, epsilon, repaired);
}

TrainingReport train(const NetworkConfig& cfg, const TrainConfig& tcfg, const Vec& targets) {
    if (targets.size() != cfg.dim()) {
        throw std::invalid_argument("train: target dimension must equal 4n");
    }
    if (!targets.allFinite()) {
        throw std::invalid_argument("train: targets must be finite");
    }
    if ((targets.cwiseAbs().array() >= 1.0).any()) {
        throw std::invalid_argument(
            "train: target components must lie inside (-1, 1); the equilibrium of a "
            "constrained network cannot reach the tanh saturation boundary");
    }
    if (tcfg.eta <= 0.0 || tcfg.projection_period < 1 || tcfg.tau <= 0.0 || tcfg.max_iters < 0) {
        throw std::invalid_argument("train: eta > 0, projection_period >= 1, tau > 0 required");
    }

    const int dim = cfg.dim();
    const int period = tcfg.projection_period;
    const int max_iters =
        tcfg.max_iters > 0 ? tcfg.max_iters : (tcfg.mode == TrainMode::QSHNN ? 30000 : 10000);

    TrainingReport report;
    report.seed = tcfg.seed;
    report.mode = tcfg.mode;

    Mat w = initial_weights(cfg, tcfg.seed, tcfg.epsilon, &report.repaired_at_init);

    double eta = std::clamp(tcfg.eta, tcfg.eta_min, tcfg.eta_max);
    Vec q_warm = Vec::Zero(dim);
    Vec q_star = q_warm;
    double prev_sq = std::numeric_limits<double>::infinity();
    Mat step_base;        // weights before the most recent gradient step
    Mat step_gradient;    // gradient used by that step
    bool prev_step_projected = false;

    report.stop_reason = StopReason::MaxIters;
    report.iterations_used = max_iters;

    for (int k = 1; k <= max_iters; ++k) {
        double sq = std::numeric_limits<double>::quiet_NaN();
        try {
            q_star = find_equilibrium(w, cfg, q_warm, cfg.integrator.tol, cfg.integrator.t_max);
            sq = (q_star - targets).squaredNorm();

            if (k > 1) {
                if (sq > prev_sq) {
                    // A projection is a mandated structural move; only a plain
                    // gradient step gets retried at smaller rates.
                    while (!prev_step_projected && sq > prev_sq && eta > tcfg.eta_min) {
                        eta = std::max(0.5 * eta, tcfg.eta_min);
                        w = step_base - eta * step_gradient;
                        q_star = find_equilibrium(w, cfg, q_warm, cfg.integrator.tol,
                                                  cfg.integrator.t_max);
                        sq = (q_star - targets).squaredNorm();
                    }
                } else {
                    eta = std::min(1.05 * eta, tcfg.eta_max);
                }
            }
        } catch (const DivergenceError&) {
            report.stop_reason = StopReason::Divergence;
            report.iterations_used = k;
            break;
        }
        if (!std::isfinite(sq)) {
            report.stop_reason = StopReason::Divergence;
            report.iterations_used = k;
            break;
        }

        q_warm = q_star;
        const double acc = accuracy(q_star, targets, tcfg.tau);

        const Mat grad = weight_gradient(w, q_star, targets, cfg, tcfg.loss_normalized_gradient);
        step_base = w;
        step_gradient = grad;
        prev_sq = sq;

        w -= eta * grad;
        prev_step_projected = false;
        if (tcfg.mode == TrainMode::QSHNN && k % period == 0) {
            w = project_weight_matrix(w);
            prev_step_projected = true;
        }

        report.loss_history.push_back(sq / dim);
        report.accuracy_history.push_back(acc);
        report.quaternionicity_history.push_back(quaternionicity_residual(w));
        report.eta_history.push_back(eta);
        const StabilityReport margins = check_constraints(w, cfg);
        report.margin1_history.push_back(margins.constraint1_margins.maxCoeff());
        report.margin2_history.push_back(margins.constraint2_margins.maxCoeff());

        if (sq < tcfg.tau && acc == 1.0 &&
            (tcfg.mode == TrainMode::SHNN || k % period == 0)) {
            report.stop_reason = StopReason::Converged;
            report.iterations_used = k;
            break;
        }
    }

    report.final_weights = w;
    report.final_equilibrium = q_star;
    report.final_stability = check_constraints(w, cfg);
    return report;
}

}  // namespace qshnn
