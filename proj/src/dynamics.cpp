#include "qshnn/dynamics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qshnn {

namespace {

void check_dims(const Vec& q, const Mat& w, const NetworkConfig& cfg) {
    if (q.size() != cfg.dim() || w.rows() != cfg.dim() || w.cols() != cfg.dim() ||
        cfg.bias.size() != cfg.dim()) {
        throw std::invalid_argument("state/weight/bias dimensions disagree with 4n=" +
                                    std::to_string(cfg.dim()));
    }
}

double inf_norm(const Mat& w) { return w.cwiseAbs().rowwise().sum().maxCoeff(); }
double one_norm(const Mat& w) { return w.cwiseAbs().colwise().sum().maxCoeff(); }

/// Allocation-free evaluation of -gamma q + mu W phi(q) + mu b for the
/// integrator hot loops. mu_bias is the precomputed mu * b.
struct FieldWorkspace {
    const Mat& w;
    const NetworkConfig& cfg;
    Vec mu_bias;
    Vec phi;

    FieldWorkspace(const Mat& w_, const NetworkConfig& cfg_)
        : w(w_), cfg(cfg_), mu_bias(cfg_.mu * cfg_.bias), phi(cfg_.dim()) {}

    void eval(const Vec& q, Vec& out) {
        if (cfg.activation == Activation::Tanh) {
            phi = q.array().tanh();
        } else {
            phi = q;
        }
        out.noalias() = w * phi;
        out = cfg.mu * out + mu_bias - cfg.gamma * q;
    }
};

}  // namespace

NetworkConfig NetworkConfig::with_constant_bias(int n, double bias_value) {
    NetworkConfig cfg;
    cfg.neurons = n;
    cfg.bias = Vec::Constant(4 * n, bias_value);
    return cfg;
}

Vec apply_activation(const Vec& q, Activation a) {
    if (a == Activation::Identity) {
        return q;
    }
    return q.array().tanh();
}

Vec activation_derivative(const Vec& q, Activation a) {
    if (a == Activation::Identity) {
        return Vec::Ones(q.size());
    }
    return 1.0 - q.array().tanh().square();
}

Vec rhs(const Vec& q, const Mat& w, const NetworkConfig& cfg) {
    check_dims(q, w, cfg);
    return -cfg.gamma * q + cfg.mu * (w * apply_activation(q, cfg.activation)) + cfg.mu * cfg.bias;
}

Trajectory integrate_rk4(const Vec& q0, const Mat& w, const NetworkConfig& cfg, double dt,
                         double t_end) {
    if (dt <= 0.0 || t_end < dt) {
        throw std::invalid_argument("integrate_rk4 needs dt > 0 and t_end >= dt");
    }
    check_dims(q0, w, cfg);

    const Eigen::Index dim = q0.size();
    FieldWorkspace field(w, cfg);
    Vec k1(dim), k2(dim), k3(dim), k4(dim), qt(dim);

    const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-12));
    Trajectory traj;
    traj.times.reserve(steps + 1);
    traj.states.reserve(steps + 1);
    traj.derivatives.reserve(steps + 1);

    Vec q = q0;
    field.eval(q, k1);
    traj.times.push_back(0.0);
    traj.states.push_back(q);
    traj.derivatives.push_back(k1);

    for (std::size_t k = 1; k <= steps; ++k) {
        qt = q + (0.5 * dt) * k1;
        field.eval(qt, k2);
        qt = q + (0.5 * dt) * k2;
        field.eval(qt, k3);
        qt = q + dt * k3;
        field.eval(qt, k4);
        q += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!q.allFinite()) {
            throw DivergenceError(k, static_cast<double>(k) * dt);
        }
        field.eval(q, k1);  // derivative at the new sample, reused as next k1
        traj.times.push_back(static_cast<double>(k) * dt);
        traj.states.push_back(q);
        traj.derivatives.push_back(k1);
    }
    return traj;
}

Vec find_equilibrium(const Mat& w, const NetworkConfig& cfg, const Vec& q0, double tol,
                     double t_max) {
    if (tol <= 0.0) {
        throw std::invalid_argument("find_equilibrium needs tol > 0");
    }
    check_dims(q0, w, cfg);

    const Eigen::Index dim = q0.size();
    FieldWorkspace field(w, cfg);
    Vec k1(dim), k2(dim), k3(dim), k4(dim), qt(dim);

    const double dt = cfg.integrator.dt;
    Vec q = q0;
    field.eval(q, k1);  // doubles as the residual probe
    double residual = k1.cwiseAbs().maxCoeff();
    if (residual < tol) {
        return q;
    }
    const auto steps = static_cast<std::size_t>(std::ceil(t_max / dt));
    for (std::size_t k = 1; k <= steps; ++k) {
        qt = q + (0.5 * dt) * k1;
        field.eval(qt, k2);
        qt = q + (0.5 * dt) * k2;
        field.eval(qt, k3);
        qt = q + dt * k3;
        field.eval(qt, k4);
        q += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!q.allFinite()) {
            throw DivergenceError(k, static_cast<double>(k) * dt);
        }
        field.eval(q, k1);
        residual = k1.cwiseAbs().maxCoeff();
        if (residual < tol) {
            return q;
        }
    }
    throw NonConvergenceError(residual, t_max);
}

Quaternion closed_form_linear(const Quaternion& omega, const Quaternion& b, const Quaternion& q0,
                              const NetworkConfig& cfg, double t) {
    const Quaternion chi{-cfg.gamma + cfg.mu * omega.s, cfg.mu * omega.x, cfg.mu * omega.y,
                         cfg.mu * omega.z};
    const double alpha = std::sqrt(chi.x * chi.x + chi.y * chi.y + chi.z * chi.z);

    // sin(alpha t)/alpha, continuous through alpha = 0.
    const double sinc = alpha < 1e-8 ? t : std::sin(alpha * t) / alpha;
    const double envelope = std::exp(chi.s * t);
    const Quaternion q_e{envelope * std::cos(alpha * t), envelope * sinc * chi.x,
                         envelope * sinc * chi.y, envelope * sinc * chi.z};

    Quaternion result = q_e * q0;
    if (!b.is_zero()) {
        if (chi.squared_norm() == 0.0) {
            throw std::domain_error("closed_form_linear: chi = 0 with nonzero bias");
        }
        result += cfg.mu * (chi.inverse() * (q_e - Quaternion::one()) * b);
    }
    return result;
}

StabilityReport check_constraints(const Mat& w, const NetworkConfig& cfg, const Vec& lipschitz) {
    if (w.rows() != w.cols() || lipschitz.size() != w.rows()) {
        throw std::invalid_argument("check_constraints: weight matrix must be square and match "
                                    "the Lipschitz vector");
    }
    if ((lipschitz.array() <= 0.0).any()) {
        throw std::invalid_argument("check_constraints: Lipschitz constants must be positive");
    }

    const Eigen::Index dim = w.rows();
    const Mat abs_w = w.cwiseAbs();
    const double ratio = cfg.mu / cfg.gamma;

    StabilityReport report;
    report.constraint1_margins = ratio * (abs_w.transpose() * lipschitz);

    Vec sym_sums(dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        sym_sums[j] = abs_w.row(j).sum() + abs_w.col(j).sum();
    }
    report.constraint2_margins = (0.5 * ratio) * sym_sums;

    report.satisfied1 = (report.constraint1_margins.array() < 1.0).all();
    report.satisfied2 = (report.constraint2_margins.array() < 1.0).all();
    report.lambda = cfg.gamma - 0.5 * cfg.mu * sym_sums.maxCoeff();
    return report;
}

StabilityReport check_constraints(const Mat& w, const NetworkConfig& cfg) {
    return check_constraints(w, cfg, Vec::Ones(w.rows()));
}

Mat normalize_weights(const Mat& w, double epsilon) {
    if (epsilon <= 0.0) {
        throw std::invalid_argument("normalize_weights needs epsilon > 0");
    }
    return w / (epsilon + inf_norm(w));
}

Mat repair_constraints(const Mat& w, const NetworkConfig& cfg, double epsilon, bool* repaired) {
    Mat out = w;
    bool did_rescale = false;
    // One rescale suffices at mu = gamma = L = 1; the loop covers other ratios.
    for (int pass = 0; pass < 64; ++pass) {
        const StabilityReport report = check_constraints(out, cfg);
        if (report.satisfied1 && report.satisfied2) {
            break;
        }
        out /= std::max(inf_norm(out), one_norm(out)) + epsilon;
        if (cfg.mu > cfg.gamma) {
            out *= cfg.gamma / cfg.mu;
        }
        did_rescale = true;
    }
    if (repaired != nullptr) {
        *repaired = did_rescale;
    }
    return out;
}

Vec second_derivative(const Vec& q, const Vec& qdot, const Mat& w, const NetworkConfig& cfg) {
    check_dims(q, w, cfg);
    const Vec phi_prime = activation_derivative(q, cfg.activation);
    return -cfg.gamma * qdot + cfg.mu * (w * phi_prime.cwiseProduct(qdot).eval());
}

Mat curvature_profile(const Trajectory& traj, const Mat& w, const NetworkConfig& cfg) {
    if (traj.size() < 3) {
        throw std::invalid_argument("curvature_profile needs at least 3 trajectory samples");
    }
    const Eigen::Index dim = traj.states.front().size();
    Mat kappa(static_cast<Eigen::Index>(traj.size()), dim);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const Vec& qdot = traj.derivatives[k];
        const Vec qddot = second_derivative(traj.states[k], qdot, w, cfg);
        kappa.row(static_cast<Eigen::Index>(k)) =
            (qddot.array().abs() / (1.0 + qdot.array().square()).pow(1.5)).matrix();
    }
    return kappa;
}

EnvelopeReport error_decay_envelope(const Trajectory& traj, const Vec& q_d, double lambda) {
    EnvelopeReport report;
    if (lambda <= 0.0) {
        return report;  // bound's hypothesis fails; nothing to verify
    }
    report.applicable = true;
    const double e0 = (traj.states.front() - q_d).norm();
    if (e0 == 0.0) {
        report.worst_ratio = 0.0;  // both sides identically zero
        return report;
    }
    const double log_e0 = std::log(e0);
    double worst_log_ratio = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const double err = (traj.states[k] - q_d).norm();
        // log-space comparison so the bound never underflows at large t
        const double log_bound = log_e0 - 2.0 * lambda * traj.times[k];
        const double log_ratio = (err == 0.0 ? -std::numeric_limits<double>::infinity()
                                             : std::log(err) - log_bound);
        worst_log_ratio = std::max(worst_log_ratio, log_ratio);
        if (log_ratio > 1e-12) {
            ++report.violations;
        }
    }
    report.worst_ratio = std::exp(worst_log_ratio);
    return report;
}

}  // namespace qshnn
