#pragma once

#include "qshnn/quaternion.hpp"
#include "qshnn/types.hpp"

#include <vector>

namespace qshnn {

/// Component-wise activation of the state equation. Tanh is the model's
/// activation; Identity exists so the integrator can be validated against
/// the closed-form linear response.
enum class Activation { Tanh, Identity };

struct IntegratorConfig {
    double dt = 0.01;
    // Time budget for equilibrium searches. Trained weight matrices contract
    // slowly (rates around 0.05 near the fixed point), so driving the
    // residual below tol can take a few hundred time units; the cap leaves
    // headroom and costs nothing when convergence is fast.
    double t_max = 1000.0;
    double tol = 1e-9;  // equilibrium detection on ||rhs||_inf
};

/// Parameters of the network  dq/dt = -gamma q + mu W phi(q) + mu b
/// over 4n real state components (n quaternion neurons).
struct NetworkConfig {
    int neurons = 4;
    double gamma = 1.0;
    double mu = 1.0;
    Vec bias;  // size 4n
    Activation activation = Activation::Tanh;
    IntegratorConfig integrator;

    int dim() const { return 4 * neurons; }

    /// n quaternion neurons with every bias component set to the same value.
    static NetworkConfig with_constant_bias(int n, double bias_value = 0.15);
};

/// Fixed-step integration record: states and right-hand sides sampled at
/// uniformly spaced times t_k = k * dt.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<Vec> derivatives;

    std::size_t size() const { return times.size(); }
};

/// Margins of the two weight constraints. Constraint 1 (existence and
/// uniqueness of the equilibrium) bounds column sums:
///   (mu/gamma) sum_i L_i |w_ij| < 1  for every column j.
/// Constraint 2 (asymptotic stability) bounds symmetrized row+column sums:
///   (mu/(2 gamma)) sum_i (|w_ji| + |w_ij|) < 1  for every index j.
/// lambda = gamma - (mu/2) max_j sum_i (|w_ji| + |w_ij|) is the decay
/// coefficient of the error-envelope bound; lambda > 0 iff constraint 2 holds.
struct StabilityReport {
    Vec constraint1_margins;
    Vec constraint2_margins;
    bool satisfied1 = false;
    bool satisfied2 = false;
    double lambda = 0.0;
};

struct EnvelopeReport {
    bool applicable = false;   // false when lambda <= 0 (hypothesis fails)
    double worst_ratio = 0.0;  // max over samples of ||e(t)|| / (||e(0)|| e^{-2 lambda t})
    std::size_t violations = 0;
};

Vec apply_activation(const Vec& q, Activation a);
Vec activation_derivative(const Vec& q, Activation a);

/// -gamma q + mu W phi(q) + mu b. Throws std::invalid_argument on dimension
/// mismatch between q, W and cfg.
Vec rhs(const Vec& q, const Mat& w, const NetworkConfig& cfg);

/// Classical fourth-order Runge-Kutta with fixed step dt from t = 0 to
/// t_end, recording state and rhs at every step (t_end is rounded up to a
/// whole number of steps). Throws DivergenceError when the state becomes
/// non-finite.
Trajectory integrate_rk4(const Vec& q0, const Mat& w, const NetworkConfig& cfg, double dt,
                         double t_end);

/// Integrates from q0 until ||rhs(q)||_inf < tol and returns the final
/// state. Equilibria of the flow are exact fixed points of the RK4 map, so
/// the residual can be driven to machine precision. Throws
/// NonConvergenceError (carrying the last residual) when t_max is exhausted.
Vec find_equilibrium(const Mat& w, const NetworkConfig& cfg, const Vec& q0, double tol,
                     double t_max);

/// Closed-form single-neuron response under linear (identity) activation:
///   dq/dt = chi * q + mu b,   chi = -gamma + mu omega,
///   q(t) = q_e * q0 + mu chi^-1 * (q_e - 1) * b,
///   q_e  = e^{chi_s t} (cos(alpha t) + (chi_x i + chi_y j + chi_z k) sin(alpha t)/alpha),
/// with alpha = |vector part of chi| and sin(alpha t)/alpha -> t as
/// alpha -> 0. Throws std::domain_error when b != 0 and |chi| = 0.
Quaternion closed_form_linear(const Quaternion& omega, const Quaternion& b, const Quaternion& q0,
                              const NetworkConfig& cfg, double t);

/// Evaluates both weight-constraint margin families and the decay
/// coefficient lambda. lipschitz holds the per-component Lipschitz constants
/// of the activation (all 1 for tanh).
StabilityReport check_constraints(const Mat& w, const NetworkConfig& cfg, const Vec& lipschitz);

StabilityReport check_constraints(const Mat& w, const NetworkConfig& cfg);

/// W / (epsilon + ||W||_inf) with the max-absolute-row-sum norm; the result
/// has ||W||_inf < 1. The zero matrix maps to itself.
Mat normalize_weights(const Mat& w, double epsilon);

/// Rescales by max(||W||_inf, ||W||_1) + epsilon whenever either constraint
/// fails after plain normalization, repeating until both hold. Sets
/// *repaired when the extra rescale was needed.
Mat repair_constraints(const Mat& w, const NetworkConfig& cfg, double epsilon,
                       bool* repaired = nullptr);

/// Jacobian-propagated second derivative of the state equation:
/// qddot = J qdot with J = -gamma I + mu W diag(phi'(q)).
Vec second_derivative(const Vec& q, const Vec& qdot, const Mat& w, const NetworkConfig& cfg);

/// Per-component curvature kappa_i(t) = |qddot_i| (1 + qdot_i^2)^{-3/2}
/// along a recorded trajectory, with qddot computed analytically (J qdot)
/// rather than by double differencing. Row k of the result holds
/// kappa(t_k); requires at least 3 samples.
Mat curvature_profile(const Trajectory& traj, const Mat& w, const NetworkConfig& cfg);

/// Checks the exponential error envelope ||q(t) - q_d|| <= ||q(0) - q_d|| e^{-2 lambda t}
/// at every trajectory sample. When lambda <= 0 the hypothesis of the bound
/// fails and the report is flagged not applicable rather than violated.
EnvelopeReport error_decay_envelope(const Trajectory& traj, const Vec& q_d, double lambda);

}  // namespace qshnn
