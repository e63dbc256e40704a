#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qshnn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Matrix4 = Eigen::Matrix4d;

/// Thrown when an integration step produces a non-finite state.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t step, double time)
        : std::runtime_error("state became non-finite at step " + std::to_string(step) +
                             " (t=" + std::to_string(time) + ")"),
          step_(step),
          time_(time) {}

    std::size_t step() const noexcept { return step_; }
    double time() const noexcept { return time_; }

private:
    std::size_t step_;
    double time_;
};

/// Thrown when an equilibrium search runs out of time budget.
class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(double residual, double t_max)
        : std::runtime_error("no equilibrium within t_max=" + std::to_string(t_max) +
                             ", last residual " + std::to_string(residual)),
          residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace qshnn
