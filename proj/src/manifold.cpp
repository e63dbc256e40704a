#include "qshnn/manifold.hpp"

#include <array>
#include <stdexcept>
#include <string>

namespace qshnn {

namespace {

const std::array<Matrix4, 4>& basis() {
    static const std::array<Matrix4, 4> b = {
        left_mult_matrix(Quaternion::one()), left_mult_matrix(Quaternion::i()),
        left_mult_matrix(Quaternion::j()), left_mult_matrix(Quaternion::k())};
    return b;
}

void check_block_shape(const Mat& w) {
    if (w.rows() != w.cols() || w.rows() % 4 != 0 || w.rows() == 0) {
        throw std::invalid_argument("weight matrix must be square with dimension divisible by 4, got " +
                                    std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
    }
}

}  // namespace

std::pair<Matrix4, ProjectionCoefficients> project_block(const Matrix4& m) {
    const auto& b = basis();
    ProjectionCoefficients c;
    c.c1 = m.cwiseProduct(b[0]).sum() / 4.0;
    c.ci = m.cwiseProduct(b[1]).sum() / 4.0;
    c.cj = m.cwiseProduct(b[2]).sum() / 4.0;
    c.ck = m.cwiseProduct(b[3]).sum() / 4.0;
    Matrix4 projected = c.c1 * b[0] + c.ci * b[1] + c.cj * b[2] + c.ck * b[3];
    return {projected, c};
}

Mat project_weight_matrix(const Mat& w) {
    check_block_shape(w);
    const Eigen::Index n = w.rows() / 4;
    Mat out(w.rows(), w.cols());
    for (Eigen::Index bi = 0; bi < n; ++bi) {
        for (Eigen::Index bj = 0; bj < n; ++bj) {
            const Matrix4 block = w.block<4, 4>(4 * bi, 4 * bj);
            out.block<4, 4>(4 * bi, 4 * bj) = project_block(block).first;
        }
    }
    return out;
}

double quaternionicity_residual(const Mat& w) {
    return (w - project_weight_matrix(w)).norm();
}

}  // namespace qshnn
