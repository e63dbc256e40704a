#pragma once

#include "qshnn/quaternion.hpp"
#include "qshnn/types.hpp"

#include <utility>

namespace qshnn {

/// Coordinates of a projected 4x4 block in the orthogonal basis
/// {L(1), L(i), L(j), L(k)}. The reconstructed block
/// c1*L(1) + ci*L(i) + cj*L(j) + ck*L(k) always lies on the
/// left-multiplication manifold, i.e. it equals L(c1 + ci i + cj j + ck k).
struct ProjectionCoefficients {
    double c1 = 0.0;
    double ci = 0.0;
    double cj = 0.0;
    double ck = 0.0;

    Quaternion as_quaternion() const { return {c1, ci, cj, ck}; }
};

/// Frobenius-orthogonal projection of M onto span{L(1), L(i), L(j), L(k)}:
/// coefficients c_mu = <M, L(mu)>_F / 4, since the basis is orthogonal with
/// ||L(mu)||_F = 2. The returned matrix is the Frobenius-closest
/// left-multiplication matrix to M.
std::pair<Matrix4, ProjectionCoefficients> project_block(const Matrix4& m);

/// Block-wise projection of a 4n x 4n weight matrix: every 4x4 block
/// (rows 4i..4i+3, cols 4j..4j+3) is replaced by its project_block image,
/// traversed row-major over (i, j). Throws std::invalid_argument unless the
/// matrix is square with dimension divisible by 4.
Mat project_weight_matrix(const Mat& w);

/// ||W - project_weight_matrix(W)||_F. Zero exactly when every block already
/// lies on the manifold; used as the structure-preservation metric.
double quaternionicity_residual(const Mat& w);

}  // namespace qshnn
