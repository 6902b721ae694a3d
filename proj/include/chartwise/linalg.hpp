#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>

namespace chartwise {

/// Smallest singular value of a rows x cols matrix (rows <= cols) with its
/// left/right singular vectors. When singular values tie, the pair Eigen
/// lists last is returned.
struct SingularTriple {
    double sigma = 0.0;
    Eigen::VectorXd left;
    Eigen::VectorXd right;
};

inline SingularTriple smallest_singular(const Eigen::MatrixXd& a) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::Index last = svd.singularValues().size() - 1;
    SingularTriple out;
    out.sigma = svd.singularValues()(last);
    out.left = svd.matrixU().col(last);
    out.right = svd.matrixV().col(last);
    // A wide matrix has a nontrivial kernel; its thin SVD only reports
    // min(rows, cols) values, which is what the rank test needs.
    return out;
}

inline double smallest_singular_value(const Eigen::MatrixXd& a) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    return svd.singularValues().size() ? svd.singularValues().minCoeff() : 0.0;
}

/// Spectral norm (largest singular value).
inline double operator_norm(const Eigen::MatrixXd& a) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    return svd.singularValues().size() ? svd.singularValues().maxCoeff() : 0.0;
}

inline int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

} // namespace chartwise
