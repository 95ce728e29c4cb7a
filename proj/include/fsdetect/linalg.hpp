#pragma once

#include "fsdetect/model.hpp"

#include <Eigen/Dense>

namespace fsd {

/// Gram matrices with condition number at or above this are rejected.
inline constexpr double kMaxGramCondition = 1e12;

/// Relative eigenvalue cutoff for rank decisions and pseudo-inverses.
inline constexpr double kRankTolerance = 1e-8;

/// (Phi^H Phi)^{-1} of a steering matrix, factored once by eigendecomposition.
class GramInverse {
public:
    /// Throws ConditioningError naming the delays that span the
    /// near-null direction when cond(Phi^H Phi) >= kMaxGramCondition.
    explicit GramInverse(const SteeringMatrix &phi);

    CMatrix solve(const CMatrix &rhs) const;
    CVector solve(const CVector &rhs) const;
    const CMatrix &gram() const { return gram_; }
    CMatrix inverse() const;
    double condition() const { return condition_; }

private:
    CMatrix gram_;
    CMatrix vectors_;
    Eigen::VectorXd inv_values_;
    double condition_ = 0.0;
};

/// Eigen pseudo-inverse of a Hermitian PSD matrix: eigenvalues below
/// rel_tol * max(lambda_max, scale) are dropped. `rank` counts the kept ones.
struct TruncatedEigen {
    Eigen::VectorXd values; // kept eigenvalues
    CMatrix vectors;        // matching eigenvectors (columns)
    int rank = 0;

    CMatrix pseudo_inverse() const;
};
TruncatedEigen truncated_eigen(const CMatrix &hermitian, double rel_tol = kRankTolerance, double scale = 0.0);

/// Numerical rank from singular values: sigma_i >= rel_tol * sigma_max.
int numerical_rank(const CMatrix &m, double rel_tol = kRankTolerance);

} // namespace fsd
