#include "fsdetect/linalg.hpp"

#include "fsdetect/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fsd {

GramInverse::GramInverse(const SteeringMatrix &phi) : gram_(phi.columns.adjoint() * phi.columns) {
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram_);
    const Eigen::VectorXd &values = eig.eigenvalues(); // ascending
    const double lo = values(0);
    const double hi = values(values.size() - 1);
    condition_ = (lo > 0.0) ? hi / lo : std::numeric_limits<double>::infinity();

    if (!(hi > 0.0) || !(condition_ < kMaxGramCondition)) {
        std::ostringstream msg;
        msg << "steering Gram matrix is ill-conditioned (cond " << condition_ << "); near-collinear delays:";
        const auto weak = eig.eigenvectors().col(0);
        for (Eigen::Index i = 0; i < weak.size(); ++i) {
            if (std::abs(weak(i)) > 0.3) {
                msg << ' ' << phi.delays[static_cast<std::size_t>(i)];
            }
        }
        throw ConditioningError(msg.str());
    }
    vectors_ = eig.eigenvectors();
    inv_values_ = values.cwiseInverse();
}

CMatrix GramInverse::solve(const CMatrix &rhs) const {
    return vectors_ * (inv_values_.asDiagonal() * (vectors_.adjoint() * rhs));
}

CVector GramInverse::solve(const CVector &rhs) const {
    return vectors_ * (inv_values_.asDiagonal() * (vectors_.adjoint() * rhs));
}

CMatrix GramInverse::inverse() const {
    return vectors_ * inv_values_.asDiagonal() * vectors_.adjoint();
}

CMatrix TruncatedEigen::pseudo_inverse() const {
    return vectors * values.cwiseInverse().asDiagonal() * vectors.adjoint();
}

TruncatedEigen truncated_eigen(const CMatrix &hermitian, double rel_tol, double scale) {
    const CMatrix sym = 0.5 * (hermitian + hermitian.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(sym);
    const Eigen::VectorXd &values = eig.eigenvalues();
    TruncatedEigen out;
    const double top = std::max(values.size() > 0 ? values(values.size() - 1) : 0.0, scale);
    if (!(top > 0.0)) {
        out.vectors.resize(sym.rows(), 0);
        return out;
    }
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values(i) >= rel_tol * top) {
            keep.push_back(i);
        }
    }
    out.rank = static_cast<int>(keep.size());
    out.values.resize(out.rank);
    out.vectors.resize(sym.rows(), out.rank);
    for (int k = 0; k < out.rank; ++k) {
        out.values(k) = values(keep[static_cast<std::size_t>(k)]);
        out.vectors.col(k) = eig.eigenvectors().col(keep[static_cast<std::size_t>(k)]);
    }
    return out;
}

int numerical_rank(const CMatrix &m, double rel_tol) {
    if (m.size() == 0) {
        return 0;
    }
    Eigen::JacobiSVD<CMatrix> svd(m);
    const auto &s = svd.singularValues();
    if (!(s(0) > 0.0)) {
        return 0;
    }
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) >= rel_tol * s(0)) {
            ++rank;
        }
    }
    return rank;
}

} // namespace fsd
