#include "fsdetect/estimation.hpp"

#include "fsdetect/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fsd {

void WrelaxConfig::validate() const {
    if (max_paths < 1) {
        throw ParameterError("WRELAX needs at least one path");
    }
    if (!(convergence_tol > 0.0)) {
        throw ParameterError("WRELAX convergence tolerance must be positive");
    }
    if (max_inner_iters < 1) {
        throw ParameterError("WRELAX needs at least one sweep per stage");
    }
    if (!(refine_resolution > 0.0) || refine_resolution > 1.0) {
        throw ParameterError("WRELAX refine resolution must lie in (0, 1] samples");
    }
}

CVector estimate_amplitudes_h0(const Spectrum &x, const SteeringMatrix &phi_d) {
    if (x.fft_size() != phi_d.rows()) {
        throw ParameterError("spectrum and steering matrix lengths differ");
    }
    const GramInverse gram(phi_d);
    return gram.solve(CVector(phi_d.columns.adjoint() * x.bins));
}

BlockInverse block_inverse(const CMatrix &a, const CMatrix &b, const CMatrix &e, const CMatrix &f) {
    if (a.rows() != a.cols() || f.rows() != f.cols() || b.rows() != a.rows() || b.cols() != f.cols() ||
        e.rows() != f.rows() || e.cols() != a.cols()) {
        throw ParameterError("block dimensions do not form a partitioned square matrix");
    }
    Eigen::FullPivLU<CMatrix> a_lu(a);
    if (!a_lu.isInvertible()) {
        throw SingularityError("leading block A is singular");
    }
    const CMatrix a_inv = a_lu.inverse();
    const CMatrix schur = f - e * a_inv * b;
    Eigen::FullPivLU<CMatrix> s_lu(schur);
    if (!s_lu.isInvertible()) {
        throw SingularityError("Schur complement F - E A^-1 B is singular");
    }
    BlockInverse out;
    out.bottom_right = s_lu.inverse();
    const CMatrix a_inv_b = a_inv * b;
    const CMatrix e_a_inv = e * a_inv;
    out.top_left = a_inv + a_inv_b * out.bottom_right * e_a_inv;
    out.top_right = -a_inv_b * out.bottom_right;
    out.bottom_left = -out.bottom_right * e_a_inv;
    return out;
}

JointEstimate estimate_joint_h1(const Spectrum &x, const SteeringMatrix &phi_d, const SteeringMatrix &phi_s) {
    if (x.fft_size() != phi_d.rows() || x.fft_size() != phi_s.rows()) {
        throw ParameterError("spectrum and steering matrix lengths differ");
    }
    const GramInverse gram(phi_d);
    const CVector a0 = gram.solve(CVector(phi_d.columns.adjoint() * x.bins));
    const CVector residual = x.bins - phi_d.columns * a0; // P_d_perp X

    const CMatrix cross = phi_d.columns.adjoint() * phi_s.columns; // Phi_d^H Phi_s
    const CMatrix gram_inv_cross = gram.solve(cross);
    const CMatrix gram_s = phi_s.columns.adjoint() * phi_s.columns;
    const CMatrix schur = gram_s - cross.adjoint() * gram_inv_cross;
    const TruncatedEigen te = truncated_eigen(schur, kRankTolerance, gram_s.diagonal().real().maxCoeff());
    if (te.rank == 0) {
        throw DegenerateError("scattered steering columns lie inside the direct-blast subspace");
    }

    JointEstimate out;
    out.k_matrix = te.pseudo_inverse();
    out.schur_rank = te.rank;
    out.b_hat = out.k_matrix * (phi_s.columns.adjoint() * residual);
    out.a_hat = a0 - gram_inv_cross * out.b_hat;
    return out;
}

DelayPartition partition_delays(std::span<const double> joint, std::span<const double> reference) {
    if (joint.size() < reference.size()) {
        throw ParameterError("fewer joint delay estimates than reference delays");
    }
    std::vector<bool> claimed(joint.size(), false);
    DelayPartition out;
    for (double ref : reference) {
        std::size_t best = joint.size();
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < joint.size(); ++i) {
            if (claimed[i]) {
                continue;
            }
            const double dist = std::abs(joint[i] - ref);
            if (dist < best_dist) {
                best_dist = dist;
                best = i;
            }
        }
        claimed[best] = true;
        out.direct.push_back(joint[best]);
    }
    for (std::size_t i = 0; i < joint.size(); ++i) {
        if (!claimed[i]) {
            out.scattered.push_back(joint[i]);
        }
    }
    std::sort(out.scattered.begin(), out.scattered.end());
    return out;
}

double estimate_noise_h0(const Spectrum &x, const SteeringMatrix &phi_d, const CVector &a_hat) {
    const double n = static_cast<double>(x.fft_size());
    return (x.bins - phi_d.columns * a_hat).squaredNorm() / (n * n);
}

double estimate_noise_h1(const Spectrum &x, const SteeringMatrix &phi_d, const SteeringMatrix &phi_s,
                         const CVector &a_hat, const CVector &b_hat) {
    const double n = static_cast<double>(x.fft_size());
    return (x.bins - phi_d.columns * a_hat - phi_s.columns * b_hat).squaredNorm() / (n * n);
}

} // namespace fsd
