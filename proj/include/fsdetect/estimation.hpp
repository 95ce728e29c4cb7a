#pragma once

// Path-amplitude, delay and noise-power estimation.

#include "fsdetect/linalg.hpp"
#include "fsdetect/model.hpp"

#include <utility>
#include <vector>

namespace fsd {

struct WrelaxConfig {
    std::size_t max_paths = 1;
    double convergence_tol = 1e-6;      // relative change of residual energy between sweeps
    std::size_t max_inner_iters = 50;   // sweeps per stage
    double refine_resolution = 1e-2;    // delay refinement step, in sample periods

    void validate() const;
};

struct WrelaxResult {
    PathSet paths;                             // sorted by delay
    std::vector<double> stage_residual_energy; // ||X - sum a phi||^2 after each stage
    bool converged = true;                     // false: some stage hit max_inner_iters
    std::size_t sweeps = 0;
};

struct JointEstimate {
    CVector a_hat;
    CVector b_hat;
    CMatrix k_matrix; // regularized [Phi_s^H P_d_perp Phi_s]^+
    int schur_rank = 0;
};

struct BlockInverse {
    CMatrix top_left;
    CMatrix top_right;
    CMatrix bottom_left;
    CMatrix bottom_right; // K = (F - E A^{-1} B)^{-1}
};

struct DelayPartition {
    std::vector<double> direct;
    std::vector<double> scattered;
};

/// a0 = (Phi_d^H Phi_d)^{-1} Phi_d^H X.
CVector estimate_amplitudes_h0(const Spectrum &x, const SteeringMatrix &phi_d);

/// Partitioned inverse of [A B; E F] through the Schur complement of A.
/// Throws SingularityError when A or F - E A^{-1} B is singular.
BlockInverse block_inverse(const CMatrix &a, const CMatrix &b, const CMatrix &e, const CMatrix &f);

/// Joint least-squares amplitudes under H1, updating a0 through the
/// (pseudo-)inverted Schur complement K.
JointEstimate estimate_joint_h1(const Spectrum &x, const SteeringMatrix &phi_d, const SteeringMatrix &phi_s);

/// Weighted Fourier transform and RELAXation delay/amplitude estimation of
/// cfg.max_paths paths of the transmit spectrum `s` in `x`.
WrelaxResult wrelax(const Spectrum &x, const Spectrum &s, const WrelaxConfig &cfg);

/// Greedy nearest-neighbour split of 2M joint estimates against M reference
/// delays. Reference delays are visited in order; each claims the nearest
/// unclaimed estimate (ties: lower index). Unclaimed estimates become the
/// scattered delays, sorted ascending.
DelayPartition partition_delays(std::span<const double> joint, std::span<const double> reference);

/// sigma0^2 = ||X - Phi_d a||^2 / N^2.
double estimate_noise_h0(const Spectrum &x, const SteeringMatrix &phi_d, const CVector &a_hat);

/// sigma1^2 = ||X - Phi_d a - Phi_s b||^2 / N^2.
double estimate_noise_h1(const Spectrum &x, const SteeringMatrix &phi_d, const SteeringMatrix &phi_s,
                         const CVector &a_hat, const CVector &b_hat);

} // namespace fsd
