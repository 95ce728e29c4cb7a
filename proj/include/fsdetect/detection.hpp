#pragma once

// GLRT statistics for a target in the subspace of Phi_s after nulling the
// direct-blast subspace of Phi_d.
//
//   T0  = X^H P Phi_s [Phi_s^H P Phi_s]^{-1} Phi_s^H P X / (N sigma^2)
//   T1' = (M(X) / v) / (D(X) / r),  M(X) = N sigma^2 T0,  D(X) = X^H P X
//
// with P = I - Phi_d (Phi_d^H Phi_d)^{-1} Phi_d^H. v and r are complex
// degrees of freedom: v = rank(Phi_s^H P Phi_s), r = N - rank(Phi_d).

#include "fsdetect/channel.hpp"
#include "fsdetect/linalg.hpp"
#include "fsdetect/model.hpp"

#include <optional>
#include <string>

namespace fsd {

/// Explicit N x N blast-nulling projector. Only for analysis and tests;
/// the detectors apply P without forming it.
struct Projector {
    CMatrix matrix;
    std::vector<double> source_delays;
};

enum class StatisticKind { known_noise, unknown_noise };

std::string to_string(StatisticKind kind);
StatisticKind statistic_kind_from_string(const std::string &name);

struct Statistic {
    double value = 0.0;
    StatisticKind kind = StatisticKind::known_noise;
    int dof_v = 0; // complex numerator dof
    int dof_r = 0; // complex denominator dof
};

/// Precomputed blast subspace and signal subspace for a fixed delay pair.
/// Evaluating a pulse costs O(N (M + K)).
class GlrtDetector {
public:
    GlrtDetector(SteeringMatrix phi_d, SteeringMatrix phi_s);

    /// P X computed as X - Phi_d (Phi_d^H Phi_d)^{-1} Phi_d^H X.
    CVector null_blast(const CVector &x) const;

    /// M(X) through the eigen form ||Lambda^{-1/2} U^H Phi_s^H P X||^2.
    double signal_energy(const CVector &x) const;

    /// Same quadratic form from the explicit inverse of Phi_s^H P Phi_s.
    double signal_energy_direct(const CVector &x) const;

    /// D(X) = X^H P X.
    double residual_energy(const CVector &x) const;

    Statistic known_noise(const CVector &x, double noise_power) const;
    Statistic unknown_noise(const CVector &x) const;

    int dof_v() const { return schur_.rank; }
    int dof_r() const { return dof_r_; }
    std::size_t fft_size() const { return phi_d_.rows(); }
    const SteeringMatrix &phi_d() const { return phi_d_; }
    const SteeringMatrix &phi_s() const { return phi_s_; }

private:
    SteeringMatrix phi_d_;
    SteeringMatrix phi_s_;
    GramInverse gram_;
    CMatrix schur_matrix_; // Phi_s^H P Phi_s
    TruncatedEigen schur_;
    CMatrix whitener_;     // Lambda^{-1/2} U^H Phi_s^H
    int dof_r_ = 0;
};

Projector blast_projector(const SteeringMatrix &phi_d);

Statistic statistic_known_noise(const Spectrum &x, const SteeringMatrix &phi_d, const SteeringMatrix &phi_s,
                                double noise_power);
Statistic statistic_unknown_noise(const Spectrum &x, const SteeringMatrix &phi_d, const SteeringMatrix &phi_s);

/// H1 iff value > threshold.
Hypothesis decide(const Statistic &stat, double threshold);

} // namespace fsd
