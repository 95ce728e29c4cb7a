#pragma once

// Tail probabilities of the GLRT statistics.
//
// All distributions here use the real-valued convention: a sum of v complex
// unit-variance squared magnitudes equals half a chi-square with 2v real
// degrees of freedom. ChiSqParams/DncFParams carry real dof and real
// noncentralities; the statistic_* helpers map the complex counts (v, r) and
// noncentralities (delta, lambda) reported by the detectors onto them.

#include "fsdetect/detection.hpp"

#include <cstddef>
#include <variant>

namespace fsd {

struct ChiSqParams {
    double dof = 1.0;   // real degrees of freedom
    double delta = 0.0; // real noncentrality
};

/// F = (chi2_v(delta) / v) / (chi2_r(lambda) / r), real dof.
struct DncFParams {
    double v = 1.0;
    double r = 1.0;
    double delta = 0.0;
    double lambda = 0.0;
};

using Distribution = std::variant<ChiSqParams, DncFParams>;

struct TailProbability {
    double value = 0.0;
    double error_bound = 0.0;       // truncation bound of the Poisson mixture
    bool precision_warning = false; // term budget exhausted before the bound was met
    std::size_t terms = 0;
};

/// Series stop once the neglected Poisson mass is below this.
inline constexpr double kTailTruncation = 1e-14;
/// Per-dimension cap on Poisson mixture terms.
inline constexpr std::size_t kMaxSeriesTerms = 100000;

/// Right tail of the noncentral chi-square: Poisson(delta/2) mixture of
/// central tails, the central tails built by the upward recursion
/// Q_{k+2}(x) = Q_k(x) + (x/2)^{k/2} e^{-x/2} / Gamma(k/2 + 1).
TailProbability noncentral_chi2_sf(double x, const ChiSqParams &p);

/// Right tail of the doubly noncentral F: double Poisson mixture over
/// regularized incomplete beta functions, each reached by additive
/// recurrences from a single incomplete-beta evaluation.
TailProbability doubly_noncentral_f_sf(double x, const DncFParams &p);

TailProbability survival(double x, const Distribution &dist);

/// eta with SF(eta) = pfa, by bracketing bisection.
double threshold_for_pfa(double pfa, const Distribution &dist);

/// SF of the H1 distribution at eta.
double pd_theoretical(double eta, const Distribution &dist_h1);

struct Noncentralities {
    double h0 = 0.0;
    double h1 = 0.0;
};

/// delta_{0,1} = mu^H P Phi_s [Phi_s^H P Phi_s]^{-1} Phi_s^H P mu / (N sigma^2)
/// with mu = Phi_d a (H0) and Phi_d a + Phi_s b (H1). Complex convention.
/// An empty b means no target (delta1 = delta0).
Noncentralities noncentrality_chi2(const SteeringMatrix &phi_d, const SteeringMatrix &phi_s, const CVector &a,
                                   const CVector &b, double noise_power);

/// lambda_{0,1} = mu^H P mu / (N sigma^2), same means as above.
Noncentralities noncentrality_denominator(const SteeringMatrix &phi_d, const SteeringMatrix &phi_s,
                                          const CVector &a, const CVector &b, double noise_power);

/// Noncentralities of arbitrary mean spectra against a detector's subspaces.
/// Used when the detector runs on estimated delays but the truth is known.
double signal_noncentrality(const GlrtDetector &det, const CVector &mean, double noise_power);
double residual_noncentrality(const GlrtDetector &det, const CVector &mean, double noise_power);

/// Law of `scale * statistic` for a detector with complex dof (v, r) and
/// complex noncentralities (delta, lambda).
Distribution statistic_law(StatisticKind kind, int v, int r, double delta, double lambda);

/// 2 for T0 (2 T0 ~ chi2_{2v}), 1 for T1' (T1' ~ F(2v, 2r)).
double statistic_scale(StatisticKind kind);

/// Threshold on the statistic's own scale for a target false-alarm rate,
/// assuming perfect blast nulling (delta0 = lambda0 = 0).
double statistic_threshold(StatisticKind kind, int v, int r, double pfa);

/// P(statistic > threshold) under the given noncentralities.
double statistic_tail(StatisticKind kind, int v, int r, double delta, double lambda, double threshold);

} // namespace fsd
