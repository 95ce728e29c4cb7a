#include "fsdetect/detection.hpp"

#include "fsdetect/error.hpp"

#include <cmath>

namespace fsd {

std::string to_string(StatisticKind kind) {
    return kind == StatisticKind::known_noise ? "t0" : "t1";
}

StatisticKind statistic_kind_from_string(const std::string &name) {
    if (name == "t0" || name == "known") {
        return StatisticKind::known_noise;
    }
    if (name == "t1" || name == "t1prime" || name == "unknown") {
        return StatisticKind::unknown_noise;
    }
    throw ConfigError("unknown detector '" + name + "' (expected t0 or t1)");
}

GlrtDetector::GlrtDetector(SteeringMatrix phi_d, SteeringMatrix phi_s)
    : phi_d_(std::move(phi_d)), phi_s_(std::move(phi_s)), gram_(phi_d_) {
    if (phi_d_.rows() != phi_s_.rows()) {
        throw ParameterError("direct and scattered steering matrices have different lengths");
    }
    const CMatrix cross = phi_d_.columns.adjoint() * phi_s_.columns;
    const CMatrix gram_s = phi_s_.columns.adjoint() * phi_s_.columns;
    schur_matrix_ = gram_s - cross.adjoint() * gram_.solve(cross);
    schur_matrix_ = 0.5 * (schur_matrix_ + schur_matrix_.adjoint());
    schur_ = truncated_eigen(schur_matrix_, kRankTolerance, gram_s.diagonal().real().maxCoeff());
    if (schur_.rank == 0) {
        throw DegenerateError("scattered steering columns lie inside the direct-blast subspace");
    }
    whitener_ = schur_.values.cwiseSqrt().cwiseInverse().asDiagonal() * schur_.vectors.adjoint() *
                phi_s_.columns.adjoint();
    dof_r_ = static_cast<int>(phi_d_.rows()) - numerical_rank(phi_d_.columns);
}

CVector GlrtDetector::null_blast(const CVector &x) const {
    return x - phi_d_.columns * gram_.solve(CVector(phi_d_.columns.adjoint() * x));
}

double GlrtDetector::signal_energy(const CVector &x) const {
    return (whitener_ * null_blast(x)).squaredNorm();
}

double GlrtDetector::signal_energy_direct(const CVector &x) const {
    const CVector z = phi_s_.columns.adjoint() * null_blast(x);
    return std::real(z.dot(schur_.pseudo_inverse() * z));
}

double GlrtDetector::residual_energy(const CVector &x) const {
    return null_blast(x).squaredNorm();
}

Statistic GlrtDetector::known_noise(const CVector &x, double noise_power) const {
    if (!(noise_power > 0.0)) {
        throw ParameterError("known-noise statistic needs a positive noise power");
    }
    Statistic s;
    s.kind = StatisticKind::known_noise;
    s.dof_v = dof_v();
    s.dof_r = dof_r();
    s.value = signal_energy(x) / (static_cast<double>(fft_size()) * noise_power);
    return s;
}

Statistic GlrtDetector::unknown_noise(const CVector &x) const {
    const CVector p = null_blast(x);
    const double denom = p.squaredNorm();
    const double scale = x.squaredNorm();
    if (!(denom > 1e-24 * scale) || !(denom > 0.0)) {
        throw DegenerateError("X lies in the direct-blast subspace; unknown-noise statistic undefined");
    }
    const double numer = (whitener_ * p).squaredNorm();
    Statistic s;
    s.kind = StatisticKind::unknown_noise;
    s.dof_v = dof_v();
    s.dof_r = dof_r();
    s.value = (numer / s.dof_v) / (denom / s.dof_r);
    return s;
}

Projector blast_projector(const SteeringMatrix &phi_d) {
    const GramInverse gram(phi_d);
    const auto n = phi_d.columns.rows();
    Projector p;
    p.source_delays = phi_d.delays;
    p.matrix = CMatrix::Identity(n, n) - phi_d.columns * gram.solve(CMatrix(phi_d.columns.adjoint()));
    return p;
}

Statistic statistic_known_noise(const Spectrum &x, const SteeringMatrix &phi_d, const SteeringMatrix &phi_s,
                                double noise_power) {
    if (!(noise_power > 0.0)) {
        throw ParameterError("known-noise statistic needs a positive noise power");
    }
    return GlrtDetector(phi_d, phi_s).known_noise(x.bins, noise_power);
}

Statistic statistic_unknown_noise(const Spectrum &x, const SteeringMatrix &phi_d, const SteeringMatrix &phi_s) {
    return GlrtDetector(phi_d, phi_s).unknown_noise(x.bins);
}

Hypothesis decide(const Statistic &stat, double threshold) {
    if (!std::isfinite(threshold)) {
        throw ParameterError("decision threshold must be finite");
    }
    return stat.value > threshold ? Hypothesis::H1 : Hypothesis::H0;
}

} // namespace fsd
