#include "fsdetect/stats.hpp"

#include "fsdetect/error.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace fsd {

namespace {

void check_x(double x) {
    if (!(x >= 0.0) || std::isnan(x)) {
        throw ParameterError("tail probability argument must be non-negative");
    }
}

/// Log Poisson weight ln(e^{-mu} mu^j / j!).
double log_poisson(double mu, double j) {
    if (mu == 0.0) {
        return j == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    }
    return -mu + j * std::log(mu) - std::lgamma(j + 1.0);
}

struct PoissonRange {
    std::size_t lo = 0;
    std::size_t hi = 0;
    double outside = 0.0; // bound on the neglected mass
    bool capped = false;
};

/// Smallest index window around the mode whose complement has mass below eps.
/// Tail masses are bounded geometrically from the last included weight.
PoissonRange poisson_range(double mu, double eps) {
    PoissonRange out;
    if (mu == 0.0) {
        return out;
    }
    const auto mode = static_cast<std::size_t>(std::floor(mu));
    double lower_tail = 0.0;
    std::size_t lo = mode;
    while (lo > 0) {
        const double j = static_cast<double>(lo);
        const double ratio = j / mu; // w_{j-1} / w_j below the mode
        lower_tail = ratio < 1.0 ? std::exp(log_poisson(mu, j)) * ratio / (1.0 - ratio)
                                 : std::numeric_limits<double>::infinity();
        if (lower_tail < eps / 2.0) {
            break;
        }
        --lo;
        if (mode - lo >= kMaxSeriesTerms / 2) {
            out.capped = true;
            break;
        }
    }
    if (lo == 0) {
        lower_tail = 0.0;
    }
    double upper_tail = 0.0;
    std::size_t hi = mode;
    while (true) {
        const double j = static_cast<double>(hi);
        const double ratio = mu / (j + 1.0); // w_{j+1} / w_j above the mode
        upper_tail = ratio < 1.0 ? std::exp(log_poisson(mu, j)) * ratio / (1.0 - ratio)
                                 : std::numeric_limits<double>::infinity();
        if (upper_tail < eps / 2.0) {
            break;
        }
        ++hi;
        if (hi - mode >= kMaxSeriesTerms / 2) {
            out.capped = true;
            break;
        }
    }
    out.lo = lo;
    out.hi = hi;
    out.outside = lower_tail + upper_tail;
    return out;
}

/// Central chi-square tail for dof in (0, 2].
double central_base(double dof, double half_x) {
    if (dof == 2.0) {
        return std::exp(-half_x);
    }
    if (dof == 1.0) {
        return std::erfc(std::sqrt(half_x));
    }
    return boost::math::gamma_q(dof / 2.0, half_x);
}

} // namespace

TailProbability noncentral_chi2_sf(double x, const ChiSqParams &p) {
    check_x(x);
    if (!(p.dof > 0.0) || !(p.delta >= 0.0) || !std::isfinite(p.delta)) {
        throw ParameterError("chi-square needs dof > 0 and delta >= 0");
    }
    TailProbability out;
    if (x == 0.0) {
        out.value = 1.0;
        return out;
    }
    if (std::isinf(x)) {
        out.value = 0.0;
        return out;
    }

    const double half_x = x / 2.0;
    const double log_half_x = std::log(half_x);
    const double mu = p.delta / 2.0;

    // walk the central tail from a base dof in (0, 2] up to p.dof
    const double steps = std::max(0.0, std::ceil(p.dof / 2.0) - 1.0);
    double k = p.dof - 2.0 * steps;
    double q = central_base(k, half_x);
    auto advance = [&]() {
        // Q_{k+2} = Q_k + exp((k/2) ln(x/2) - x/2 - lgamma(k/2 + 1))
        q += std::exp(0.5 * k * log_half_x - half_x - std::lgamma(0.5 * k + 1.0));
        k += 2.0;
    };
    for (double s = 0; s < steps; s += 1.0) {
        advance();
    }

    if (mu == 0.0) {
        out.value = std::clamp(q, 0.0, 1.0);
        out.terms = 1;
        return out;
    }

    double sum = 0.0;
    const double log_mu = std::log(mu);
    double log_w = -mu; // j = 0
    std::size_t j = 0;
    for (;; ++j) {
        sum += std::exp(log_w) * q;
        const double jd = static_cast<double>(j);
        if (jd > mu) {
            const double ratio = mu / (jd + 1.0);
            const double tail = std::exp(log_w) * ratio / (1.0 - ratio);
            if (tail < kTailTruncation / 10.0) {
                out.error_bound = tail;
                break;
            }
        }
        if (j >= kMaxSeriesTerms + static_cast<std::size_t>(mu)) {
            out.precision_warning = true;
            out.error_bound = 1.0 - std::min(1.0, sum);
            break;
        }
        log_w += log_mu - std::log(jd + 1.0);
        advance();
    }
    out.terms = j + 1;
    out.value = std::clamp(sum, 0.0, 1.0);
    return out;
}

TailProbability doubly_noncentral_f_sf(double x, const DncFParams &p) {
    check_x(x);
    if (!(p.v > 0.0) || !(p.r > 0.0) || !(p.delta >= 0.0) || !(p.lambda >= 0.0) || !std::isfinite(p.delta) ||
        !std::isfinite(p.lambda)) {
        throw ParameterError("doubly noncentral F needs v, r > 0 and delta, lambda >= 0");
    }
    TailProbability out;
    if (x == 0.0) {
        out.value = 1.0;
        return out;
    }
    if (std::isinf(x)) {
        out.value = 0.0;
        return out;
    }

    // F > x  <=>  Beta(r/2 + k, v/2 + j) evaluated at z = r / (r + v x) ...
    // SF = sum_j sum_k w_j(delta/2) w_k(lambda/2) I_z(r/2 + k, v/2 + j)
    const double z = p.r / (p.r + p.v * x);
    const double one_minus_z = p.v * x / (p.r + p.v * x);
    const double log_z = std::log(z);
    const double log_1mz = std::log(one_minus_z);

    const PoissonRange jr = poisson_range(p.delta / 2.0, kTailTruncation);
    const PoissonRange kr = poisson_range(p.lambda / 2.0, kTailTruncation);
    out.precision_warning = jr.capped || kr.capped;
    out.error_bound = jr.outside + kr.outside;

    const double a_hi = p.r / 2.0 + static_cast<double>(kr.hi);
    double b = p.v / 2.0 + static_cast<double>(jr.lo);
    // I_z(a_hi, b) along increasing b: I_z(a, b+1) = I_z(a, b) + z^a (1-z)^b / (b B(a, b))
    double column_base = boost::math::ibeta(a_hi, b, z);

    double sum = 0.0;
    for (std::size_t j = jr.lo;; ++j) {
        const double wj = std::exp(log_poisson(p.delta / 2.0, static_cast<double>(j)));
        // I_z(a-1, b) = I_z(a, b) + z^{a-1} (1-z)^b / ((a-1) B(a-1, b))
        double ib = column_base;
        double a = a_hi;
        double inner = std::exp(log_poisson(p.lambda / 2.0, static_cast<double>(kr.hi))) * ib;
        for (std::size_t k = kr.hi; k > kr.lo; --k) {
            const double am1 = a - 1.0;
            const double log_term = am1 * log_z + b * log_1mz - std::log(am1) -
                                    (std::lgamma(am1) + std::lgamma(b) - std::lgamma(am1 + b));
            ib += std::exp(log_term);
            a = am1;
            inner += std::exp(log_poisson(p.lambda / 2.0, static_cast<double>(k - 1))) * ib;
        }
        sum += wj * inner;
        out.terms += kr.hi - kr.lo + 1;
        if (j == jr.hi) {
            break;
        }
        const double log_step = a_hi * log_z + b * log_1mz - std::log(b) -
                                (std::lgamma(a_hi) + std::lgamma(b) - std::lgamma(a_hi + b));
        column_base += std::exp(log_step);
        b += 1.0;
    }
    out.value = std::clamp(sum, 0.0, 1.0);
    return out;
}

TailProbability survival(double x, const Distribution &dist) {
    return std::visit(
        [x](const auto &d) -> TailProbability {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, ChiSqParams>) {
                return noncentral_chi2_sf(x, d);
            } else {
                return doubly_noncentral_f_sf(x, d);
            }
        },
        dist);
}

double threshold_for_pfa(double pfa, const Distribution &dist) {
    if (!(pfa > 0.0) || !(pfa < 1.0)) {
        throw ParameterError("false-alarm probability must lie in (0, 1)");
    }
    double lo = 0.0;
    double hi = 1.0;
    while (survival(hi, dist).value > pfa) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) {
            throw ParameterError("could not bracket the threshold");
        }
    }
    double mid = 0.5 * (lo + hi);
    for (int iter = 0; iter < 400; ++iter) {
        mid = 0.5 * (lo + hi);
        const double sf = survival(mid, dist).value;
        if (std::abs(sf - pfa) <= 1e-13 * pfa) {
            break;
        }
        if (sf > pfa) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
            break;
        }
    }
    return mid;
}

double pd_theoretical(double eta, const Distribution &dist_h1) {
    return survival(eta, dist_h1).value;
}

double signal_noncentrality(const GlrtDetector &det, const CVector &mean, double noise_power) {
    if (!(noise_power > 0.0)) {
        throw ParameterError("noncentrality needs a positive noise power");
    }
    return det.signal_energy(mean) / (static_cast<double>(det.fft_size()) * noise_power);
}

double residual_noncentrality(const GlrtDetector &det, const CVector &mean, double noise_power) {
    if (!(noise_power > 0.0)) {
        throw ParameterError("noncentrality needs a positive noise power");
    }
    return det.residual_energy(mean) / (static_cast<double>(det.fft_size()) * noise_power);
}

namespace {

std::pair<CVector, CVector> hypothesis_means(const SteeringMatrix &phi_d, const SteeringMatrix &phi_s,
                                             const CVector &a, const CVector &b) {
    if (static_cast<std::size_t>(a.size()) != phi_d.cols()) {
        throw ParameterError("direct amplitudes do not match Phi_d");
    }
    CVector mean0 = phi_d.columns * a;
    CVector mean1 = mean0;
    if (b.size() > 0) {
        if (static_cast<std::size_t>(b.size()) != phi_s.cols()) {
            throw ParameterError("scattered amplitudes do not match Phi_s");
        }
        mean1 += phi_s.columns * b;
    }
    return {std::move(mean0), std::move(mean1)};
}

} // namespace

Noncentralities noncentrality_chi2(const SteeringMatrix &phi_d, const SteeringMatrix &phi_s, const CVector &a,
                                   const CVector &b, double noise_power) {
    const GlrtDetector det(phi_d, phi_s);
    const auto [m0, m1] = hypothesis_means(phi_d, phi_s, a, b);
    return {signal_noncentrality(det, m0, noise_power), signal_noncentrality(det, m1, noise_power)};
}

Noncentralities noncentrality_denominator(const SteeringMatrix &phi_d, const SteeringMatrix &phi_s,
                                          const CVector &a, const CVector &b, double noise_power) {
    const GlrtDetector det(phi_d, phi_s);
    const auto [m0, m1] = hypothesis_means(phi_d, phi_s, a, b);
    return {residual_noncentrality(det, m0, noise_power), residual_noncentrality(det, m1, noise_power)};
}

Distribution statistic_law(StatisticKind kind, int v, int r, double delta, double lambda) {
    if (v < 1 || (kind == StatisticKind::unknown_noise && r < 1)) {
        throw ParameterError("degrees of freedom must be positive");
    }
    if (kind == StatisticKind::known_noise) {
        return ChiSqParams{2.0 * v, 2.0 * delta};
    }
    return DncFParams{2.0 * v, 2.0 * r, 2.0 * delta, 2.0 * lambda};
}

double statistic_scale(StatisticKind kind) {
    return kind == StatisticKind::known_noise ? 2.0 : 1.0;
}

double statistic_threshold(StatisticKind kind, int v, int r, double pfa) {
    return threshold_for_pfa(pfa, statistic_law(kind, v, r, 0.0, 0.0)) / statistic_scale(kind);
}

double statistic_tail(StatisticKind kind, int v, int r, double delta, double lambda, double threshold) {
    return survival(statistic_scale(kind) * threshold, statistic_law(kind, v, r, delta, lambda)).value;
}

} // namespace fsd
