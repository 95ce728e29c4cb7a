#include "fsdetect/error.hpp"
#include "fsdetect/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fsd {

namespace {

struct SinglePath {
    cd amplitude;
    double delay = 0.0; // s
};

/// Matched-filter search for one path in `target`:
/// maximize |phi(tau)^H target| over tau, then a = phi(tau)^H target / ||S||^2.
class PathSearch {
public:
    PathSearch(const Spectrum &s, double refine_resolution)
        : s_(s), n_(s.fft_size()), energy_(s.bins.squaredNorm()), refine_(refine_resolution) {}

    SinglePath search(const CVector &target, std::span<const double> excluded) const {
        const auto nn = static_cast<Eigen::Index>(n_);
        std::vector<cd> weighted(n_);
        for (Eigen::Index k = 0; k < nn; ++k) {
            weighted[static_cast<std::size_t>(k)] = std::conj(s_.bins(k)) * target(k);
        }
        // correlation at integer-sample delays: c[k] = sum_n y[n] exp(+j 2 pi n k / N)
        const auto coarse = dft_backward(weighted, n_);

        std::size_t best = 0;
        double best_mag = -1.0;
        for (std::size_t k = 0; k < n_; ++k) {
            if (is_excluded(static_cast<double>(k), excluded)) {
                continue;
            }
            const double mag = std::norm(coarse[k]);
            if (mag > best_mag) {
                best_mag = mag;
                best = k;
            }
        }

        // parabolic interpolation on the coarse peak, then Newton polishing
        // of d|c(t)|^2/dt = 0 until the step drops below the resolution
        const double ym = std::abs(coarse[(best + n_ - 1) % n_]);
        const double y0 = std::abs(coarse[best]);
        const double yp = std::abs(coarse[(best + 1) % n_]);
        double t = static_cast<double>(best);
        const double denom = ym - 2.0 * y0 + yp;
        if (denom < 0.0) {
            t += std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5);
        }

        const auto wv = std::span<const cd>(weighted);
        double best_t = static_cast<double>(best);
        double best_val = best_mag;
        for (int iter = 0; iter < 30; ++iter) {
            const Derivs d = evaluate(wv, t);
            if (d.value > best_val) {
                best_val = d.value;
                best_t = t;
            }
            if (!(d.second < 0.0)) {
                break;
            }
            const double step = std::clamp(-d.first / d.second, -0.5, 0.5);
            t += step;
            if (std::abs(step) < refine_) {
                const Derivs last = evaluate(wv, t);
                if (last.value > best_val) {
                    best_val = last.value;
                    best_t = t;
                }
                break;
            }
        }

        const double frame = static_cast<double>(n_);
        best_t = std::fmod(best_t, frame);
        if (best_t < 0.0) {
            best_t += frame;
        }
        SinglePath out;
        out.delay = best_t / s_.sample_rate;
        out.amplitude = correlate(wv, best_t) / energy_;
        return out;
    }

    double energy() const { return energy_; }

private:
    struct Derivs {
        double value;  // |c|^2
        double first;  // d/dt
        double second; // d2/dt2
    };

    bool is_excluded(double k, std::span<const double> excluded) const {
        const double frame = static_cast<double>(n_);
        for (double tau : excluded) {
            double dist = std::abs(k - tau * s_.sample_rate);
            dist = std::min(dist, frame - dist);
            if (dist < 1.0) {
                return true;
            }
        }
        return false;
    }

    // c(t) = sum_n y[n] exp(j w_n t), w_n = 2 pi n / N, t in samples
    cd correlate(std::span<const cd> y, double t) const {
        cd c{0.0, 0.0};
        const double base = t / static_cast<double>(n_);
        for (std::size_t k = 0; k < n_; ++k) {
            const double cycles = std::fmod(static_cast<double>(k) * base, 1.0);
            c += y[k] * std::polar(1.0, 2.0 * std::numbers::pi * cycles);
        }
        return c;
    }

    Derivs evaluate(std::span<const cd> y, double t) const {
        cd c{0.0, 0.0}, c1{0.0, 0.0}, c2{0.0, 0.0};
        const double base = t / static_cast<double>(n_);
        const double w0 = 2.0 * std::numbers::pi / static_cast<double>(n_);
        for (std::size_t k = 0; k < n_; ++k) {
            const double cycles = std::fmod(static_cast<double>(k) * base, 1.0);
            const cd term = y[k] * std::polar(1.0, 2.0 * std::numbers::pi * cycles);
            const double w = w0 * static_cast<double>(k);
            c += term;
            c1 += cd{0.0, w} * term;
            c2 -= w * w * term;
        }
        Derivs d;
        d.value = std::norm(c);
        d.first = 2.0 * std::real(std::conj(c) * c1);
        d.second = 2.0 * (std::norm(c1) + std::real(std::conj(c) * c2));
        return d;
    }

    const Spectrum &s_;
    std::size_t n_;
    double energy_;
    double refine_;
};

bool ties_other(const std::vector<SinglePath> &paths, std::size_t self, double delay) {
    for (std::size_t j = 0; j < paths.size(); ++j) {
        if (j != self && std::abs(paths[j].delay - delay) < kDelayResolution) {
            return true;
        }
    }
    return false;
}

CVector residual_of(const Spectrum &x, const Spectrum &s, const std::vector<SinglePath> &paths) {
    CVector r = x.bins;
    for (const auto &p : paths) {
        r -= p.amplitude * steering_column(s, p.delay);
    }
    return r;
}

} // namespace

WrelaxResult wrelax(const Spectrum &x, const Spectrum &s, const WrelaxConfig &cfg) {
    cfg.validate();
    if (x.fft_size() != s.fft_size()) {
        throw ParameterError("received and transmit spectra have different lengths");
    }
    if (!(s.bins.squaredNorm() > 0.0)) {
        throw ParameterError("transmit spectrum has zero energy");
    }

    const PathSearch search(s, cfg.refine_resolution);
    std::vector<SinglePath> paths;
    paths.reserve(cfg.max_paths);
    WrelaxResult result;

    std::vector<double> delays_buf;
    auto other_delays = [&](std::size_t self) {
        delays_buf.clear();
        for (std::size_t j = 0; j < paths.size(); ++j) {
            if (j != self) {
                delays_buf.push_back(paths[j].delay);
            }
        }
        return std::span<const double>(delays_buf);
    };

    for (std::size_t m = 0; m < cfg.max_paths; ++m) {
        // new path from the residual of the m paths found so far
        CVector residual = residual_of(x, s, paths);
        SinglePath fresh = search.search(residual, {});
        if (ties_other(paths, paths.size(), fresh.delay)) {
            fresh = search.search(residual, other_delays(paths.size()));
        }
        paths.push_back(fresh);

        residual = residual_of(x, s, paths);
        double energy_prev = residual.squaredNorm();
        double energy = energy_prev;
        bool stage_converged = false;
        for (std::size_t sweep = 0; sweep < cfg.max_inner_iters; ++sweep) {
            ++result.sweeps;
            residual = residual_of(x, s, paths);
            for (std::size_t i = 0; i < paths.size(); ++i) {
                const CVector own = paths[i].amplitude * steering_column(s, paths[i].delay);
                const CVector target = residual + own;
                SinglePath update = search.search(target, {});
                if (ties_other(paths, i, update.delay)) {
                    update = search.search(target, other_delays(i));
                }
                const CVector candidate = target - update.amplitude * steering_column(s, update.delay);
                // relaxation steps never increase the residual energy
                if (candidate.squaredNorm() <= residual.squaredNorm()) {
                    paths[i] = update;
                    residual = candidate;
                }
            }
            energy = residual.squaredNorm();
            if (energy_prev - energy <= cfg.convergence_tol * energy_prev) {
                stage_converged = true;
                break;
            }
            energy_prev = energy;
        }
        if (!stage_converged) {
            result.converged = false;
        }
        result.stage_residual_energy.push_back(energy);
    }

    CVector amps(static_cast<Eigen::Index>(paths.size()));
    std::vector<double> delays(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
        amps(static_cast<Eigen::Index>(i)) = paths[i].amplitude;
        delays[i] = paths[i].delay;
    }
    result.paths = PathSet(std::move(amps), std::move(delays));
    return result;
}

} // namespace fsd
