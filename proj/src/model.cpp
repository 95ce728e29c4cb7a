#include "fsdetect/model.hpp"

#include "fsdetect/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace fsd {

namespace {

void require_finite_delays(std::span<const double> delays) {
    for (double d : delays) {
        if (!std::isfinite(d) || d < 0.0) {
            std::ostringstream msg;
            msg << "path delay must be finite and non-negative, got " << d;
            throw ParameterError(msg.str());
        }
    }
}

} // namespace

PathSet::PathSet(CVector amplitudes, std::vector<double> delays) {
    if (static_cast<std::size_t>(amplitudes.size()) != delays.size()) {
        throw ParameterError("path set needs one amplitude per delay");
    }
    require_finite_delays(delays);

    std::vector<std::size_t> order(delays.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return delays[a] < delays[b]; });

    amplitudes_.resize(amplitudes.size());
    delays_.resize(delays.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        amplitudes_(static_cast<Eigen::Index>(i)) = amplitudes(static_cast<Eigen::Index>(order[i]));
        delays_[i] = delays[order[i]];
        if (i > 0 && delays_[i] - delays_[i - 1] < kDelayResolution) {
            std::ostringstream msg;
            msg << "duplicate path delay " << delays_[i] << " s";
            throw DegenerateError(msg.str());
        }
    }
}

PathSet PathSet::scaled(cd factor) const {
    PathSet out = *this;
    out.amplitudes_ *= factor;
    return out;
}

Waveform generate_lfm(double duration, double center_frequency, double bandwidth, double sample_rate) {
    if (!(duration > 0.0) || !(bandwidth > 0.0) || !(sample_rate > 0.0)) {
        throw ParameterError("LFM duration, bandwidth and sample rate must be positive");
    }
    if (!(center_frequency >= 0.0)) {
        throw ParameterError("LFM center frequency must be non-negative");
    }
    if (!(bandwidth < sample_rate) || !(sample_rate > 2.0 * (center_frequency + bandwidth / 2.0))) {
        throw ParameterError("sample rate too low for the LFM band");
    }
    const auto length = static_cast<Eigen::Index>(std::llround(duration * sample_rate));
    if (length < 1) {
        throw ParameterError("LFM shorter than one sample");
    }

    Waveform w;
    w.sample_rate = sample_rate;
    w.duration = duration;
    w.center_frequency = center_frequency;
    w.bandwidth = bandwidth;
    w.samples.resize(length);

    const double f0 = center_frequency - bandwidth / 2.0;
    const double chirp_rate = bandwidth / duration;
    for (Eigen::Index n = 0; n < length; ++n) {
        const double t = static_cast<double>(n) / sample_rate;
        // phase in cycles, reduced before scaling by 2 pi
        const double cycles = f0 * t + 0.5 * chirp_rate * t * t;
        const double phase = 2.0 * std::numbers::pi * (cycles - std::floor(cycles));
        w.samples(n) = std::polar(1.0, phase);
    }
    return w;
}

Spectrum spectrum_of(const Waveform &w, std::size_t fft_size) {
    return spectrum_of(std::span<const cd>(w.samples.data(), w.size()), w.sample_rate, fft_size);
}

Spectrum spectrum_of(std::span<const cd> samples, double sample_rate, std::size_t fft_size) {
    if (fft_size < 1) {
        throw ParameterError("FFT size must be at least 1");
    }
    if (fft_size < samples.size()) {
        throw TruncationError("FFT size " + std::to_string(fft_size) + " truncates a " +
                              std::to_string(samples.size()) + "-sample signal");
    }
    const auto bins = dft(samples, fft_size);
    Spectrum s;
    s.sample_rate = sample_rate;
    s.bins = Eigen::Map<const CVector>(bins.data(), static_cast<Eigen::Index>(bins.size()));
    return s;
}

CVector time_samples(const Spectrum &s) {
    const auto n = s.fft_size();
    const auto x = dft_backward(std::span<const cd>(s.bins.data(), n), n);
    CVector out = Eigen::Map<const CVector>(x.data(), static_cast<Eigen::Index>(n));
    return out / static_cast<double>(n);
}

void apply_delay(CVector &column, double sample_rate, double tau) {
    const auto n = column.size();
    // cycles per bin; reducing n * step modulo 1 keeps the phase exact for
    // delays spanning many frames
    const double step = sample_rate * tau / static_cast<double>(n);
    const double step_frac = step - std::floor(step);
    for (Eigen::Index k = 0; k < n; ++k) {
        double cycles = std::fmod(static_cast<double>(k) * step_frac, 1.0);
        column(k) *= std::polar(1.0, -2.0 * std::numbers::pi * cycles);
    }
}

CVector steering_column(const Spectrum &s, double tau) {
    if (!std::isfinite(tau)) {
        throw ParameterError("steering delay must be finite");
    }
    CVector col = s.bins;
    apply_delay(col, s.sample_rate, tau);
    return col;
}

SteeringMatrix steering_matrix(const Spectrum &s, std::span<const double> delays) {
    if (delays.empty()) {
        throw ParameterError("steering matrix needs at least one delay");
    }
    require_finite_delays(delays);
    for (std::size_t i = 0; i < delays.size(); ++i) {
        for (std::size_t j = i + 1; j < delays.size(); ++j) {
            if (std::abs(delays[i] - delays[j]) < kDelayResolution) {
                std::ostringstream msg;
                msg << "duplicate steering delays " << delays[i] << " s and " << delays[j] << " s";
                throw DegenerateError(msg.str());
            }
        }
    }

    SteeringMatrix phi;
    phi.delays.assign(delays.begin(), delays.end());
    phi.columns.resize(static_cast<Eigen::Index>(s.fft_size()), static_cast<Eigen::Index>(delays.size()));
    for (std::size_t i = 0; i < delays.size(); ++i) {
        phi.columns.col(static_cast<Eigen::Index>(i)) = steering_column(s, delays[i]);
    }
    return phi;
}

CVector synthesize_paths(const Spectrum &s, const PathSet &paths) {
    CVector out = CVector::Zero(s.bins.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
        out += paths.amplitudes()(static_cast<Eigen::Index>(i)) * steering_column(s, paths.delays()[i]);
    }
    return out;
}

double bistatic_doppler(double speed, double frequency, double sound_speed, double bistatic_angle,
                        double heading_angle) {
    if (!(sound_speed > 0.0)) {
        throw ParameterError("sound speed must be positive");
    }
    return 2.0 * speed * frequency / sound_speed * std::cos(bistatic_angle / 2.0) * std::cos(heading_angle);
}

} // namespace fsd
