#pragma once

// Transmit waveform and frequency-domain signal model.
//
// A received pulse is represented by its unnormalized N-point DFT
// X = Phi_d(tau_d) a [+ Phi_s(tau_s) b] + W, where each steering column is
// the transmit spectrum S with a linear phase ramp encoding one path delay.

#include "fsdetect/fft.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace fsd {

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Two delays closer than this are treated as the same path.
inline constexpr double kDelayResolution = 1e-9;

struct Waveform {
    CVector samples;
    double sample_rate = 0.0;      // Hz
    double duration = 0.0;         // s
    double center_frequency = 0.0; // Hz
    double bandwidth = 0.0;        // Hz

    std::size_t size() const { return static_cast<std::size_t>(samples.size()); }
};

struct Spectrum {
    CVector bins;
    double sample_rate = 0.0; // Hz

    std::size_t fft_size() const { return static_cast<std::size_t>(bins.size()); }
};

/// Complex amplitudes and delays (s) of one propagation group.
/// Construction sorts by delay and rejects ties.
class PathSet {
public:
    PathSet() = default;
    PathSet(CVector amplitudes, std::vector<double> delays);

    const CVector &amplitudes() const { return amplitudes_; }
    const std::vector<double> &delays() const { return delays_; }
    std::size_t size() const { return delays_.size(); }
    bool empty() const { return delays_.empty(); }

    PathSet scaled(cd factor) const;

private:
    CVector amplitudes_;
    std::vector<double> delays_;
};

struct SteeringMatrix {
    CMatrix columns;            // N x M
    std::vector<double> delays; // M entries, input order

    std::size_t rows() const { return static_cast<std::size_t>(columns.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(columns.cols()); }
};

/// Complex analytic LFM chirp sweeping [fc - B/2, fc + B/2] over `duration`,
/// unit modulus. Sample count is round(duration * fs).
Waveform generate_lfm(double duration, double center_frequency, double bandwidth, double sample_rate);

/// Zero-padded unnormalized N-point DFT of the waveform. Throws
/// TruncationError when N is shorter than the waveform.
Spectrum spectrum_of(const Waveform &w, std::size_t fft_size);
Spectrum spectrum_of(std::span<const cd> samples, double sample_rate, std::size_t fft_size);

/// Inverse of spectrum_of for a full frame: time samples x[n] = IDFT(X)/N.
CVector time_samples(const Spectrum &s);

/// Element n is S(n) * exp(-j 2 pi fs n tau / N).
CVector steering_column(const Spectrum &s, double tau);

/// Multiply `column` in place by the delay phasor of `tau`.
void apply_delay(CVector &column, double sample_rate, double tau);

SteeringMatrix steering_matrix(const Spectrum &s, std::span<const double> delays);

/// Phi * amplitudes for the delays of `paths`.
CVector synthesize_paths(const Spectrum &s, const PathSet &paths);

/// Bistatic Doppler shift (2 v f / c) cos(beta / 2) cos(theta), Hz.
double bistatic_doppler(double speed, double frequency, double sound_speed, double bistatic_angle,
                        double heading_angle);

} // namespace fsd
