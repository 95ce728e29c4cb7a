#pragma once

// Received-pulse synthesis under H0 (direct blast + noise) and H1 (direct
// blast + scattered signal + noise), with SNR/SDR level calibration.

#include "fsdetect/model.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace fsd {

enum class Hypothesis { H0, H1 };

/// Where the complex white noise is drawn. Both give W ~ CN(0, N sigma^2 I).
enum class NoiseDomain { frequency, time };

struct ChannelRealization {
    Spectrum spectrum;
    Hypothesis hypothesis = Hypothesis::H0;
    PathSet direct;
    std::optional<PathSet> scattered;
    double noise_power = 0.0; // sigma^2 per time sample
    std::uint64_t seed = 0;
};

struct LevelSpec {
    double snr_db = 0.0; // mean direct-blast power over the pulse vs sigma^2
    double sdr_db = 0.0; // scattered vs direct-blast energy
};

struct CalibratedLevels {
    PathSet direct;
    PathSet scattered;
    double noise_power = 0.0;
};

/// Mixes a 64-bit counter into a seed (splitmix64 finalizer). Used to derive
/// independent per-point and per-trial streams from one master seed.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t counter);

/// X = Phi_d a [+ Phi_s b] + W with per-bin noise variance N sigma^2.
/// Throws FrameError when a delay does not fit in the N-sample frame.
ChannelRealization synthesize(const Spectrum &s, const PathSet &direct, const std::optional<PathSet> &scattered,
                              double noise_power, std::uint64_t seed,
                              NoiseDomain domain = NoiseDomain::frequency);

/// Noise-free part Phi_d a [+ Phi_s b] of synthesize(); also validates the frame.
CVector noiseless_spectrum(const Spectrum &s, const PathSet &direct, const std::optional<PathSet> *scattered);

/// Draws W ~ CN(0, N sigma^2 I) for an N-bin frame.
CVector draw_noise(std::size_t fft_size, double noise_power, std::uint64_t seed,
                   NoiseDomain domain = NoiseDomain::frequency);

/// Scales the scattered set so that ||Phi_s b||^2 / ||Phi_d a||^2 hits
/// sdr_db and picks sigma^2 so that the mean direct-blast power over the
/// `pulse_length` samples of the transmitted pulse is snr_db above it.
CalibratedLevels calibrate_levels(const Spectrum &s, const PathSet &direct, const PathSet &scattered,
                                  const LevelSpec &levels, std::size_t pulse_length);

/// Mean time-domain power of Phi*amplitudes over `pulse_length` samples.
double mean_pulse_power(const CVector &noiseless, std::size_t pulse_length);

/// Built-in path geometries.
///  "desk":       3 direct + 3 scattered paths within ~35 ms
///  "paper_like": 10 direct + 10 scattered paths, amplitudes 0.9^k, ~100 ms spread
///  "paper_like_compact": 10 + 10 paths, amplitudes 0.7^k, ~50 ms spread; the
///                  scattered delays fall within one 1/B cell of the direct ones
struct ChannelPreset {
    PathSet direct;
    PathSet scattered;
};
ChannelPreset channel_preset(const std::string &name);

} // namespace fsd
