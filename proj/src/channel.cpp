#include "fsdetect/channel.hpp"

#include "fsdetect/error.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace fsd {

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t counter) {
    std::uint64_t z = parent + 0x9e3779b97f4a7c15ULL * (counter + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

void check_frame(const Spectrum &s, const PathSet &paths, const char *group) {
    const double frame = static_cast<double>(s.fft_size());
    for (double tau : paths.delays()) {
        if (!(tau * s.sample_rate < frame)) {
            std::ostringstream msg;
            msg << group << " path delay " << tau << " s lies outside the " << s.fft_size() << "-sample frame";
            throw FrameError(msg.str());
        }
    }
}

} // namespace

CVector noiseless_spectrum(const Spectrum &s, const PathSet &direct, const std::optional<PathSet> *scattered) {
    check_frame(s, direct, "direct");
    CVector x = synthesize_paths(s, direct);
    if (scattered != nullptr && scattered->has_value()) {
        check_frame(s, **scattered, "scattered");
        x += synthesize_paths(s, **scattered);
    }
    return x;
}

CVector draw_noise(std::size_t fft_size, double noise_power, std::uint64_t seed, NoiseDomain domain) {
    if (!(noise_power >= 0.0)) {
        throw ParameterError("noise power must be non-negative");
    }
    const auto n = static_cast<Eigen::Index>(fft_size);
    CVector w(n);
    std::mt19937_64 rng(seed);
    if (domain == NoiseDomain::frequency) {
        std::normal_distribution<double> normal(0.0, std::sqrt(static_cast<double>(fft_size) * noise_power / 2.0));
        for (Eigen::Index k = 0; k < n; ++k) {
            const double re = normal(rng);
            const double im = normal(rng);
            w(k) = cd{re, im};
        }
        return w;
    }
    std::normal_distribution<double> normal(0.0, std::sqrt(noise_power / 2.0));
    std::vector<cd> t(fft_size);
    for (auto &v : t) {
        const double re = normal(rng);
        const double im = normal(rng);
        v = cd{re, im};
    }
    const auto bins = dft(t, fft_size);
    return Eigen::Map<const CVector>(bins.data(), n);
}

ChannelRealization synthesize(const Spectrum &s, const PathSet &direct, const std::optional<PathSet> &scattered,
                              double noise_power, std::uint64_t seed, NoiseDomain domain) {
    if (!(noise_power >= 0.0)) {
        throw ParameterError("noise power must be non-negative");
    }
    ChannelRealization out;
    out.spectrum.sample_rate = s.sample_rate;
    out.spectrum.bins = noiseless_spectrum(s, direct, &scattered);
    if (noise_power > 0.0) {
        out.spectrum.bins += draw_noise(s.fft_size(), noise_power, seed, domain);
    }
    out.hypothesis = scattered.has_value() ? Hypothesis::H1 : Hypothesis::H0;
    out.direct = direct;
    out.scattered = scattered;
    out.noise_power = noise_power;
    out.seed = seed;
    return out;
}

double mean_pulse_power(const CVector &noiseless, std::size_t pulse_length) {
    if (pulse_length == 0) {
        throw ParameterError("pulse length must be positive");
    }
    // Parseval for the unnormalized DFT: sum |x[n]|^2 = ||X||^2 / N
    const double energy = noiseless.squaredNorm() / static_cast<double>(noiseless.size());
    return energy / static_cast<double>(pulse_length);
}

CalibratedLevels calibrate_levels(const Spectrum &s, const PathSet &direct, const PathSet &scattered,
                                  const LevelSpec &levels, std::size_t pulse_length) {
    if (direct.empty() || scattered.empty()) {
        throw CalibrationError("level calibration needs non-empty direct and scattered path sets");
    }
    if (!std::isfinite(levels.snr_db) || !std::isfinite(levels.sdr_db)) {
        throw ParameterError("SNR and SDR must be finite");
    }
    const CVector d = synthesize_paths(s, direct);
    const CVector sc = synthesize_paths(s, scattered);
    const double direct_energy = d.squaredNorm();
    const double scattered_energy = sc.squaredNorm();
    if (!(direct_energy > 0.0) || !(scattered_energy > 0.0)) {
        throw CalibrationError("cannot calibrate levels of a zero-energy path set");
    }

    CalibratedLevels out;
    out.direct = direct;
    const double target_ratio = std::pow(10.0, levels.sdr_db / 10.0);
    out.scattered = scattered.scaled(std::sqrt(target_ratio * direct_energy / scattered_energy));
    out.noise_power = mean_pulse_power(d, pulse_length) / std::pow(10.0, levels.snr_db / 10.0);
    return out;
}

namespace {

PathSet geometric_paths(std::size_t count, double first_delay, double spacing, double decay, double phase_step,
                        double phase_offset) {
    CVector amps(static_cast<Eigen::Index>(count));
    std::vector<double> delays(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double phase = phase_offset + phase_step * static_cast<double>(k);
        amps(static_cast<Eigen::Index>(k)) = std::polar(std::pow(decay, static_cast<double>(k)), phase);
        delays[k] = first_delay + spacing * static_cast<double>(k);
    }
    return PathSet(std::move(amps), std::move(delays));
}

} // namespace

ChannelPreset channel_preset(const std::string &name) {
    // golden-angle phase steps keep path phases spread without an RNG
    constexpr double golden = 2.399963229728653;
    if (name == "desk") {
        return {geometric_paths(3, 0.004, 0.0105, 0.7, golden, 0.3),
                geometric_paths(3, 0.0085, 0.0105, 0.7, golden, 1.1)};
    }
    if (name == "paper_like") {
        return {geometric_paths(10, 0.002, 0.0105, 0.9, golden, 0.3),
                geometric_paths(10, 0.0065, 0.0105, 0.9, golden, 1.1)};
    }
    if (name == "paper_like_compact") {
        return {geometric_paths(10, 0.002, 0.0052, 0.7, golden, 0.3),
                geometric_paths(10, 0.0046, 0.0052, 0.7, golden, 1.1)};
    }
    throw ConfigError("unknown channel preset '" + name + "'");
}

} // namespace fsd
