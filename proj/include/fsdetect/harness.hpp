#pragma once

// Scenario-driven Monte Carlo experiments.

#include "fsdetect/channel.hpp"
#include "fsdetect/detection.hpp"
#include "fsdetect/estimation.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fsd {

enum class DelayMode {
    oracle_exact,       // true delays
    estimated_once,     // WRELAX on calibration pulses, reused for every trial
    estimated_per_pulse // WRELAX on every received pulse
};

std::string to_string(DelayMode mode);
DelayMode delay_mode_from_string(const std::string &name);

struct WaveformParams {
    double duration = 0.05;            // s
    double center_frequency = 2000.0;  // Hz
    double bandwidth = 200.0;          // Hz
    double sample_rate = 10000.0;      // Hz
};

struct Scenario {
    std::string name = "desk";
    WaveformParams waveform;
    std::vector<std::size_t> fft_sizes{1024};
    PathSet direct;
    PathSet scattered;

    std::vector<double> snr_db{0.0};
    std::vector<double> sdr_db{-18.5};
    /// Paths assumed by the estimator (M = K). Empty: the true direct count.
    std::vector<std::size_t> estimated_paths;

    WrelaxConfig wrelax;
    std::vector<StatisticKind> detectors{StatisticKind::known_noise, StatisticKind::unknown_noise};
    std::vector<double> pfa{1e-2};
    std::size_t trials = 1000;
    std::uint64_t seed = 1;
    DelayMode delay_mode = DelayMode::oracle_exact;
    double calibration_snr_db = 0.0; // for estimated_once
    bool target_present = true;      // false: H1 trials carry no scattered signal
    NoiseDomain noise_domain = NoiseDomain::frequency;

    /// Per-pulse scattered amplitude scale for the crossing demo.
    std::vector<double> crossing_profile;

    void validate() const;
};

/// Desk-scale defaults: N = 1024, 3 + 3 paths, 50 ms LFM at 2 kHz / 200 Hz.
Scenario desk_scenario();

/// 10 + 10 paths, 0.5 s LFM, N = 8192.
Scenario paper_like_scenario();

inline constexpr int kResultSchemaVersion = 1;

struct ResultRow {
    double snr_db = 0.0;
    double sdr_db = 0.0;
    std::size_t paths = 0;
    std::size_t fft_size = 0;
    StatisticKind detector = StatisticKind::known_noise;
    double pfa_target = 0.0;
    double threshold = 0.0;
    int dof_v = 0;
    int dof_r = 0;
    double empirical_pfa = 0.0;
    double empirical_pd = 0.0;
    double theoretical_pfa = 0.0;
    double theoretical_pd = 0.0;
    double delta0 = 0.0;
    double delta1 = 0.0;
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    double mean_h0 = 0.0;
    double std_h0 = 0.0;
    double mean_h1 = 0.0;
    double std_h1 = 0.0;
    std::size_t trials = 0;
    std::size_t failures = 0; // trials dropped after a numerical error
    bool precision_warning = false;
    double wall_time_s = 0.0;
};

/// Every combination of fft size x paths x SDR x SNR, one row per
/// (point, detector, pfa). Deterministic given the scenario seed; each
/// point's RNG streams depend only on its coordinates.
std::vector<ResultRow> run_sweep(const Scenario &scenario);

struct CrossingSample {
    std::size_t pulse = 0;
    double scale = 0.0;
    Statistic t0;
    Statistic t1;
    double threshold_t0 = 0.0;
    double threshold_t1 = 0.0;
    bool detect_t0 = false;
    bool detect_t1 = false;
    bool failed = false;
};

/// One pulse per crossing_profile entry at the first SNR/SDR/N/pfa of the
/// scenario; the scattered amplitudes are multiplied by the profile value.
std::vector<CrossingSample> run_crossing_demo(const Scenario &scenario);

/// Worker threads for trial loops: FSD_THREADS if set, else hardware concurrency.
std::size_t worker_threads();

} // namespace fsd
