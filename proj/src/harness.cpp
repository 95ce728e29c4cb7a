#include "fsdetect/harness.hpp"

#include "fsdetect/error.hpp"
#include "fsdetect/stats.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <memory>
#include <thread>

namespace fsd {

std::string to_string(DelayMode mode) {
    switch (mode) {
    case DelayMode::oracle_exact:
        return "oracle-exact";
    case DelayMode::estimated_once:
        return "estimated-once";
    case DelayMode::estimated_per_pulse:
        return "estimated-per-pulse";
    }
    return "unknown";
}

DelayMode delay_mode_from_string(const std::string &name) {
    if (name == "oracle-exact") {
        return DelayMode::oracle_exact;
    }
    if (name == "estimated-once") {
        return DelayMode::estimated_once;
    }
    if (name == "estimated-per-pulse") {
        return DelayMode::estimated_per_pulse;
    }
    throw ConfigError("unknown delay mode '" + name +
                      "' (expected oracle-exact, estimated-once or estimated-per-pulse)");
}

void Scenario::validate() const {
    if (trials < 1) {
        throw ConfigError("trials must be at least 1");
    }
    if (fft_sizes.empty() || snr_db.empty() || sdr_db.empty() || pfa.empty() || detectors.empty()) {
        throw ConfigError("sweep lists (fft_size, snr_db, sdr_db, pfa, detectors) must be non-empty");
    }
    if (direct.empty() || scattered.empty()) {
        throw ConfigError("scenario needs direct and scattered path sets");
    }
    for (double p : pfa) {
        if (!(p > 0.0 && p < 1.0)) {
            throw ConfigError("pfa targets must lie in (0, 1)");
        }
    }
    for (std::size_t p : estimated_paths) {
        if (p < 1) {
            throw ConfigError("estimated path counts must be positive");
        }
        if (delay_mode == DelayMode::oracle_exact && p != direct.size()) {
            throw ConfigError("oracle-exact delays cannot assume a path count different from the true one");
        }
    }
    wrelax.validate();
}

Scenario desk_scenario() {
    Scenario s;
    s.name = "desk";
    const auto preset = channel_preset("desk");
    s.direct = preset.direct;
    s.scattered = preset.scattered;
    return s;
}

Scenario paper_like_scenario() {
    Scenario s;
    s.name = "paper_like";
    s.waveform.duration = 0.5;
    s.fft_sizes = {8192};
    const auto preset = channel_preset("paper_like");
    s.direct = preset.direct;
    s.scattered = preset.scattered;
    s.pfa = {1e-2};
    s.delay_mode = DelayMode::estimated_once;
    return s;
}

std::size_t worker_threads() {
    if (const char *env = std::getenv("FSD_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n >= 1) {
            return static_cast<std::size_t>(n);
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

namespace {

std::uint64_t coordinate_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords) {
    std::uint64_t s = master;
    for (auto c : coords) {
        s = derive_seed(s, c);
    }
    return s;
}

std::uint64_t bits(double v) {
    return std::bit_cast<std::uint64_t>(v);
}

template <typename Fn>
void parallel_for(std::size_t count, Fn &&fn) {
    const std::size_t workers = std::min(worker_threads(), std::max<std::size_t>(1, count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (std::size_t i = w; i < count; i += workers) {
                fn(i);
            }
        });
    }
    for (auto &t : pool) {
        t.join();
    }
}

struct DelayEstimate {
    std::vector<double> direct;
    std::vector<double> scattered;
};

/// M direct delays from an H0 fit and M scattered delays from the 2M-path
/// joint fit after removing the estimates closest to the direct ones.
DelayEstimate estimate_delays(const Spectrum &x_h0, const Spectrum &x_h1, const Spectrum &s, std::size_t paths,
                              WrelaxConfig cfg) {
    cfg.max_paths = paths;
    DelayEstimate out;
    out.direct = wrelax(x_h0, s, cfg).paths.delays();
    cfg.max_paths = 2 * paths;
    const auto joint = wrelax(x_h1, s, cfg).paths.delays();
    out.scattered = partition_delays(joint, out.direct).scattered;
    return out;
}

struct TrialOutcome {
    double t0[2] = {0.0, 0.0};
    double t1[2] = {0.0, 0.0};
    int v[2] = {0, 0};
    int r[2] = {0, 0};
    bool failed = false;
};

struct Moments {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t n = 0;

    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++n;
    }
    double mean() const { return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN(); }
    double stddev() const {
        if (n < 2) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        const double m = mean();
        return std::sqrt(std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1)));
    }
};

/// Memoized statistic thresholds keyed by (kind, v, r, pfa).
class ThresholdCache {
public:
    double get(StatisticKind kind, int v, int r, double pfa) {
        const auto key = std::make_tuple(static_cast<int>(kind), v, kind == StatisticKind::known_noise ? 0 : r, pfa);
        if (auto it = cache_.find(key); it != cache_.end()) {
            return it->second;
        }
        const double t = statistic_threshold(kind, v, r, pfa);
        cache_.emplace(key, t);
        return t;
    }

private:
    std::map<std::tuple<int, int, int, double>, double> cache_;
};

struct PointContext {
    Spectrum s;
    std::size_t pulse_length = 0;
    CalibratedLevels levels;
    CVector mean0;
    CVector mean1;
};

PointContext make_point(const Scenario &sc, const Waveform &w, std::size_t fft_size, double snr_db, double sdr_db) {
    PointContext ctx;
    ctx.s = spectrum_of(w, fft_size);
    ctx.pulse_length = w.size();
    ctx.levels = calibrate_levels(ctx.s, sc.direct, sc.scattered, {snr_db, sdr_db}, ctx.pulse_length);
    const std::optional<PathSet> none;
    const std::optional<PathSet> target = ctx.levels.scattered;
    ctx.mean0 = noiseless_spectrum(ctx.s, ctx.levels.direct, &none);
    ctx.mean1 = sc.target_present ? noiseless_spectrum(ctx.s, ctx.levels.direct, &target) : ctx.mean0;
    return ctx;
}

/// Delays handed to the detector for a sweep point (oracle or calibration).
DelayEstimate point_delays(const Scenario &sc, const PointContext &ctx, const Waveform &w, std::size_t paths,
                           double sdr_db, std::uint64_t calibration_seed) {
    if (sc.delay_mode == DelayMode::oracle_exact) {
        return {sc.direct.delays(), sc.scattered.delays()};
    }
    const auto cal = calibrate_levels(ctx.s, sc.direct, sc.scattered, {sc.calibration_snr_db, sdr_db}, w.size());
    const auto x0 = synthesize(ctx.s, cal.direct, std::nullopt, cal.noise_power, derive_seed(calibration_seed, 0),
                               sc.noise_domain);
    const auto x1 = synthesize(ctx.s, cal.direct, cal.scattered, cal.noise_power, derive_seed(calibration_seed, 1),
                               sc.noise_domain);
    return estimate_delays(x0.spectrum, x1.spectrum, ctx.s, paths, sc.wrelax);
}

std::unique_ptr<GlrtDetector> make_detector(const Spectrum &s, const DelayEstimate &d) {
    return std::make_unique<GlrtDetector>(steering_matrix(s, d.direct), steering_matrix(s, d.scattered));
}

} // namespace

std::vector<ResultRow> run_sweep(const Scenario &sc) {
    sc.validate();
    const Waveform w = generate_lfm(sc.waveform.duration, sc.waveform.center_frequency, sc.waveform.bandwidth,
                                    sc.waveform.sample_rate);
    const std::vector<std::size_t> path_counts =
        sc.estimated_paths.empty() ? std::vector<std::size_t>{sc.direct.size()} : sc.estimated_paths;

    ThresholdCache thresholds;
    std::vector<ResultRow> rows;

    for (std::size_t fft_size : sc.fft_sizes) {
        for (std::size_t paths : path_counts) {
            for (double sdr_db : sc.sdr_db) {
                const std::uint64_t calibration_seed =
                    coordinate_seed(sc.seed, {0xca11b, bits(sdr_db), paths, fft_size});
                std::optional<DelayEstimate> fixed_delays;

                for (double snr_db : sc.snr_db) {
                    const auto start = std::chrono::steady_clock::now();
                    const PointContext ctx = make_point(sc, w, fft_size, snr_db, sdr_db);
                    const std::uint64_t point_seed =
                        coordinate_seed(sc.seed, {bits(snr_db), bits(sdr_db), paths, fft_size});

                    // detector on true delays drives the theoretical columns
                    const GlrtDetector ideal(steering_matrix(ctx.s, sc.direct.delays()),
                                             steering_matrix(ctx.s, sc.scattered.delays()));

                    std::unique_ptr<GlrtDetector> shared;
                    bool point_failed = false;
                    if (sc.delay_mode != DelayMode::estimated_per_pulse) {
                        try {
                            if (!fixed_delays) {
                                fixed_delays = point_delays(sc, ctx, w, paths, sdr_db, calibration_seed);
                            }
                            shared = make_detector(ctx.s, *fixed_delays);
                        } catch (const Error &) {
                            point_failed = true;
                        }
                    }

                    std::vector<TrialOutcome> outcomes(sc.trials);
                    if (!point_failed) {
                        parallel_for(sc.trials, [&](std::size_t t) {
                            TrialOutcome &o = outcomes[t];
                            try {
                                const CVector noise = draw_noise(fft_size, ctx.levels.noise_power,
                                                                 derive_seed(point_seed, t), sc.noise_domain);
                                const CVector x[2] = {ctx.mean0 + noise, ctx.mean1 + noise};
                                for (int h = 0; h < 2; ++h) {
                                    std::unique_ptr<GlrtDetector> own;
                                    const GlrtDetector *det = shared.get();
                                    if (!det) {
                                        const Spectrum xs{x[h], ctx.s.sample_rate};
                                        own = make_detector(ctx.s, estimate_delays(xs, xs, ctx.s, paths, sc.wrelax));
                                        det = own.get();
                                    }
                                    o.t0[h] = det->known_noise(x[h], ctx.levels.noise_power).value;
                                    o.t1[h] = det->unknown_noise(x[h]).value;
                                    o.v[h] = det->dof_v();
                                    o.r[h] = det->dof_r();
                                }
                            } catch (const Error &) {
                                o.failed = true;
                            }
                        });
                    }

                    const double sigma2 = ctx.levels.noise_power;
                    const GlrtDetector &theory_det = shared ? *shared : ideal;
                    const double d0 = signal_noncentrality(theory_det, ctx.mean0, sigma2);
                    const double d1 = signal_noncentrality(theory_det, ctx.mean1, sigma2);
                    const double l0 = residual_noncentrality(theory_det, ctx.mean0, sigma2);
                    const double l1 = residual_noncentrality(theory_det, ctx.mean1, sigma2);

                    const double elapsed =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

                    for (StatisticKind kind : sc.detectors) {
                        for (double pfa : sc.pfa) {
                            ResultRow row;
                            row.snr_db = snr_db;
                            row.sdr_db = sdr_db;
                            row.paths = paths;
                            row.fft_size = fft_size;
                            row.detector = kind;
                            row.pfa_target = pfa;
                            row.trials = sc.trials;
                            row.dof_v = theory_det.dof_v();
                            row.dof_r = theory_det.dof_r();
                            row.delta0 = d0;
                            row.delta1 = d1;
                            row.lambda0 = l0;
                            row.lambda1 = l1;
                            row.wall_time_s = elapsed;
                            row.threshold = thresholds.get(kind, row.dof_v, row.dof_r, pfa);

                            const auto law0 = statistic_law(kind, row.dof_v, row.dof_r, d0, l0);
                            const auto law1 = statistic_law(kind, row.dof_v, row.dof_r, d1, l1);
                            const double scale = statistic_scale(kind);
                            const auto tail0 = survival(scale * row.threshold, law0);
                            const auto tail1 = survival(scale * row.threshold, law1);
                            row.theoretical_pfa = tail0.value;
                            row.theoretical_pd = tail1.value;
                            row.precision_warning = tail0.precision_warning || tail1.precision_warning;

                            Moments m[2];
                            std::size_t hits[2] = {0, 0};
                            for (const auto &o : outcomes) {
                                if (point_failed || o.failed) {
                                    ++row.failures;
                                    continue;
                                }
                                for (int h = 0; h < 2; ++h) {
                                    const double value = kind == StatisticKind::known_noise ? o.t0[h] : o.t1[h];
                                    const double thr = shared ? row.threshold
                                                              : thresholds.get(kind, o.v[h], o.r[h], pfa);
                                    m[h].add(value);
                                    if (value > thr) {
                                        ++hits[h];
                                    }
                                }
                            }
                            const std::size_t used = sc.trials - row.failures;
                            const double nan = std::numeric_limits<double>::quiet_NaN();
                            row.empirical_pfa = used ? static_cast<double>(hits[0]) / static_cast<double>(used) : nan;
                            row.empirical_pd = used ? static_cast<double>(hits[1]) / static_cast<double>(used) : nan;
                            row.mean_h0 = m[0].mean();
                            row.std_h0 = m[0].stddev();
                            row.mean_h1 = m[1].mean();
                            row.std_h1 = m[1].stddev();
                            rows.push_back(row);
                        }
                    }
                }
            }
        }
    }
    return rows;
}

std::vector<CrossingSample> run_crossing_demo(const Scenario &sc) {
    sc.validate();
    if (sc.crossing_profile.empty()) {
        throw ConfigError("crossing demo needs a non-empty crossing_profile");
    }
    const Waveform w = generate_lfm(sc.waveform.duration, sc.waveform.center_frequency, sc.waveform.bandwidth,
                                    sc.waveform.sample_rate);
    const std::size_t fft_size = sc.fft_sizes.front();
    const std::size_t paths = sc.estimated_paths.empty() ? sc.direct.size() : sc.estimated_paths.front();
    const double snr_db = sc.snr_db.front();
    const double sdr_db = sc.sdr_db.front();
    const double pfa = sc.pfa.front();

    const PointContext ctx = make_point(sc, w, fft_size, snr_db, sdr_db);
    const std::uint64_t demo_seed = coordinate_seed(sc.seed, {0xc505, bits(snr_db), bits(sdr_db), fft_size});

    std::unique_ptr<GlrtDetector> shared;
    if (sc.delay_mode != DelayMode::estimated_per_pulse) {
        shared = make_detector(ctx.s, point_delays(sc, ctx, w, paths, sdr_db, derive_seed(demo_seed, 0xca11b)));
    }

    ThresholdCache thresholds;
    std::vector<CrossingSample> out(sc.crossing_profile.size());
    for (std::size_t p = 0; p < out.size(); ++p) {
        CrossingSample &c = out[p];
        c.pulse = p;
        c.scale = sc.crossing_profile[p];
        try {
            const CVector noise =
                draw_noise(fft_size, ctx.levels.noise_power, derive_seed(demo_seed, p), sc.noise_domain);
            const CVector x = ctx.mean0 + c.scale * (ctx.mean1 - ctx.mean0) + noise;
            std::unique_ptr<GlrtDetector> own;
            const GlrtDetector *det = shared.get();
            if (!det) {
                const Spectrum xs{x, ctx.s.sample_rate};
                own = make_detector(ctx.s, estimate_delays(xs, xs, ctx.s, paths, sc.wrelax));
                det = own.get();
            }
            c.t0 = det->known_noise(x, ctx.levels.noise_power);
            c.t1 = det->unknown_noise(x);
            c.threshold_t0 = thresholds.get(StatisticKind::known_noise, det->dof_v(), det->dof_r(), pfa);
            c.threshold_t1 = thresholds.get(StatisticKind::unknown_noise, det->dof_v(), det->dof_r(), pfa);
            c.detect_t0 = decide(c.t0, c.threshold_t0) == Hypothesis::H1;
            c.detect_t1 = decide(c.t1, c.threshold_t1) == Hypothesis::H1;
        } catch (const Error &) {
            c.failed = true;
        }
    }
    return out;
}

} // namespace fsd
