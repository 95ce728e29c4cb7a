// Command-line front end: sweeps, thresholds, tail probabilities, delay
// estimation from sample files and the built-in self test.

#include "fsdetect/error.hpp"
#include "fsdetect/estimation.hpp"
#include "fsdetect/harness.hpp"
#include "fsdetect/scenario_io.hpp"
#include "fsdetect/selftest.hpp"
#include "fsdetect/stats.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

constexpr int kExitNumerical = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPrecision = 3;

struct DistOptions {
    std::string dist = "chi2";
    double dof = 1.0;
    double v = 1.0;
    double r = 1.0;
    double delta = 0.0;
    double lambda = 0.0;
};

void add_dist_options(CLI::App *cmd, DistOptions &o) {
    cmd->add_option("--dist", o.dist, "chi2 or f")->check(CLI::IsMember({"chi2", "f"}));
    cmd->add_option("--dof", o.dof, "chi-square degrees of freedom (real)");
    cmd->add_option("--v", o.v, "F numerator degrees of freedom (real)");
    cmd->add_option("--r", o.r, "F denominator degrees of freedom (real)");
    cmd->add_option("--delta", o.delta, "numerator noncentrality (real)");
    cmd->add_option("--lambda", o.lambda, "denominator noncentrality (real)");
}

fsd::Distribution make_dist(const DistOptions &o) {
    if (o.dist == "chi2") {
        return fsd::ChiSqParams{o.dof, o.delta};
    }
    return fsd::DncFParams{o.v, o.r, o.delta, o.lambda};
}

std::string fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

/// Time samples, one per line: "re im" or "re,im".
std::vector<fsd::cd> read_samples(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw fsd::ConfigError("cannot open sample file '" + path + "'");
    }
    std::vector<fsd::cd> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.resize(hash);
        }
        for (char &c : line) {
            if (c == ',') {
                c = ' ';
            }
        }
        std::istringstream ls(line);
        double re = 0.0;
        double im = 0.0;
        if (!(ls >> re)) {
            continue;
        }
        if (!(ls >> im)) {
            im = 0.0;
        }
        std::string extra;
        if (ls >> extra) {
            throw fsd::ConfigError("line " + std::to_string(line_no) + " of sample file has extra fields");
        }
        out.emplace_back(re, im);
    }
    if (out.empty()) {
        throw fsd::ConfigError("sample file '" + path + "' holds no samples");
    }
    return out;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Forward-scatter GLRT detection toolkit"};
    app.require_subcommand(1);

    bool strict = false;
    app.add_flag("--strict", strict, "exit 3 when a tail probability carries a precision warning");

    // run
    auto *run = app.add_subcommand("run", "run a scenario sweep");
    std::string scenario_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::string out_path;
    std::string format = "csv";
    bool timing = false;
    run->add_option("scenario", scenario_path, "scenario file")->required();
    run->add_option("--seed", seed, "master seed");
    run->add_option("--trials", trials, "trials per sweep point");
    run->add_option("--out", out_path, "output file (default stdout)");
    run->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    run->add_flag("--timing", timing, "include wall-time column");
    run->add_flag("--strict", strict, "exit 3 on precision warnings");

    // crossing
    auto *crossing = app.add_subcommand("crossing", "run the scripted crossing demo");
    crossing->add_option("scenario", scenario_path, "scenario file")->required();
    crossing->add_option("--seed", seed, "master seed");
    crossing->add_option("--out", out_path, "output file (default stdout)");

    // threshold
    auto *threshold = app.add_subcommand("threshold", "threshold for a false-alarm probability");
    DistOptions dist_opts;
    double pfa = 1e-2;
    bool in_db = false;
    int digits = 4;
    add_dist_options(threshold, dist_opts);
    threshold->add_option("--pfa", pfa, "target false-alarm probability")->required();
    threshold->add_flag("--db", in_db, "print 10 log10(eta)");
    threshold->add_option("--digits", digits, "decimal places");

    // tail
    auto *tail = app.add_subcommand("tail", "right-tail probability");
    double tail_x = 0.0;
    add_dist_options(tail, dist_opts);
    tail->add_option("--x", tail_x, "evaluation point")->required();
    tail->add_flag("--strict", strict, "exit 3 on precision warnings");

    // estimate
    auto *estimate = app.add_subcommand("estimate", "estimate path delays from time samples");
    std::string samples_path;
    std::size_t paths = 1;
    std::size_t fft_size = 1024;
    fsd::WaveformParams wp;
    estimate->add_option("samples", samples_path, "file of complex time samples")->required();
    estimate->add_option("--paths", paths, "paths to estimate");
    estimate->add_option("--fft-size", fft_size, "DFT length N");
    estimate->add_option("--duration", wp.duration, "pulse duration (s)");
    estimate->add_option("--center-frequency", wp.center_frequency, "LFM center frequency (Hz)");
    estimate->add_option("--bandwidth", wp.bandwidth, "LFM bandwidth (Hz)");
    estimate->add_option("--sample-rate", wp.sample_rate, "sample rate (Hz)");

    // selftest
    auto *selftest = app.add_subcommand("selftest", "run the built-in invariant checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return e.get_exit_code() == 0 ? code : kExitConfig;
    }

    try {
        if (*run || *crossing) {
            fsd::Scenario sc = fsd::load_scenario(scenario_path);
            if (seed) {
                sc.seed = *seed;
            }
            if (trials) {
                sc.trials = *trials;
            }
            std::ofstream file;
            if (!out_path.empty()) {
                file.open(out_path);
                if (!file) {
                    throw fsd::ConfigError("cannot write '" + out_path + "'");
                }
            }
            std::ostream &os = out_path.empty() ? std::cout : file;
            if (*crossing) {
                fsd::write_crossing_csv(os, fsd::run_crossing_demo(sc));
                return 0;
            }
            const auto rows = fsd::run_sweep(sc);
            if (format == "json") {
                fsd::write_json(os, sc, rows, timing);
            } else {
                fsd::write_csv(os, rows, timing);
            }
            bool warned = false;
            for (const auto &r : rows) {
                warned = warned || r.precision_warning;
            }
            if (warned) {
                std::cerr << "warning: tail series truncated before reaching the error bound\n";
                return strict ? kExitPrecision : 0;
            }
            return 0;
        }
        if (*threshold) {
            const double eta = fsd::threshold_for_pfa(pfa, make_dist(dist_opts));
            std::cout << fixed(in_db ? 10.0 * std::log10(eta) : eta, digits) << '\n';
            return 0;
        }
        if (*tail) {
            const auto t = fsd::survival(tail_x, make_dist(dist_opts));
            std::printf("%.15g\n", t.value);
            if (t.precision_warning) {
                std::cerr << "warning: series truncated, error bound " << t.error_bound << '\n';
                return strict ? kExitPrecision : 0;
            }
            return 0;
        }
        if (*estimate) {
            const auto samples = read_samples(samples_path);
            const auto w = fsd::generate_lfm(wp.duration, wp.center_frequency, wp.bandwidth, wp.sample_rate);
            const auto s = fsd::spectrum_of(w, fft_size);
            const auto x = fsd::spectrum_of(samples, wp.sample_rate, fft_size);
            fsd::WrelaxConfig cfg;
            cfg.max_paths = paths;
            const auto result = fsd::wrelax(x, s, cfg);
            std::cout << "delay_s,amplitude_re,amplitude_im,magnitude\n";
            for (std::size_t k = 0; k < result.paths.size(); ++k) {
                const auto a = result.paths.amplitudes()(static_cast<Eigen::Index>(k));
                std::printf("%.9g,%.9g,%.9g,%.9g\n", result.paths.delays()[k], a.real(), a.imag(), std::abs(a));
            }
            if (!result.converged) {
                std::cerr << "warning: relaxation did not converge within the sweep budget\n";
            }
            return 0;
        }
        if (*selftest) {
            const auto report = fsd::run_selftest(&std::cout);
            return report.failed() == 0 ? 0 : kExitNumerical;
        }
    } catch (const fsd::ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const fsd::ParameterError &e) {
        std::cerr << "parameter error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const fsd::TruncationError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const fsd::FrameError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return 0;
}
