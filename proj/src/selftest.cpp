#include "fsdetect/selftest.hpp"

#include "fsdetect/error.hpp"
#include "fsdetect/estimation.hpp"
#include "fsdetect/harness.hpp"
#include "fsdetect/stats.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

namespace fsd {

std::size_t SelftestReport::passed() const {
    std::size_t n = 0;
    for (const auto &c : checks) {
        n += c.passed ? 1 : 0;
    }
    return n;
}

std::size_t SelftestReport::failed() const {
    return checks.size() - passed();
}

namespace {

struct DeskFixture {
    Spectrum s;
    SteeringMatrix phi_d;
    SteeringMatrix phi_s;
    CalibratedLevels levels;
};

DeskFixture desk_fixture(double snr_db, double sdr_db) {
    const Scenario sc = desk_scenario();
    const Waveform w = generate_lfm(sc.waveform.duration, sc.waveform.center_frequency, sc.waveform.bandwidth,
                                    sc.waveform.sample_rate);
    DeskFixture f;
    f.s = spectrum_of(w, 1024);
    f.phi_d = steering_matrix(f.s, sc.direct.delays());
    f.phi_s = steering_matrix(f.s, sc.scattered.delays());
    f.levels = calibrate_levels(f.s, sc.direct, sc.scattered, {snr_db, sdr_db}, w.size());
    return f;
}

std::string sci(double x) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << x;
    return os.str();
}

using Check = std::function<std::pair<bool, std::string>()>;

std::vector<std::pair<std::string, Check>> suite() {
    std::vector<std::pair<std::string, Check>> checks;

    checks.emplace_back("chi2 dof 2 matches exp(-x/2)", [] {
        double worst = 0.0;
        for (double x = 0.0; x <= 60.0; x += 0.25) {
            worst = std::max(worst, std::abs(noncentral_chi2_sf(x, {2.0, 0.0}).value - std::exp(-x / 2.0)));
        }
        return std::pair{worst <= 1e-12, "max abs error " + sci(worst)};
    });

    checks.emplace_back("central chi2 matches incomplete gamma", [] {
        double worst = 0.0;
        for (int dof = 1; dof <= 40; ++dof) {
            for (double x = 0.1; x <= 80.0; x *= 1.3) {
                const double ref = boost::math::gamma_q(dof / 2.0, x / 2.0);
                worst = std::max(worst, std::abs(noncentral_chi2_sf(x, {double(dof), 0.0}).value - ref));
            }
        }
        return std::pair{worst <= 1e-12, "max abs error " + sci(worst)};
    });

    checks.emplace_back("chi2 tail increases with noncentrality", [] {
        bool ok = true;
        for (double x : {1.0, 10.0, 40.0}) {
            double prev = -1.0;
            for (double d = 0.0; d <= 50.0; d += 2.5) {
                const double q = noncentral_chi2_sf(x, {6.0, d}).value;
                ok = ok && q > prev;
                prev = q;
            }
        }
        return std::pair{ok, std::string{}};
    });

    checks.emplace_back("threshold chi2_2 at pfa 1e-2", [] {
        const double eta = threshold_for_pfa(1e-2, ChiSqParams{2.0, 0.0});
        const double err = std::abs(eta + 2.0 * std::log(1e-2));
        return std::pair{err <= 1e-9, "eta " + std::to_string(eta)};
    });

    checks.emplace_back("threshold round trip", [] {
        double worst = 0.0;
        const Distribution laws[] = {ChiSqParams{6.0, 0.0}, DncFParams{6.0, 40.0, 0.0, 0.0},
                                     DncFParams{20.0, 2042.0, 0.0, 0.0}};
        for (const auto &law : laws) {
            for (double p = 1e-1; p >= 1e-8; p /= 10.0) {
                const double sf = survival(threshold_for_pfa(p, law), law).value;
                worst = std::max(worst, std::abs(sf - p) / p);
            }
        }
        return std::pair{worst <= 1e-10, "max rel error " + sci(worst)};
    });

    checks.emplace_back("F tail at zero is one", [] {
        const double q = doubly_noncentral_f_sf(0.0, {4.0, 10.0, 3.0, 2.0}).value;
        return std::pair{q == 1.0, std::string{}};
    });

    checks.emplace_back("block inverse matches dense inverse", [] {
        const auto f = desk_fixture(0.0, -10.0);
        const CMatrix a = f.phi_d.columns.adjoint() * f.phi_d.columns;
        const CMatrix b = f.phi_d.columns.adjoint() * f.phi_s.columns;
        const CMatrix e = b.adjoint();
        const CMatrix ff = f.phi_s.columns.adjoint() * f.phi_s.columns;
        const auto blk = block_inverse(a, b, e, ff);
        CMatrix full(6, 6);
        full << a, b, e, ff;
        CMatrix assembled(6, 6);
        assembled << blk.top_left, blk.top_right, blk.bottom_left, blk.bottom_right;
        const CMatrix dense = full.fullPivLu().inverse();
        const double err = (assembled - dense).norm() / dense.norm();
        return std::pair{err <= 1e-10, "rel error " + sci(err)};
    });

    checks.emplace_back("blast projector idempotent and Hermitian", [] {
        const auto f = desk_fixture(0.0, -10.0);
        const CMatrix p = blast_projector(f.phi_d).matrix;
        const double idem = (p * p - p).cwiseAbs().maxCoeff();
        const double herm = (p - p.adjoint()).cwiseAbs().maxCoeff();
        const double null = (p * f.phi_d.columns).norm() / f.phi_d.columns.norm();
        return std::pair{idem <= 1e-9 && herm <= 1e-9 && null <= 1e-9,
                         "idempotence " + sci(idem) + ", hermiticity " + sci(herm)};
    });

    checks.emplace_back("unknown-noise statistic is scale invariant", [] {
        const auto f = desk_fixture(0.0, -10.0);
        const GlrtDetector det(f.phi_d, f.phi_s);
        const CVector x = synthesize(f.s, f.levels.direct, f.levels.scattered, f.levels.noise_power, 11).spectrum.bins;
        const double t = det.unknown_noise(x).value;
        double worst = 0.0;
        for (double c : {1e-3, 0.5, 7.0, 1e4}) {
            worst = std::max(worst, std::abs(det.unknown_noise(CVector(c * x)).value - t) / t);
        }
        return std::pair{worst <= 1e-10, "max rel change " + sci(worst)};
    });

    checks.emplace_back("signal energy eigen and inverse forms agree", [] {
        const auto f = desk_fixture(0.0, -10.0);
        const GlrtDetector det(f.phi_d, f.phi_s);
        const CVector x = synthesize(f.s, f.levels.direct, f.levels.scattered, f.levels.noise_power, 5).spectrum.bins;
        const double a = det.signal_energy(x);
        const double b = det.signal_energy_direct(x);
        const double err = std::abs(a - b) / b;
        return std::pair{err <= 1e-8, "rel diff " + sci(err)};
    });

    checks.emplace_back("empirical pfa near target (2000 trials)", [] {
        Scenario sc = desk_scenario();
        sc.trials = 2000;
        sc.snr_db = {0.0};
        sc.detectors = {StatisticKind::known_noise};
        sc.target_present = false;
        const auto rows = run_sweep(sc);
        const double pfa = rows.front().empirical_pfa;
        const double band = 4.0 * std::sqrt(1e-2 * 0.99 / 2000.0);
        return std::pair{std::abs(pfa - 1e-2) <= band && rows.front().failures == 0,
                         "empirical pfa " + std::to_string(pfa)};
    });

    checks.emplace_back("sweep is deterministic", [] {
        Scenario sc = desk_scenario();
        sc.trials = 200;
        sc.snr_db = {-20.0, -15.0};
        const auto a = run_sweep(sc);
        const auto b = run_sweep(sc);
        bool same = a.size() == b.size();
        for (std::size_t i = 0; same && i < a.size(); ++i) {
            same = a[i].empirical_pd == b[i].empirical_pd && a[i].mean_h1 == b[i].mean_h1 &&
                   a[i].mean_h0 == b[i].mean_h0;
        }
        return std::pair{same, std::string{}};
    });

    return checks;
}

} // namespace

SelftestReport run_selftest(std::ostream *log) {
    SelftestReport report;
    for (auto &[name, fn] : suite()) {
        SelftestCheck c;
        c.name = name;
        try {
            auto [ok, detail] = fn();
            c.passed = ok;
            c.detail = detail;
        } catch (const std::exception &e) {
            c.passed = false;
            c.detail = std::string("exception: ") + e.what();
        }
        if (log) {
            *log << (c.passed ? "PASS " : "FAIL ") << c.name;
            if (!c.detail.empty()) {
                *log << " (" << c.detail << ")";
            }
            *log << '\n';
        }
        report.checks.push_back(std::move(c));
    }
    if (log) {
        *log << report.passed() << " passed, " << report.failed() << " failed\n";
    }
    return report;
}

} // namespace fsd
