#include "fsdetect/channel.hpp"
#include "fsdetect/detection.hpp"
#include "fsdetect/error.hpp"
#include "fsdetect/stats.hpp"
#include "oracles.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace fsd;
using Catch::Approx;

namespace {

struct Desk {
    Spectrum s;
    PathSet direct;
    PathSet scattered;
    SteeringMatrix phi_d;
    SteeringMatrix phi_s;
};

Desk desk() {
    Desk d;
    d.s = spectrum_of(generate_lfm(0.05, 2000.0, 200.0, 10000.0), 1024);
    const auto preset = channel_preset("desk");
    d.direct = preset.direct;
    d.scattered = preset.scattered;
    d.phi_d = steering_matrix(d.s, d.direct.delays());
    d.phi_s = steering_matrix(d.s, d.scattered.delays());
    return d;
}

double chi2_draw(std::mt19937_64 &rng, double dof, double delta) {
    // sum of dof unit normals, the first shifted by sqrt(delta)
    std::normal_distribution<double> normal;
    double s = 0.0;
    for (int i = 0; i < static_cast<int>(dof); ++i) {
        const double z = normal(rng) + (i == 0 ? std::sqrt(delta) : 0.0);
        s += z * z;
    }
    return s;
}

} // namespace

TEST_CASE("central chi-square tails") {
    for (double x = 0.0; x <= 80.0; x += 0.5) {
        CHECK(std::abs(noncentral_chi2_sf(x, {2.0, 0.0}).value - std::exp(-x / 2.0)) < 1e-12);
    }
    for (int dof = 1; dof <= 60; ++dof) {
        for (double x : {0.01, 0.5, 1.0, 3.3, 10.0, 25.0, 60.0, 120.0}) {
            const double ref = boost::math::gamma_q(dof / 2.0, x / 2.0);
            CHECK(std::abs(noncentral_chi2_sf(x, {double(dof), 0.0}).value - ref) < 1e-12);
        }
    }
    // non-integer dof
    CHECK(std::abs(noncentral_chi2_sf(7.0, {5.5, 0.0}).value - boost::math::gamma_q(2.75, 3.5)) < 1e-12);
}

TEST_CASE("noncentral chi-square tail is increasing in the noncentrality") {
    for (double dof : {1.0, 2.0, 6.0, 20.0}) {
        for (double x : {0.5, 5.0, 30.0}) {
            double prev = noncentral_chi2_sf(x, {dof, 0.0}).value;
            for (double delta = 0.5; delta <= 60.0; delta += 0.5) {
                const double q = noncentral_chi2_sf(x, {dof, delta}).value;
                if (prev < 1.0 - 1e-10) {
                    CHECK(q > prev);
                } else {
                    CHECK(q >= prev - 1e-13);
                }
                prev = q;
            }
        }
    }
}

TEST_CASE("noncentral chi-square with large noncentrality stays finite") {
    const auto q = noncentral_chi2_sf(1500.0, {6.0, 1400.0});
    CHECK(q.value > 0.0);
    CHECK(q.value < 1.0);
    CHECK_FALSE(q.precision_warning);
    CHECK(noncentral_chi2_sf(10.0, {6.0, 2000.0}).value == Approx(1.0).margin(1e-12));
}

TEST_CASE("chi-square additivity by Monte Carlo") {
    std::mt19937_64 rng(17);
    const int draws = 200000;
    const double x = 14.0;
    int hits = 0;
    for (int i = 0; i < draws; ++i) {
        hits += chi2_draw(rng, 4.0, 3.0) + chi2_draw(rng, 2.0, 2.5) > x ? 1 : 0;
    }
    const double p = noncentral_chi2_sf(x, {6.0, 5.5}).value;
    const double se = std::sqrt(p * (1.0 - p) / draws);
    CHECK(std::abs(static_cast<double>(hits) / draws - p) < 3.0 * se);
}

TEST_CASE("central F tail against quadrature") {
    for (auto [d1, d2] : {std::pair{2.0, 10.0}, std::pair{6.0, 40.0}, std::pair{20.0, 20.0}, std::pair{5.0, 7.0}}) {
        for (double x : {0.1, 0.7, 1.0, 2.5, 6.0}) {
            const double ref = oracle::central_f_sf_quadrature(x, d1, d2);
            CHECK(std::abs(doubly_noncentral_f_sf(x, {d1, d2, 0.0, 0.0}).value - ref) < 1e-9);
        }
    }
}

TEST_CASE("singly noncentral F against a chi-square Monte Carlo") {
    std::mt19937_64 rng(23);
    const double v = 6.0;
    const double r = 12.0;
    const double delta = 4.0;
    const double x = 2.2;
    const int draws = 1000000;
    int hits = 0;
    for (int i = 0; i < draws; ++i) {
        const double num = chi2_draw(rng, v, delta) / v;
        const double den = chi2_draw(rng, r, 0.0) / r;
        hits += num / den > x ? 1 : 0;
    }
    const double p = doubly_noncentral_f_sf(x, {v, r, delta, 0.0}).value;
    const double se = std::sqrt(p * (1.0 - p) / draws);
    CHECK(std::abs(static_cast<double>(hits) / draws - p) < 3.0 * se);
}

TEST_CASE("doubly noncentral F against Monte Carlo") {
    std::mt19937_64 rng(29);
    const double v = 4.0;
    const double r = 10.0;
    const double delta = 5.0;
    const double lambda = 3.0;
    const double x = 2.0;
    const int draws = 400000;
    int hits = 0;
    for (int i = 0; i < draws; ++i) {
        const double num = chi2_draw(rng, v, delta) / v;
        const double den = chi2_draw(rng, r, lambda) / r;
        hits += num / den > x ? 1 : 0;
    }
    const double p = doubly_noncentral_f_sf(x, {v, r, delta, lambda}).value;
    const double se = std::sqrt(p * (1.0 - p) / draws);
    CHECK(std::abs(static_cast<double>(hits) / draws - p) < 3.0 * se);
}

TEST_CASE("F tail limits and bounds") {
    CHECK(doubly_noncentral_f_sf(0.0, {3.0, 5.0, 2.0, 1.0}).value == 1.0);
    CHECK(noncentral_chi2_sf(0.0, {3.0, 2.0}).value == 1.0);
    for (double delta : {0.0, 3.0, 40.0}) {
        for (double lambda : {0.0, 2.0, 30.0}) {
            double prev = 1.0;
            for (double x = 0.0; x <= 20.0; x += 0.25) {
                const double q = doubly_noncentral_f_sf(x, {6.0, 2042.0, delta, lambda}).value;
                CHECK(q >= 0.0);
                CHECK(q <= 1.0);
                CHECK(q <= prev + 1e-15);
                prev = q;
            }
        }
    }
    double prev = 1.0;
    for (double x = 0.0; x <= 100.0; x += 0.5) {
        const double q = noncentral_chi2_sf(x, {6.0, 12.0}).value;
        CHECK(q <= prev + 1e-15);
        prev = q;
    }
    CHECK_THROWS_AS(noncentral_chi2_sf(-1.0, {2.0, 0.0}), ParameterError);
    CHECK_THROWS_AS(doubly_noncentral_f_sf(1.0, {0.0, 2.0, 0.0, 0.0}), ParameterError);
}

TEST_CASE("large denominator dof approaches the scaled chi-square") {
    // F(v, r) -> chi2_v / v as r grows
    const double x = 2.0;
    const double f = doubly_noncentral_f_sf(x, {6.0, 1e6, 5.0, 0.0}).value;
    const double c = noncentral_chi2_sf(6.0 * x, {6.0, 5.0}).value;
    CHECK(std::abs(f - c) < 1e-4);
}

TEST_CASE("threshold inversion") {
    CHECK(threshold_for_pfa(1e-2, ChiSqParams{2.0, 0.0}) == Approx(-2.0 * std::log(1e-2)).epsilon(1e-12));
    const Distribution laws[] = {ChiSqParams{2.0, 0.0}, ChiSqParams{6.0, 0.0}, ChiSqParams{20.0, 3.0},
                                 DncFParams{6.0, 2042.0, 0.0, 0.0}, DncFParams{20.0, 20.0, 0.0, 0.0},
                                 DncFParams{4.0, 30.0, 2.0, 1.0}};
    for (const auto &law : laws) {
        for (double p = 1e-1; p >= 1e-8 * 0.999; p /= 10.0) {
            const double eta = threshold_for_pfa(p, law);
            CHECK(std::abs(survival(eta, law).value - p) / p < 1e-10);
        }
    }
    CHECK_THROWS_AS(threshold_for_pfa(0.0, ChiSqParams{2.0, 0.0}), ParameterError);
    CHECK_THROWS_AS(threshold_for_pfa(1.0, ChiSqParams{2.0, 0.0}), ParameterError);
}

TEST_CASE("theoretical detection probability") {
    const ChiSqParams h0{6.0, 0.0};
    const double eta = threshold_for_pfa(1e-3, h0);
    CHECK(pd_theoretical(eta, h0) == Approx(1e-3).epsilon(1e-10));
    double prev = 0.0;
    for (double d = 0.0; d <= 40.0; d += 1.0) {
        const double pd = pd_theoretical(eta, ChiSqParams{6.0, d});
        CHECK(pd >= prev);
        prev = pd;
    }
    // T0 and T1' laws in complex counts
    const double t0 = statistic_threshold(StatisticKind::known_noise, 3, 1021, 1e-2);
    CHECK(statistic_tail(StatisticKind::known_noise, 3, 1021, 0.0, 0.0, t0) == Approx(1e-2).epsilon(1e-10));
    const double t1 = statistic_threshold(StatisticKind::unknown_noise, 3, 1021, 1e-2);
    CHECK(statistic_tail(StatisticKind::unknown_noise, 3, 1021, 0.0, 0.0, t1) == Approx(1e-2).epsilon(1e-10));
    CHECK(t0 == Approx(threshold_for_pfa(1e-2, ChiSqParams{6.0, 0.0}) / 2.0).epsilon(1e-14));
}

TEST_CASE("noncentralities at exact delays") {
    const auto d = desk();
    std::mt19937_64 rng(4);
    const CVector a = oracle::complex_gaussian(rng, 3, 1.0);
    const CVector b = oracle::complex_gaussian(rng, 3, 0.1);
    const double sigma2 = 0.05;
    const auto delta = noncentrality_chi2(d.phi_d, d.phi_s, a, b, sigma2);
    const auto lambda = noncentrality_denominator(d.phi_d, d.phi_s, a, b, sigma2);
    const double scale = (d.phi_d.columns * a).squaredNorm() / (1024.0 * sigma2);
    CHECK(delta.h0 < 1e-12 * scale);
    CHECK(lambda.h0 < 1e-12 * scale);
    const CMatrix p = oracle::dense_projector(d.phi_d.columns);
    const double ref = (p * d.phi_s.columns * b).squaredNorm() / (1024.0 * sigma2);
    CHECK(delta.h1 == Approx(ref).epsilon(1e-9));
    CHECK(lambda.h1 == Approx(ref).epsilon(1e-9));

    const auto none = noncentrality_chi2(d.phi_d, d.phi_s, a, CVector(), sigma2);
    CHECK(none.h1 == none.h0);

    const auto loud = noncentrality_chi2(d.phi_d, d.phi_s, a, b, 1e12);
    CHECK(loud.h1 < 1e-9);
}

TEST_CASE("dof convention: 2 M(X)/(N sigma^2) follows chi2 with 2v real dof (KS)") {
    const auto d = desk();
    const GlrtDetector det(d.phi_d, d.phi_s);
    const double sigma2 = 1.3;
    const CVector blast = synthesize_paths(d.s, d.direct);
    const int trials = 10000;
    std::vector<double> samples;
    samples.reserve(trials);
    for (int t = 0; t < trials; ++t) {
        samples.push_back(2.0 * det.known_noise(blast + draw_noise(1024, sigma2, derive_seed(61, t)), sigma2).value);
    }
    const double v = det.dof_v();
    auto cdf_real = [&](double x) { return boost::math::gamma_p(v, x / 2.0); };
    CHECK(oracle::ks_statistic(samples, cdf_real) < oracle::ks_critical_001(trials));
    // the v-real-dof reading is rejected
    auto cdf_half = [&](double x) { return boost::math::gamma_p(v / 2.0, x / 2.0); };
    CHECK(oracle::ks_statistic(samples, cdf_half) > oracle::ks_critical_001(trials));
}

TEST_CASE("quadratic forms: idempotent matrices give chi-square laws, others do not (KS)") {
    const Eigen::Index n = 12;
    std::mt19937_64 rng(83);
    // rank-4 orthogonal projector
    const CMatrix basis = oracle::complex_gaussian(rng, n * 4, 1.0).reshaped(n, 4);
    const CMatrix a = basis * (basis.adjoint() * basis).inverse() * basis.adjoint();
    // same trace, not idempotent
    CMatrix b = CMatrix::Zero(n, n);
    b.diagonal().head(8).setConstant(0.5);
    const int trials = 10000;
    std::vector<double> qa;
    std::vector<double> qb;
    for (int t = 0; t < trials; ++t) {
        const CVector x = oracle::complex_gaussian(rng, n, 1.0);
        qa.push_back(2.0 * std::real(x.dot(a * x)));
        qb.push_back(2.0 * std::real(x.dot(b * x)));
    }
    auto cdf = [](double x) { return boost::math::gamma_p(4.0, x / 2.0); };
    CHECK(oracle::ks_statistic(qa, cdf) < oracle::ks_critical_001(trials));
    CHECK(oracle::ks_statistic(qb, cdf) > oracle::ks_critical_001(trials));
}
