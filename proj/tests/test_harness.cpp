#include "fsdetect/error.hpp"
#include "fsdetect/harness.hpp"
#include "fsdetect/scenario_io.hpp"

#include <json.hpp>

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace fsd;
using Catch::Approx;

namespace {

Scenario small_desk() {
    Scenario s = desk_scenario();
    s.snr_db = {-8.0};
    s.sdr_db = {-10.0};
    s.trials = 400;
    s.seed = 5;
    return s;
}

const ResultRow &row_for(const std::vector<ResultRow> &rows, double snr, StatisticKind kind) {
    for (const auto &r : rows) {
        if (r.snr_db == snr && r.detector == kind) {
            return r;
        }
    }
    throw std::runtime_error("row not found");
}

std::vector<std::string> split(const std::string &line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep)) {
        out.push_back(item);
    }
    return out;
}

} // namespace

TEST_CASE("scenario parsing") {
    const auto s = parse_scenario(R"(
# comment
name = "t"
channel_preset = "desk"
snr_db = [-10, -5.5, 0]
sdr_db = -12
estimated_paths = [3, 4]
detectors = ["t1"]
pfa = [1e-2, 1e-3]
trials = 50
seed = 9
delay_mode = "estimated-per-pulse"
target_present = false
)");
    CHECK(s.name == "t");
    CHECK(s.snr_db == std::vector<double>{-10.0, -5.5, 0.0});
    CHECK(s.sdr_db == std::vector<double>{-12.0});
    CHECK(s.estimated_paths == std::vector<std::size_t>{3, 4});
    CHECK(s.detectors == std::vector<StatisticKind>{StatisticKind::unknown_noise});
    CHECK(s.pfa.size() == 2);
    CHECK(s.trials == 50);
    CHECK(s.seed == 9);
    CHECK(s.delay_mode == DelayMode::estimated_per_pulse);
    CHECK_FALSE(s.target_present);
    CHECK(s.direct.size() == 3);

    const auto p = parse_scenario("channel_preset = \"paper_like\"\n");
    CHECK(p.fft_sizes == std::vector<std::size_t>{8192});
    CHECK(p.direct.size() == 10);
}

TEST_CASE("scenario errors") {
    CHECK_THROWS_AS(parse_scenario("snr_dB = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("trials = 3\ntrials = 4\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("pfa = 1.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("trials = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("snr_db = []\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("delay_mode = \"sometimes\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("estimated_paths = 5\n"), ConfigError); // oracle mode needs the true count
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.toml"), ConfigError);
    try {
        parse_scenario("name = \"x\"\n\nbogus = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError &e) {
        CHECK(std::string(e.what()).find('3') != std::string::npos);
    }
}

TEST_CASE("absent target gives Pd equal to Pfa") {
    Scenario s = small_desk();
    s.target_present = false;
    const auto rows = run_sweep(s);
    REQUIRE(rows.size() == 2);
    for (const auto &r : rows) {
        CHECK(r.empirical_pd == r.empirical_pfa);
        CHECK(r.delta1 == r.delta0);
        CHECK(r.theoretical_pd == Approx(r.theoretical_pfa).epsilon(1e-12));
    }
}

TEST_CASE("empirical false-alarm rate at exact delays over 1e5 trials") {
    Scenario s = small_desk();
    s.trials = 100000;
    s.detectors = {StatisticKind::known_noise};
    const auto rows = run_sweep(s);
    REQUIRE(rows.size() == 1);
    CHECK(std::abs(rows[0].empirical_pfa - 1e-2) / 1e-2 < 0.15);
    CHECK(rows[0].failures == 0);
}

TEST_CASE("detection probability increases with SNR") {
    Scenario s = small_desk();
    s.snr_db = {-14.0, -10.0, -6.0, -2.0};
    s.trials = 1000;
    const auto rows = run_sweep(s);
    const double band = 2.0 * std::sqrt(0.25 / 1000.0);
    for (auto kind : {StatisticKind::known_noise, StatisticKind::unknown_noise}) {
        for (std::size_t i = 1; i < s.snr_db.size(); ++i) {
            const auto &lo = row_for(rows, s.snr_db[i - 1], kind);
            const auto &hi = row_for(rows, s.snr_db[i], kind);
            CHECK(hi.empirical_pd >= lo.empirical_pd - band);
            CHECK(hi.theoretical_pd >= lo.theoretical_pd);
        }
    }
    CHECK(row_for(rows, -2.0, StatisticKind::known_noise).empirical_pd > 0.99);
}

TEST_CASE("sweeps are deterministic and independent of order") {
    Scenario s = small_desk();
    s.snr_db = {-10.0, -6.0};
    s.trials = 200;
    const auto a = run_sweep(s);
    const auto b = run_sweep(s);
    std::ostringstream ca;
    std::ostringstream cb;
    write_csv(ca, a);
    write_csv(cb, b);
    CHECK(ca.str() == cb.str());

    Scenario r = s;
    r.snr_db = {-6.0, -10.0};
    const auto c = run_sweep(r);
    for (auto kind : {StatisticKind::known_noise, StatisticKind::unknown_noise}) {
        CHECK(row_for(a, -6.0, kind).empirical_pd == row_for(c, -6.0, kind).empirical_pd);
        CHECK(row_for(a, -10.0, kind).mean_h1 == row_for(c, -10.0, kind).mean_h1);
    }

    Scenario single = s;
    single.snr_db = {-6.0};
    const auto d = run_sweep(single);
    CHECK(row_for(a, -6.0, StatisticKind::known_noise).mean_h0 ==
          row_for(d, -6.0, StatisticKind::known_noise).mean_h0);
}

TEST_CASE("estimated delay modes run and detect at high SNR") {
    for (auto mode : {DelayMode::estimated_once, DelayMode::estimated_per_pulse}) {
        Scenario s = small_desk();
        s.delay_mode = mode;
        s.snr_db = {0.0};
        s.trials = 60;
        const auto rows = run_sweep(s);
        REQUIRE(rows.size() == 2);
        for (const auto &r : rows) {
            CHECK(r.failures == 0);
            CHECK(r.empirical_pd > 0.9);
            CHECK(r.dof_v >= 1);
        }
    }
}

TEST_CASE("crossing demo") {
    Scenario s = small_desk();
    s.snr_db = {0.0};

    SECTION("no target gives few detections") {
        s.crossing_profile = std::vector<double>(20, 0.0);
        const auto samples = run_crossing_demo(s);
        REQUIRE(samples.size() == 20);
        int hits = 0;
        for (const auto &c : samples) {
            hits += c.detect_t0 ? 1 : 0;
        }
        CHECK(hits <= 2);
    }

    SECTION("step profile is detected while the target is present") {
        s.crossing_profile = {0, 0, 0, 1, 1, 1, 0, 0, 0};
        const auto samples = run_crossing_demo(s);
        for (std::size_t p = 3; p < 6; ++p) {
            CHECK(samples[p].detect_t0);
            CHECK(samples[p].detect_t1);
            CHECK(samples[p].scale == 1.0);
        }
        for (const auto &c : samples) {
            CHECK_FALSE(c.failed);
            CHECK(c.threshold_t0 > 0.0);
        }
    }

    SECTION("known-noise detections cover the unknown-noise ones in most runs") {
        s.snr_db = {-8.0};
        s.crossing_profile = std::vector<double>(30, 1.0);
        int t0_hits = 0;
        int t1_hits = 0;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            s.seed = seed;
            for (const auto &c : run_crossing_demo(s)) {
                t0_hits += c.detect_t0 ? 1 : 0;
                t1_hits += c.detect_t1 ? 1 : 0;
            }
        }
        CHECK(t0_hits + 5 >= t1_hits);
    }
}

TEST_CASE("CSV and JSON output") {
    Scenario s = small_desk();
    s.trials = 50;
    const auto rows = run_sweep(s);

    std::ostringstream csv;
    write_csv(csv, rows);
    std::istringstream in(csv.str());
    std::string header;
    std::getline(in, header);
    const auto cols = split(header, ',');
    CHECK(cols.front() == "schema_version");
    CHECK(std::find(cols.begin(), cols.end(), "wall_time_s") == cols.end());
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        CHECK(split(line, ',').size() == cols.size());
        CHECK(line.rfind("1,", 0) == 0);
        ++lines;
    }
    CHECK(lines == static_cast<int>(rows.size()));

    std::ostringstream timed;
    write_csv(timed, rows, true);
    CHECK(timed.str().find("wall_time_s") != std::string::npos);

    std::ostringstream js;
    write_json(js, s, rows);
    const auto j = nlohmann::json::parse(js.str());
    CHECK(j["schema_version"] == kResultSchemaVersion);
    REQUIRE(j["rows"].size() == rows.size());
    CHECK(j["rows"][0]["trials"] == 50);
    CHECK(j["rows"][0].contains("empirical_pd"));
}

TEST_CASE("theoretical detection probability matches Monte Carlo at exact delays") {
    Scenario s = small_desk();
    s.snr_db = {-12.0, -9.0, -6.0};
    s.trials = 4000;
    for (const auto &r : run_sweep(s)) {
        CHECK(std::abs(r.empirical_pd - r.theoretical_pd) < 0.03);
        CHECK(r.delta0 == Approx(0.0).margin(1e-9));
    }
}
