#include "fsdetect/scenario_io.hpp"

#include "fsdetect/error.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace fsd {

namespace {

struct Value {
    enum class Kind { number, string, boolean, array } kind = Kind::number;
    std::string text; // number token or string contents
    bool flag = false;
    std::vector<Value> items;
};

class Parser {
public:
    Parser(const std::string &src, std::size_t line) : src_(src), line_(line) {}

    Value parse_value() {
        skip_ws();
        if (pos_ >= src_.size()) {
            fail("missing value");
        }
        const char c = src_[pos_];
        Value v;
        if (c == '[') {
            ++pos_;
            v.kind = Value::Kind::array;
            skip_ws();
            if (peek() == ']') {
                ++pos_;
                return v;
            }
            while (true) {
                v.items.push_back(parse_value());
                if (v.items.back().kind == Value::Kind::array) {
                    fail("nested arrays are not supported");
                }
                skip_ws();
                if (peek() == ',') {
                    ++pos_;
                    continue;
                }
                if (peek() == ']') {
                    ++pos_;
                    return v;
                }
                fail("expected ',' or ']' in array");
            }
        }
        if (c == '"') {
            ++pos_;
            v.kind = Value::Kind::string;
            while (pos_ < src_.size() && src_[pos_] != '"') {
                v.text.push_back(src_[pos_++]);
            }
            if (pos_ >= src_.size()) {
                fail("unterminated string");
            }
            ++pos_;
            return v;
        }
        std::string word;
        while (pos_ < src_.size() && !std::isspace(static_cast<unsigned char>(src_[pos_])) && src_[pos_] != ',' &&
               src_[pos_] != ']') {
            word.push_back(src_[pos_++]);
        }
        if (word == "true" || word == "false") {
            v.kind = Value::Kind::boolean;
            v.flag = word == "true";
            return v;
        }
        char *end = nullptr;
        std::strtod(word.c_str(), &end);
        if (word.empty() || end != word.c_str() + word.size()) {
            fail("cannot parse value '" + word + "'");
        }
        v.kind = Value::Kind::number;
        v.text = word;
        return v;
    }

    void expect_end() {
        skip_ws();
        if (pos_ < src_.size()) {
            fail("trailing characters after value");
        }
    }

private:
    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
            ++pos_;
        }
    }
    char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }
    [[noreturn]] void fail(const std::string &what) const {
        throw ConfigError("line " + std::to_string(line_) + ": " + what);
    }

    const std::string &src_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

std::string strip_comment(const std::string &line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') {
            in_string = !in_string;
        } else if (line[i] == '#' && !in_string) {
            return line.substr(0, i);
        }
    }
    return line;
}

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double as_number(const std::string &key, const Value &v) {
    if (v.kind != Value::Kind::number) {
        throw ConfigError("key '" + key + "' expects a number");
    }
    const double x = std::strtod(v.text.c_str(), nullptr);
    if (!std::isfinite(x)) {
        throw ConfigError("key '" + key + "' must be finite");
    }
    return x;
}

std::uint64_t as_count(const std::string &key, const Value &v) {
    if (v.kind != Value::Kind::number) {
        throw ConfigError("key '" + key + "' expects a non-negative integer");
    }
    std::size_t used = 0;
    unsigned long long n = 0;
    try {
        n = std::stoull(v.text, &used);
    } catch (const std::exception &) {
        used = 0;
    }
    if (used != v.text.size() || v.text.front() == '-') {
        throw ConfigError("key '" + key + "' expects a non-negative integer, got '" + v.text + "'");
    }
    return n;
}

std::string as_string(const std::string &key, const Value &v) {
    if (v.kind != Value::Kind::string) {
        throw ConfigError("key '" + key + "' expects a quoted string");
    }
    return v.text;
}

bool as_bool(const std::string &key, const Value &v) {
    if (v.kind != Value::Kind::boolean) {
        throw ConfigError("key '" + key + "' expects true or false");
    }
    return v.flag;
}

/// Scalars are accepted where a list is expected.
std::vector<Value> as_list(const Value &v) {
    return v.kind == Value::Kind::array ? v.items : std::vector<Value>{v};
}

std::vector<double> number_list(const std::string &key, const Value &v) {
    std::vector<double> out;
    for (const auto &item : as_list(v)) {
        out.push_back(as_number(key, item));
    }
    return out;
}

std::vector<std::size_t> count_list(const std::string &key, const Value &v) {
    std::vector<std::size_t> out;
    for (const auto &item : as_list(v)) {
        out.push_back(static_cast<std::size_t>(as_count(key, item)));
    }
    return out;
}

const std::set<std::string> &known_keys() {
    static const std::set<std::string> keys = {
        "name",
        "channel_preset",
        "duration_s",
        "center_frequency_hz",
        "bandwidth_hz",
        "sample_rate_hz",
        "fft_size",
        "snr_db",
        "sdr_db",
        "estimated_paths",
        "detectors",
        "pfa",
        "trials",
        "seed",
        "delay_mode",
        "calibration_snr_db",
        "target_present",
        "noise_domain",
        "wrelax_convergence_tol",
        "wrelax_max_inner_iters",
        "wrelax_refine_resolution",
        "crossing_profile",
        "direct_delays_s",
        "direct_gains",
        "direct_phases_rad",
        "scattered_delays_s",
        "scattered_gains",
        "scattered_phases_rad",
    };
    return keys;
}

PathSet explicit_paths(const std::string &group, const std::map<std::string, Value> &kv) {
    const auto delays = number_list(group + "_delays_s", kv.at(group + "_delays_s"));
    std::vector<double> gains(delays.size(), 1.0);
    std::vector<double> phases(delays.size(), 0.0);
    if (auto it = kv.find(group + "_gains"); it != kv.end()) {
        gains = number_list(it->first, it->second);
    }
    if (auto it = kv.find(group + "_phases_rad"); it != kv.end()) {
        phases = number_list(it->first, it->second);
    }
    if (gains.size() != delays.size() || phases.size() != delays.size()) {
        throw ConfigError(group + " delays, gains and phases must have equal lengths");
    }
    CVector amps(static_cast<Eigen::Index>(delays.size()));
    for (std::size_t k = 0; k < delays.size(); ++k) {
        amps(static_cast<Eigen::Index>(k)) = std::polar(gains[k], phases[k]);
    }
    try {
        return PathSet(std::move(amps), delays);
    } catch (const Error &e) {
        throw ConfigError(group + " paths: " + e.what());
    }
}

std::string fmt(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

} // namespace

Scenario parse_scenario(const std::string &text) {
    std::map<std::string, Value> kv;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        if (!known_keys().count(key)) {
            throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
        if (kv.count(key)) {
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        const std::string rhs = line.substr(eq + 1);
        Parser p(rhs, line_no);
        Value v = p.parse_value();
        p.expect_end();
        kv.emplace(key, std::move(v));
    }

    Scenario sc = desk_scenario();
    const std::string preset = kv.count("channel_preset") ? as_string("channel_preset", kv.at("channel_preset"))
                                                          : std::string("desk");
    if (preset == "paper_like") {
        sc = paper_like_scenario();
    } else if (preset != "desk") {
        const auto paths = channel_preset(preset);
        sc = paper_like_scenario();
        sc.name = preset;
        sc.direct = paths.direct;
        sc.scattered = paths.scattered;
    }

    for (const auto &[key, v] : kv) {
        if (key == "name") {
            sc.name = as_string(key, v);
        } else if (key == "duration_s") {
            sc.waveform.duration = as_number(key, v);
        } else if (key == "center_frequency_hz") {
            sc.waveform.center_frequency = as_number(key, v);
        } else if (key == "bandwidth_hz") {
            sc.waveform.bandwidth = as_number(key, v);
        } else if (key == "sample_rate_hz") {
            sc.waveform.sample_rate = as_number(key, v);
        } else if (key == "fft_size") {
            sc.fft_sizes = count_list(key, v);
        } else if (key == "snr_db") {
            sc.snr_db = number_list(key, v);
        } else if (key == "sdr_db") {
            sc.sdr_db = number_list(key, v);
        } else if (key == "estimated_paths") {
            sc.estimated_paths = count_list(key, v);
        } else if (key == "detectors") {
            sc.detectors.clear();
            for (const auto &item : as_list(v)) {
                sc.detectors.push_back(statistic_kind_from_string(as_string(key, item)));
            }
        } else if (key == "pfa") {
            sc.pfa = number_list(key, v);
        } else if (key == "trials") {
            sc.trials = static_cast<std::size_t>(as_count(key, v));
        } else if (key == "seed") {
            sc.seed = as_count(key, v);
        } else if (key == "delay_mode") {
            sc.delay_mode = delay_mode_from_string(as_string(key, v));
        } else if (key == "calibration_snr_db") {
            sc.calibration_snr_db = as_number(key, v);
        } else if (key == "target_present") {
            sc.target_present = as_bool(key, v);
        } else if (key == "noise_domain") {
            const auto d = as_string(key, v);
            if (d == "frequency") {
                sc.noise_domain = NoiseDomain::frequency;
            } else if (d == "time") {
                sc.noise_domain = NoiseDomain::time;
            } else {
                throw ConfigError("noise_domain must be \"frequency\" or \"time\"");
            }
        } else if (key == "wrelax_convergence_tol") {
            sc.wrelax.convergence_tol = as_number(key, v);
        } else if (key == "wrelax_max_inner_iters") {
            sc.wrelax.max_inner_iters = static_cast<std::size_t>(as_count(key, v));
        } else if (key == "wrelax_refine_resolution") {
            sc.wrelax.refine_resolution = as_number(key, v);
        } else if (key == "crossing_profile") {
            sc.crossing_profile = number_list(key, v);
        }
    }

    for (const std::string group : {"direct", "scattered"}) {
        const bool has_delays = kv.count(group + "_delays_s") > 0;
        const bool has_extras = kv.count(group + "_gains") > 0 || kv.count(group + "_phases_rad") > 0;
        if (has_extras && !has_delays) {
            throw ConfigError(group + "_gains/_phases_rad given without " + group + "_delays_s");
        }
        if (has_delays) {
            (group == "direct" ? sc.direct : sc.scattered) = explicit_paths(group, kv);
        }
    }

    try {
        sc.validate();
    } catch (const ConfigError &) {
        throw;
    } catch (const Error &e) {
        throw ConfigError(e.what());
    }
    return sc;
}

Scenario load_scenario(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open scenario file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

void write_csv(std::ostream &os, const std::vector<ResultRow> &rows, bool with_timing) {
    os << "schema_version,snr_db,sdr_db,paths,fft_size,detector,pfa_target,threshold,dof_v,dof_r,"
          "empirical_pfa,empirical_pd,theoretical_pfa,theoretical_pd,delta0,delta1,lambda0,lambda1,"
          "mean_h0,std_h0,mean_h1,std_h1,trials,failures,precision_warning";
    if (with_timing) {
        os << ",wall_time_s";
    }
    os << '\n';
    for (const auto &r : rows) {
        os << kResultSchemaVersion << ',' << fmt(r.snr_db) << ',' << fmt(r.sdr_db) << ',' << r.paths << ','
           << r.fft_size << ',' << to_string(r.detector) << ',' << fmt(r.pfa_target) << ',' << fmt(r.threshold)
           << ',' << r.dof_v << ',' << r.dof_r << ',' << fmt(r.empirical_pfa) << ',' << fmt(r.empirical_pd) << ','
           << fmt(r.theoretical_pfa) << ',' << fmt(r.theoretical_pd) << ',' << fmt(r.delta0) << ','
           << fmt(r.delta1) << ',' << fmt(r.lambda0) << ',' << fmt(r.lambda1) << ',' << fmt(r.mean_h0) << ','
           << fmt(r.std_h0) << ',' << fmt(r.mean_h1) << ',' << fmt(r.std_h1) << ',' << r.trials << ','
           << r.failures << ',' << (r.precision_warning ? 1 : 0);
        if (with_timing) {
            os << ',' << fmt(r.wall_time_s);
        }
        os << '\n';
    }
}

void write_json(std::ostream &os, const Scenario &scenario, const std::vector<ResultRow> &rows, bool with_timing) {
    nlohmann::ordered_json doc;
    doc["schema_version"] = kResultSchemaVersion;
    doc["scenario"] = scenario.name;
    doc["seed"] = scenario.seed;
    doc["delay_mode"] = to_string(scenario.delay_mode);
    auto &out = doc["rows"] = nlohmann::ordered_json::array();
    for (const auto &r : rows) {
        nlohmann::ordered_json j;
        j["snr_db"] = r.snr_db;
        j["sdr_db"] = r.sdr_db;
        j["paths"] = r.paths;
        j["fft_size"] = r.fft_size;
        j["detector"] = to_string(r.detector);
        j["pfa_target"] = r.pfa_target;
        j["threshold"] = r.threshold;
        j["dof_v"] = r.dof_v;
        j["dof_r"] = r.dof_r;
        j["empirical_pfa"] = r.empirical_pfa;
        j["empirical_pd"] = r.empirical_pd;
        j["theoretical_pfa"] = r.theoretical_pfa;
        j["theoretical_pd"] = r.theoretical_pd;
        j["delta0"] = r.delta0;
        j["delta1"] = r.delta1;
        j["lambda0"] = r.lambda0;
        j["lambda1"] = r.lambda1;
        j["mean_h0"] = r.mean_h0;
        j["std_h0"] = r.std_h0;
        j["mean_h1"] = r.mean_h1;
        j["std_h1"] = r.std_h1;
        j["trials"] = r.trials;
        j["failures"] = r.failures;
        j["precision_warning"] = r.precision_warning;
        if (with_timing) {
            j["wall_time_s"] = r.wall_time_s;
        }
        out.push_back(std::move(j));
    }
    os << doc.dump(2) << '\n';
}

void write_crossing_csv(std::ostream &os, const std::vector<CrossingSample> &samples) {
    os << "schema_version,pulse,scale,t0,t1,threshold_t0,threshold_t1,detect_t0,detect_t1,failed\n";
    for (const auto &c : samples) {
        os << kResultSchemaVersion << ',' << c.pulse << ',' << fmt(c.scale) << ',' << fmt(c.t0.value) << ','
           << fmt(c.t1.value) << ',' << fmt(c.threshold_t0) << ',' << fmt(c.threshold_t1) << ','
           << (c.detect_t0 ? 1 : 0) << ',' << (c.detect_t1 ? 1 : 0) << ',' << (c.failed ? 1 : 0) << '\n';
    }
}

} // namespace fsd
