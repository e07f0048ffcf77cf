// Command-line front end. Talks to the core exclusively through the C API of
// the shared library; CLI11 handles argument parsing and nlohmann/json the
// config plumbing.
//
// Exit codes: 0 success, 2 usage or config-schema error, 3 numerical failure
// (a failed library call, or more than 10% of trials flagged non-convergent).
#include <qnet/qnet.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

using nlohmann::json;

namespace {

constexpr const char* kCrlf = "\r\n";
constexpr double kPi = 3.14159265358979323846;
constexpr double kFlagFractionLimit = 0.10;  // above this, the run exits 3

std::string f17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

[[noreturn]] void fail_schema(const std::string& msg) {
    std::cerr << "config error: " << msg << "\n";
    std::exit(2);
}

// Library failures after schema validation are numerical failures.
void check_api(int rc, const std::string& what) {
    if (rc != QNET_OK) {
        std::cerr << what << " failed: " << qnet_last_error() << " (code " << rc << ")\n";
        std::exit(3);
    }
}

// The same call pattern while constructing user-described objects: a rejected
// value there is a schema problem, not a numerical one.
void check_schema(int rc, const std::string& what) {
    if (rc != QNET_OK) fail_schema(what + ": " + qnet_last_error());
}

// ---- run configuration ----------------------------------------------------

struct ProbeSpec {
    int kind = QNET_PROBE_FOCK;
    double param = 0.0;
};

struct SchemeSpec {
    std::vector<double> alphas;
    std::vector<double> splitting;  // entangled only
    std::vector<ProbeSpec> probes;  // one (entangled) or per sensor (separable)
};

struct SweepSpec {
    int axis_points = 5;
    double lo = 0.6;
    double hi = kPi - 0.6;
};

struct RunConfig {
    std::string command = "simulate";
    std::string experiment = "curve";  // curve | compare | sweep | fit_pipeline | sumvar
    std::string scheme = "ME";
    std::vector<double> v;
    std::vector<double> theta_true;  // defaults to pi/2 per sensor
    double n_T = 0.0;                // per-shot budget for the optimal builders
    std::optional<SchemeSpec> me, ms;
    int m = 100;
    std::vector<int> m_list;
    std::vector<double> N_T_list;
    int m_opt = 36;
    SweepSpec sweep;
    int trials = 200;
    std::uint64_t seed = 1234;
    int workers = 0;
    // fit command
    std::string input;
    std::string model = "ME";
    int dim = 2;
    std::string column;  // header name; empty means the second column
    // plumbing (never hashed or echoed)
    std::string out = "runs";
    std::string preset;
};

int probe_kind_from_name(const std::string& name) {
    static const std::map<std::string, int> kinds = {{"vacuum", QNET_PROBE_VACUUM},
                                                     {"fock", QNET_PROBE_FOCK},
                                                     {"coherent", QNET_PROBE_COHERENT},
                                                     {"squeezed", QNET_PROBE_SQUEEZED},
                                                     {"cat", QNET_PROBE_CAT}};
    const auto it = kinds.find(name);
    if (it == kinds.end()) fail_schema("unknown probe kind '" + name + "'");
    return it->second;
}

const char* probe_kind_name(int kind) {
    switch (kind) {
        case QNET_PROBE_VACUUM: return "vacuum";
        case QNET_PROBE_FOCK: return "fock";
        case QNET_PROBE_COHERENT: return "coherent";
        case QNET_PROBE_SQUEEZED: return "squeezed";
        default: return "cat";
    }
}

// ---- JSON schema ----------------------------------------------------------

double number_at(const json& j, const std::string& key) {
    if (!j.at(key).is_number()) fail_schema("'" + key + "' must be a number");
    return j.at(key).get<double>();
}

std::vector<double> number_list(const json& j, const std::string& key) {
    const json& a = j.at(key);
    if (!a.is_array() || a.empty()) fail_schema("'" + key + "' must be a non-empty array");
    std::vector<double> out;
    for (const auto& x : a) {
        if (!x.is_number()) fail_schema("'" + key + "' entries must be numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

ProbeSpec parse_probe(const json& j) {
    if (!j.is_object() || !j.contains("kind")) fail_schema("probe must be {\"kind\", \"param\"}");
    ProbeSpec p;
    p.kind = probe_kind_from_name(j.at("kind").get<std::string>());
    p.param = j.contains("param") ? number_at(j, "param") : 0.0;
    return p;
}

SchemeSpec parse_scheme_spec(const json& j, const std::string& key) {
    SchemeSpec s;
    if (!j.is_object()) fail_schema("'" + key + "' must be an object");
    for (const auto& [k, val] : j.items()) {
        (void)val;
        if (k != "alphas" && k != "splitting" && k != "probes")
            fail_schema("unknown key '" + k + "' in '" + key + "'");
    }
    if (j.contains("alphas")) s.alphas = number_list(j, "alphas");
    if (j.contains("splitting")) s.splitting = number_list(j, "splitting");
    if (j.contains("probes")) {
        for (const auto& p : j.at("probes")) s.probes.push_back(parse_probe(p));
    }
    return s;
}

void apply_json(RunConfig& rc, const json& j) {
    static const std::vector<std::string> known = {
        "experiment", "scheme", "v",     "theta_true", "n_T",   "me",    "ms",
        "m",          "m_list", "N_T_list", "m_opt",   "sweep", "trials", "seed",
        "workers",    "input",  "model",  "dim",       "column", "out"};
    if (!j.is_object()) fail_schema("configuration root must be a JSON object");
    for (const auto& [k, val] : j.items()) {
        (void)val;
        if (std::find(known.begin(), known.end(), k) == known.end())
            fail_schema("unknown configuration key '" + k + "'");
    }
    if (j.contains("experiment")) rc.experiment = j.at("experiment").get<std::string>();
    if (j.contains("scheme")) rc.scheme = j.at("scheme").get<std::string>();
    if (j.contains("v")) rc.v = number_list(j, "v");
    if (j.contains("theta_true")) rc.theta_true = number_list(j, "theta_true");
    if (j.contains("n_T")) rc.n_T = number_at(j, "n_T");
    if (j.contains("me")) rc.me = parse_scheme_spec(j.at("me"), "me");
    if (j.contains("ms")) rc.ms = parse_scheme_spec(j.at("ms"), "ms");
    if (j.contains("m")) rc.m = static_cast<int>(number_at(j, "m"));
    if (j.contains("m_list")) {
        rc.m_list.clear();
        for (double x : number_list(j, "m_list")) rc.m_list.push_back(static_cast<int>(x));
    }
    if (j.contains("N_T_list")) rc.N_T_list = number_list(j, "N_T_list");
    if (j.contains("m_opt")) rc.m_opt = static_cast<int>(number_at(j, "m_opt"));
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        if (!s.is_object()) fail_schema("'sweep' must be an object");
        if (s.contains("axis_points")) rc.sweep.axis_points = static_cast<int>(number_at(s, "axis_points"));
        if (s.contains("lo")) rc.sweep.lo = number_at(s, "lo");
        if (s.contains("hi")) rc.sweep.hi = number_at(s, "hi");
    }
    if (j.contains("trials")) rc.trials = static_cast<int>(number_at(j, "trials"));
    if (j.contains("seed")) rc.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("workers")) rc.workers = static_cast<int>(number_at(j, "workers"));
    if (j.contains("input")) rc.input = j.at("input").get<std::string>();
    if (j.contains("model")) rc.model = j.at("model").get<std::string>();
    if (j.contains("dim")) rc.dim = static_cast<int>(number_at(j, "dim"));
    if (j.contains("column")) rc.column = j.at("column").get<std::string>();
    if (j.contains("out")) rc.out = j.at("out").get<std::string>();
}

json scheme_spec_json(const SchemeSpec& s) {
    json j = json::object();
    if (!s.alphas.empty()) j["alphas"] = s.alphas;
    if (!s.splitting.empty()) j["splitting"] = s.splitting;
    if (!s.probes.empty()) {
        json probes = json::array();
        for (const auto& p : s.probes)
            probes.push_back({{"kind", probe_kind_name(p.kind)}, {"param", p.param}});
        j["probes"] = probes;
    }
    return j;
}

// Canonical resolved form: every knob the run depends on, nothing about where
// results land. Its compact dump feeds the config hash.
json resolved_json(const RunConfig& rc) {
    json j;
    j["command"] = rc.command;
    if (rc.command == "fit") {
        j["input"] = rc.input;
        j["model"] = rc.model;
        j["dim"] = rc.dim;
        j["m_opt"] = rc.m_opt;
        if (!rc.column.empty()) j["column"] = rc.column;
        return j;
    }
    if (rc.command == "simulate") j["experiment"] = rc.experiment;
    j["scheme"] = rc.scheme;
    j["v"] = rc.v;
    j["theta_true"] = rc.theta_true;
    if (rc.n_T > 0.0) j["n_T"] = rc.n_T;
    if (rc.me) j["me"] = scheme_spec_json(*rc.me);
    if (rc.ms) j["ms"] = scheme_spec_json(*rc.ms);
    if (rc.command == "bounds") {
        j["m"] = rc.m;
        return j;
    }
    if (rc.experiment == "sweep") {
        j["m"] = rc.m;
        j["sweep"] = {{"axis_points", rc.sweep.axis_points}, {"lo", rc.sweep.lo}, {"hi", rc.sweep.hi}};
    } else if (rc.experiment == "fit_pipeline") {
        j["N_T_list"] = rc.N_T_list;
        j["m_opt"] = rc.m_opt;
    } else {
        j["m_list"] = rc.m_list;
    }
    j["trials"] = rc.trials;
    j["seed"] = rc.seed;
    return j;
}

void validate(RunConfig& rc) {
    if (rc.command == "fit") {
        if (rc.input.empty()) fail_schema("fit needs an input CSV (--input or \"input\")");
        if (rc.model != "ME" && rc.model != "MS") fail_schema("model must be ME or MS");
        if (rc.dim < 1) fail_schema("dim must be at least 1");
        if (rc.m_opt < 1) fail_schema("m_opt must be at least 1");
        return;
    }
    if (rc.scheme != "ME" && rc.scheme != "MS") fail_schema("scheme must be ME or MS");
    if (rc.v.empty()) fail_schema("the weight vector 'v' is required");
    if (rc.v.size() > 16) fail_schema("at most 16 sensors are supported");
    const int d = static_cast<int>(rc.v.size());
    double l1 = 0.0;
    for (double x : rc.v) {
        if (!std::isfinite(x)) fail_schema("'v' entries must be finite");
        l1 += std::abs(x);
    }
    if (l1 == 0.0) fail_schema("'v' must not be all zeros");
    if (rc.theta_true.empty()) rc.theta_true.assign(d, kPi / 2.0);
    if (static_cast<int>(rc.theta_true.size()) != d)
        fail_schema("'theta_true' length must match 'v'");
    for (double t : rc.theta_true)
        if (!(t >= 0.0 && t <= kPi)) fail_schema("'theta_true' entries must lie in [0, pi]");
    const auto check_spec = [&](const SchemeSpec& s, bool entangled, const char* key) {
        if (static_cast<int>(s.alphas.size()) != d)
            fail_schema(std::string(key) + ".alphas length must match 'v'");
        if (entangled) {
            if (static_cast<int>(s.splitting.size()) != d)
                fail_schema(std::string(key) + ".splitting length must match 'v'");
            if (s.probes.size() != 1) fail_schema(std::string(key) + " needs exactly one probe");
        } else {
            if (!s.splitting.empty()) fail_schema(std::string(key) + " takes no splitting");
            if (static_cast<int>(s.probes.size()) != d)
                fail_schema(std::string(key) + " needs one probe per sensor");
        }
    };
    if (rc.me) check_spec(*rc.me, true, "me");
    if (rc.ms) check_spec(*rc.ms, false, "ms");
    if (rc.command == "bounds") {
        if (rc.m < 1) fail_schema("'m' must be at least 1");
        return;
    }
    static const std::vector<std::string> kinds = {"curve", "compare", "sweep", "fit_pipeline",
                                                   "sumvar"};
    if (std::find(kinds.begin(), kinds.end(), rc.experiment) == kinds.end())
        fail_schema("unknown experiment '" + rc.experiment + "'");
    if (rc.trials < 1) fail_schema("'trials' must be at least 1");
    if (rc.workers < 0) fail_schema("'workers' must be nonnegative");
    if (rc.experiment == "sweep") {
        if (rc.m < 1) fail_schema("'m' must be at least 1");
        if (rc.sweep.axis_points < 2) fail_schema("sweep.axis_points must be at least 2");
        if (!(rc.sweep.lo > 0.0 && rc.sweep.hi < kPi && rc.sweep.lo < rc.sweep.hi))
            fail_schema("sweep range must satisfy 0 < lo < hi < pi");
        double npts = 1.0;
        for (int j = 0; j < d; ++j) npts *= rc.sweep.axis_points;
        if (npts > 20000.0) fail_schema("sweep grid too large (limit 20000 points)");
    } else if (rc.experiment == "fit_pipeline") {
        if (rc.N_T_list.size() < 3) fail_schema("fit_pipeline needs at least 3 budgets");
        for (double N : rc.N_T_list)
            if (!(N > 0.0)) fail_schema("'N_T_list' entries must be positive");
        if (rc.m_opt < 1) fail_schema("'m_opt' must be at least 1");
        if (rc.me || rc.ms)
            fail_schema("fit_pipeline derives its configurations from the budget; "
                        "explicit 'me'/'ms' are not supported");
    } else {
        if (rc.m_list.empty()) rc.m_list.assign(1, rc.m);
        for (int m : rc.m_list)
            if (m < 1) fail_schema("'m_list' entries must be at least 1");
    }
}

// ---- presets --------------------------------------------------------------

const std::map<std::string, const char*>& preset_table() {
    static const std::map<std::string, const char*> presets = {
        {"fig2e", R"({
  "experiment": "curve",
  "scheme": "ME",
  "v": [0.5, -0.5],
  "n_T": 12.0,
  "theta_true": [1.5707963267948966, 1.5707963267948966],
  "m_list": [5, 10, 20, 50, 100],
  "trials": 500,
  "seed": 20250801,
  "workers": 0
})"},
        {"fig2f", R"({
  "experiment": "sweep",
  "scheme": "ME",
  "v": [0.5, -0.5],
  "n_T": 12.0,
  "m": 100,
  "sweep": {"axis_points": 5, "lo": 0.6, "hi": 2.541592653589793},
  "trials": 200,
  "seed": 20250802,
  "workers": 0
})"},
        {"fig3a", R"({
  "experiment": "compare",
  "v": [0.5, -0.5],
  "theta_true": [1.5707963267948966, 1.5707963267948966],
  "m_list": [10, 30, 100],
  "trials": 200,
  "seed": 20250803,
  "workers": 0,
  "me": {
    "alphas": [3.082207001484488, -3.082207001484488],
    "splitting": [0.5, 0.5],
    "probes": [{"kind": "fock", "param": 1}]
  },
  "ms": {
    "alphas": [3.082207001484488, -3.082207001484488],
    "probes": [{"kind": "fock", "param": 1}, {"kind": "fock", "param": 1}]
  }
})"},
        {"fig3b", R"({
  "experiment": "compare",
  "v": [0.5, -0.5],
  "n_T": 16.0,
  "theta_true": [1.5707963267948966, 1.5707963267948966],
  "m_list": [20, 50, 200],
  "trials": 500,
  "seed": 20250804,
  "workers": 0
})"},
        {"fig3c", R"({
  "experiment": "fit_pipeline",
  "v": [0.5, 0.5],
  "theta_true": [1.5707963267948966, 1.5707963267948966],
  "N_T_list": [288, 432, 576, 720],
  "m_opt": 36,
  "trials": 200,
  "seed": 20250805,
  "workers": 0
})"},
        {"fig3d", R"({
  "experiment": "fit_pipeline",
  "v": [0.33333333333333331, 0.33333333333333331, 0.33333333333333331],
  "theta_true": [1.5707963267948966, 1.5707963267948966, 1.5707963267948966],
  "N_T_list": [216, 432, 648],
  "m_opt": 36,
  "trials": 100,
  "seed": 20250806,
  "workers": 0
})"},
        {"sumvar", R"({
  "experiment": "sumvar",
  "v": [0.5, -0.5],
  "n_T": 16.0,
  "theta_true": [1.5707963267948966, 1.5707963267948966],
  "m_list": [50, 200],
  "trials": 300,
  "seed": 20250807,
  "workers": 0
})"},
    };
    return presets;
}

json load_preset(const std::string& name) {
    // A file on disk (so presets can be edited in place) wins over the
    // embedded copy; both ship with identical content.
    const char* dir = std::getenv("QNET_PRESET_DIR");
    const std::vector<std::string> candidates = {
        (dir && *dir ? std::string(dir) + "/" + name + ".json" : std::string()),
        "presets/" + name + ".json"};
    for (const auto& path : candidates) {
        if (path.empty()) continue;
        std::ifstream in(path);
        if (!in) continue;
        try {
            return json::parse(in);
        } catch (const json::exception& e) {
            fail_schema("preset file " + path + ": " + e.what());
        }
    }
    const auto it = preset_table().find(name);
    if (it == preset_table().end()) {
        std::string names;
        for (const auto& [k, v] : preset_table()) {
            (void)v;
            names += names.empty() ? k : ", " + k;
        }
        fail_schema("unknown preset '" + name + "' (available: " + names + ")");
    }
    return json::parse(it->second);
}

// ---- output plumbing ------------------------------------------------------

struct Echo {
    json config;
    std::string hash;
};

Echo make_echo(const RunConfig& rc) {
    Echo e;
    e.config = resolved_json(rc);
    e.hash = fnv1a_hex(e.config.dump());
    return e;
}

std::string metadata_line(const Echo& e) {
    return std::string("# version=") + qnet_version() + ",hash=" + e.hash +
           ",config=" + e.config.dump() + kCrlf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        std::cerr << "cannot open " << path << " for writing\n";
        std::exit(1);
    }
    out << content;
    if (!out) {
        std::cerr << "write to " << path << " failed\n";
        std::exit(1);
    }
}

json summary_skeleton(const RunConfig& rc, const Echo& e) {
    json j;
    j["version"] = qnet_version();
    j["hash"] = e.hash;
    j["config"] = e.config;
    if (!rc.preset.empty()) j["preset"] = rc.preset;
    return j;
}

std::string run_name(const RunConfig& rc) { return rc.preset.empty() ? "run" : rc.preset; }

// ---- handle helpers -------------------------------------------------------

struct ConfigHandle {
    qnet_config* h = nullptr;
    ConfigHandle() = default;
    ConfigHandle(ConfigHandle&& o) noexcept : h(o.h) { o.h = nullptr; }
    ConfigHandle& operator=(ConfigHandle&& o) noexcept {
        std::swap(h, o.h);
        return *this;
    }
    ConfigHandle(const ConfigHandle&) = delete;
    ~ConfigHandle() { qnet_config_free(h); }
};

struct QfimHandle {
    qnet_qfim* h = nullptr;
    QfimHandle() = default;
    QfimHandle(const QfimHandle&) = delete;
    ~QfimHandle() { qnet_qfim_free(h); }
};

// Builds the network for one scheme: an explicit description when the config
// provides one, otherwise the budget-optimal family at n_T.
ConfigHandle build_network(const RunConfig& rc, const std::string& scheme) {
    const int d = static_cast<int>(rc.v.size());
    ConfigHandle out;
    const std::optional<SchemeSpec>& spec = scheme == "ME" ? rc.me : rc.ms;
    if (spec) {
        if (scheme == "ME") {
            check_schema(qnet_config_me(spec->alphas.data(), spec->splitting.data(), d,
                                        spec->probes[0].kind, spec->probes[0].param, &out.h),
                         "entangled configuration");
        } else {
            std::vector<int> kinds;
            std::vector<double> params;
            for (const auto& p : spec->probes) {
                kinds.push_back(p.kind);
                params.push_back(p.param);
            }
            check_schema(qnet_config_ms(spec->alphas.data(), d, kinds.data(), params.data(), &out.h),
                         "separable configuration");
        }
        return out;
    }
    if (!(rc.n_T > 0.0))
        fail_schema("either an explicit 'me'/'ms' description or a positive 'n_T' is required");
    if (scheme == "ME")
        check_schema(qnet_optimal_me_config(rc.v.data(), d, rc.n_T, &out.h),
                     "entangled configuration");
    else
        check_schema(qnet_optimal_ms_config(rc.v.data(), d, rc.n_T, &out.h),
                     "separable configuration");
    return out;
}

json config_facts(const qnet_config* cfg) {
    double nc = 0, n = 0, total = 0;
    check_api(qnet_config_photons(cfg, &nc, &n, &total), "photon accounting");
    return json{{"reference_photons", nc}, {"probe_photons", n}, {"total_photons", total}};
}

// ---- commands -------------------------------------------------------------

json matrix_json(const double* M, int d) {
    json rows = json::array();
    for (int i = 0; i < d; ++i) {
        json row = json::array();
        for (int j = 0; j < d; ++j) row.push_back(M[i * d + j]);
        rows.push_back(row);
    }
    return rows;
}

int cmd_bounds(RunConfig& rc) {
    const Echo echo = make_echo(rc);
    const int d = static_cast<int>(rc.v.size());
    ConfigHandle cfg = build_network(rc, rc.scheme);

    QfimHandle F;
    check_api(qnet_qfim_compute(cfg.h, &F.h), "information matrix");
    std::vector<double> M(d * d), inv(d * d);
    check_api(qnet_qfim_matrix(F.h, M.data()), "information matrix");
    check_api(qnet_qfim_inverse(F.h, inv.data()), "information-matrix inverse");

    double qcrb = 0, sumvar = 0, kappa = 0;
    check_api(qnet_qcrb(F.h, rc.v.data(), rc.m, &qcrb), "variance bound");
    check_api(qnet_sum_of_variances_bound(F.h, rc.m, &sumvar), "sum-of-variances bound");
    check_api(qnet_qfim_kappa(F.h, &kappa), "kappa");

    double nc = 0, n = 0, total = 0;
    check_api(qnet_config_photons(cfg.h, &nc, &n, &total), "photon accounting");

    double l1 = 0.0;
    for (double x : rc.v) l1 += std::abs(x);
    std::vector<double> vn(rc.v);
    for (double& x : vn) x /= l1;
    double g = 0;
    check_api(qnet_gain(vn.data(), d, &g), "gain");

    json out = summary_skeleton(rc, echo);
    out["photons"] = config_facts(cfg.h);
    out["qfim"] = matrix_json(M.data(), d);
    out["qfim_inverse"] = matrix_json(inv.data(), d);
    out["qcrb"] = qcrb;
    out["sum_of_variances_bound"] = sumvar;
    out["kappa"] = kappa;
    out["gain"] = g;

    double msb = 0;
    check_api(qnet_ms_optimal_bound(rc.v.data(), d, total, rc.m, &msb), "separable optimum");
    out["separable_optimal_bound"] = msb;
    if (rc.scheme == "ME") {
        double var_p = 1.0;
        int count = 0;
        check_api(qnet_config_probe_moments(cfg.h, nullptr, &var_p, &count), "probe moments");
        double bg = 0;
        check_api(qnet_bound_general(nc, n, var_p, rc.m, rc.v.data(), d, &bg),
                  "entangled optimum");
        out["entangled_optimal_bound"] = bg;
        std::vector<double> alphas(d), split(d);
        double achieved = 0;
        check_api(qnet_me_allocation(rc.v.data(), d, nc, n, var_p, alphas.data(), split.data(),
                                     &achieved),
                  "entangled allocation");
        out["entangled_allocation"] = {
            {"alphas", alphas}, {"splitting", split}, {"achieved_bound", achieved / rc.m}};
    }
    {
        std::vector<double> alphas(d), totals(d), probe(d);
        double achieved = 0;
        check_api(qnet_ms_allocation_norm(rc.v.data(), d, total, alphas.data(), totals.data(),
                                          probe.data(), &achieved),
                  "separable allocation");
        out["separable_allocation"] = {{"alphas", alphas},
                                       {"totals", totals},
                                       {"probe_photons", probe},
                                       {"achieved_bound", achieved / rc.m}};
    }

    const std::string text = out.dump(2) + "\n";
    std::cout << text;
    write_file(std::filesystem::path(rc.out) / (run_name(rc) + "_bounds.json"), text);
    return 0;
}

struct FlagTally {
    long flagged = 0;
    long trials = 0;
    void add(int f, int t) {
        flagged += f;
        trials += t;
    }
    // Too many non-convergent searches means the numbers cannot be trusted.
    int exit_code() const {
        if (trials > 0 && flagged > kFlagFractionLimit * trials) {
            std::cerr << "numerical failure: " << flagged << "/" << trials
                      << " trials flagged non-convergent (limit "
                      << static_cast<int>(kFlagFractionLimit * 100) << "%)\n";
            return 3;
        }
        return 0;
    }
};

int cmd_simulate(RunConfig& rc) {
    const Echo echo = make_echo(rc);
    const int d = static_cast<int>(rc.v.size());
    json summary = summary_skeleton(rc, echo);
    summary["experiment"] = rc.experiment;
    std::string csv = metadata_line(echo);
    FlagTally tally;
    json results = json::array();

    if (rc.experiment == "curve") {
        ConfigHandle cfg = build_network(rc, rc.scheme);
        QfimHandle F;
        check_api(qnet_qfim_compute(cfg.h, &F.h), "information matrix");
        summary["photons"] = config_facts(cfg.h);
        // Second projection row: the same weights with all signs made positive.
        std::vector<double> vs(rc.v);
        for (double x : rc.v) vs.push_back(std::abs(x));
        csv += "m,msf_v,qcrb_v,msf_abs,qcrb_abs,flagged" + std::string(kCrlf);
        for (std::size_t i = 0; i < rc.m_list.size(); ++i) {
            const int m = rc.m_list[i];
            double msf[2], bias[2], q[2];
            int flagged = 0;
            check_api(qnet_run_experiment(cfg.h, rc.theta_true.data(), vs.data(), 2, m, rc.trials,
                                          rc.seed + i, rc.workers, msf, bias, &flagged, nullptr),
                      "estimation run");
            check_api(qnet_qcrb(F.h, vs.data(), m, &q[0]), "variance bound");
            check_api(qnet_qcrb(F.h, vs.data() + d, m, &q[1]), "variance bound");
            tally.add(flagged, rc.trials);
            csv += std::to_string(m) + "," + f17(msf[0]) + "," + f17(q[0]) + "," + f17(msf[1]) +
                   "," + f17(q[1]) + "," + std::to_string(flagged) + kCrlf;
            results.push_back({{"m", m},
                               {"seed", rc.seed + i},
                               {"msf_v", msf[0]},
                               {"qcrb_v", q[0]},
                               {"msf_abs", msf[1]},
                               {"qcrb_abs", q[1]},
                               {"bias_v", bias[0]},
                               {"flagged", flagged}});
            std::cerr << run_name(rc) << ": m=" << m << " msf=" << msf[0] << " qcrb=" << q[0]
                      << " flagged=" << flagged << "/" << rc.trials << "\n";
        }
    } else if (rc.experiment == "compare") {
        ConfigHandle me = build_network(rc, "ME");
        ConfigHandle ms = build_network(rc, "MS");
        QfimHandle Fme, Fms;
        check_api(qnet_qfim_compute(me.h, &Fme.h), "information matrix");
        check_api(qnet_qfim_compute(ms.h, &Fms.h), "information matrix");
        summary["photons_me"] = config_facts(me.h);
        summary["photons_ms"] = config_facts(ms.h);
        csv += "m,msf_me,qcrb_me,msf_ms,qcrb_ms,flagged_me,flagged_ms" + std::string(kCrlf);
        for (std::size_t i = 0; i < rc.m_list.size(); ++i) {
            const int m = rc.m_list[i];
            double msf_me = 0, msf_ms = 0, bias = 0, q_me = 0, q_ms = 0;
            int fl_me = 0, fl_ms = 0;
            check_api(qnet_run_experiment(me.h, rc.theta_true.data(), rc.v.data(), 1, m, rc.trials,
                                          rc.seed + 2 * i, rc.workers, &msf_me, &bias, &fl_me,
                                          nullptr),
                      "entangled estimation run");
            check_api(qnet_run_experiment(ms.h, rc.theta_true.data(), rc.v.data(), 1, m, rc.trials,
                                          rc.seed + 2 * i + 1, rc.workers, &msf_ms, &bias, &fl_ms,
                                          nullptr),
                      "separable estimation run");
            check_api(qnet_qcrb(Fme.h, rc.v.data(), m, &q_me), "variance bound");
            check_api(qnet_qcrb(Fms.h, rc.v.data(), m, &q_ms), "variance bound");
            tally.add(fl_me + fl_ms, 2 * rc.trials);
            csv += std::to_string(m) + "," + f17(msf_me) + "," + f17(q_me) + "," + f17(msf_ms) +
                   "," + f17(q_ms) + "," + std::to_string(fl_me) + "," + std::to_string(fl_ms) +
                   kCrlf;
            results.push_back({{"m", m},
                               {"msf_me", msf_me},
                               {"qcrb_me", q_me},
                               {"msf_ms", msf_ms},
                               {"qcrb_ms", q_ms},
                               {"flagged_me", fl_me},
                               {"flagged_ms", fl_ms}});
            std::cerr << run_name(rc) << ": m=" << m << " msf_me=" << msf_me
                      << " msf_ms=" << msf_ms << "\n";
        }
    } else if (rc.experiment == "sweep") {
        ConfigHandle cfg = build_network(rc, rc.scheme);
        summary["photons"] = config_facts(cfg.h);
        std::vector<double> axis(rc.sweep.axis_points);
        for (int i = 0; i < rc.sweep.axis_points; ++i)
            axis[i] = rc.sweep.lo +
                      (rc.sweep.hi - rc.sweep.lo) * i / (rc.sweep.axis_points - 1);
        // Full-factorial grid, last axis fastest.
        std::vector<double> pts;
        std::vector<int> idx(d, 0);
        int k = 0;
        for (;;) {
            for (int j = 0; j < d; ++j) pts.push_back(axis[idx[j]]);
            ++k;
            int j = d - 1;
            while (j >= 0 && ++idx[j] == rc.sweep.axis_points) idx[j--] = 0;
            if (j < 0) break;
        }
        std::vector<double> msf(k), norm(k);
        std::vector<int> boundary(k);
        check_api(qnet_theta_sweep(cfg.h, rc.v.data(), rc.m, pts.data(), k, rc.trials, rc.seed,
                                   rc.workers, msf.data(), norm.data(), boundary.data()),
                  "phase sweep");
        std::string header;
        for (int j = 0; j < d; ++j) header += "theta_" + std::to_string(j + 1) + ",";
        csv += header + "msf,normalized,boundary" + kCrlf;
        for (int i = 0; i < k; ++i) {
            std::string row;
            for (int j = 0; j < d; ++j) row += f17(pts[i * d + j]) + ",";
            csv += row + f17(msf[i]) + "," + f17(norm[i]) + "," + std::to_string(boundary[i]) +
                   kCrlf;
            results.push_back({{"theta", std::vector<double>(pts.begin() + i * d,
                                                             pts.begin() + (i + 1) * d)},
                               {"msf", msf[i]},
                               {"normalized", norm[i]},
                               {"boundary", boundary[i] != 0}});
        }
        std::cerr << run_name(rc) << ": " << k << " grid points, m=" << rc.m << "\n";
    } else if (rc.experiment == "fit_pipeline") {
        const int npts = static_cast<int>(rc.N_T_list.size());
        std::vector<double> nT(npts), msf_me(npts), msf_ms(npts);
        csv += "N_T,n_T,msf_me,msf_ms,flagged_me,flagged_ms" + std::string(kCrlf);
        for (int i = 0; i < npts; ++i) {
            const double NT = rc.N_T_list[i];
            nT[i] = NT;
            const double per_shot = NT / rc.m_opt;
            ConfigHandle me, ms;
            check_api(qnet_optimal_me_config(rc.v.data(), d, per_shot, &me.h),
                      "entangled configuration");
            check_api(qnet_optimal_ms_config(rc.v.data(), d, per_shot, &ms.h),
                      "separable configuration");
            double bias = 0;
            int fl_me = 0, fl_ms = 0;
            check_api(qnet_run_experiment(me.h, rc.theta_true.data(), rc.v.data(), 1, rc.m_opt,
                                          rc.trials, rc.seed + 2 * i, rc.workers, &msf_me[i],
                                          &bias, &fl_me, nullptr),
                      "entangled estimation run");
            check_api(qnet_run_experiment(ms.h, rc.theta_true.data(), rc.v.data(), 1, rc.m_opt,
                                          rc.trials, rc.seed + 2 * i + 1, rc.workers, &msf_ms[i],
                                          &bias, &fl_ms, nullptr),
                      "separable estimation run");
            tally.add(fl_me + fl_ms, 2 * rc.trials);
            csv += f17(NT) + "," + f17(per_shot) + "," + f17(msf_me[i]) + "," + f17(msf_ms[i]) +
                   "," + std::to_string(fl_me) + "," + std::to_string(fl_ms) + kCrlf;
            results.push_back({{"N_T", NT},
                               {"n_T", per_shot},
                               {"msf_me", msf_me[i]},
                               {"msf_ms", msf_ms[i]},
                               {"flagged_me", fl_me},
                               {"flagged_ms", fl_ms}});
            std::cerr << run_name(rc) << ": N_T=" << NT << " msf_me=" << msf_me[i]
                      << " msf_ms=" << msf_ms[i] << "\n";
        }
        for (const char* scheme : {"ME", "MS"}) {
            const bool is_me = std::strcmp(scheme, "ME") == 0;
            double gamma = 0, residual = 0;
            char* fit_text = nullptr;
            check_api(qnet_fit_gamma(nT.data(), is_me ? msf_me.data() : msf_ms.data(), npts,
                                     rc.m_opt, d, is_me ? QNET_SCHEME_ME : QNET_SCHEME_MS, &gamma,
                                     &residual, &fit_text),
                      "decay-model fit");
            summary[is_me ? "fit_me" : "fit_ms"] = json::parse(fit_text);
            qnet_string_free(fit_text);
            std::cerr << run_name(rc) << ": gamma_" << (is_me ? "me" : "ms") << "=" << gamma
                      << "\n";
        }
    } else {  // sumvar
        ConfigHandle me = build_network(rc, "ME");
        ConfigHandle ms = build_network(rc, "MS");
        QfimHandle Fme, Fms;
        check_api(qnet_qfim_compute(me.h, &Fme.h), "information matrix");
        check_api(qnet_qfim_compute(ms.h, &Fms.h), "information matrix");
        summary["photons_me"] = config_facts(me.h);
        summary["photons_ms"] = config_facts(ms.h);
        csv += "m,sumvar_me,bound_me,sumvar_ms,bound_ms" + std::string(kCrlf);
        for (std::size_t i = 0; i < rc.m_list.size(); ++i) {
            const int m = rc.m_list[i];
            double sv_me = 0, sv_ms = 0, b_me = 0, b_ms = 0;
            check_api(qnet_sum_of_variances_experiment(me.h, rc.theta_true.data(), m, rc.trials,
                                                       rc.seed + 2 * i, rc.workers, &sv_me),
                      "entangled estimation run");
            check_api(qnet_sum_of_variances_experiment(ms.h, rc.theta_true.data(), m, rc.trials,
                                                       rc.seed + 2 * i + 1, rc.workers, &sv_ms),
                      "separable estimation run");
            check_api(qnet_sum_of_variances_bound(Fme.h, m, &b_me), "sum-of-variances bound");
            check_api(qnet_sum_of_variances_bound(Fms.h, m, &b_ms), "sum-of-variances bound");
            csv += std::to_string(m) + "," + f17(sv_me) + "," + f17(b_me) + "," + f17(sv_ms) +
                   "," + f17(b_ms) + kCrlf;
            results.push_back({{"m", m},
                               {"sumvar_me", sv_me},
                               {"bound_me", b_me},
                               {"sumvar_ms", sv_ms},
                               {"bound_ms", b_ms}});
            std::cerr << run_name(rc) << ": m=" << m << " sumvar_me=" << sv_me
                      << " sumvar_ms=" << sv_ms << "\n";
        }
    }

    summary["results"] = results;
    const std::filesystem::path dir(rc.out);
    const std::string name = run_name(rc);
    write_file(dir / (name + ".csv"), csv);
    summary["files"] = {name + ".csv"};  // names only, so the summary does not
                                         // depend on where it was written
    write_file(dir / (name + "_summary.json"), summary.dump(2) + "\n");
    std::cerr << "wrote " << (dir / (name + ".csv")).string() << " and "
              << (dir / (name + "_summary.json")).string() << "\n";
    return tally.exit_code();
}

int cmd_fit(RunConfig& rc) {
    const Echo echo = make_echo(rc);
    std::ifstream in(rc.input);
    if (!in) fail_schema("cannot open input CSV '" + rc.input + "'");
    std::vector<double> nT, msf;
    std::string line;
    int target_col = 1;
    bool header_seen = false;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (fields.size() < 2) fail_schema("input CSV rows need at least two columns");
        char* end = nullptr;
        const double first = std::strtod(fields[0].c_str(), &end);
        if (end == fields[0].c_str() || *end != '\0') {
            // Header row: resolve the requested column by name.
            if (header_seen) fail_schema("malformed input CSV row: " + line);
            header_seen = true;
            if (!rc.column.empty()) {
                target_col = -1;
                for (std::size_t i = 0; i < fields.size(); ++i)
                    if (fields[i] == rc.column) target_col = static_cast<int>(i);
                if (target_col < 0)
                    fail_schema("column '" + rc.column + "' not found in input CSV header");
            }
            continue;
        }
        if (!rc.column.empty() && !header_seen)
            fail_schema("--column given but the input CSV has no header row");
        if (target_col >= static_cast<int>(fields.size()))
            fail_schema("input CSV rows need at least " + std::to_string(target_col + 1) +
                        " columns");
        const double y = std::strtod(fields[target_col].c_str(), &end);
        if (end == fields[target_col].c_str() || *end != '\0')
            fail_schema("malformed number in input CSV: " + fields[target_col]);
        nT.push_back(first);
        msf.push_back(y);
    }
    if (nT.size() < 3) fail_schema("fit needs at least 3 data rows");

    double gamma = 0, residual = 0;
    char* fit_text = nullptr;
    check_api(qnet_fit_gamma(nT.data(), msf.data(), static_cast<int>(nT.size()), rc.m_opt, rc.dim,
                             rc.model == "ME" ? QNET_SCHEME_ME : QNET_SCHEME_MS, &gamma, &residual,
                             &fit_text),
              "decay-model fit");
    json out = summary_skeleton(rc, echo);
    out["fit"] = json::parse(fit_text);
    qnet_string_free(fit_text);
    out["points"] = nT.size();

    const std::string text = out.dump(2) + "\n";
    std::cout << text;
    write_file(std::filesystem::path(rc.out) / (run_name(rc) + "_fit.json"), text);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Photonic sensor-network toolkit: variance bounds, optimal resource "
                 "allocations, and maximum-likelihood simulations"};
    app.require_subcommand(1);

    struct CommonFlags {
        std::string config, preset, out;
        std::uint64_t seed = 0;
        int workers = -1;
        bool print_config = false;
    };
    auto common = std::make_shared<CommonFlags>();
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common->config, "JSON run configuration file");
        sub->add_option("--preset", common->preset, "named built-in configuration");
        sub->add_option("--seed", common->seed, "RNG seed (QNET_SEED overrides)");
        sub->add_option("--workers", common->workers, "worker threads (0 = all cores)");
        sub->add_option("--out", common->out, "output directory (default: runs)");
        sub->add_flag("--print-config", common->print_config,
                      "print the resolved configuration and exit");
    };
    CLI::App* bounds = app.add_subcommand("bounds", "closed-form variance bounds and allocations");
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo estimation experiments");
    CLI::App* fit = app.add_subcommand("fit", "fit the information decay model to a results CSV");
    add_common(bounds);
    add_common(simulate);
    add_common(fit);
    std::string fit_input, fit_model, fit_column;
    int fit_dim = 0, fit_m_opt = 0;
    fit->add_option("--input", fit_input, "CSV of (N_T, msf) points");
    fit->add_option("--model", fit_model, "decay model: ME or MS");
    fit->add_option("--dim", fit_dim, "number of sensors the data came from");
    fit->add_option("--m-opt", fit_m_opt, "shots per trial used for the data");
    fit->add_option("--column", fit_column, "msf column name in the input header");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    RunConfig rc;
    rc.command = app.get_subcommands().front()->get_name();
    if (!common->preset.empty()) {
        rc.preset = common->preset;
        apply_json(rc, load_preset(common->preset));
    }
    if (!common->config.empty()) {
        std::ifstream in(common->config);
        if (!in) fail_schema("cannot open config file '" + common->config + "'");
        try {
            apply_json(rc, json::parse(in));
        } catch (const json::exception& e) {
            fail_schema(std::string("config file: ") + e.what());
        }
    }
    if (rc.command == "fit") {
        if (!fit_input.empty()) rc.input = fit_input;
        if (!fit_model.empty()) rc.model = fit_model;
        if (fit_dim > 0) rc.dim = fit_dim;
        if (fit_m_opt > 0) rc.m_opt = fit_m_opt;
        if (!fit_column.empty()) rc.column = fit_column;
    }
    const CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--seed")) rc.seed = common->seed;
    if (common->workers >= 0) rc.workers = common->workers;
    if (!common->out.empty()) rc.out = common->out;
    if (const char* env = std::getenv("QNET_SEED"); env && *env) {
        char* end = nullptr;
        const unsigned long long s = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0') fail_schema("QNET_SEED must be an unsigned integer");
        rc.seed = s;
    }
    validate(rc);

    if (common->print_config) {
        std::cout << resolved_json(rc).dump(2) << "\n";
        return 0;
    }
    if (rc.command == "bounds") return cmd_bounds(rc);
    if (rc.command == "fit") return cmd_fit(rc);
    return cmd_simulate(rc);
}
