#include "ionsim/cli/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace ionsim::cli {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError("config error at " + (path.empty() ? std::string("/") : path) + ": " + what);
}

// A key set to null counts as absent, so "eta_r": null selects the default.
const json* find(const json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return nullptr;
    return &*it;
}

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> known) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* k : known)
            if (item.key() == k) {
                ok = true;
                break;
            }
        if (!ok) fail(path + "/" + item.key(), "unknown key");
    }
}

double get_number(const json& obj, const char* key, const std::string& path, double fallback) {
    const json* j = find(obj, key);
    if (!j) return fallback;
    if (!j->is_number()) fail(path + "/" + key, "expected a number");
    return j->get<double>();
}

int get_int(const json& obj, const char* key, const std::string& path, int fallback) {
    const json* j = find(obj, key);
    if (!j) return fallback;
    if (!j->is_number_integer()) fail(path + "/" + key, "expected an integer");
    return j->get<int>();
}

bool get_bool(const json& obj, const char* key, const std::string& path, bool fallback) {
    const json* j = find(obj, key);
    if (!j) return fallback;
    if (!j->is_boolean()) fail(path + "/" + key, "expected a boolean");
    return j->get<bool>();
}

std::uint64_t get_u64(const json& obj, const char* key, const std::string& path,
                      std::uint64_t fallback) {
    const json* j = find(obj, key);
    if (!j) return fallback;
    if (!(j->is_number_unsigned() || (j->is_number_integer() && j->get<std::int64_t>() >= 0)))
        fail(path + "/" + key, "expected a non-negative integer");
    return j->get<std::uint64_t>();
}

std::string get_string(const json& obj, const char* key, const std::string& path,
                       const std::string& fallback) {
    const json* j = find(obj, key);
    if (!j) return fallback;
    if (!j->is_string()) fail(path + "/" + key, "expected a string");
    return j->get<std::string>();
}

// Enum fields: reuse the library parsers but report the config path.
template <typename Fn>
auto get_enum(const json& obj, const char* key, const std::string& path, Fn parse,
              decltype(parse(std::string{})) fallback) {
    const json* j = find(obj, key);
    if (!j) return fallback;
    if (!j->is_string()) fail(path + "/" + key, "expected a string");
    try {
        return parse(j->get<std::string>());
    } catch (const std::invalid_argument& e) {
        fail(path + "/" + key, e.what());
    }
}

std::vector<double> get_number_axis(const json& obj, const char* key, const std::string& path,
                                    const std::vector<double>& fallback, double min_exclusive) {
    const json* j = find(obj, key);
    if (!j) return fallback;
    if (!j->is_array()) fail(path + "/" + key, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(j->size());
    for (std::size_t i = 0; i < j->size(); ++i) {
        const json& e = (*j)[i];
        const std::string ep = path + "/" + key + "/" + std::to_string(i);
        if (!e.is_number()) fail(ep, "expected a number");
        const double x = e.get<double>();
        if (!(x > min_exclusive))
            fail(ep, "must be > " + std::to_string(min_exclusive));
        out.push_back(x);
    }
    return out;
}

std::vector<int> get_int_axis(const json& obj, const char* key, const std::string& path,
                              const std::vector<int>& fallback) {
    const json* j = find(obj, key);
    if (!j) return fallback;
    if (!j->is_array()) fail(path + "/" + key, "expected an array of integers");
    std::vector<int> out;
    out.reserve(j->size());
    for (std::size_t i = 0; i < j->size(); ++i) {
        const json& e = (*j)[i];
        const std::string ep = path + "/" + key + "/" + std::to_string(i);
        if (!e.is_number_integer()) fail(ep, "expected an integer");
        const int x = e.get<int>();
        if (x < 0) fail(ep, "must be >= 0");
        out.push_back(x);
    }
    return out;
}

void parse_mode(const json* m, RunConfig& cfg) {
    const std::string path = "/mode";
    bool eta_r_given = false;
    double eta_r = 0.0;
    if (m) {
        require_object(*m, path);
        check_keys(*m, path, {"eta", "eta_r", "k", "k_r", "sideband", "n_cm_max", "n_rel_max"});
        cfg.mode.eta = get_number(*m, "eta", path, cfg.mode.eta);
        if (const json* er = find(*m, "eta_r")) {
            if (!er->is_number()) fail(path + "/eta_r", "expected a number or null");
            eta_r_given = true;
            eta_r = er->get<double>();
        }
        cfg.mode.k = get_int(*m, "k", path, cfg.mode.k);
        cfg.mode.k_r = get_int(*m, "k_r", path, cfg.mode.k_r);
        cfg.mode.sideband =
            get_enum(*m, "sideband", path, [](const std::string& s) { return sideband_from_string(s); },
                     cfg.mode.sideband);
        cfg.mode.n_cm_max = get_int(*m, "n_cm_max", path, cfg.mode.n_cm_max);
        cfg.mode.n_rel_max = get_int(*m, "n_rel_max", path, cfg.mode.n_rel_max);
    }
    cfg.mode.eta_r = eta_r_given ? eta_r : default_eta_r(cfg.mode.eta);
}

void parse_drive(const json* d, RunConfig& cfg) {
    const std::string path = "/drive";
    double omega = cfg.drive.omega;
    double phi0 = cfg.drive.phi0;
    bool has_delta = false, has_factor = false;
    double delta = 0.0, factor = 40.0;
    if (d) {
        require_object(*d, path);
        check_keys(*d, path, {"omega", "delta", "delta_over_eta", "phi0"});
        omega = get_number(*d, "omega", path, omega);
        phi0 = get_number(*d, "phi0", path, phi0);
        has_delta = find(*d, "delta") != nullptr;
        has_factor = find(*d, "delta_over_eta") != nullptr;
        if (has_delta && has_factor)
            fail(path, "give exactly one of 'delta' and 'delta_over_eta'");
        if (has_delta) delta = get_number(*d, "delta", path, 0.0);
        if (has_factor) factor = get_number(*d, "delta_over_eta", path, factor);
    }
    if (!has_delta) {
        delta = factor * cfg.mode.eta * omega;
        if (!(delta > 0.0))
            fail(path + "/delta_over_eta",
                 "resolved delta = factor * eta * omega must be positive "
                 "(give 'delta' explicitly when omega == 0)");
    }
    cfg.drive = symmetric_drive(omega, delta, phi0);
}

void parse_evolve(const json* e, RunConfig& cfg) {
    const std::string path = "/evolve";
    if (!e) return;
    require_object(*e, path);
    check_keys(*e, path, {"tol", "h_init", "h_min", "renormalize"});
    cfg.evolve.tol = get_number(*e, "tol", path, cfg.evolve.tol);
    cfg.evolve.h_init = get_number(*e, "h_init", path, cfg.evolve.h_init);
    cfg.evolve.h_min = get_number(*e, "h_min", path, cfg.evolve.h_min);
    cfg.evolve.renormalize = get_bool(*e, "renormalize", path, cfg.evolve.renormalize);
    if (!(cfg.evolve.tol > 0.0)) fail(path + "/tol", "must be positive");
    if (cfg.evolve.h_init < 0.0) fail(path + "/h_init", "must be >= 0");
    if (cfg.evolve.h_min < 0.0) fail(path + "/h_min", "must be >= 0");
}

void parse_rabi(const json* r, RunConfig& cfg) {
    const std::string path = "/rabi";
    if (!r) return;
    require_object(*r, path);
    check_keys(*r, path, {"initial", "target", "horizon_areas", "t_max", "samples"});
    if (const json* ini = find(*r, "initial")) {
        const std::string ip = path + "/initial";
        require_object(*ini, ip);
        check_keys(*ini, ip, {"electronic", "n", "nr"});
        cfg.rabi.initial.electronic =
            get_enum(*ini, "electronic", ip,
                     [](const std::string& s) { return electronic_from_string(s); },
                     cfg.rabi.initial.electronic);
        cfg.rabi.initial.n = get_int(*ini, "n", ip, cfg.rabi.initial.n);
        cfg.rabi.initial.nr = get_int(*ini, "nr", ip, cfg.rabi.initial.nr);
    }
    if (const json* t = find(*r, "target")) {
        const std::string tp = path + "/target";
        require_object(*t, tp);
        check_keys(*t, tp, {"n", "nr"});
        cfg.rabi.target.n = get_int(*t, "n", tp, cfg.rabi.target.n);
        cfg.rabi.target.nr = get_int(*t, "nr", tp, cfg.rabi.target.nr);
    }
    cfg.rabi.horizon_areas = get_number(*r, "horizon_areas", path, cfg.rabi.horizon_areas);
    cfg.rabi.t_max = get_number(*r, "t_max", path, cfg.rabi.t_max);
    cfg.rabi.samples = get_int(*r, "samples", path, cfg.rabi.samples);
    if (!(cfg.rabi.horizon_areas > 0.0)) fail(path + "/horizon_areas", "must be positive");
    if (cfg.rabi.t_max < 0.0) fail(path + "/t_max", "must be >= 0");
    if (cfg.rabi.samples < 2) fail(path + "/samples", "must be >= 2");
    if (cfg.rabi.initial.n < 0 || cfg.rabi.initial.n >= cfg.mode.n_cm_max)
        fail(path + "/initial/n", "outside the CM truncation [0, n_cm_max)");
    if (cfg.rabi.initial.nr < 0 || cfg.rabi.initial.nr >= cfg.mode.n_rel_max)
        fail(path + "/initial/nr", "outside the relative truncation [0, n_rel_max)");
    if (cfg.rabi.target.n < 0) fail(path + "/target/n", "must be >= 0");
    if (cfg.rabi.target.nr < 0) fail(path + "/target/nr", "must be >= 0");
}

void parse_fock(const json* f, RunConfig& cfg) {
    const std::string path = "/fock";
    if (!f) return;
    require_object(*f, path);
    check_keys(*f, path, {"nbar", "transitions", "shots"});
    cfg.fock.nbar = get_number(*f, "nbar", path, cfg.fock.nbar);
    if (cfg.fock.nbar < 0.0) fail(path + "/nbar", "must be >= 0");
    cfg.fock.shots = get_int(*f, "shots", path, cfg.fock.shots);
    if (cfg.fock.shots < 0) fail(path + "/shots", "must be >= 0");
    if (const json* tr = find(*f, "transitions")) {
        const std::string tp = path + "/transitions";
        if (!tr->is_array()) fail(tp, "expected an array of [from, to] pairs");
        std::vector<std::pair<int, int>> steps;
        for (std::size_t i = 0; i < tr->size(); ++i) {
            const json& e = (*tr)[i];
            const std::string ep = tp + "/" + std::to_string(i);
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
                !e[1].is_number_integer())
                fail(ep, "expected a pair of integers [from, to]");
            const int from = e[0].get<int>(), to = e[1].get<int>();
            if (from < 0 || to <= from) fail(ep, "need 0 <= from < to");
            steps.emplace_back(from, to);
        }
        if (steps.empty()) fail(tp, "need at least one transition");
        cfg.fock.transitions = std::move(steps);
    }
}

void parse_magic_eta(const json* m, RunConfig& cfg) {
    const std::string path = "/magic_eta";
    if (!m) return;
    require_object(*m, path);
    check_keys(*m, path, {"levels", "brackets"});
    if (const json* lv = find(*m, "levels"))
        cfg.magic_eta.levels = get_int_axis(*m, "levels", path, cfg.magic_eta.levels);
    if (const json* br = find(*m, "brackets")) {
        const std::string bp = path + "/brackets";
        require_object(*br, bp);
        std::map<int, EtaBracket> brackets;
        for (const auto& item : br->items()) {
            const std::string ep = bp + "/" + item.key();
            int level = 0;
            try {
                std::size_t pos = 0;
                level = std::stoi(item.key(), &pos);
                if (pos != item.key().size() || level < 0) throw std::invalid_argument("");
            } catch (const std::exception&) {
                fail(ep, "key must be a non-negative integer level");
            }
            const json& e = item.value();
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                fail(ep, "expected [lo, hi]");
            const EtaBracket b{e[0].get<double>(), e[1].get<double>()};
            if (!(0.0 < b.lo && b.lo < b.hi)) fail(ep, "need 0 < lo < hi");
            brackets[level] = b;
        }
        cfg.magic_eta.brackets = std::move(brackets);
    }
}

void parse_scan(const json* s, RunConfig& cfg) {
    const std::string path = "/scan";
    if (!s) return;
    require_object(*s, path);
    check_keys(*s, path, {"observable", "grid", "model", "correction", "transfer_samples"});
    cfg.scan.observable = get_enum(
        *s, "observable", path, [](const std::string& v) { return scan_observable_from_string(v); },
        cfg.scan.observable);
    cfg.scan.model =
        get_enum(*s, "model", path, [](const std::string& v) { return dynamics_model_from_string(v); },
                 cfg.scan.model);
    cfg.scan.correction = get_enum(
        *s, "correction", path, [](const std::string& v) { return correction_mode_from_string(v); },
        cfg.scan.correction);
    if (cfg.scan.correction == CorrectionMode::manual)
        fail(path + "/correction", "manual correction is not supported in scans");
    cfg.scan.transfer_samples = get_int(*s, "transfer_samples", path, cfg.scan.transfer_samples);
    if (cfg.scan.transfer_samples < 2) fail(path + "/transfer_samples", "must be >= 2");
    if (const json* g = find(*s, "grid")) {
        const std::string gp = path + "/grid";
        require_object(*g, gp);
        check_keys(*g, gp, {"eta", "eta_r", "delta", "n", "nr"});
        cfg.scan.grid.eta = get_number_axis(*g, "eta", gp, cfg.scan.grid.eta, 0.0);
        cfg.scan.grid.eta_r = get_number_axis(*g, "eta_r", gp, cfg.scan.grid.eta_r, -1.0);
        cfg.scan.grid.delta = get_number_axis(*g, "delta", gp, cfg.scan.grid.delta, 0.0);
        cfg.scan.grid.n = get_int_axis(*g, "n", gp, cfg.scan.grid.n);
        cfg.scan.grid.nr = get_int_axis(*g, "nr", gp, cfg.scan.grid.nr);
        for (std::size_t i = 0; i < cfg.scan.grid.eta_r.size(); ++i)
            if (cfg.scan.grid.eta_r[i] < 0.0)
                fail(gp + "/eta_r/" + std::to_string(i), "must be >= 0");
    }
}

}  // namespace

double default_eta_r(double eta) { return eta * std::pow(3.0, -0.25); }

RunConfig default_config() {
    RunConfig c;
    c.mode.eta = 0.5;
    c.mode.eta_r = default_eta_r(c.mode.eta);
    c.mode.k = 1;
    c.mode.k_r = 0;
    c.mode.sideband = Sideband::blue;
    c.mode.n_cm_max = 10;
    c.mode.n_rel_max = 5;
    c.drive = symmetric_drive(1.0, 40.0 * c.mode.eta * 1.0, 0.0);
    return c;
}

RunConfig parse_config(const json& doc, const RunConfig& defaults) {
    require_object(doc, "");
    check_keys(doc, "",
               {"mode", "drive", "evolve", "correction", "manual_delta_sideband",
                "manual_delta_carrier", "model", "seed", "workers", "out", "rabi", "fock",
                "magic_eta", "scan"});
    RunConfig cfg = defaults;
    parse_mode(find(doc, "mode"), cfg);
    parse_drive(find(doc, "drive"), cfg);
    parse_evolve(find(doc, "evolve"), cfg);
    cfg.correction = get_enum(
        doc, "correction", "", [](const std::string& s) { return correction_mode_from_string(s); },
        cfg.correction);
    cfg.manual_delta_sideband =
        get_number(doc, "manual_delta_sideband", "", cfg.manual_delta_sideband);
    cfg.manual_delta_carrier = get_number(doc, "manual_delta_carrier", "", cfg.manual_delta_carrier);
    if (cfg.correction == CorrectionMode::manual) {
        if (!(cfg.manual_delta_sideband > 0.0))
            fail("/manual_delta_sideband", "must be positive when correction == \"manual\"");
        if (!(cfg.manual_delta_carrier > 0.0))
            fail("/manual_delta_carrier", "must be positive when correction == \"manual\"");
    }
    cfg.model =
        get_enum(doc, "model", "", [](const std::string& s) { return dynamics_model_from_string(s); },
                 cfg.model);
    cfg.seed = get_u64(doc, "seed", "", cfg.seed);
    cfg.workers = get_int(doc, "workers", "", cfg.workers);
    if (cfg.workers < 1) fail("/workers", "must be >= 1");
    cfg.out = get_string(doc, "out", "", cfg.out);
    if (cfg.out.empty()) fail("/out", "must be a non-empty path");
    parse_rabi(find(doc, "rabi"), cfg);
    parse_fock(find(doc, "fock"), cfg);
    parse_magic_eta(find(doc, "magic_eta"), cfg);
    parse_scan(find(doc, "scan"), cfg);
    try {
        cfg.mode.validate();
    } catch (const std::exception& e) {
        fail("/mode", e.what());
    }
    try {
        cfg.drive.validate();
    } catch (const std::exception& e) {
        fail("/drive", e.what());
    }
    return cfg;
}

json read_config_document(const std::string& path) {
    if (path.empty()) return json::object();
    std::string text;
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        text = ss.str();
    } else {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error in '" + path + "': " + e.what());
    }
}

void apply_overrides(RunConfig& cfg, const Overrides& o) {
    if (o.out) {
        if (o.out->empty()) fail("--out", "must be a non-empty path");
        cfg.out = *o.out;
    }
    if (o.seed) cfg.seed = *o.seed;
    if (o.workers) {
        if (*o.workers < 1) fail("--workers", "must be >= 1");
        cfg.workers = *o.workers;
    }
    if (o.tol) {
        if (!(*o.tol > 0.0)) fail("--tol", "must be positive");
        cfg.evolve.tol = *o.tol;
    }
}

json config_echo(const RunConfig& cfg) {
    json j;
    j["mode"] = {{"eta", cfg.mode.eta},
                 {"eta_r", cfg.mode.eta_r},
                 {"k", cfg.mode.k},
                 {"k_r", cfg.mode.k_r},
                 {"sideband", to_string(cfg.mode.sideband)},
                 {"n_cm_max", cfg.mode.n_cm_max},
                 {"n_rel_max", cfg.mode.n_rel_max}};
    j["drive"] = {{"omega", cfg.drive.omega}, {"delta", cfg.drive.delta}, {"phi0", cfg.drive.phi0}};
    j["evolve"] = {{"tol", cfg.evolve.tol},
                   {"h_init", cfg.evolve.h_init},
                   {"h_min", cfg.evolve.h_min},
                   {"renormalize", cfg.evolve.renormalize}};
    j["correction"] = to_string(cfg.correction);
    j["manual_delta_sideband"] = cfg.manual_delta_sideband;
    j["manual_delta_carrier"] = cfg.manual_delta_carrier;
    j["model"] = to_string(cfg.model);
    j["seed"] = cfg.seed;
    j["workers"] = cfg.workers;
    j["out"] = cfg.out;
    j["rabi"] = {{"initial",
                  {{"electronic", to_string(cfg.rabi.initial.electronic)},
                   {"n", cfg.rabi.initial.n},
                   {"nr", cfg.rabi.initial.nr}}},
                 {"target", {{"n", cfg.rabi.target.n}, {"nr", cfg.rabi.target.nr}}},
                 {"horizon_areas", cfg.rabi.horizon_areas},
                 {"t_max", cfg.rabi.t_max},
                 {"samples", cfg.rabi.samples}};
    json transitions = json::array();
    for (const auto& [from, to] : cfg.fock.transitions) transitions.push_back({from, to});
    j["fock"] = {{"nbar", cfg.fock.nbar}, {"transitions", transitions}, {"shots", cfg.fock.shots}};
    json brackets = json::object();
    for (const auto& [level, b] : cfg.magic_eta.brackets)
        brackets[std::to_string(level)] = {b.lo, b.hi};
    j["magic_eta"] = {{"levels", cfg.magic_eta.levels}, {"brackets", brackets}};
    j["scan"] = {{"observable", to_string(cfg.scan.observable)},
                 {"grid",
                  {{"eta", cfg.scan.grid.eta},
                   {"eta_r", cfg.scan.grid.eta_r},
                   {"delta", cfg.scan.grid.delta},
                   {"n", cfg.scan.grid.n},
                   {"nr", cfg.scan.grid.nr}}},
                 {"model", to_string(cfg.scan.model)},
                 {"correction", to_string(cfg.scan.correction)},
                 {"transfer_samples", cfg.scan.transfer_samples}};
    return j;
}

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace ionsim::cli
