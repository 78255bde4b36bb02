// Config parsing/validation, output-file format invariants, and bit-exact
// reproducibility of the command-line runners.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ionsim/cli/config.hpp"
#include "ionsim/cli/runners.hpp"

namespace fs = std::filesystem;

using ionsim::cli::apply_overrides;
using ionsim::cli::cmd_magic_eta;
using ionsim::cli::cmd_protocol;
using ionsim::cli::cmd_rabi;
using ionsim::cli::cmd_scan;
using ionsim::cli::config_echo;
using ionsim::cli::ConfigError;
using ionsim::cli::default_config;
using ionsim::cli::default_eta_r;
using ionsim::cli::format_double;
using ionsim::cli::json;
using ionsim::cli::Overrides;
using ionsim::cli::parse_config;
using ionsim::cli::read_config_document;
using ionsim::cli::RunConfig;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / "ionsim_cli_tests" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE_MESSAGE(bool(f), "cannot read " << p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : text) {
        if (c == '\n') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// Quote-aware CSV field splitter (error cells may contain commas).
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

template <typename Fn>
std::string config_error_of(Fn&& fn) {
    try {
        fn();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

bool mentions(const std::string& message, const std::string& needle) {
    return message.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("cli_default_config_resolves_the_documented_rules") {
    const RunConfig c = default_config();
    CHECK(c.mode.eta == 0.5);
    CHECK(c.mode.eta_r == default_eta_r(0.5));
    CHECK(c.drive.delta == 40.0 * 0.5 * 1.0);
    CHECK(c.drive.delta_sideband == c.drive.delta);
    CHECK(c.drive.delta_carrier == c.drive.delta);
    CHECK(c.mode.n_cm_max == 10);
    CHECK(c.mode.n_rel_max == 5);
    CHECK(c.workers == 1);
    CHECK(c.seed == 1);
    CHECK_NOTHROW(c.mode.validate());
    CHECK_NOTHROW(c.drive.validate());

    // The empty document parses to exactly the defaults.
    const RunConfig parsed = parse_config(json::object());
    CHECK(config_echo(parsed) == config_echo(c));
}

TEST_CASE("cli_config_derivation_rules") {
    SUBCASE("eta override re-derives eta_r and delta") {
        const RunConfig c = parse_config(json::parse(R"({"mode": {"eta": 0.3}})"));
        CHECK(c.mode.eta == 0.3);
        CHECK(c.mode.eta_r == default_eta_r(0.3));
        CHECK(c.drive.delta == 40.0 * 0.3 * 1.0);
    }
    SUBCASE("delta_over_eta scales with omega") {
        const RunConfig c = parse_config(
            json::parse(R"({"mode": {"eta": 0.3}, "drive": {"omega": 0.7, "delta_over_eta": 40}})"));
        CHECK(c.drive.delta == 40.0 * 0.3 * 0.7);
    }
    SUBCASE("explicit values win") {
        const RunConfig c = parse_config(
            json::parse(R"({"mode": {"eta": 0.3, "eta_r": 0.11}, "drive": {"delta": 7.5}})"));
        CHECK(c.mode.eta_r == 0.11);
        CHECK(c.drive.delta == 7.5);
        CHECK(c.drive.delta_sideband == 7.5);
    }
    SUBCASE("null eta_r selects the default") {
        const RunConfig c = parse_config(json::parse(R"({"mode": {"eta": 0.4, "eta_r": null}})"));
        CHECK(c.mode.eta_r == default_eta_r(0.4));
    }
}

TEST_CASE("cli_config_rejections_name_the_offending_field") {
    auto parse = [](const char* text) { return parse_config(json::parse(text)); };

    CHECK(mentions(config_error_of([&] { parse(R"({"bogus": 1})"); }), "/bogus"));
    CHECK(mentions(config_error_of([&] { parse(R"({"mode": {"etaa": 1}})"); }), "/mode/etaa"));
    CHECK(mentions(config_error_of([&] { parse(R"({"mode": {"eta": "big"}})"); }), "/mode/eta"));
    CHECK(mentions(
        config_error_of([&] { parse(R"({"drive": {"delta": 10, "delta_over_eta": 40}})"); }),
        "exactly one of"));
    CHECK(mentions(config_error_of([&] { parse(R"({"drive": {"omega": "x"}})"); }),
                   "/drive/omega"));
    CHECK(mentions(config_error_of([&] { parse(R"({"drive": {"omega": 0}})"); }),
                   "/drive/delta_over_eta"));
    CHECK(mentions(config_error_of([&] { parse(R"({"workers": 0})"); }), "/workers"));
    CHECK(mentions(config_error_of([&] { parse(R"({"evolve": {"tol": 0}})"); }), "/evolve/tol"));
    CHECK(mentions(config_error_of([&] { parse(R"({"rabi": {"samples": 1}})"); }),
                   "/rabi/samples"));
    CHECK(mentions(config_error_of([&] { parse(R"({"rabi": {"initial": {"n": 10}}})"); }),
                   "/rabi/initial/n"));
    CHECK(mentions(config_error_of([&] { parse(R"({"fock": {"transitions": []}})"); }),
                   "/fock/transitions"));
    CHECK(mentions(config_error_of([&] { parse(R"({"fock": {"transitions": [[3]]}})"); }),
                   "/fock/transitions/0"));
    CHECK(mentions(config_error_of([&] { parse(R"({"fock": {"transitions": [[3, 3]]}})"); }),
                   "/fock/transitions/0"));
    CHECK(mentions(config_error_of([&] { parse(R"({"magic_eta": {"brackets": {"x": [1, 2]}}})"); }),
                   "/magic_eta/brackets/x"));
    CHECK(mentions(
        config_error_of([&] { parse(R"({"magic_eta": {"brackets": {"1": [0.4]}}})"); }),
        "/magic_eta/brackets/1"));
    CHECK(mentions(config_error_of([&] { parse(R"({"scan": {"observable": "hue"}})"); }),
                   "/scan/observable"));
    CHECK(mentions(config_error_of([&] { parse(R"({"scan": {"correction": "manual"}})"); }),
                   "/scan/correction"));
    CHECK(mentions(config_error_of([&] { parse(R"({"scan": {"grid": {"n": [0, -1]}}})"); }),
                   "/scan/grid/n/1"));
    CHECK(mentions(config_error_of([&] { parse(R"({"correction": "manual"})"); }),
                   "/manual_delta_sideband"));
    CHECK(mentions(config_error_of([&] { parse(R"({"mode": {"n_cm_max": 2}})"); }), "/mode"));

    // Overrides are validated the same way.
    RunConfig cfg = default_config();
    Overrides bad;
    bad.tol = 0.0;
    CHECK(mentions(config_error_of([&] { apply_overrides(cfg, bad); }), "--tol"));
}

TEST_CASE("cli_config_echo_round_trips") {
    const json doc = json::parse(R"({
        "mode": {"eta": 0.37, "k": 1, "k_r": 2, "sideband": "red",
                 "n_cm_max": 8, "n_rel_max": 6},
        "drive": {"omega": 0.9, "delta_over_eta": 35, "phi0": 0.25},
        "evolve": {"tol": 1e-9},
        "correction": "none",
        "model": "effective",
        "seed": 987654321,
        "workers": 3,
        "out": "somewhere/else",
        "rabi": {"initial": {"electronic": "du", "n": 2, "nr": 1},
                 "target": {"n": 1, "nr": 0}, "horizon_areas": 1.5, "samples": 33},
        "fock": {"nbar": 2.5, "transitions": [[2, 3]], "shots": 5},
        "magic_eta": {"levels": [0, 4], "brackets": {"4": [0.2, 0.5]}},
        "scan": {"observable": "g_eff", "grid": {"eta": [0.3, 0.4], "n": [0, 1]},
                 "model": "effective", "correction": "stark", "transfer_samples": 64}
    })");
    const RunConfig cfg = parse_config(doc);
    CHECK(cfg.mode.eta_r == default_eta_r(0.37));
    CHECK(cfg.drive.delta == 35.0 * 0.37 * 0.9);
    CHECK(cfg.magic_eta.brackets.at(4).lo == 0.2);
    CHECK(cfg.scan.grid.eta.size() == 2);
    CHECK(cfg.scan.grid.eta_r.empty());  // left for run-time singleton fill

    const json echo = config_echo(cfg);
    const RunConfig again = parse_config(echo);
    CHECK(config_echo(again) == echo);
    CHECK(again.drive.delta == cfg.drive.delta);
    CHECK(again.mode.eta_r == cfg.mode.eta_r);
    CHECK(again.seed == cfg.seed);
}

TEST_CASE("cli_format_double_round_trips") {
    for (const double x : {1.0 / 3.0, 0.1, 1e-17, 12345.678901234567, 2.0, 0.0,
                           5.1435275967771675e-01, 1.2345678901234567e+100}) {
        const std::string s = format_double(x);
        CHECK(std::strtod(s.c_str(), nullptr) == x);
    }
}

TEST_CASE("cli_read_config_document_errors") {
    CHECK(mentions(config_error_of([] { read_config_document("/nonexistent/nowhere.json"); }),
                   "cannot open"));
    const fs::path dir = fresh_dir("badjson");
    const fs::path bad = dir / "bad.json";
    {
        std::ofstream f(bad);
        f << "{ not json";
    }
    CHECK(mentions(config_error_of([&] { read_config_document(bad.string()); }), "parse error"));
    CHECK(read_config_document("") == json::object());
}

TEST_CASE("cli_magic_eta_runner_writes_results_and_flags_failures") {
    SUBCASE("successful levels") {
        const fs::path dir = fresh_dir("magic_ok");
        RunConfig cfg = parse_config(json::parse(R"({"magic_eta": {"levels": [1, 2]}})"));
        cfg.out = dir.string();
        CHECK(cmd_magic_eta(cfg) == 0);
        const std::string text = slurp(dir / "magic_eta.json");
        CHECK(text.rfind("{\n  \"config\":", 0) == 0);  // echo header leads the file
        const json doc = json::parse(text);
        REQUIRE(doc["results"].size() == 2);
        CHECK(doc["results"][0]["n"] == 1);
        CHECK(doc["results"][0]["eta"].get<double>() ==
              doctest::Approx(0.514352759677716753575).epsilon(1e-9));
        CHECK(doc["results"][1]["eta"].get<double>() ==
              doctest::Approx(0.416671588891635949394).epsilon(1e-9));
        CHECK(std::abs(doc["results"][0]["residual"].get<double>()) < 1e-12);
    }
    SUBCASE("a failing bracket is recorded per entry and fails the run") {
        const fs::path dir = fresh_dir("magic_bad");
        RunConfig cfg = parse_config(
            json::parse(R"({"magic_eta": {"levels": [1, 2], "brackets": {"1": [0.6, 0.7]}}})"));
        cfg.out = dir.string();
        CHECK(cmd_magic_eta(cfg) == 1);
        const json doc = json::parse(slurp(dir / "magic_eta.json"));
        REQUIRE(doc["results"].size() == 2);
        CHECK(doc["results"][0].contains("error"));
        CHECK(!doc["results"][1].contains("error"));  // the scan continues past failures
    }
    SUBCASE("an empty level list succeeds with empty results") {
        const fs::path dir = fresh_dir("magic_empty");
        RunConfig cfg = parse_config(json::parse(R"({"magic_eta": {"levels": []}})"));
        cfg.out = dir.string();
        CHECK(cmd_magic_eta(cfg) == 0);
        const json doc = json::parse(slurp(dir / "magic_eta.json"));
        CHECK(doc["results"].is_array());
        CHECK(doc["results"].empty());
    }
}

namespace {

json small_rabi_doc(const std::string& out) {
    json doc = json::parse(R"({
        "mode": {"eta": 0.5, "n_cm_max": 6, "n_rel_max": 2},
        "model": "effective",
        "rabi": {"samples": 13}
    })");
    doc["out"] = out;
    return doc;
}

}  // namespace

TEST_CASE("cli_rabi_runner_emits_csv_with_config_echo_header") {
    const fs::path dir = fresh_dir("rabi");
    const RunConfig cfg = parse_config(small_rabi_doc(dir.string()));
    REQUIRE(cmd_rabi(cfg, /*gnuplot=*/true) == 0);

    const std::string text = slurp(dir / "rabi_trajectory.csv");
    const std::vector<std::string> lines = lines_of(text);
    REQUIRE(lines.size() == 2 + 13);  // echo + header + requested rows
    CHECK(lines[0].rfind("# {", 0) == 0);
    CHECK(lines[1] == "t,pop_dd_0_0,pop_uu_1_0,pop_dd,pop_du,pop_ud,pop_uu,norm");

    const json echo = json::parse(lines[0].substr(2));
    CHECK(echo["rabi"]["samples"] == 13);

    // Time axis: uniform from 0 to the two-pi-time horizon.
    const json summary = json::parse(slurp(dir / "rabi_summary.json"));
    const double horizon = summary["horizon"].get<double>();
    const double t_pi = summary["t_pi"].get<double>();
    CHECK(horizon == doctest::Approx(2.0 * t_pi).epsilon(1e-14));
    const auto first_row = split_csv(lines[2]);
    const auto last_row = split_csv(lines.back());
    CHECK(std::strtod(first_row[0].c_str(), nullptr) == 0.0);
    CHECK(std::strtod(last_row[0].c_str(), nullptr) == doctest::Approx(horizon).epsilon(1e-12));
    // A pi-time in, the transfer is essentially complete.
    CHECK(summary["max_pop_up"].get<double>() > 0.999);
    for (const auto& line : {lines[2], lines.back()}) {
        const auto fields = split_csv(line);
        REQUIRE(fields.size() == 8);
        const double norm = std::strtod(fields[7].c_str(), nullptr);
        CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
    }

    // The gnuplot companion references the CSV.
    CHECK(mentions(slurp(dir / "rabi_plot.gp"), "rabi_trajectory.csv"));

    // Reproducibility: re-running from the echoed config (file deleted in
    // between) restores both files byte for byte.
    const std::string summary_text = slurp(dir / "rabi_summary.json");
    fs::remove_all(dir);
    const RunConfig again = parse_config(echo);
    REQUIRE(cmd_rabi(again) == 0);
    CHECK(slurp(dir / "rabi_trajectory.csv") == text);
    CHECK(slurp(dir / "rabi_summary.json") == summary_text);
}

TEST_CASE("cli_rabi_flat_trajectory_without_drive") {
    const fs::path dir = fresh_dir("rabi_flat");
    json doc = json::parse(R"({
        "mode": {"eta": 0.5, "n_cm_max": 6, "n_rel_max": 2},
        "drive": {"omega": 0, "delta": 20},
        "rabi": {"t_max": 5, "samples": 6}
    })");
    doc["out"] = dir.string();
    const RunConfig cfg = parse_config(doc);
    REQUIRE(cmd_rabi(cfg) == 0);
    const std::vector<std::string> lines = lines_of(slurp(dir / "rabi_trajectory.csv"));
    REQUIRE(lines.size() == 2 + 6);
    for (std::size_t i = 2; i < lines.size(); ++i) {
        const auto fields = split_csv(lines[i]);
        CHECK(std::strtod(fields[1].c_str(), nullptr) == 1.0);  // survival stays exactly 1
        CHECK(std::strtod(fields[2].c_str(), nullptr) == 0.0);
    }

    // Without an explicit horizon the vanishing coupling is a config error.
    json bad = doc;
    bad["rabi"].erase("t_max");
    CHECK(mentions(config_error_of([&] { cmd_rabi(parse_config(bad)); }), "/rabi/t_max"));
}

TEST_CASE("cli_scan_runner_singleton_grid_matches_direct_evaluation") {
    const fs::path dir = fresh_dir("scan_single");
    json doc = json::parse(R"({"mode": {"eta": 0.5, "n_cm_max": 6, "n_rel_max": 2}})");
    doc["out"] = dir.string();
    const RunConfig cfg = parse_config(doc);
    REQUIRE(cmd_scan(cfg) == 0);

    const std::vector<std::string> lines = lines_of(slurp(dir / "scan.csv"));
    REQUIRE(lines.size() == 3);  // echo + header + one row
    CHECK(lines[1] ==
          "index,eta,eta_r,delta,n,nr,shift_down,shift_up,mismatch,delta_sideband,delta_carrier,"
          "error");
    const auto fields = split_csv(lines[2]);
    REQUIRE(fields.size() == 12);
    CHECK(fields[0] == "0");
    CHECK(fields[11].empty());

    // Cross-check against the light-shift table evaluated directly.
    const ionsim::StarkShiftTable table = ionsim::stark_shift_table(cfg.mode, cfg.drive);
    CHECK(std::strtod(fields[6].c_str(), nullptr) == doctest::Approx(table.down(0, 0)).epsilon(1e-15));
    CHECK(std::strtod(fields[7].c_str(), nullptr) == doctest::Approx(table.up(0, 0)).epsilon(1e-15));
    CHECK(std::strtod(fields[8].c_str(), nullptr) ==
          doctest::Approx(table.pair_mismatch(0, 0)).epsilon(1e-15));

    // The echoed config names the filled singleton grid.
    const json echo = json::parse(lines[0].substr(2));
    CHECK(echo["scan"]["grid"]["eta"] == json::array({0.5}));
    CHECK(echo["scan"]["grid"]["delta"] == json::array({cfg.drive.delta}));
}

TEST_CASE("cli_scan_runner_records_row_errors_and_worker_count_does_not_change_data") {
    const fs::path dir = fresh_dir("scan_err");
    json doc = json::parse(R"({
        "mode": {"eta": 0.5, "n_cm_max": 6, "n_rel_max": 2},
        "scan": {"observable": "g_eff", "grid": {"n": [0, 9]}}
    })");
    doc["out"] = dir.string();
    const RunConfig cfg = parse_config(doc);
    CHECK(cmd_scan(cfg) == 1);  // the out-of-truncation row fails the run...

    const std::vector<std::string> lines = lines_of(slurp(dir / "scan.csv"));
    REQUIRE(lines.size() == 4);  // ...but both rows are still written
    const auto good = split_csv(lines[2]);
    const auto bad = split_csv(lines[3]);
    REQUIRE(good.size() == 9);  // index + 5 parameters + 2 values + error
    REQUIRE(bad.size() == 9);
    CHECK(good[8].empty());
    CHECK(!bad[8].empty());
    CHECK(bad[6].empty());  // failed rows carry no values

    // Worker count must not change any data row.
    const fs::path dir4 = fresh_dir("scan_err4");
    json doc4 = doc;
    doc4["out"] = dir4.string();
    doc4["workers"] = 4;
    CHECK(cmd_scan(parse_config(doc4)) == 1);
    const std::vector<std::string> lines4 = lines_of(slurp(dir4 / "scan.csv"));
    REQUIRE(lines4.size() == lines.size());
    for (std::size_t i = 1; i < lines.size(); ++i) CHECK(lines4[i] == lines[i]);
}

TEST_CASE("cli_protocol_fock_runner_reports_and_reruns_bit_exactly") {
    const fs::path dir = fresh_dir("fock");
    json doc = json::parse(R"({
        "mode": {"eta": 0.3, "n_cm_max": 12, "n_rel_max": 2},
        "model": "effective",
        "seed": 7,
        "fock": {"nbar": 1.0, "transitions": [[1, 2]], "shots": 8}
    })");
    doc["out"] = dir.string();
    const RunConfig cfg = parse_config(doc);
    REQUIRE(cmd_protocol(cfg, "fock") == 0);

    const std::string report_text = slurp(dir / "fock_report.json");
    CHECK(report_text.rfind("{\n  \"config\":", 0) == 0);
    const json report = json::parse(report_text);
    REQUIRE(report["stages"].size() == 1);
    CHECK(report["stages"][0]["kept"] == "uu");
    CHECK(report["stages"][0]["kept_cm_level"] == 2);
    const double joint = report["joint_probability"].get<double>();
    CHECK(joint == doctest::Approx(report["stages"][0]["kept_probability"].get<double>()));
    CHECK(joint > 0.0);
    CHECK(joint <= 1.0);
    CHECK(report["final_fock_fidelity"].get<double>() > 0.9);
    REQUIRE(report["measurement"]["record"].size() == 8);
    int survived = 0;
    for (const auto& shot : report["measurement"]["record"])
        survived += shot["kept_chain"].get<bool>() ? 1 : 0;
    CHECK(report["measurement"]["survived"] == survived);

    const std::vector<std::string> lines = lines_of(slurp(dir / "fock_distributions.csv"));
    REQUIRE(lines.size() == 2 + 12);  // echo + header + one row per CM level
    CHECK(lines[1] == "n,initial,stage0_dd,stage0_uu");
    double total_initial = 0.0;
    for (std::size_t i = 2; i < lines.size(); ++i)
        total_initial += std::strtod(split_csv(lines[i])[1].c_str(), nullptr);
    CHECK(total_initial == doctest::Approx(1.0).epsilon(1e-9));

    // Bit-exact rerun with the same config and seed.
    const std::string csv_text = slurp(dir / "fock_distributions.csv");
    fs::remove_all(dir);
    REQUIRE(cmd_protocol(cfg, "fock") == 0);
    CHECK(slurp(dir / "fock_report.json") == report_text);
    CHECK(slurp(dir / "fock_distributions.csv") == csv_text);
}

TEST_CASE("cli_protocol_bell_and_transfer_runners_report_fidelities") {
    SUBCASE("bell") {
        const fs::path dir = fresh_dir("bell");
        json doc = json::parse(R"({"model": "effective"})");
        doc["out"] = dir.string();
        const RunConfig cfg = parse_config(doc);
        REQUIRE(cmd_protocol(cfg, "bell") == 0);
        const json report = json::parse(slurp(dir / "bell_report.json"));
        CHECK(report["fidelity_ideal"].get<double>() > 1.0 - 1e-6);
        CHECK(report["mid"]["pop_dd_0_0"].get<double>() == doctest::Approx(0.5).epsilon(1e-5));
        REQUIRE(report["pulses"].size() == 2);
        const std::vector<std::string> lines = lines_of(slurp(dir / "bell_populations.csv"));
        CHECK(lines.size() == 2 + 4 * 10 * 5);  // echo + header + every basis state
        CHECK(lines[1] == "index,electronic,n,nr,simulated,ideal");
    }
    SUBCASE("transfer") {
        const fs::path dir = fresh_dir("transfer");
        json doc = json::parse(R"({"model": "effective"})");
        doc["out"] = dir.string();
        const RunConfig cfg = parse_config(doc);
        REQUIRE(cmd_protocol(cfg, "transfer") == 0);
        const json report = json::parse(slurp(dir / "transfer_report.json"));
        CHECK(report["fidelity_ideal"].get<double>() > 1.0 - 1e-6);
        CHECK(report["dark_population"].get<double>() == doctest::Approx(0.5).epsilon(1e-5));
    }
    SUBCASE("manual correction is rejected for protocols") {
        json doc = json::parse(R"({
            "correction": "manual",
            "manual_delta_sideband": 20.0,
            "manual_delta_carrier": 20.0
        })");
        const RunConfig cfg = parse_config(doc);
        CHECK(mentions(config_error_of([&] { cmd_protocol(cfg, "bell"); }), "/correction"));
    }
}
