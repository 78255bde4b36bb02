#include "ionsim/cli/runners.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fs = std::filesystem;

namespace ionsim::cli {

namespace {

fs::path ensure_out(const RunConfig& cfg) {
    const fs::path out = cfg.out;
    fs::create_directories(out);
    return out;
}

std::ofstream open_file(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file '" + p.string() + "'");
    return f;
}

void finish_file(std::ofstream& f, const fs::path& p) {
    f.flush();
    if (!f) throw std::runtime_error("write failed for '" + p.string() + "'");
}

// Minimal CSV quoting for string fields (error messages may contain commas).
std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q;
    q.reserve(s.size() + 2);
    q += '"';
    for (const char c : s) {
        q += c;
        if (c == '"') q += '"';
    }
    q += '"';
    return q;
}

void write_echo_line(std::ofstream& f, const RunConfig& cfg) {
    f << "# " << config_echo(cfg).dump() << "\n";
}

void write_json_file(const fs::path& p, const json& j) {
    std::ofstream f = open_file(p);
    f << j.dump(2) << "\n";
    finish_file(f, p);
}

void write_text_file(const fs::path& p, const std::string& body) {
    std::ofstream f = open_file(p);
    f << body;
    finish_file(f, p);
}

json labels_json(const BasisLayout::Labels& l) {
    return {{"electronic", to_string(l.e)}, {"n", l.n}, {"nr", l.nr}};
}

json stats_json(const EvolveStats& s) {
    return {{"steps", s.steps},
            {"rejected", s.rejected},
            {"max_norm_drift", s.max_norm_drift},
            {"renormalizations", s.renormalizations},
            {"final_norm_error", s.final_norm_error}};
}

json coupling_json(Complex c) {
    return {{"re", c.real()}, {"im", c.imag()}, {"abs", std::abs(c)}};
}

json pulse_json(const PulseResult& pr) {
    return {{"sideband", to_string(pr.spec.mode.sideband)},
            {"k", pr.spec.mode.k},
            {"k_r", pr.spec.mode.k_r},
            {"target", {{"n", pr.spec.target.n}, {"nr", pr.spec.target.nr}}},
            {"area", pr.spec.area},
            {"correction", to_string(pr.spec.correction)},
            {"model", to_string(pr.spec.model)},
            {"delta_sideband", pr.drive.delta_sideband},
            {"delta_carrier", pr.drive.delta_carrier},
            {"coupling", coupling_json(pr.coupling)},
            {"duration", pr.duration},
            {"evolve", stats_json(pr.stats)}};
}

ProtocolSetup setup_from(const RunConfig& cfg) {
    ProtocolSetup s;
    s.eta = cfg.mode.eta;
    s.eta_r = cfg.mode.eta_r;
    s.omega = cfg.drive.omega;
    s.delta = cfg.drive.delta;
    s.phi0 = cfg.drive.phi0;
    s.n_cm_max = cfg.mode.n_cm_max;
    s.n_rel_max = cfg.mode.n_rel_max;
    s.correction = cfg.correction;
    s.model = cfg.model;
    s.evolve = cfg.evolve;
    return s;
}

void require_protocol_correction(const RunConfig& cfg) {
    if (cfg.correction == CorrectionMode::manual)
        throw ConfigError(
            "config error at /correction: protocol runs support \"none\" and \"stark\" only");
}

// Populations of every basis state against an ideal reference, one row per
// flat basis index.
void write_population_csv(const fs::path& p, const RunConfig& cfg, const VibronicState& simulated,
                          const VibronicState& ideal) {
    std::ofstream f = open_file(p);
    write_echo_line(f, cfg);
    f << "index,electronic,n,nr,simulated,ideal\n";
    const BasisLayout& layout = simulated.layout;
    for (int idx = 0; idx < layout.dim(); ++idx) {
        const BasisLayout::Labels l = layout.unpack(idx);
        f << idx << "," << to_string(l.e) << "," << l.n << "," << l.nr << ","
          << format_double(std::norm(simulated.amps[idx])) << ","
          << format_double(std::norm(ideal.amps[idx])) << "\n";
    }
    finish_file(f, p);
}

std::string population_plot_script(const std::string& csv) {
    return "set datafile separator ','\n"
           "set key autotitle columnhead\n"
           "set xlabel 'basis index'\n"
           "set ylabel 'population'\n"
           "plot '" + csv + "' using 1:5 with impulses, '' using 1:6 with points pt 6\n";
}

int run_fock(const RunConfig& cfg, bool gnuplot) {
    require_protocol_correction(cfg);
    const fs::path out = ensure_out(cfg);
    HoleBurningParams hp;
    hp.nbar = cfg.fock.nbar;
    hp.transitions = cfg.fock.transitions;
    const HoleBurningResult res = run_hole_burning(setup_from(cfg), hp);

    json stages = json::array();
    for (const auto& st : res.stages)
        stages.push_back({{"stage", st.stage},
                          {"sideband", to_string(st.sideband)},
                          {"target_n", st.target.n},
                          {"branch_probabilities",
                           {{"dd", st.branch_probabilities[0]},
                            {"du", st.branch_probabilities[1]},
                            {"ud", st.branch_probabilities[2]},
                            {"uu", st.branch_probabilities[3]}}},
                          {"kept", to_string(st.kept)},
                          {"kept_probability", st.kept_probability},
                          {"kept_cm_level", st.kept_cm_level},
                          {"kept_fock_fidelity", st.kept_fock_fidelity},
                          {"pulse", pulse_json(st.pulse)}});

    // Seeded post-selection record: replay each stage's branch statistics; a
    // shot whose outcome leaves the kept chain is discarded at that stage.
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    json record = json::array();
    int survived = 0;
    for (int shot = 0; shot < cfg.fock.shots; ++shot) {
        json outcomes = json::array();
        bool kept_chain = true;
        for (const auto& st : res.stages) {
            const double u = uni(rng);
            double acc = 0.0;
            int pick = 3;
            for (int b = 0; b < 4; ++b) {
                acc += st.branch_probabilities[b];
                if (u < acc) {
                    pick = b;
                    break;
                }
            }
            outcomes.push_back(to_string(static_cast<Electronic>(pick)));
            if (static_cast<Electronic>(pick) != st.kept) {
                kept_chain = false;
                break;
            }
        }
        survived += kept_chain ? 1 : 0;
        record.push_back({{"outcomes", outcomes}, {"kept_chain", kept_chain}});
    }

    json report;
    report["config"] = config_echo(cfg);
    report["initial_cm"] =
        std::vector<double>(res.initial_cm.data(), res.initial_cm.data() + res.initial_cm.size());
    report["stages"] = stages;
    report["joint_probability"] = res.joint_probability;
    report["final_kept_cm_level"] = res.stages.back().kept_cm_level;
    report["final_fock_fidelity"] = res.stages.back().kept_fock_fidelity;
    report["measurement"] = {{"shots", cfg.fock.shots}, {"survived", survived}, {"record", record}};
    write_json_file(out / "fock_report.json", report);

    {
        const fs::path csv = out / "fock_distributions.csv";
        std::ofstream f = open_file(csv);
        write_echo_line(f, cfg);
        f << "n,initial";
        for (const auto& st : res.stages)
            f << ",stage" << st.stage << "_dd,stage" << st.stage << "_uu";
        f << "\n";
        for (int n = 0; n < cfg.mode.n_cm_max; ++n) {
            f << n << "," << format_double(res.initial_cm[n]);
            for (const auto& st : res.stages)
                f << "," << format_double(st.cm_dd[n]) << "," << format_double(st.cm_uu[n]);
            f << "\n";
        }
        finish_file(f, csv);
    }

    if (gnuplot) {
        std::string plot =
            "set datafile separator ','\n"
            "set key autotitle columnhead\n"
            "set style data histograms\n"
            "set style fill solid 0.7\n"
            "set xlabel 'CM level n'\n"
            "set ylabel 'P(n)'\n"
            "plot 'fock_distributions.csv' using 2:xtic(1)";
        for (std::size_t c = 0; c < 2 * res.stages.size(); ++c)
            plot += ", '' using " + std::to_string(3 + c);
        plot += "\n";
        write_text_file(out / "fock_plot.gp", plot);
    }
    return 0;
}

int run_bell(const RunConfig& cfg, bool gnuplot) {
    require_protocol_correction(cfg);
    const fs::path out = ensure_out(cfg);
    const BellResult res = run_motional_bell(setup_from(cfg));

    json pulses = json::array();
    for (const auto& pr : res.pulses) pulses.push_back(pulse_json(pr));
    json report;
    report["config"] = config_echo(cfg);
    report["pulses"] = pulses;
    report["mid"] = {{"pop_dd_0_0", res.mid_pop_dd00}, {"pop_uu_0_2", res.mid_pop_uu02}};
    report["fidelity_ideal"] = res.fidelity_ideal;
    report["fidelity_components"] = res.fidelity_components;
    write_json_file(out / "bell_report.json", report);

    write_population_csv(out / "bell_populations.csv", cfg, res.state, res.ideal);
    if (gnuplot)
        write_text_file(out / "bell_plot.gp", population_plot_script("bell_populations.csv"));
    return 0;
}

int run_transfer(const RunConfig& cfg, bool gnuplot) {
    require_protocol_correction(cfg);
    const fs::path out = ensure_out(cfg);
    const TransferResult res = run_entanglement_transfer(setup_from(cfg));

    json report;
    report["config"] = config_echo(cfg);
    report["pulse"] = pulse_json(res.pulse);
    report["fidelity_ideal"] = res.fidelity_ideal;
    report["fidelity_components"] = res.fidelity_components;
    report["dark_population"] = res.dark_population;
    write_json_file(out / "transfer_report.json", report);

    write_population_csv(out / "transfer_populations.csv", cfg, res.state, res.ideal);
    if (gnuplot)
        write_text_file(out / "transfer_plot.gp",
                        population_plot_script("transfer_populations.csv"));
    return 0;
}

}  // namespace

int cmd_rabi(const RunConfig& cfg, bool gnuplot) {
    const fs::path out = ensure_out(cfg);
    const ModeParams& p = cfg.mode;
    const BasisLayout layout = p.layout();

    PulseSpec spec;
    spec.mode = p;
    spec.target = cfg.rabi.target;
    spec.correction = cfg.correction;
    spec.model = cfg.model;
    spec.manual_delta_sideband = cfg.manual_delta_sideband;
    spec.manual_delta_carrier = cfg.manual_delta_carrier;

    PairStates pair;
    try {
        pair = pair_states(p, spec.target);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config error at /rabi/target: ") + e.what());
    }
    const DriveParams drive = detail::resolve_drive(spec, cfg.drive);
    const Complex coupling = pair_coupling(p, drive, spec.target);

    bool has_t_pi = true;
    double t_pi = 0.0;
    try {
        t_pi = pulse_duration(p, drive, spec.target, M_PI);
    } catch (const std::invalid_argument&) {
        has_t_pi = false;
    }
    const double horizon =
        cfg.rabi.t_max > 0.0 ? cfg.rabi.t_max : (has_t_pi ? cfg.rabi.horizon_areas * t_pi : 0.0);
    if (!(horizon > 0.0))
        throw ConfigError(
            "config error at /rabi/t_max: the pair coupling vanishes, so the horizon cannot be "
            "derived from pi-times; give an explicit 't_max'");

    VibronicState state =
        basis_state(layout, cfg.rabi.initial.electronic, cfg.rabi.initial.n, cfg.rabi.initial.nr);

    // Columns: survival of the initial basis state, the two pair members
    // (deduplicated), the four electronic populations, and the norm.
    std::vector<NamedObservable> obs;
    obs.push_back(population_observable(cfg.rabi.initial.electronic, cfg.rabi.initial.n,
                                        cfg.rabi.initial.nr));
    for (const auto& l : {pair.down, pair.up}) {
        NamedObservable o = population_observable(l.e, l.n, l.nr);
        bool dup = false;
        for (const auto& seen : obs) dup = dup || seen.name == o.name;
        if (!dup) obs.push_back(std::move(o));
    }
    const std::size_t basis_pop_columns = obs.size();
    for (const Electronic e :
         {Electronic::dd, Electronic::du, Electronic::ud, Electronic::uu})
        obs.push_back(electronic_observable(e));
    obs.push_back({"norm", [](const VibronicState& s) { return s.norm(); }});

    EvolveStats stats;
    Trajectory traj;
    if (cfg.model == DynamicsModel::full) {
        const DriveHamiltonian h(p, drive);
        traj = record_trajectory(h, state, 0.0, horizon, cfg.rabi.samples - 1, obs, cfg.evolve,
                                 &stats);
    } else {
        const EffectiveHamiltonian eff = make_effective_hamiltonian(p, drive);
        const StaticHamiltonian h(eff.total);
        traj = record_trajectory(h, state, 0.0, horizon, cfg.rabi.samples - 1, obs, cfg.evolve,
                                 &stats);
    }

    const std::string up_name = population_observable(pair.up.e, pair.up.n, pair.up.nr).name;
    std::size_t up_idx = 0;
    for (std::size_t i = 0; i < traj.names.size(); ++i)
        if (traj.names[i] == up_name) up_idx = i;
    double max_up = 0.0, t_at_max = 0.0;
    for (std::size_t s = 0; s < traj.times.size(); ++s)
        if (traj.columns[up_idx][s] > max_up) {
            max_up = traj.columns[up_idx][s];
            t_at_max = traj.times[s];
        }

    {
        const fs::path csv = out / "rabi_trajectory.csv";
        std::ofstream f = open_file(csv);
        write_echo_line(f, cfg);
        f << "t";
        for (const auto& n : traj.names) f << "," << n;
        f << "\n";
        for (std::size_t s = 0; s < traj.times.size(); ++s) {
            f << format_double(traj.times[s]);
            for (std::size_t c = 0; c < traj.columns.size(); ++c)
                f << "," << format_double(traj.columns[c][s]);
            f << "\n";
        }
        finish_file(f, csv);
    }

    json summary;
    summary["config"] = config_echo(cfg);
    summary["pair"] = {{"down", labels_json(pair.down)}, {"up", labels_json(pair.up)}};
    summary["drive"] = {{"delta_sideband", drive.delta_sideband},
                        {"delta_carrier", drive.delta_carrier}};
    summary["coupling"] = coupling_json(coupling);
    summary["t_pi"] = has_t_pi ? json(t_pi) : json(nullptr);
    summary["horizon"] = horizon;
    summary["rows"] = cfg.rabi.samples;
    summary["max_pop_up"] = max_up;
    summary["t_at_max_pop_up"] = t_at_max;
    json final_values = json::object();
    for (std::size_t i = 0; i < traj.names.size(); ++i)
        final_values[traj.names[i]] = traj.columns[i].back();
    summary["final"] = final_values;
    summary["evolve"] = stats_json(stats);
    write_json_file(out / "rabi_summary.json", summary);

    if (gnuplot) {
        std::string plot =
            "set datafile separator ','\n"
            "set key autotitle columnhead\n"
            "set xlabel 't'\n"
            "set ylabel 'population'\n"
            "plot 'rabi_trajectory.csv' using 1:2 with lines";
        for (std::size_t c = 1; c < basis_pop_columns; ++c)
            plot += ", '' using 1:" + std::to_string(2 + c) + " with lines";
        plot += "\n";
        write_text_file(out / "rabi_plot.gp", plot);
    }
    return 0;
}

int cmd_protocol(const RunConfig& cfg, const std::string& which, bool gnuplot) {
    if (which == "fock") return run_fock(cfg, gnuplot);
    if (which == "bell") return run_bell(cfg, gnuplot);
    if (which == "transfer") return run_transfer(cfg, gnuplot);
    throw ConfigError("unknown protocol '" + which + "' (expected fock, bell or transfer)");
}

int cmd_magic_eta(const RunConfig& cfg) {
    const fs::path out = ensure_out(cfg);
    json results = json::array();
    int failures = 0;
    for (const int n : cfg.magic_eta.levels) {
        try {
            const auto it = cfg.magic_eta.brackets.find(n);
            const MagicEtaResult r = it == cfg.magic_eta.brackets.end()
                                         ? find_magic_eta(n)
                                         : find_magic_eta(n, it->second);
            results.push_back({{"n", r.n},
                               {"eta", r.eta},
                               {"residual", r.residual},
                               {"bracket", {r.bracket.lo, r.bracket.hi}},
                               {"monotonic", r.monotonic},
                               {"iterations", r.iterations}});
        } catch (const std::exception& e) {
            ++failures;
            results.push_back({{"n", n}, {"error", e.what()}});
        }
    }
    json doc;
    doc["config"] = config_echo(cfg);
    doc["results"] = results;
    write_json_file(out / "magic_eta.json", doc);
    return failures == 0 ? 0 : 1;
}

int cmd_scan(const RunConfig& cfg, bool gnuplot) {
    // Fill absent axes with the singleton values from mode/drive so the echo
    // names the exact grid that ran.
    RunConfig resolved = cfg;
    ScanGrid& g = resolved.scan.grid;
    if (g.eta.empty()) g.eta = {cfg.mode.eta};
    if (g.eta_r.empty()) g.eta_r = {cfg.mode.eta_r};
    if (g.delta.empty()) g.delta = {cfg.drive.delta};
    if (g.n.empty()) g.n = {0};
    if (g.nr.empty()) g.nr = {0};
    const fs::path out = ensure_out(resolved);

    ScanRequest req;
    req.grid = g;
    req.observable = resolved.scan.observable;
    req.mode = resolved.mode;
    req.drive = resolved.drive;
    req.model = resolved.scan.model;
    req.correction = resolved.scan.correction;
    req.transfer_samples = resolved.scan.transfer_samples;
    req.evolve = resolved.evolve;
    req.workers = resolved.workers;
    const ScanResult res = run_scan(req);

    bool any_error = false;
    {
        const fs::path csv = out / "scan.csv";
        std::ofstream f = open_file(csv);
        write_echo_line(f, resolved);
        f << "index";
        for (const auto& c : res.parameter_columns) f << "," << c;
        for (const auto& c : res.value_columns) f << "," << c;
        f << ",error\n";
        for (const auto& row : res.rows) {
            f << row.index << "," << format_double(row.eta) << "," << format_double(row.eta_r)
              << "," << format_double(row.delta) << "," << row.n << "," << row.nr;
            if (row.error.empty()) {
                for (const double v : row.values) f << "," << format_double(v);
                f << ",";
            } else {
                any_error = true;
                for (std::size_t i = 0; i < res.value_columns.size(); ++i) f << ",";
                f << "," << csv_escape(row.error);
            }
            f << "\n";
        }
        finish_file(f, csv);
    }

    if (gnuplot) {
        const std::size_t first_value = 2 + res.parameter_columns.size();
        write_text_file(out / "scan_plot.gp",
                        "set datafile separator ','\n"
                        "set key autotitle columnhead\n"
                        "set xlabel 'grid index'\n"
                        "plot 'scan.csv' using 1:" + std::to_string(first_value) +
                            " with linespoints\n");
    }
    return any_error ? 1 : 0;
}

}  // namespace ionsim::cli
