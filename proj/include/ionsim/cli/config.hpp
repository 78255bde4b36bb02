#pragma once
// Run configuration for the command-line tool.
//
// A run is described by a single JSON document (read from a file or stdin).
// Every field has a default, so the empty document `{}` is a valid config.
// Command-line flags (--out, --seed, --workers, --tol) override the
// corresponding config fields after parsing.
//
// Shape (all keys optional):
//
//   {
//     "mode":  { "eta": 0.5, "eta_r": null, "k": 1, "k_r": 0,
//                "sideband": "blue", "n_cm_max": 10, "n_rel_max": 5 },
//     "drive": { "omega": 1.0, "delta": 20.0  OR  "delta_over_eta": 40.0,
//                "phi0": 0.0 },
//     "evolve": { "tol": 1e-8 },
//     "correction": "stark" | "none" | "manual",
//     "manual_delta_sideband": 0.0, "manual_delta_carrier": 0.0,
//     "model": "full" | "effective",
//     "seed": 1, "workers": 1, "out": ".",
//     "rabi":      { "initial": {"electronic": "dd", "n": 0, "nr": 0},
//                    "target": {"n": 0, "nr": 0},
//                    "horizon_areas": 2.0, "t_max": 0.0, "samples": 400 },
//     "fock":      { "nbar": 4.0, "transitions": [[4,5],[5,6]], "shots": 16 },
//     "magic_eta": { "levels": [1,2,8], "brackets": {"1": [0.4, 0.6]} },
//     "scan":      { "observable": "stark_shifts",
//                    "grid": {"eta": [...], "eta_r": [...], "delta": [...],
//                             "n": [...], "nr": [...]},
//                    "model": "effective", "correction": "none",
//                    "transfer_samples": 512 }
//   }
//
// Resolution rules:
//   * "delta" and "delta_over_eta" are mutually exclusive.  When neither is
//     given the detuning defaults to delta_over_eta = 40, i.e.
//     delta = 40 * eta * omega.
//   * "eta_r" absent or null defaults to eta * 3^{-1/4} (the stretch-mode
//     value for equal masses).
//   * Empty/absent scan grid axes are filled with the singleton value from
//     "mode"/"drive" (and {0} for the quantum numbers) at run time.
//
// Unknown keys are rejected, and validation failures name the offending
// field by JSON-pointer-style path (e.g. "/drive/delta").

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ionsim/basis.hpp"
#include "ionsim/hamiltonian.hpp"
#include "ionsim/propagator.hpp"
#include "ionsim/protocols.hpp"
#include "ionsim/spectroscopy.hpp"

namespace ionsim::cli {

using json = nlohmann::ordered_json;

// Thrown for malformed or invalid configuration input; the message names the
// offending field.  The tool maps this to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InitialState {
    Electronic electronic = Electronic::dd;
    int n = 0;
    int nr = 0;
};

struct RabiConfig {
    InitialState initial;       // basis state the run starts from
    PulseTarget target{0, 0};   // resonant pair the drive is tuned to
    double horizon_areas = 2.0; // time horizon in resonant pi-times
    double t_max = 0.0;         // explicit horizon; overrides horizon_areas when > 0
    int samples = 400;          // number of trajectory rows written
};

struct FockConfig {
    double nbar = 4.0;
    std::vector<std::pair<int, int>> transitions{{4, 5}, {5, 6}};
    int shots = 16;             // length of the seeded measurement record
};

struct MagicEtaConfig {
    std::vector<int> levels{1, 2, 8};
    std::map<int, EtaBracket> brackets;  // optional per-level bracket override
};

struct ScanConfig {
    ScanObservable observable = ScanObservable::stark_shifts;
    ScanGrid grid;              // axes may be empty; filled with singletons at run time
    DynamicsModel model = DynamicsModel::effective;
    CorrectionMode correction = CorrectionMode::none;
    int transfer_samples = 512;
};

struct RunConfig {
    ModeParams mode;            // eta_r resolved
    DriveParams drive;          // delta resolved, both beams at the nominal detuning
    EvolveOptions evolve;
    CorrectionMode correction = CorrectionMode::stark;
    double manual_delta_sideband = 0.0;  // used only when correction == manual
    double manual_delta_carrier = 0.0;
    DynamicsModel model = DynamicsModel::full;
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out = ".";
    RabiConfig rabi;
    FockConfig fock;
    MagicEtaConfig magic_eta;
    ScanConfig scan;
};

// Stretch-mode Lamb-Dicke parameter implied by the CM one for equal masses:
// eta * 3^{-1/4}.  Used whenever a config omits "eta_r".
double default_eta_r(double eta);

// Fully resolved global defaults: eta = 0.5, first blue CM sideband,
// delta = 40 * eta * omega, 10 x 5 motional truncation.
RunConfig default_config();

// Parse and validate a config document on top of `defaults`.  Throws
// ConfigError with a field path on any problem.
RunConfig parse_config(const json& doc, const RunConfig& defaults = default_config());

// Read a JSON document from `path` ("-" reads stdin, "" yields the empty
// object).  Throws ConfigError on I/O or syntax errors.
json read_config_document(const std::string& path);

// Command-line overrides applied after parsing.
struct Overrides {
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<double> tol;
};

void apply_overrides(RunConfig& cfg, const Overrides& o);

// Canonical resolved form of a config.  parse_config(config_echo(c))
// reproduces `c` exactly, so the echo header written into every output file
// is sufficient to re-run the computation bit-for-bit.
json config_echo(const RunConfig& cfg);

// Round-trip-exact decimal rendering (17 significant digits).
std::string format_double(double x);

}  // namespace ionsim::cli
