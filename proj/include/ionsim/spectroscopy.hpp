// spectroscopy.hpp — resonance diagnostics across drive parameters: the
// pair-resonance residual and its "magic" Lamb-Dicke roots (couplings at
// which the light-shift mismatch of a first-order CM pair vanishes, so the
// uncorrected drive is already resonant), plus a threaded parameter-scan
// engine producing deterministic tables.
#pragma once

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "basis.hpp"
#include "hamiltonian.hpp"
#include "propagator.hpp"
#include "protocols.hpp"
#include "special.hpp"

namespace ionsim {

// ---- pair-resonance residual ----

// Residual of the first-order CM pair (N <-> N+1): the light-shift mismatch
// of the pair equals 2 (Omega^2/delta) g0^2(n_r) times this, for either
// sideband colour.  Negative means the pair resonance sits below the nominal
// detuning; the residual tends to -2 as eta -> 0.
inline double resonance_residual(double eta, int n) {
    if (n < 0) throw std::invalid_argument("resonance_residual: n must be >= 0");
    const double f0 = sideband_weight(n, 0, eta);
    const double f0n = sideband_weight(n + 1, 0, eta);
    const double f1 = sideband_weight(n, 1, eta);
    return 2.0 * eta * eta * (n + 1) * f1 * f1 - f0 * f0 - f0n * f0n;
}

// ---- magic Lamb-Dicke roots ----

struct EtaBracket {
    double lo = 0.0;
    double hi = 0.0;
};

struct MagicEtaResult {
    int n = 0;
    double eta = 0.0;
    double residual = 0.0;  // residual at the returned root
    EtaBracket bracket;
    bool monotonic = true;  // single sign change in the scanned range
    int iterations = 0;
};

namespace detail {
constexpr double kEtaScanStep = 0.01;
constexpr double kEtaScanUpper = 1.2;
}  // namespace detail

// Scan (0, 1.2] in steps of 0.01 for sign changes of the residual; the first
// one brackets the root.  Throws if no crossing exists in the range.
inline EtaBracket default_bracket(int n) {
    double prev_eta = detail::kEtaScanStep;
    double prev = resonance_residual(prev_eta, n);
    EtaBracket first{0.0, 0.0};
    for (double eta = 2 * detail::kEtaScanStep; eta <= detail::kEtaScanUpper + 1e-12;
         eta += detail::kEtaScanStep) {
        const double r = resonance_residual(eta, n);
        if ((prev < 0.0) != (r < 0.0)) {
            first = {prev_eta, eta};
            break;
        }
        prev_eta = eta;
        prev = r;
    }
    if (first.hi == 0.0)
        throw std::invalid_argument("default_bracket: no resonance crossing below eta = 1.2");
    return first;
}

// Count the sign changes of the residual over the scanned range (used to
// flag non-monotonic behaviour at large coupling).
inline int crossing_count(int n) {
    int count = 0;
    double prev = resonance_residual(detail::kEtaScanStep, n);
    for (double eta = 2 * detail::kEtaScanStep; eta <= detail::kEtaScanUpper + 1e-12;
         eta += detail::kEtaScanStep) {
        const double r = resonance_residual(eta, n);
        if ((prev < 0.0) != (r < 0.0)) ++count;
        prev = r;
    }
    return count;
}

// Polish the root inside a bracket with a secant/bisection hybrid: take the
// secant step when it lands inside the bracket, otherwise bisect.
inline MagicEtaResult find_magic_eta(int n, EtaBracket bracket) {
    double lo = bracket.lo, hi = bracket.hi;
    double flo = resonance_residual(lo, n);
    double fhi = resonance_residual(hi, n);
    if (flo == 0.0) return {n, lo, 0.0, bracket, crossing_count(n) <= 1, 0};
    if (fhi == 0.0) return {n, hi, 0.0, bracket, crossing_count(n) <= 1, 0};
    if ((flo < 0.0) == (fhi < 0.0))
        throw std::invalid_argument("find_magic_eta: bracket does not change sign");
    int iter = 0;
    double x = 0.5 * (lo + hi), fx = resonance_residual(x, n);
    while (hi - lo > 1e-15 && fx != 0.0 && iter < 200) {
        ++iter;
        // Secant proposal from the bracket endpoints.
        double s = hi - fhi * (hi - lo) / (fhi - flo);
        if (!(s > lo && s < hi)) s = 0.5 * (lo + hi);
        x = s;
        fx = resonance_residual(x, n);
        if ((fx < 0.0) == (flo < 0.0)) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        // Guard against stagnating secant steps: force a bisection whenever
        // the interval stopped shrinking geometrically.
        if (iter % 2 == 0) {
            const double m = 0.5 * (lo + hi);
            const double fm = resonance_residual(m, n);
            if (fm == 0.0) {
                x = m;
                fx = fm;
                break;
            }
            if ((fm < 0.0) == (flo < 0.0)) {
                lo = m;
                flo = fm;
            } else {
                hi = m;
                fhi = fm;
            }
        }
    }
    MagicEtaResult res;
    res.n = n;
    res.eta = x;
    res.residual = fx;
    res.bracket = bracket;
    res.monotonic = crossing_count(n) <= 1;
    res.iterations = iter;
    return res;
}

inline MagicEtaResult find_magic_eta(int n) { return find_magic_eta(n, default_bracket(n)); }

// ---- parameter scans ----

enum class ScanObservable { stark_shifts, g_eff, residual, max_transfer };

inline const char* to_string(ScanObservable o) {
    switch (o) {
        case ScanObservable::stark_shifts: return "stark_shifts";
        case ScanObservable::g_eff: return "g_eff";
        case ScanObservable::residual: return "residual";
        default: return "max_transfer";
    }
}

inline ScanObservable scan_observable_from_string(const std::string& s) {
    if (s == "stark_shifts") return ScanObservable::stark_shifts;
    if (s == "g_eff") return ScanObservable::g_eff;
    if (s == "residual") return ScanObservable::residual;
    if (s == "max_transfer") return ScanObservable::max_transfer;
    throw std::invalid_argument("scan_observable_from_string: unknown observable '" + s + "'");
}

// Cartesian grid; every axis must hold at least one value.  Row order runs
// eta slowest, then eta_r, delta, n, and nr fastest.
struct ScanGrid {
    std::vector<double> eta;
    std::vector<double> eta_r;
    std::vector<double> delta;
    std::vector<int> n;
    std::vector<int> nr;

    std::size_t size() const {
        return eta.size() * eta_r.size() * delta.size() * n.size() * nr.size();
    }
    void validate() const {
        if (eta.empty() || eta_r.empty() || delta.empty() || n.empty() || nr.empty())
            throw std::invalid_argument("ScanGrid: every axis needs at least one value");
    }
};

struct ScanRequest {
    ScanGrid grid;
    ScanObservable observable = ScanObservable::stark_shifts;
    ModeParams mode;    // orders, colour and truncation; eta/eta_r overridden per row
    DriveParams drive;  // omega and phi0; delta overridden per row
    // max_transfer settings: dynamics model, drive correction and sampling.
    DynamicsModel model = DynamicsModel::effective;
    CorrectionMode correction = CorrectionMode::none;
    int transfer_samples = 512;
    EvolveOptions evolve;
    int workers = 1;
};

struct ScanRow {
    std::size_t index = 0;
    double eta = 0.0, eta_r = 0.0, delta = 0.0;
    int n = 0, nr = 0;
    std::vector<double> values;  // per-observable columns; empty on error
    std::string error;           // empty when the row evaluated cleanly
};

struct ScanResult {
    std::vector<std::string> parameter_columns;  // eta, eta_r, delta, n, nr
    std::vector<std::string> value_columns;
    std::vector<ScanRow> rows;
};

inline std::vector<std::string> scan_value_columns(ScanObservable o) {
    switch (o) {
        case ScanObservable::stark_shifts:
            return {"shift_down", "shift_up", "mismatch", "delta_sideband", "delta_carrier"};
        case ScanObservable::g_eff:
            return {"g_eff", "t_pi"};
        case ScanObservable::residual:
            return {"residual"};
        default:
            return {"max_transfer", "t_at_max"};
    }
}

namespace detail {

inline ScanRow evaluate_scan_row(const ScanRequest& req, std::size_t index) {
    const ScanGrid& g = req.grid;
    ScanRow row;
    row.index = index;
    std::size_t rest = index;
    row.nr = g.nr[rest % g.nr.size()];
    rest /= g.nr.size();
    row.n = g.n[rest % g.n.size()];
    rest /= g.n.size();
    row.delta = g.delta[rest % g.delta.size()];
    rest /= g.delta.size();
    row.eta_r = g.eta_r[rest % g.eta_r.size()];
    rest /= g.eta_r.size();
    row.eta = g.eta[rest % g.eta.size()];

    try {
        ModeParams p = req.mode;
        p.eta = row.eta;
        p.eta_r = row.eta_r;
        p.validate();
        DriveParams d = req.drive;
        d.delta = row.delta;
        d.delta_sideband = row.delta;
        d.delta_carrier = row.delta;
        d.validate();
        const PulseTarget target{row.n, row.nr};

        switch (req.observable) {
            case ScanObservable::stark_shifts: {
                const StarkShiftTable table = stark_shift_table(p, d);
                const double mismatch = table.pair_mismatch(row.n, row.nr);  // bounds-checked
                const DriveParams corr = stark_corrected_drive(p, d, row.n, row.nr);
                row.values = {table.down(row.n, row.nr), table.up(row.n, row.nr), mismatch,
                              corr.delta_sideband, corr.delta_carrier};
                break;
            }
            case ScanObservable::g_eff: {
                const double c = std::abs(pair_coupling(p, d, target));
                row.values = {c, pulse_duration(p, d, target, M_PI)};
                break;
            }
            case ScanObservable::residual: {
                row.values = {resonance_residual(row.eta, row.n)};
                break;
            }
            default: {  // max_transfer
                PulseSpec spec;
                spec.mode = p;
                spec.target = target;
                spec.correction = req.correction;
                spec.model = req.model;
                const DriveParams drive = resolve_drive(spec, d);
                const PairStates pair = pair_states(p, target);
                const BasisLayout layout = p.layout();
                const double horizon = 1.05 * pulse_duration(p, d, target, M_PI);
                VibronicState state = basis_state(layout, pair.down.e, pair.down.n, pair.down.nr);
                const int iup = layout.index(pair.up.e, pair.up.n, pair.up.nr);
                double best = 0.0, t_best = 0.0;
                auto visit = [&](double t, const Vector& psi) {
                    const double pop = std::norm(psi[iup]);
                    if (pop > best) {
                        best = pop;
                        t_best = t;
                    }
                };
                if (req.model == DynamicsModel::full) {
                    const DriveHamiltonian h(p, drive);
                    evolve_sampled(h, state.amps, 0.0, horizon, req.transfer_samples, visit,
                                   req.evolve);
                } else {
                    const StaticHamiltonian h(make_effective_hamiltonian(p, drive).total);
                    evolve_sampled(h, state.amps, 0.0, horizon, req.transfer_samples, visit,
                                   req.evolve);
                }
                row.values = {best, t_best};
                break;
            }
        }
    } catch (const std::exception& e) {
        row.values.clear();
        row.error = e.what();
    }
    return row;
}

}  // namespace detail

// Evaluate the grid.  Rows are computed independently (a worker pool pulls
// row indices from an atomic counter) and merged by grid index, so the
// result is identical for any worker count.
inline ScanResult run_scan(const ScanRequest& req) {
    req.grid.validate();
    if (req.workers < 1) throw std::invalid_argument("run_scan: workers must be >= 1");
    const std::size_t total = req.grid.size();
    ScanResult result;
    result.parameter_columns = {"eta", "eta_r", "delta", "n", "nr"};
    result.value_columns = scan_value_columns(req.observable);
    result.rows.resize(total);

    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (std::size_t i = next.fetch_add(1); i < total; i = next.fetch_add(1))
            result.rows[i] = detail::evaluate_scan_row(req, i);
    };
    const int workers = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(req.workers), total == 0 ? 1 : total));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return result;
}

}  // namespace ionsim
