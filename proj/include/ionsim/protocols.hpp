// protocols.hpp — pulse-level control on resonant vibronic pairs and the
// motional-state-engineering protocols built from it: Fock-state distillation
// by hole burning, motional Bell-state preparation, and transfer of
// electronic entanglement into the motional modes.
//
// All states returned by pulses and protocols live in the common interaction
// picture of the drive, so full-model and effective-model results (and the
// phase-tracked ideal outcomes) can be compared directly.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "basis.hpp"
#include "hamiltonian.hpp"
#include "operators.hpp"
#include "propagator.hpp"

namespace ionsim {

// ---- pulse specification ----

enum class CorrectionMode { none, stark, manual };
enum class DynamicsModel { full, effective };

inline const char* to_string(CorrectionMode m) {
    switch (m) {
        case CorrectionMode::none: return "none";
        case CorrectionMode::stark: return "stark";
        default: return "manual";
    }
}

inline const char* to_string(DynamicsModel m) {
    return m == DynamicsModel::full ? "full" : "effective";
}

inline CorrectionMode correction_mode_from_string(const std::string& s) {
    if (s == "none") return CorrectionMode::none;
    if (s == "stark") return CorrectionMode::stark;
    if (s == "manual") return CorrectionMode::manual;
    throw std::invalid_argument("correction_mode_from_string: expected none/stark/manual, got '" +
                                s + "'");
}

inline DynamicsModel dynamics_model_from_string(const std::string& s) {
    if (s == "full") return DynamicsModel::full;
    if (s == "effective") return DynamicsModel::effective;
    throw std::invalid_argument("dynamics_model_from_string: expected full/effective, got '" + s +
                                "'");
}

// Label (N, Nr) of a resonant pair: the motional quanta of the member with
// fewer quanta in the driven modes.
struct PulseTarget {
    int n = 0;
    int nr = 0;
};

struct PulseSpec {
    ModeParams mode;                  // pulse geometry: orders, color, couplings
    PulseTarget target;               // pair to drive resonantly
    double area = M_PI;               // rotation angle: P_transfer = sin^2(area/2)
    CorrectionMode correction = CorrectionMode::stark;
    DynamicsModel model = DynamicsModel::full;
    double manual_delta_sideband = 0.0;  // beam detunings when correction == manual
    double manual_delta_carrier = 0.0;
};

// ---- resonant pair bookkeeping ----

struct PairStates {
    BasisLayout::Labels down;  // ground-electronic member
    BasisLayout::Labels up;    // excited-electronic member
};

inline PairStates pair_states(const ModeParams& p, PulseTarget t) {
    if (t.n < 0 || t.nr < 0 || t.n + p.k >= p.n_cm_max || t.nr + p.k_r >= p.n_rel_max)
        throw std::out_of_range("pair_states: pair index out of range");
    PairStates s;
    if (p.sideband == Sideband::blue) {
        s.down = {Electronic::dd, t.n, t.nr};
        s.up = {Electronic::uu, t.n + p.k, t.nr + p.k_r};
    } else {
        s.down = {Electronic::dd, t.n + p.k, t.nr + p.k_r};
        s.up = {Electronic::uu, t.n, t.nr};
    }
    return s;
}

// <up| H_double_flip |down> of the effective model, computed on the stripe.
inline Complex pair_coupling(const ModeParams& p, const DriveParams& d, PulseTarget t) {
    (void)pair_states(p, t);  // bounds check
    const BasisLayout layout = p.layout();
    const StripeOp m = sideband_stripe(p);
    const StripeOp c = carrier_stripe(p);
    const double sign = (p.k_r % 2 == 0) ? 1.0 : -1.0;
    // The dd member always carries the extra driven-mode quanta removed (red)
    // or the fewer quanta to be raised (blue): it is the stripe source.
    const int src = (p.sideband == Sideband::blue)
                        ? layout.motional_index(t.n, t.nr)
                        : layout.motional_index(t.n + p.k, t.nr + p.k_r);
    const int tgt = m.tgt[src];
    if (tgt < 0) throw std::out_of_range("pair_coupling: pair leaves the truncated basis");
    return d.omega0() * (1.0 + sign) * m.val[src] * (c.val[src] - c.val[tgt]);
}

// Duration of a pulse of the given rotation angle on the pair.
inline double pulse_duration(const ModeParams& p, const DriveParams& d, PulseTarget t,
                             double area) {
    const double c = std::abs(pair_coupling(p, d, t));
    if (!(area > 0.0)) throw std::invalid_argument("pulse_duration: area must be positive");
    if (!(c > 1e-14 * std::abs(d.omega0())))
        throw std::invalid_argument(
            "pulse_duration: vanishing pair coupling (odd relative order or weight zero)");
    return area / (2.0 * c);
}

// ---- applying pulses ----

struct PulseResult {
    PulseSpec spec;
    DriveParams drive;  // beam detunings actually driven
    Complex coupling;   // pair coupling of the double-flip channel
    double duration;
    EvolveStats stats;
};

namespace detail {

// Resolve the beam detunings of a pulse against the nominal drive.
inline DriveParams resolve_drive(const PulseSpec& s, const DriveParams& base) {
    switch (s.correction) {
        case CorrectionMode::none:
            return base;
        case CorrectionMode::stark:
            return stark_corrected_drive(s.mode, base, s.target.n, s.target.nr);
        default: {
            DriveParams d = base;
            d.delta_sideband = s.manual_delta_sideband;
            d.delta_carrier = s.manual_delta_carrier;
            d.validate();
            return d;
        }
    }
}

// Diagonal phases e^{-i K T} that return a tilted-frame state to the
// interaction picture; K is minus the frame counter-term of the model.
inline void unwind_frame(const EffectiveHamiltonian& eff, double duration, Vector& amps) {
    for (int i = 0; i < amps.size(); ++i) {
        const double k = -eff.frame(i, i).real();
        if (k != 0.0) amps[i] *= std::exp(Complex(0.0, -k * duration));
    }
}

}  // namespace detail

// Drive the pulse on `state` (in place).  The state enters and leaves in the
// interaction picture regardless of the dynamics model.
inline PulseResult apply_pulse(VibronicState& state, const PulseSpec& spec,
                               const DriveParams& base, EvolveOptions opt = {}) {
    if (!(state.layout == spec.mode.layout()))
        throw std::invalid_argument("apply_pulse: state layout does not match the pulse mode");
    PulseResult res;
    res.spec = spec;
    res.drive = detail::resolve_drive(spec, base);
    res.coupling = pair_coupling(spec.mode, base, spec.target);
    res.duration = pulse_duration(spec.mode, base, spec.target, spec.area);
    if (spec.model == DynamicsModel::full) {
        const DriveHamiltonian h(spec.mode, res.drive);
        res.stats = evolve(h, state.amps, 0.0, res.duration, opt);
    } else {
        const EffectiveHamiltonian eff = make_effective_hamiltonian(spec.mode, res.drive);
        const StaticHamiltonian h(eff.total);
        res.stats = evolve(h, state.amps, 0.0, res.duration, opt);
        detail::unwind_frame(eff, res.duration, state.amps);
    }
    return res;
}

// Exact outcome of the idealized pulse: every basis state evolves under the
// diagonal of the effective model, and the target pair additionally rotates
// under its exact 2x2 block.  Used as the phase-tracked reference that
// simulated pulses are compared against.
inline VibronicState ideal_pulse_outcome(const VibronicState& in, const PulseSpec& spec,
                                         const DriveParams& base) {
    if (!(in.layout == spec.mode.layout()))
        throw std::invalid_argument("ideal_pulse_outcome: state layout mismatch");
    const DriveParams drive = detail::resolve_drive(spec, base);
    const Complex c = pair_coupling(spec.mode, base, spec.target);
    const double duration = pulse_duration(spec.mode, base, spec.target, spec.area);
    const EffectiveHamiltonian eff = make_effective_hamiltonian(spec.mode, drive);
    const BasisLayout layout = in.layout;
    const PairStates pair = pair_states(spec.mode, spec.target);
    const int idown = layout.index(pair.down.e, pair.down.n, pair.down.nr);
    const int iup = layout.index(pair.up.e, pair.up.n, pair.up.nr);

    VibronicState out = in;
    for (int i = 0; i < out.amps.size(); ++i) {
        if (i == idown || i == iup) continue;
        const double e = eff.total(i, i).real();
        out.amps[i] *= std::exp(Complex(0.0, -e * duration));
    }
    // Exact 2x2 evolution on the pair block [[ed, conj(c)], [c, eu]].
    const double ed = eff.total(idown, idown).real();
    const double eu = eff.total(iup, iup).real();
    const double mu = 0.5 * (ed + eu);
    const double vz = 0.5 * (ed - eu);
    const double vnorm = std::sqrt(vz * vz + std::norm(c));
    const Complex a0 = in.amps[idown];
    const Complex a1 = in.amps[iup];
    Complex b0 = a0, b1 = a1;
    if (vnorm > 0.0) {
        const double ct = std::cos(vnorm * duration);
        const double st = std::sin(vnorm * duration);
        // v . sigma in the (down, up) ordering: sigma_z picks down as +.
        b0 = ct * a0 - Complex(0.0, st / vnorm) * (vz * a0 + std::conj(c) * a1);
        b1 = ct * a1 - Complex(0.0, st / vnorm) * (c * a0 - vz * a1);
    }
    const Complex global = std::exp(Complex(0.0, -mu * duration));
    out.amps[idown] = global * b0;
    out.amps[iup] = global * b1;
    detail::unwind_frame(eff, duration, out.amps);
    return out;
}

// ---- electronic measurement ----

struct MeasurementBranch {
    Electronic outcome;
    double probability;
    VibronicState state;  // collapsed and renormalized; zero vector if impossible
};

inline std::array<MeasurementBranch, 4> measure_electronic(const VibronicState& s) {
    const BasisLayout layout = s.layout;
    const int md = layout.motional_dim();
    std::array<MeasurementBranch, 4> branches;
    for (int e = 0; e < 4; ++e) {
        MeasurementBranch& b = branches[e];
        b.outcome = static_cast<Electronic>(e);
        b.state = VibronicState{layout, Vector::Zero(layout.dim())};
        b.state.amps.segment(e * md, md) = s.amps.segment(e * md, md);
        const double p = b.state.amps.squaredNorm();
        b.probability = p;
        if (p > 0.0) b.state.amps /= std::sqrt(p);
    }
    return branches;
}

// Draw one branch according to the probabilities (inverse-CDF on one uniform
// variate, so a seeded generator gives reproducible records).
inline const MeasurementBranch& sample_branch(const std::array<MeasurementBranch, 4>& branches,
                                              std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double u = u01(rng);
    double acc = 0.0;
    for (const auto& b : branches) {
        acc += b.probability;
        if (u < acc) return b;
    }
    return branches.back();
}

// ---- shared protocol setup ----

struct ProtocolSetup {
    double eta = 0.5;
    double eta_r = 0.38;
    double omega = 1.0;
    double delta = 20.0;
    double phi0 = 0.0;
    int n_cm_max = 10;
    int n_rel_max = 5;
    CorrectionMode correction = CorrectionMode::stark;
    DynamicsModel model = DynamicsModel::full;
    EvolveOptions evolve;

    ModeParams mode(int k, int k_r, Sideband sb) const {
        ModeParams p;
        p.eta = eta;
        p.eta_r = eta_r;
        p.k = k;
        p.k_r = k_r;
        p.sideband = sb;
        p.n_cm_max = n_cm_max;
        p.n_rel_max = n_rel_max;
        return p;
    }
    DriveParams drive() const { return symmetric_drive(omega, delta, phi0); }
};

// Phase-insensitive overlap of the magnitudes: (sum_i |a_i'| |b_i'|)^2.
inline double component_fidelity(const VibronicState& a, const VibronicState& b) {
    if (!(a.layout == b.layout))
        throw std::invalid_argument("component_fidelity: layout mismatch");
    double acc = 0.0;
    for (int i = 0; i < a.amps.size(); ++i) acc += std::abs(a.amps[i]) * std::abs(b.amps[i]);
    return acc * acc;
}

// ---- Fock-state distillation by hole burning ----

struct HoleBurningParams {
    double nbar = 4.0;  // mean occupation of the initial coherent CM state
    std::vector<std::pair<int, int>> transitions = {{4, 5}, {5, 6}};  // CM level per stage
    double area = M_PI;
};

struct HoleBurningStage {
    int stage = 0;
    Sideband sideband = Sideband::blue;
    PulseTarget target;
    PulseResult pulse;
    std::array<double, 4> branch_probabilities{};  // ordered dd, du, ud, uu
    Electronic kept = Electronic::uu;
    double kept_probability = 0.0;
    int kept_cm_level = 0;
    double kept_fock_fidelity = 0.0;  // overlap of kept branch with |kept_cm_level, 0>
    Eigen::VectorXd cm_dd;            // CM distribution of the dd branch (renormalized)
    Eigen::VectorXd cm_uu;            // CM distribution of the uu branch (renormalized)
};

struct HoleBurningResult {
    Eigen::VectorXd initial_cm;
    std::vector<HoleBurningStage> stages;
    VibronicState final_state;  // state of the kept chain after the last stage
    double joint_probability = 1.0;
};

// Burn Fock-level holes into a coherent CM state and distill a Fock state:
// even stages drive |dd, N> -> |uu, N+1> on the blue sideband and keep the
// flipped branch; odd stages drive |uu, N> -> |dd, N+1> on the red sideband
// and keep the flipped branch.  Measurement branches are followed
// deterministically (the kept chain), with every branch reported.
inline HoleBurningResult run_hole_burning(const ProtocolSetup& setup,
                                          const HoleBurningParams& params) {
    const ModeParams probe = setup.mode(1, 0, Sideband::blue);
    const BasisLayout layout = probe.layout();
    HoleBurningResult result;
    VibronicState state =
        coherent_cm_state(layout, Electronic::dd, std::sqrt(params.nbar), 0);
    result.initial_cm = state.cm_distribution();

    for (std::size_t j = 0; j < params.transitions.size(); ++j) {
        const auto [from, to] = params.transitions[j];
        HoleBurningStage stage;
        stage.stage = static_cast<int>(j);
        stage.sideband = (j % 2 == 0) ? Sideband::blue : Sideband::red;
        PulseSpec spec;
        spec.mode = setup.mode(1, 0, stage.sideband);
        if (to - from != spec.mode.k)
            throw std::invalid_argument("run_hole_burning: transition step must match the order");
        // Pair label: motional index of the member with fewer quanta, which is
        // the pre-pulse level for blue (dd at N) and for red (uu at N) alike.
        stage.target = PulseTarget{from, 0};
        spec.target = stage.target;
        spec.area = params.area;
        spec.correction = setup.correction;
        spec.model = setup.model;
        stage.pulse = apply_pulse(state, spec, setup.drive(), setup.evolve);

        const auto branches = measure_electronic(state);
        for (int e = 0; e < 4; ++e) stage.branch_probabilities[e] = branches[e].probability;
        stage.cm_dd = branches[0].state.cm_distribution();
        stage.cm_uu = branches[3].state.cm_distribution();
        stage.kept = (j % 2 == 0) ? Electronic::uu : Electronic::dd;
        const MeasurementBranch& kept = branches[static_cast<int>(stage.kept)];
        stage.kept_probability = kept.probability;
        stage.kept_cm_level = to;
        stage.kept_fock_fidelity =
            fidelity(basis_state(layout, stage.kept, to, 0), kept.state);
        result.joint_probability *= kept.probability;
        state = kept.state;
        result.stages.push_back(std::move(stage));
    }
    result.final_state = std::move(state);
    return result;
}

// ---- motional Bell-state preparation ----

struct BellResult {
    VibronicState state;  // simulated final state
    VibronicState ideal;  // phase-tracked ideal outcome
    double mid_pop_dd00 = 0.0;  // after the half pulse
    double mid_pop_uu02 = 0.0;
    double fidelity_ideal = 0.0;
    double fidelity_components = 0.0;
    std::vector<PulseResult> pulses;
};

// Half pulse on the second-order relative sideband splits |dd,0,0> into a
// superposition with |uu,0,2>; a full pulse on the first-order CM sideband
// then moves the remaining |dd,0,0> to |uu,1,0>, leaving the two motional
// components sharing a single electronic state.
inline BellResult run_motional_bell(const ProtocolSetup& setup) {
    const ModeParams split = setup.mode(0, 2, Sideband::blue);
    const ModeParams swap = setup.mode(1, 0, Sideband::blue);
    const BasisLayout layout = split.layout();
    BellResult result;

    VibronicState state = basis_state(layout, Electronic::dd, 0, 0);
    VibronicState ideal = state;

    PulseSpec half;
    half.mode = split;
    half.target = PulseTarget{0, 0};
    half.area = M_PI / 2.0;
    half.correction = setup.correction;
    half.model = setup.model;
    result.pulses.push_back(apply_pulse(state, half, setup.drive(), setup.evolve));
    ideal = ideal_pulse_outcome(ideal, half, setup.drive());
    result.mid_pop_dd00 = state.population(Electronic::dd, 0, 0);
    result.mid_pop_uu02 = state.population(Electronic::uu, 0, 2);

    PulseSpec full;
    full.mode = swap;
    full.target = PulseTarget{0, 0};
    full.area = M_PI;
    full.correction = setup.correction;
    full.model = setup.model;
    result.pulses.push_back(apply_pulse(state, full, setup.drive(), setup.evolve));
    ideal = ideal_pulse_outcome(ideal, full, setup.drive());

    result.state = state;
    result.ideal = ideal;
    result.fidelity_ideal = fidelity(ideal, state);
    result.fidelity_components = component_fidelity(ideal, state);
    return result;
}

// ---- entanglement transfer into the motional modes ----

struct TransferResult {
    VibronicState state;
    VibronicState ideal;
    double fidelity_ideal = 0.0;
    double fidelity_components = 0.0;
    double dark_population = 0.0;  // population left in |uu, 0, 0>
    PulseResult pulse;
};

// A full pulse on the combined first-order CM / second-order relative
// sideband maps (|dd> + |uu>)/sqrt(2) ⊗ |0,0> onto a purely excited
// electronic state whose motional modes carry the entanglement: the |dd>
// component is driven to |uu,1,2> while |uu,0,0> stays dark.
inline TransferResult run_entanglement_transfer(const ProtocolSetup& setup) {
    const ModeParams mode = setup.mode(1, 2, Sideband::blue);
    const BasisLayout layout = mode.layout();
    TransferResult result;

    VibronicState state{layout, Vector::Zero(layout.dim())};
    state.amps[layout.index(Electronic::dd, 0, 0)] = 1.0 / std::sqrt(2.0);
    state.amps[layout.index(Electronic::uu, 0, 0)] = 1.0 / std::sqrt(2.0);
    VibronicState ideal = state;

    PulseSpec spec;
    spec.mode = mode;
    spec.target = PulseTarget{0, 0};
    spec.area = M_PI;
    spec.correction = setup.correction;
    spec.model = setup.model;
    result.pulse = apply_pulse(state, spec, setup.drive(), setup.evolve);
    ideal = ideal_pulse_outcome(ideal, spec, setup.drive());

    result.state = state;
    result.ideal = ideal;
    result.fidelity_ideal = fidelity(ideal, state);
    result.fidelity_components = component_fidelity(ideal, state);
    result.dark_population = state.population(Electronic::uu, 0, 0);
    return result;
}

}  // namespace ionsim
