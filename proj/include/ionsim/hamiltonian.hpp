// hamiltonian.hpp — time-dependent two-beam drive Hamiltonian, its static
// effective model, and the light-shift (Stark) machinery used to correct the
// beam detunings.
//
// Interaction-picture drive (strength omega, far detuned by delta):
//
//   H(t) = omega * S'_+ ⊗ M * e^{+i delta_sideband t}
//        + omega * S''_+ ⊗ C * e^{-i delta_carrier t}  + H.c.
//
// where M is the k-th/k_r-th order sideband motional operator (raising for a
// blue drive, lowering for a red drive), C the carrier motional diagonal, and
// S'_+ / S''_+ the collective flips of the two beams.  For a symmetric drive
// delta_sideband = delta_carrier = delta; light-shift-corrected drives detune
// the two beams asymmetrically around delta.
//
// The static effective model, valid for omega << delta, has three channels:
// a joint double flip |dd> <-> |uu| (rate omega^2/delta), an excitation
// exchange |du> <-> |ud>, and diagonal light shifts.
#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "basis.hpp"
#include "operators.hpp"

namespace ionsim {

// ---- drive parameters ----

struct DriveParams {
    double omega = 1.0;           // drive strength (rate unit)
    double delta = 0.0;           // nominal detuning of both beams
    double delta_sideband = 0.0;  // actual detuning of the sideband beam
    double delta_carrier = 0.0;   // actual detuning of the carrier beam
    double phi0 = 0.0;            // beam phase offset

    double omega0() const { return omega * omega / delta; }  // effective rate
    double detuning_ratio() const { return delta / omega; }

    void validate() const {
        // omega == 0 is allowed: it switches the drive off (useful for
        // baseline/flat-trajectory runs); negative amplitudes are not.
        if (!(omega >= 0.0)) throw std::invalid_argument("DriveParams: omega must be non-negative");
        if (!(delta > 0.0)) throw std::invalid_argument("DriveParams: delta must be positive");
        if (!(delta_sideband > 0.0) || !(delta_carrier > 0.0))
            throw std::invalid_argument("DriveParams: beam detunings must be positive");
    }
};

// Both beams detuned by the same nominal delta.
inline DriveParams symmetric_drive(double omega, double delta, double phi0 = 0.0) {
    DriveParams d;
    d.omega = omega;
    d.delta = delta;
    d.delta_sideband = delta;
    d.delta_carrier = delta;
    d.phi0 = phi0;
    return d;
}

// ---- time-dependent drive Hamiltonian ----

class DriveHamiltonian {
  public:
    DriveHamiltonian(const ModeParams& mode, const DriveParams& drive)
        : mode_(mode), drive_(drive), layout_(mode.layout()) {
        mode_.validate();
        drive_.validate();
        stripe_ = sideband_stripe(mode_);
        carrier_ = carrier_stripe(mode_);
        collect_entries(sideband_flip(drive_.phi0, mode_.k_r), sideband_entries_);
        collect_entries(carrier_flip(drive_.phi0), carrier_entries_);
        a_ = drive_.omega *
             kron_electronic_motional(sideband_flip(drive_.phi0, mode_.k_r), stripe_.dense());
        b_ = drive_.omega *
             kron_electronic_motional(carrier_flip(drive_.phi0), carrier_.dense());
    }

    int dim() const { return layout_.dim(); }
    const BasisLayout& layout() const { return layout_; }
    const ModeParams& mode() const { return mode_; }
    const DriveParams& drive() const { return drive_; }

    // Dense H(t); reference path, kept for tests and small problems.
    Matrix at(double t) const {
        const Complex ph1 = std::exp(Complex(0.0, drive_.delta_sideband * t));
        const Complex ph2 = std::exp(Complex(0.0, -drive_.delta_carrier * t));
        return ph1 * a_ + std::conj(ph1) * a_.adjoint() + ph2 * b_ + std::conj(ph2) * b_.adjoint();
    }

    // y = H(t) x through the stripe representation; O(dim) per beam term.
    void apply(double t, const Vector& x, Vector& y) const {
        if (x.size() != dim()) throw std::invalid_argument("DriveHamiltonian::apply: bad vector size");
        y.resize(dim());
        y.setZero();
        const int md = layout_.motional_dim();
        const Complex ph1 =
            drive_.omega * std::exp(Complex(0.0, drive_.delta_sideband * t));
        const Complex ph2 =
            drive_.omega * std::exp(Complex(0.0, -drive_.delta_carrier * t));
        for (const auto& e : sideband_entries_) {
            const Complex f = ph1 * e.v;
            const Complex fc = std::conj(f);
            const int rof = e.r * md;
            const int cof = e.c * md;
            for (int j = 0; j < md; ++j) {
                const int tj = stripe_.tgt[j];
                if (tj < 0) continue;
                const Complex mv = stripe_.val[j];
                y[rof + tj] += f * mv * x[cof + j];
                y[cof + j] += fc * std::conj(mv) * x[rof + tj];
            }
        }
        for (const auto& e : carrier_entries_) {
            const Complex f = ph2 * e.v;
            const Complex fc = std::conj(f);
            const int rof = e.r * md;
            const int cof = e.c * md;
            for (int j = 0; j < md; ++j) {
                const Complex cv = carrier_.val[j];
                y[rof + j] += f * cv * x[cof + j];
                y[cof + j] += fc * std::conj(cv) * x[rof + j];
            }
        }
    }

    Vector apply(double t, const Vector& x) const {
        Vector y;
        apply(t, x, y);
        return y;
    }

  private:
    struct ElectronicEntry {
        int r, c;
        Complex v;
    };

    static void collect_entries(const Matrix& m, std::vector<ElectronicEntry>& out) {
        out.clear();
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                if (std::abs(m(r, c)) > 0.0) out.push_back({r, c, m(r, c)});
    }

    ModeParams mode_;
    DriveParams drive_;
    BasisLayout layout_;
    StripeOp stripe_;
    StripeOp carrier_;
    std::vector<ElectronicEntry> sideband_entries_;
    std::vector<ElectronicEntry> carrier_entries_;
    Matrix a_;  // omega * S'_+ ⊗ M
    Matrix b_;  // omega * S''_+ ⊗ C
};

inline DriveHamiltonian make_drive_hamiltonian(const ModeParams& mode, const DriveParams& drive) {
    return DriveHamiltonian(mode, drive);
}

// ---- light-shift diagonals ----

// Diagonals over motional indices of the two quadratic forms that set the
// light shifts: dU = diag(M M^dag - C C^dag) acts on states with an excited
// ion, dL = diag(M^dag M - C^dag C) on states with a ground ion.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> lightshift_diagonals(const ModeParams& p) {
    const StripeOp m = sideband_stripe(p);
    const StripeOp c = carrier_stripe(p);
    const int md = m.dim();
    Eigen::VectorXd du = Eigen::VectorXd::Zero(md);
    Eigen::VectorXd dl = Eigen::VectorXd::Zero(md);
    for (int j = 0; j < md; ++j) {
        const double c2 = std::norm(c.val[j]);
        du[j] -= c2;
        dl[j] -= c2;
        if (m.tgt[j] >= 0) {
            const double m2 = std::norm(m.val[j]);
            dl[j] += m2;        // (M^dag M)_{jj}
            du[m.tgt[j]] += m2; // (M M^dag)_{tgt tgt}
        }
    }
    return {du, dl};
}

// Light shift of the basis state (e, n, nr) under the drive.
inline double state_shift(const ModeParams& p, const DriveParams& d, Electronic e, int n, int nr) {
    const BasisLayout layout = p.layout();
    const int j = layout.motional_index(n, nr);
    const auto [du, dl] = lightshift_diagonals(p);
    const double nup = static_cast<double>(excitation_count(e));
    return d.omega0() * (nup * du[j] - (2.0 - nup) * dl[j]);
}

// ---- resonant pair bookkeeping ----

// The drive resonantly connects ground-sector and excited-sector states in
// pairs indexed by (N, Nr):
//   blue:  |dd, N,     Nr     >  <->  |uu, N + k, Nr + k_r>
//   red:   |dd, N + k, Nr + k_r>  <->  |uu, N,   Nr       >
// i.e. the pair label is always the motional index of the state with fewer
// quanta in the driven modes.

struct StarkShiftTable {
    Sideband sideband;
    Eigen::MatrixXd down;  // shift of the ground-electronic member of pair (N, Nr)
    Eigen::MatrixXd up;    // shift of the excited-electronic member

    int n_pairs_cm() const { return static_cast<int>(down.rows()); }
    int n_pairs_rel() const { return static_cast<int>(down.cols()); }

    // Differential shift of the pair; the resonance moves by this amount.
    double pair_mismatch(int N, int Nr) const {
        if (N < 0 || N >= n_pairs_cm() || Nr < 0 || Nr >= n_pairs_rel())
            throw std::out_of_range("StarkShiftTable::pair_mismatch: pair index out of range");
        return up(N, Nr) - down(N, Nr);
    }
};

inline StarkShiftTable stark_shift_table(const ModeParams& p, const DriveParams& d) {
    p.validate();
    d.validate();
    const BasisLayout layout = p.layout();
    const auto [du, dl] = lightshift_diagonals(p);
    const double om0 = d.omega0();
    const int npc = p.n_cm_max - p.k;
    const int npr = p.n_rel_max - p.k_r;
    StarkShiftTable table;
    table.sideband = p.sideband;
    table.down.resize(npc, npr);
    table.up.resize(npc, npr);
    for (int N = 0; N < npc; ++N)
        for (int Nr = 0; Nr < npr; ++Nr) {
            const int jlow = layout.motional_index(N, Nr);
            const int jhigh = layout.motional_index(N + p.k, Nr + p.k_r);
            const int jdown = (p.sideband == Sideband::blue) ? jlow : jhigh;
            const int jup = (p.sideband == Sideband::blue) ? jhigh : jlow;
            table.down(N, Nr) = -2.0 * om0 * dl[jdown];  // ground sector: no excited ion
            table.up(N, Nr) = 2.0 * om0 * du[jup];       // excited sector: both ions up
        }
    return table;
}

// Drive with beam detunings shifted to keep the pair (N, Nr) resonant in the
// presence of its differential light shift.
inline DriveParams stark_corrected_drive(const ModeParams& p, const DriveParams& base, int N,
                                         int Nr) {
    if (N < 0 || Nr < 0 || N + p.k >= p.n_cm_max || Nr + p.k_r >= p.n_rel_max)
        throw std::out_of_range("stark_corrected_drive: pair index out of range");
    const StarkShiftTable table = stark_shift_table(p, base);
    const double mismatch = table.pair_mismatch(N, Nr);
    DriveParams d = base;
    d.delta_sideband = base.delta - 0.5 * mismatch;
    d.delta_carrier = base.delta + 0.5 * mismatch;
    return d;
}

// ---- static effective model ----

struct EffectiveHamiltonian {
    BasisLayout layout;
    Matrix double_flip;  // |uu><dd| channel and H.c.
    Matrix exchange;     // |ud><du| channel and H.c.
    Matrix stark;        // diagonal light shifts
    Matrix frame;        // rotating-frame counter-term (zero for a symmetric drive)
    Matrix total;        // sum of the four
};

// Build the static effective model of the drive.  For asymmetric beam
// detunings the model is stated in the rotating frame that makes the drive
// symmetric again; `frame` holds the diagonal counter-term picked up there.
inline EffectiveHamiltonian make_effective_hamiltonian(const ModeParams& p, const DriveParams& d) {
    p.validate();
    d.validate();
    const BasisLayout layout = p.layout();
    const int md = layout.motional_dim();
    const Matrix m = sideband_motional_op(p);
    const Matrix mt = sideband_motional_op_mirror(p);
    const Matrix c = carrier_motional_op(p);
    const double om0 = d.omega0();
    const double sign = (p.k_r % 2 == 0) ? 1.0 : -1.0;

    Matrix s_pp = Matrix::Zero(4, 4);
    s_pp(3, 0) = 1.0;  // |uu><dd|
    Matrix s_pm = Matrix::Zero(4, 4);
    s_pm(2, 1) = 1.0;  // |ud><du|

    EffectiveHamiltonian h;
    h.layout = layout;

    const Matrix x1 = om0 * (1.0 + sign) * kron_electronic_motional(s_pp, m * c - c * m);
    h.double_flip = x1 + x1.adjoint();

    const Complex beam_ph = std::exp(Complex(0.0, d.phi0));
    const Matrix x2 = om0 * sign * beam_ph * kron_electronic_motional(s_pm, m * mt - mt * m);
    h.exchange = x2 + x2.adjoint();

    const auto [du, dl] = lightshift_diagonals(p);
    Matrix nup = Matrix::Zero(4, 4);
    Matrix ndown = Matrix::Zero(4, 4);
    for (int e = 0; e < 4; ++e) {
        const double ne = static_cast<double>(excitation_count(static_cast<Electronic>(e)));
        nup(e, e) = ne;
        ndown(e, e) = 2.0 - ne;
    }
    h.stark = om0 * (kron_electronic_motional(nup, Matrix(du.cast<Complex>().asDiagonal())) -
                     kron_electronic_motional(ndown, Matrix(dl.cast<Complex>().asDiagonal())));

    // Frame counter-term.  eps1/eps2 are the deviations of the two beams from
    // the nominal detuning; a mode-number tilt absorbs their difference.
    const double eps1 = d.delta - d.delta_sideband;
    const double eps2 = d.delta_carrier - d.delta;
    h.frame = Matrix::Zero(layout.dim(), layout.dim());
    const double scale = std::abs(d.delta);
    if (std::abs(eps1) > 1e-15 * scale || std::abs(eps2) > 1e-15 * scale) {
        const double target = (p.sideband == Sideband::blue) ? (eps1 - eps2) : (eps2 - eps1);
        double beta = 0.0, gamma = 0.0;
        if (p.k > 0) {
            beta = target / p.k;
        } else if (p.k_r > 0) {
            gamma = target / p.k_r;
        } else if (std::abs(target) > 1e-12 * scale) {
            throw std::invalid_argument(
                "make_effective_hamiltonian: asymmetric detunings need a driven mode to tilt");
        }
        Eigen::VectorXd tilt(md);
        for (int n = 0; n < p.n_cm_max; ++n)
            for (int nr = 0; nr < p.n_rel_max; ++nr)
                tilt[layout.motional_index(n, nr)] = beta * n + gamma * nr;
        h.frame =
            -eps2 * kron_electronic_motional(nup, Matrix::Identity(md, md)) -
            kron_electronic_motional(Matrix::Identity(4, 4), Matrix(tilt.cast<Complex>().asDiagonal()));
    }

    h.total = h.double_flip + h.exchange + h.stark + h.frame;
    return h;
}

}  // namespace ionsim
