// basis.hpp — Two-ion vibronic basis: electronic labels, truncation layout,
// state container and preparation helpers.
//
// A state lives in |e1 e2> ⊗ |n> ⊗ |n_r> with n the center-of-mass (CM) Fock
// level and n_r the relative-mode level.  The flat index convention is
//   idx = ((e1*2 + e2) * n_cm_max + n) * n_rel_max + n_r,
// with down = 0, up = 1 for each ion.
#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ionsim {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

// ---- electronic labels ----

enum class Electronic : int { dd = 0, du = 1, ud = 2, uu = 3 };

inline const char* to_string(Electronic e) {
    switch (e) {
        case Electronic::dd: return "dd";
        case Electronic::du: return "du";
        case Electronic::ud: return "ud";
        case Electronic::uu: return "uu";
    }
    throw std::invalid_argument("to_string: bad electronic label");
}

inline Electronic electronic_from_string(const std::string& s) {
    if (s == "dd") return Electronic::dd;
    if (s == "du") return Electronic::du;
    if (s == "ud") return Electronic::ud;
    if (s == "uu") return Electronic::uu;
    throw std::invalid_argument("electronic_from_string: expected dd/du/ud/uu, got '" + s + "'");
}

// Number of ions in the upper state for a given label.
inline int excitation_count(Electronic e) {
    const int i = static_cast<int>(e);
    return (i >> 1) + (i & 1);
}

// ---- truncation layout ----

struct BasisLayout {
    int n_cm_max = 0;   // CM levels kept: n = 0 .. n_cm_max-1
    int n_rel_max = 0;  // relative-mode levels kept

    int motional_dim() const { return n_cm_max * n_rel_max; }
    int dim() const { return 4 * motional_dim(); }

    int motional_index(int n, int nr) const {
        if (n < 0 || n >= n_cm_max) throw std::out_of_range("BasisLayout: CM level out of range");
        if (nr < 0 || nr >= n_rel_max) throw std::out_of_range("BasisLayout: relative level out of range");
        return n * n_rel_max + nr;
    }

    int index(Electronic e, int n, int nr) const {
        return static_cast<int>(e) * motional_dim() + motional_index(n, nr);
    }

    struct Labels {
        Electronic e;
        int n;
        int nr;
    };

    Labels unpack(int idx) const {
        if (idx < 0 || idx >= dim()) throw std::out_of_range("BasisLayout: index out of range");
        const int m = idx % motional_dim();
        return {static_cast<Electronic>(idx / motional_dim()), m / n_rel_max, m % n_rel_max};
    }

    bool operator==(const BasisLayout&) const = default;
};

// ---- drive geometry / mode parameters ----

// Sideband colour: blue adds k CM and k_r relative quanta per collective flip
// up, red removes them.
enum class Sideband { blue, red };

inline const char* to_string(Sideband s) { return s == Sideband::blue ? "blue" : "red"; }

inline Sideband sideband_from_string(const std::string& s) {
    if (s == "blue") return Sideband::blue;
    if (s == "red") return Sideband::red;
    throw std::invalid_argument("sideband_from_string: expected blue/red, got '" + s + "'");
}

struct ModeParams {
    double eta = 0.1;    // CM Lamb-Dicke parameter
    double eta_r = 0.0;  // relative-mode Lamb-Dicke parameter
    int k = 1;           // CM sideband order
    int k_r = 0;         // relative-mode sideband order
    Sideband sideband = Sideband::blue;
    int n_cm_max = 10;
    int n_rel_max = 2;

    BasisLayout layout() const { return BasisLayout{n_cm_max, n_rel_max}; }

    void validate() const {
        if (!(eta > 0.0)) throw std::invalid_argument("ModeParams: eta must be > 0");
        if (eta_r < 0.0) throw std::invalid_argument("ModeParams: eta_r must be >= 0");
        if (k < 0 || k_r < 0) throw std::invalid_argument("ModeParams: sideband orders must be >= 0");
        if (n_cm_max < k + 2)
            throw std::invalid_argument("ModeParams: n_cm_max must be >= k + 2");
        if (n_rel_max < k_r + 2)
            throw std::invalid_argument("ModeParams: n_rel_max must be >= k_r + 2");
    }
};

// ---- states ----

struct VibronicState {
    BasisLayout layout;
    Vector amps;

    double norm() const { return amps.norm(); }

    void normalize() {
        const double n = norm();
        if (n <= 0.0) throw std::runtime_error("VibronicState: cannot normalize zero state");
        amps /= n;
    }

    double population(Electronic e, int n, int nr) const {
        return std::norm(amps[layout.index(e, n, nr)]);
    }

    double electronic_population(Electronic e) const {
        const int m = layout.motional_dim();
        return amps.segment(static_cast<int>(e) * m, m).squaredNorm();
    }

    // Marginal CM distribution P(n), traced over electronic state and n_r.
    Eigen::VectorXd cm_distribution() const {
        Eigen::VectorXd p = Eigen::VectorXd::Zero(layout.n_cm_max);
        for (int i = 0; i < amps.size(); ++i) p[layout.unpack(i).n] += std::norm(amps[i]);
        return p;
    }

    Eigen::VectorXd rel_distribution() const {
        Eigen::VectorXd p = Eigen::VectorXd::Zero(layout.n_rel_max);
        for (int i = 0; i < amps.size(); ++i) p[layout.unpack(i).nr] += std::norm(amps[i]);
        return p;
    }
};

inline VibronicState basis_state(const BasisLayout& layout, Electronic e, int n, int nr) {
    VibronicState s{layout, Vector::Zero(layout.dim())};
    s.amps[layout.index(e, n, nr)] = 1.0;
    return s;
}

// |alpha> on the CM mode (alpha real >= 0), a Fock state on the relative mode.
// Rejects truncations whose discarded Poisson tail exceeds tail_tol; the kept
// amplitudes are renormalized.
inline VibronicState coherent_cm_state(const BasisLayout& layout, Electronic e, double alpha,
                                       int nr, double tail_tol = 1e-8) {
    if (alpha < 0.0) throw std::invalid_argument("coherent_cm_state: alpha must be >= 0");
    VibronicState s{layout, Vector::Zero(layout.dim())};
    double c = std::exp(-alpha * alpha / 2.0);
    double kept = 0.0;
    for (int n = 0; n < layout.n_cm_max; ++n) {
        if (n > 0) c *= alpha / std::sqrt(static_cast<double>(n));
        s.amps[layout.index(e, n, nr)] = c;
        kept += c * c;
    }
    const double tail = 1.0 - kept;
    if (tail > tail_tol)
        throw std::invalid_argument("coherent_cm_state: truncated tail " + std::to_string(tail) +
                                    " exceeds tolerance; increase n_cm_max");
    s.normalize();
    return s;
}

// |<a|b>|^2
inline double fidelity(const VibronicState& a, const VibronicState& b) {
    if (!(a.layout == b.layout)) throw std::invalid_argument("fidelity: layouts differ");
    return std::norm(a.amps.dot(b.amps));
}

inline Complex overlap(const VibronicState& a, const VibronicState& b) {
    if (!(a.layout == b.layout)) throw std::invalid_argument("overlap: layouts differ");
    return a.amps.dot(b.amps);  // conjugates a
}

}  // namespace ionsim
