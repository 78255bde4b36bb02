// operators.hpp — ladder operators, sideband weight diagonals and collective
// electronic flips for the two-ion system.
//
// Truncation convention: raising operators map the top kept level out of the
// basis, so the corresponding matrix column is zero (the top row of a single
// raise is zero).  All builders return dense Eigen types.
#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "basis.hpp"
#include "special.hpp"

namespace ionsim {

// ---- single-mode ladder operators ----

// <n-1| a |n> = sqrt(n)
inline Eigen::MatrixXd destroy_op(int dim) {
    if (dim < 1) throw std::invalid_argument("destroy_op: dim must be >= 1");
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

inline Eigen::MatrixXd create_op(int dim) { return destroy_op(dim).transpose(); }

inline Eigen::MatrixXd number_op(int dim) {
    Eigen::MatrixXd n = Eigen::MatrixXd::Zero(dim, dim);
    for (int m = 0; m < dim; ++m) n(m, m) = m;
    return n;
}

// a^{+k} assembled directly on its stripe: <n+k| a^{+k} |n> = sqrt((n+k)!/n!).
inline Eigen::MatrixXd raise_power_op(int dim, int k) {
    if (dim < 1 || k < 0) throw std::invalid_argument("raise_power_op: bad arguments");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
    for (int n = 0; n + k < dim; ++n) {
        double w = 1.0;
        for (int i = 1; i <= k; ++i) w *= n + i;
        m(n + k, n) = std::sqrt(w);
    }
    return m;
}

inline Eigen::MatrixXd lower_power_op(int dim, int k) { return raise_power_op(dim, k).transpose(); }

// ---- sideband weight diagonals ----

// Diagonal weights [f_k(0), ..., f_k(dim-1)] for one mode.
inline Eigen::VectorXd sideband_weight_diagonal(int dim, int k, double eta) {
    if (dim < 1) throw std::invalid_argument("sideband_weight_diagonal: dim must be >= 1");
    Eigen::VectorXd d(dim);
    for (int n = 0; n < dim; ++n) d[n] = sideband_weight(n, k, eta);
    return d;
}

// Unit imaginary to an integer power, exactly.
inline Complex unit_imag_power(int m) {
    switch (((m % 4) + 4) % 4) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
    }
}

// Joint diagonal coupling factor on the motional space:
//   (i eta)^k (i eta_r)^{k_r} f_k(n) g_{k_r}(n_r),
// a constant-phase complex diagonal (the phase i^{k+k_r} is kept exactly).
inline Vector coupling_diagonal(const ModeParams& p) {
    p.validate();
    const BasisLayout layout = p.layout();
    const Eigen::VectorXd f = sideband_weight_diagonal(p.n_cm_max, p.k, p.eta);
    const Eigen::VectorXd g = sideband_weight_diagonal(p.n_rel_max, p.k_r, p.eta_r);
    const Complex phase = unit_imag_power(p.k + p.k_r) * std::pow(p.eta, p.k) * std::pow(p.eta_r, p.k_r);
    Vector d(layout.motional_dim());
    for (int n = 0; n < p.n_cm_max; ++n)
        for (int nr = 0; nr < p.n_rel_max; ++nr)
            d[layout.motional_index(n, nr)] = phase * f[n] * g[nr];
    return d;
}

// Same but for the carrier (k = k_r = 0) weights of the drive geometry.
inline Vector carrier_diagonal(const ModeParams& p) {
    ModeParams c = p;
    c.k = 0;
    c.k_r = 0;
    return coupling_diagonal(c);
}

// ---- electronic operators (4x4, basis dd, du, ud, uu) ----

// S+ on one ion (ion = 1 or 2), identity on the other.
inline Matrix spin_raise(int ion) {
    Matrix s = Matrix::Zero(4, 4);
    if (ion == 1) {
        s(2, 0) = 1.0;  // |ud><dd|
        s(3, 1) = 1.0;  // |uu><du|
    } else if (ion == 2) {
        s(1, 0) = 1.0;  // |du><dd|
        s(3, 2) = 1.0;  // |uu><ud|
    } else {
        throw std::invalid_argument("spin_raise: ion must be 1 or 2");
    }
    return s;
}

// Collective flip attached to the sideband beam:
//   S'_+ = S_{+1} e^{i phi0/2} + (-1)^{k_r} S_{+2} e^{-i phi0/2}
inline Matrix sideband_flip(double phi0, int k_r) {
    const Complex ph = std::exp(Complex(0.0, phi0 / 2.0));
    const double sign = (k_r % 2 == 0) ? 1.0 : -1.0;
    return ph * spin_raise(1) + sign * std::conj(ph) * spin_raise(2);
}

// Collective flip attached to the carrier beam:
//   S''_+ = S_{+1} e^{i phi0/2} + S_{+2} e^{-i phi0/2}
inline Matrix carrier_flip(double phi0) {
    const Complex ph = std::exp(Complex(0.0, phi0 / 2.0));
    return ph * spin_raise(1) + std::conj(ph) * spin_raise(2);
}

inline Matrix electronic_projector(Electronic e) {
    Matrix p = Matrix::Zero(4, 4);
    p(static_cast<int>(e), static_cast<int>(e)) = 1.0;
    return p;
}

// Diagonal counts of excited ions per electronic label: diag(0, 1, 1, 2).
inline Eigen::Vector4d excitation_diagonal() { return Eigen::Vector4d(0.0, 1.0, 1.0, 2.0); }

// ---- composition helpers ----

// Operator on the full space from an electronic 4x4 and a motional factor.
inline Matrix kron_electronic_motional(const Matrix& el, const Matrix& mot) {
    if (el.rows() != 4 || el.cols() != 4)
        throw std::invalid_argument("kron_electronic_motional: electronic factor must be 4x4");
    return Eigen::kroneckerProduct(el, mot).eval();
}

// Motional-space operator from per-mode factors (CM ⊗ relative).
inline Eigen::MatrixXd kron_modes(const Eigen::MatrixXd& cm, const Eigen::MatrixXd& rel) {
    return Eigen::kroneckerProduct(cm, rel).eval();
}

// Motional part of the sideband coupling for the drive geometry:
//   blue: raise^k ⊗ raise^{k_r} · diag(coupling)
//   red:  diag(coupling) · lower^k ⊗ lower^{k_r}
inline Matrix sideband_motional_op(const ModeParams& p) {
    const Eigen::MatrixXd stripe =
        (p.sideband == Sideband::blue)
            ? kron_modes(raise_power_op(p.n_cm_max, p.k), raise_power_op(p.n_rel_max, p.k_r))
            : kron_modes(lower_power_op(p.n_cm_max, p.k), lower_power_op(p.n_rel_max, p.k_r));
    const Vector d = coupling_diagonal(p);
    return (p.sideband == Sideband::blue) ? Matrix(stripe * d.asDiagonal())
                                          : Matrix(d.asDiagonal() * stripe);
}

// The opposite-ordering partner of the sideband motional operator (diagonal on
// the other side of the stripe); appears in the exchange term of the effective
// Hamiltonian.
inline Matrix sideband_motional_op_mirror(const ModeParams& p) {
    const Vector d = coupling_diagonal(p);
    const Eigen::MatrixXd stripe =
        (p.sideband == Sideband::blue)
            ? kron_modes(lower_power_op(p.n_cm_max, p.k), lower_power_op(p.n_rel_max, p.k_r))
            : kron_modes(raise_power_op(p.n_cm_max, p.k), raise_power_op(p.n_rel_max, p.k_r));
    return (p.sideband == Sideband::blue) ? Matrix(d.asDiagonal() * stripe)
                                          : Matrix(stripe * d.asDiagonal());
}

// Carrier motional operator: diag of carrier weights.
inline Matrix carrier_motional_op(const ModeParams& p) {
    return Matrix(carrier_diagonal(p).asDiagonal());
}

inline bool is_hermitian(const Matrix& m, double tol = 1e-12) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

// ---- compact stripe representation ----

// A single-stripe motional operator O: each source index j maps to at most one
// target index, O = sum_j val[j] |tgt[j]><j|.  tgt[j] = -1 marks a source whose
// image leaves the truncated basis (the column is zero there).
struct StripeOp {
    std::vector<int> tgt;
    std::vector<Complex> val;

    int dim() const { return static_cast<int>(tgt.size()); }

    // y += scale * O x
    void accumulate(const Complex& scale, const Vector& x, Vector& y) const {
        for (int j = 0; j < dim(); ++j)
            if (tgt[j] >= 0) y[tgt[j]] += scale * val[j] * x[j];
    }
    // y += scale * O^dagger x
    void accumulate_adjoint(const Complex& scale, const Vector& x, Vector& y) const {
        for (int j = 0; j < dim(); ++j)
            if (tgt[j] >= 0) y[j] += scale * std::conj(val[j]) * x[tgt[j]];
    }

    Matrix dense() const {
        Matrix m = Matrix::Zero(dim(), dim());
        for (int j = 0; j < dim(); ++j)
            if (tgt[j] >= 0) m(tgt[j], j) = val[j];
        return m;
    }
};

// Stripe form of sideband_motional_op(p); equal to it entry for entry.
inline StripeOp sideband_stripe(const ModeParams& p) {
    p.validate();
    const BasisLayout layout = p.layout();
    const Vector d = coupling_diagonal(p);
    StripeOp s;
    s.tgt.assign(layout.motional_dim(), -1);
    s.val.assign(layout.motional_dim(), Complex(0.0, 0.0));
    for (int n = 0; n < p.n_cm_max; ++n)
        for (int nr = 0; nr < p.n_rel_max; ++nr) {
            const int j = layout.motional_index(n, nr);
            if (p.sideband == Sideband::blue) {
                if (n + p.k >= p.n_cm_max || nr + p.k_r >= p.n_rel_max) continue;
                double w = 1.0;
                for (int i = 1; i <= p.k; ++i) w *= n + i;
                for (int i = 1; i <= p.k_r; ++i) w *= nr + i;
                s.tgt[j] = layout.motional_index(n + p.k, nr + p.k_r);
                s.val[j] = std::sqrt(w) * d[j];
            } else {
                if (n - p.k < 0 || nr - p.k_r < 0) continue;
                double w = 1.0;
                for (int i = 0; i < p.k; ++i) w *= n - i;
                for (int i = 0; i < p.k_r; ++i) w *= nr - i;
                s.tgt[j] = layout.motional_index(n - p.k, nr - p.k_r);
                s.val[j] = std::sqrt(w) * d[s.tgt[j]];
            }
        }
    return s;
}

// Carrier stripe: diagonal of the zero-order weights.
inline StripeOp carrier_stripe(const ModeParams& p) {
    const Vector c = carrier_diagonal(p);
    StripeOp s;
    s.tgt.resize(c.size());
    s.val.resize(c.size());
    for (int j = 0; j < c.size(); ++j) {
        s.tgt[j] = j;
        s.val[j] = c[j];
    }
    return s;
}

}  // namespace ionsim
