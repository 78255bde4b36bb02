// oracles.hpp — independent reference implementations used only by the tests.
//
// Everything here is deliberately written by a different route than the library
// under test: series sums in extended precision instead of recurrences, a
// library matrix exponential instead of time stepping, and least-squares fits
// on simulated data instead of closed forms.  Expected values frozen into the
// test files were produced with these helpers.
#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace oracle {

// ---- extended-precision series sums ----

// Binomial coefficient as long double via a multiplicative loop.
inline long double binomial_ld(int n, int r) {
    if (r < 0 || r > n) return 0.0L;
    r = std::min(r, n - r);
    long double acc = 1.0L;
    for (int i = 1; i <= r; ++i) acc = acc * static_cast<long double>(n - r + i) / i;
    return acc;
}

// Associated Laguerre polynomial by its finite series,
//   L_n^k(x) = sum_{i=0..n} (-1)^i C(n+k, n-i) x^i / i!
inline long double laguerre_series(int n, int k, long double x) {
    if (n < 0 || k < 0) throw std::invalid_argument("laguerre_series: negative index");
    long double sum = 0.0L, xpow = 1.0L, ifact = 1.0L;
    for (int i = 0; i <= n; ++i) {
        if (i > 0) { xpow *= x; ifact *= i; }
        const long double term = binomial_ld(n + k, n - i) * xpow / ifact;
        sum += (i % 2 == 0) ? term : -term;
    }
    return sum;
}

// Sideband weight e^{-eta^2/2} * (m)!/(m+k)! * L_m^k(eta^2), ratio as a product
// of reciprocals, everything in long double.
inline long double weight_series(int m, int k, long double eta) {
    long double ratio = 1.0L;
    for (int i = 1; i <= k; ++i) ratio /= static_cast<long double>(m + i);
    return std::exp(-eta * eta / 2.0L) * ratio * laguerre_series(m, k, eta * eta);
}

// Resonance residual for the one-quantum center-of-mass transition,
//   2 eta^2 (n+1) f1(n)^2 - f0(n)^2 - f0(n+1)^2,  in long double.
inline long double residual_series(long double eta, int n) {
    const long double f0n = weight_series(n, 0, eta);
    const long double f0n1 = weight_series(n + 1, 0, eta);
    const long double f1n = weight_series(n, 1, eta);
    return 2.0L * eta * eta * (n + 1) * f1n * f1n - f0n * f0n - f0n1 * f0n1;
}

// Root of the residual in eta by long-double bisection on [lo, hi].
inline long double residual_root(int n, long double lo, long double hi) {
    long double flo = residual_series(lo, n);
    long double fhi = residual_series(hi, n);
    if (flo * fhi > 0.0L) throw std::invalid_argument("residual_root: no sign change");
    for (int it = 0; it < 200; ++it) {
        const long double mid = 0.5L * (lo + hi);
        const long double fm = residual_series(mid, n);
        if (fm == 0.0L) return mid;
        if (flo * fm < 0.0L) { hi = mid; fhi = fm; } else { lo = mid; flo = fm; }
    }
    return 0.5L * (lo + hi);
}

// ---- matrix exponential ----

// Scaling-and-squaring Pade exponential from Eigen's MatrixFunctions module.
inline Eigen::MatrixXcd expm(const Eigen::MatrixXcd& m) { return m.exp(); }

// Propagate a state under a constant Hamiltonian: exp(-i H t) psi.
inline Eigen::VectorXcd expm_evolve(const Eigen::MatrixXcd& h, const Eigen::VectorXcd& psi,
                                    double t) {
    const Eigen::MatrixXcd gen = std::complex<double>(0.0, -t) * h;
    return expm(gen) * psi;
}

// ---- fits on simulated data ----

// Least-squares slope of y(t) (used on unwrapped phases).
inline double fit_slope(const std::vector<double>& t, const std::vector<double>& y) {
    if (t.size() != y.size() || t.size() < 2) throw std::invalid_argument("fit_slope: bad input");
    const double n = static_cast<double>(t.size());
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        st += t[i]; sy += y[i]; stt += t[i] * t[i]; sty += t[i] * y[i];
    }
    return (n * sty - st * sy) / (n * stt - st * st);
}

// Unwrap a phase sequence to remove 2*pi jumps.
inline std::vector<double> unwrap(const std::vector<double>& phase) {
    std::vector<double> out(phase.size());
    if (phase.empty()) return out;
    out[0] = phase[0];
    double shift = 0.0;
    for (std::size_t i = 1; i < phase.size(); ++i) {
        double d = phase[i] - phase[i - 1];
        while (d > M_PI) { d -= 2 * M_PI; shift -= 2 * M_PI; }
        while (d < -M_PI) { d += 2 * M_PI; shift += 2 * M_PI; }
        out[i] = phase[i] + shift;
    }
    return out;
}

// Slow-phase slope of a complex amplitude trace: unwrap arg(a(t)) and fit a line.
inline double fit_phase_slope(const std::vector<double>& t,
                              const std::vector<std::complex<double>>& a) {
    std::vector<double> ph(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) ph[i] = std::arg(a[i]);
    return fit_slope(t, unwrap(ph));
}

// Time of the first maximum of a sampled curve, refined by a parabola through
// the winning sample and its neighbours.
inline double first_max_time(const std::vector<double>& t, const std::vector<double>& y) {
    if (t.size() != y.size() || t.size() < 3) throw std::invalid_argument("first_max_time: bad input");
    std::size_t best = 1;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        if (y[i] >= y[i - 1] && y[i] >= y[i + 1]) { best = i; break; }
        best = i;
    }
    const double y0 = y[best - 1], y1 = y[best], y2 = y[best + 1];
    const double denom = y0 - 2 * y1 + y2;
    double off = 0.0;
    if (std::abs(denom) > 1e-300) off = 0.5 * (y0 - y2) / denom;
    const double h = t[best + 1] - t[best];
    return t[best] + off * h;
}

// ---- distributions ----

inline double poisson_weight(double mean, int n) {
    return std::exp(-mean + n * std::log(mean) - std::lgamma(n + 1.0));
}

}  // namespace oracle
