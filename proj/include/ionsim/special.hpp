// special.hpp — Laguerre polynomials and sideband weight factors.
//
// These scalar kernels feed every operator builder in the library.  They are
// templated on the floating type so callers can evaluate them in extended
// precision when needed.
#pragma once

#include <cmath>
#include <stdexcept>

namespace ionsim {

// Associated Laguerre polynomial L_n^k(x) via the three-term recurrence
//   (m+1) L_{m+1}^k = (2m + k + 1 - x) L_m^k - (m + k) L_{m-1}^k,
// which is stable upward in m for the argument range used here.
template <typename Real = double>
Real laguerre(int n, int k, Real x) {
    if (n < 0 || k < 0) throw std::invalid_argument("laguerre: indices must be >= 0");
    Real prev = Real(1);  // L_0^k
    if (n == 0) return prev;
    Real cur = Real(k + 1) - x;  // L_1^k
    for (int m = 1; m < n; ++m) {
        const Real next = ((Real(2 * m + k + 1) - x) * cur - Real(m + k) * prev) / Real(m + 1);
        prev = cur;
        cur = next;
    }
    return cur;
}

// Sideband weight
//   f_k(m; eta) = e^{-eta^2/2} * sqrt-free ratio m!/(m+k)! * L_m^k(eta^2).
//
// The same function serves both motional modes (center-of-mass with eta,
// relative with eta_r).  The factorial ratio is accumulated as a product of
// reciprocals so no factorial is ever formed.
template <typename Real = double>
Real sideband_weight(int m, int k, Real eta) {
    if (m < 0 || k < 0) throw std::invalid_argument("sideband_weight: indices must be >= 0");
    Real ratio = Real(1);
    for (int i = 1; i <= k; ++i) ratio /= Real(m + i);
    const Real x = eta * eta;
    return std::exp(-x / Real(2)) * ratio * laguerre<Real>(m, k, x);
}

}  // namespace ionsim
