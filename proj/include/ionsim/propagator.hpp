// propagator.hpp — adaptive Dormand–Prince 5(4) integration of the
// time-dependent Schrödinger equation  i dpsi/dt = H(t) psi.
//
// Works with any Hamiltonian type exposing
//     int dim() const;
//     void apply(double t, const Vector& x, Vector& y) const;   // y = H(t) x
// Norm drift is measured at sample points and logged in the returned stats;
// renormalization (on by default) also happens only at sample points, never
// silently inside a step.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "basis.hpp"

namespace ionsim {

// ---- options and stats ----

struct EvolveOptions {
    double tol = 1e-8;        // local error per unit time
    double h_init = 0.0;      // initial step; 0 chooses automatically
    double h_min = 0.0;       // floor on the step; 0 chooses automatically
    bool renormalize = true;  // renormalize the state at sample points
};

struct EvolveStats {
    long steps = 0;               // accepted steps
    long rejected = 0;            // rejected trial steps
    double max_norm_drift = 0.0;  // max | ||psi|| - 1 | seen at sample points
    long renormalizations = 0;    // sample-point renormalizations applied
    double final_norm_error = 0.0;
};

// ---- adapters ----

// Time-independent Hamiltonian given as a dense matrix.
class StaticHamiltonian {
  public:
    explicit StaticHamiltonian(Matrix m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols())
            throw std::invalid_argument("StaticHamiltonian: matrix must be square");
    }
    int dim() const { return static_cast<int>(m_.rows()); }
    void apply(double, const Vector& x, Vector& y) const { y.noalias() = m_ * x; }
    const Matrix& matrix() const { return m_; }

  private:
    Matrix m_;
};

// ---- the stepper ----

template <typename Hamiltonian>
class Dopri5 {
  public:
    Dopri5(const Hamiltonian& h, double t0, Vector psi, EvolveOptions opt = {})
        : h_(&h), t_(t0), psi_(std::move(psi)), opt_(opt) {
        if (psi_.size() != h.dim()) throw std::invalid_argument("Dopri5: state size mismatch");
        if (!(opt_.tol > 0.0)) throw std::invalid_argument("Dopri5: tol must be positive");
        const int d = h.dim();
        for (auto* k : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_}) k->resize(d);
        tmp_.resize(d);
        err_.resize(d);
        rhs(t_, psi_, k1_);
        have_k1_ = true;
    }

    double t() const { return t_; }
    const Vector& state() const { return psi_; }
    EvolveStats& stats() { return stats_; }
    const EvolveStats& stats() const { return stats_; }

    // Integrate exactly to tb (tb >= current t).
    void advance_to(double tb) {
        if (tb < t_) throw std::invalid_argument("Dopri5::advance_to: target before current time");
        if (tb == t_) return;
        if (step_ <= 0.0) step_ = initial_step(tb - t_);
        while (t_ < tb) {
            const bool clipped = step_ > tb - t_;
            const double h = clipped ? (tb - t_) : step_;
            const double floor_here = (opt_.h_min > 0.0)
                                          ? opt_.h_min
                                          : 1e-14 * std::max(1.0, std::abs(t_) + std::abs(h));
            if (h < floor_here)
                throw std::runtime_error("Dopri5: step size underflow (stiff or singular drive?)");
            const double ratio = trial_step(h);
            if (ratio <= 1.0) {
                ++stats_.steps;
                if (!clipped) {
                    const double grow = 0.9 * std::pow(std::max(ratio, 1e-10), -0.2);
                    step_ = h * std::clamp(grow, 0.2, 5.0);
                }
                // when clipped, keep the previous natural step for the next segment
            } else {
                ++stats_.rejected;
                const double shrink = 0.9 * std::pow(ratio, -0.2);
                step_ = h * std::clamp(shrink, 0.2, 0.9);
            }
        }
    }

    // Sample-point policy: record drift, optionally renormalize.
    void observe_norm() {
        const double norm = psi_.norm();
        const double drift = std::abs(norm - 1.0);
        stats_.max_norm_drift = std::max(stats_.max_norm_drift, drift);
        if (opt_.renormalize && norm > 0.0 && drift > 0.0) {
            psi_ /= norm;
            if (have_k1_) k1_ /= norm;  // FSAL stage scales with the state
            ++stats_.renormalizations;
        }
        stats_.final_norm_error = std::abs(psi_.norm() - 1.0);
    }

  private:
    void rhs(double t, const Vector& x, Vector& out) {
        h_->apply(t, x, out);
        out *= Complex(0.0, -1.0);
    }

    double initial_step(double span) const {
        const double frms = k1_.norm() / std::sqrt(static_cast<double>(k1_.size()));
        const double xrms = psi_.norm() / std::sqrt(static_cast<double>(psi_.size()));
        double h = (opt_.h_init > 0.0) ? opt_.h_init
                                       : ((frms > 1e-12) ? 0.01 * xrms / frms : 0.1 * span);
        return std::min(h, span);
    }

    // One trial step of size h.  Returns the error ratio ||e||_rms / (tol h);
    // on acceptance (ratio <= 1) commits state, time and the FSAL stage.
    double trial_step(double h) {
        static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                                a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                                a64 = 49.0 / 176, a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                                b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                                e4 = 125.0 / 192 - 393.0 / 640,
                                e5 = -2187.0 / 6784 + 92097.0 / 339200,
                                e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

        tmp_ = psi_ + h * a21 * k1_;
        rhs(t_ + c2 * h, tmp_, k2_);
        tmp_ = psi_ + h * (a31 * k1_ + a32 * k2_);
        rhs(t_ + c3 * h, tmp_, k3_);
        tmp_ = psi_ + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
        rhs(t_ + c4 * h, tmp_, k4_);
        tmp_ = psi_ + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
        rhs(t_ + c5 * h, tmp_, k5_);
        tmp_ = psi_ + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
        rhs(t_ + h, tmp_, k6_);
        tmp_ = psi_ + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
        rhs(t_ + h, tmp_, k7_);  // FSAL: rhs at the candidate point

        err_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
        const double err_rms = err_.norm() / std::sqrt(static_cast<double>(err_.size()));
        const double ratio = err_rms / (opt_.tol * h);
        if (ratio <= 1.0) {
            psi_.swap(tmp_);
            k1_.swap(k7_);
            t_ += h;
        }
        return ratio;
    }

    const Hamiltonian* h_;
    double t_ = 0.0;
    Vector psi_;
    EvolveOptions opt_;
    EvolveStats stats_;
    double step_ = 0.0;
    bool have_k1_ = false;
    Vector k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, err_;
};

// ---- driver functions ----

// Evolve psi from t0 to t1; the endpoint is the only sample point.
template <typename Hamiltonian>
EvolveStats evolve(const Hamiltonian& h, Vector& psi, double t0, double t1,
                   EvolveOptions opt = {}) {
    Dopri5<Hamiltonian> stepper(h, t0, std::move(psi), opt);
    stepper.advance_to(t1);
    stepper.observe_norm();
    psi = stepper.state();
    return stepper.stats();
}

// Evolve with `samples` uniform intervals; the visitor is called at each of
// the samples+1 sample points (including both endpoints), after the
// sample-point norm policy has been applied.
template <typename Hamiltonian, typename Visitor>
EvolveStats evolve_sampled(const Hamiltonian& h, Vector& psi, double t0, double t1, int samples,
                           Visitor&& visit, EvolveOptions opt = {}) {
    if (samples < 1) throw std::invalid_argument("evolve_sampled: need at least one interval");
    Dopri5<Hamiltonian> stepper(h, t0, std::move(psi), opt);
    stepper.observe_norm();
    visit(t0, stepper.state());
    for (int i = 1; i <= samples; ++i) {
        const double ti = t0 + (t1 - t0) * static_cast<double>(i) / samples;
        stepper.advance_to(ti);
        stepper.observe_norm();
        visit(ti, stepper.state());
    }
    psi = stepper.state();
    return stepper.stats();
}

// ---- observables and trajectories ----

using Observable = std::function<double(const VibronicState&)>;

struct NamedObservable {
    std::string name;
    Observable fn;
};

inline NamedObservable population_observable(Electronic e, int n, int nr) {
    const std::string name = "pop_" + std::string(to_string(e)) + "_" + std::to_string(n) + "_" +
                             std::to_string(nr);
    return {name, [e, n, nr](const VibronicState& s) { return s.population(e, n, nr); }};
}

inline NamedObservable electronic_observable(Electronic e) {
    return {"pop_" + std::string(to_string(e)),
            [e](const VibronicState& s) { return s.electronic_population(e); }};
}

inline NamedObservable fidelity_observable(std::string name, VibronicState reference) {
    return {std::move(name),
            [ref = std::move(reference)](const VibronicState& s) { return fidelity(ref, s); }};
}

struct Trajectory {
    std::vector<double> times;
    std::vector<std::string> names;               // one per observable column
    std::vector<std::vector<double>> columns;     // columns[i][sample]
};

// Evolve `state` in place from t0 to t1, recording the observables at
// samples+1 uniform sample points.
template <typename Hamiltonian>
Trajectory record_trajectory(const Hamiltonian& h, VibronicState& state, double t0, double t1,
                             int samples, const std::vector<NamedObservable>& obs,
                             EvolveOptions opt = {}, EvolveStats* stats_out = nullptr) {
    Trajectory traj;
    traj.names.reserve(obs.size());
    for (const auto& o : obs) traj.names.push_back(o.name);
    traj.columns.assign(obs.size(), {});
    const BasisLayout layout = state.layout;
    Vector psi = state.amps;
    const EvolveStats stats = evolve_sampled(
        h, psi, t0, t1, samples,
        [&](double t, const Vector& x) {
            traj.times.push_back(t);
            const VibronicState snapshot{layout, x};
            for (std::size_t i = 0; i < obs.size(); ++i)
                traj.columns[i].push_back(obs[i].fn(snapshot));
        },
        opt);
    state.amps = std::move(psi);
    if (stats_out) *stats_out = stats;
    return traj;
}

}  // namespace ionsim
