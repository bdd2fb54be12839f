#pragma once

// Adaptive Runge-Kutta integration of a replicator system on the simplex.

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pairdyn/error.hpp"
#include "pairdyn/replicator.hpp"

namespace pairdyn {

enum class TerminalReason { Converged, MaxTime, BoundaryAbsorbed, StepUnderflow };

inline std::string to_string(TerminalReason r) {
    switch (r) {
        case TerminalReason::Converged: return "converged";
        case TerminalReason::MaxTime: return "max_time";
        case TerminalReason::BoundaryAbsorbed: return "boundary_absorbed";
        default: return "step_underflow";
    }
}

struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    TerminalReason terminal_reason = TerminalReason::MaxTime;

    const Eigen::VectorXd& final_state() const { return states.back(); }
    double final_time() const { return times.back(); }
};

struct IntegrateOptions {
    double initial_dt = 1e-2;
    double min_dt = 1e-12;
    int quiet_steps = 10;           // consecutive small-velocity steps that count as convergence
    double record_interval = 0.0;   // 0 records every accepted step
    std::size_t max_steps = 50'000'000;
};

// Clip negatives to zero and rescale to unit sum.
inline void renormalize(Eigen::VectorXd& x) {
    x = x.cwiseMax(0.0);
    const double s = x.sum();
    if (s > 0.0) x /= s;
}

// Exactly one strategy present.
inline bool is_vertex(const Eigen::VectorXd& x) { return (x.array() > 0.0).count() == 1; }

// Stops early once ||dx/dt||_inf < 1e-2 tol holds for quiet_steps accepted
// steps while no present strategy grows at a per-capita rate above tol. The
// second condition keeps slow passages near saddle vertices (heteroclinic
// cycles) from being mistaken for rest points.
inline Trajectory integrate(const ReplicatorSystem& sys, const Eigen::VectorXd& x0, double t_max, double tol = 1e-8,
                            const IntegrateOptions& opt = {}) {
    namespace odeint = boost::numeric::odeint;
    require(x0.size() == sys.n(), "initial state length differs from strategy count");
    check_simplex(x0);
    require(std::isfinite(t_max) && t_max > 0.0, "t_max must be > 0");
    require(std::isfinite(tol) && tol > 0.0 && tol < 1.0, "tolerance must lie in (0, 1)");

    Trajectory traj;
    Eigen::VectorXd x = x0;
    renormalize(x);
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    if (is_vertex(x)) {
        traj.times.push_back(t_max);
        traj.states.push_back(x);
        traj.terminal_reason = TerminalReason::BoundaryAbsorbed;
        return traj;
    }

    using State = std::vector<double>;
    const auto n = x.size();
    auto system = [&](const State& s, State& ds, double) {
        const Eigen::Map<const Eigen::VectorXd> xs(s.data(), n);
        const Eigen::VectorXd v = sys.rhs_unchecked(xs);
        if (!v.allFinite()) throw NumericalError("replicator rhs is not finite; payoffs may overflow");
        ds.assign(v.data(), v.data() + n);
    };
    auto stepper = odeint::make_controlled<odeint::runge_kutta_cash_karp54<State>>(1e-4 * tol, tol);

    State s(x.data(), x.data() + n);
    double t = 0.0;
    double dt = std::min(opt.initial_dt, t_max);
    double next_record = opt.record_interval;
    int quiet = 0;
    for (std::size_t step = 0; step < opt.max_steps && t < t_max; ++step) {
        dt = std::min(dt, t_max - t);
        State trial = s;
        double t_trial = t;
        double dt_trial = dt;
        const auto res = stepper.try_step(system, trial, t_trial, dt_trial);
        if (res == odeint::fail) {
            dt = dt_trial;
            if (dt < opt.min_dt) {
                traj.terminal_reason = TerminalReason::StepUnderflow;
                return traj;
            }
            continue;
        }
        if (*std::min_element(trial.begin(), trial.end()) < -1e-9) {
            dt *= 0.5;
            if (dt < opt.min_dt) {
                traj.terminal_reason = TerminalReason::StepUnderflow;
                return traj;
            }
            continue;
        }
        Eigen::Map<Eigen::VectorXd> xm(trial.data(), n);
        Eigen::VectorXd xn = xm;
        renormalize(xn);
        std::copy(xn.data(), xn.data() + n, trial.begin());
        s = trial;
        t = t_trial;
        dt = dt_trial;

        const Eigen::VectorXd v = sys.rhs_unchecked(xn);
        bool invading = false;
        for (Eigen::Index i = 0; i < n; ++i)
            if (xn(i) > 0.0 && v(i) > tol * xn(i)) invading = true;
        quiet = v.cwiseAbs().maxCoeff() < 1e-2 * tol && !invading ? quiet + 1 : 0;
        const bool absorbed = is_vertex(xn);
        const bool done = quiet >= opt.quiet_steps || absorbed || t >= t_max;
        if (opt.record_interval <= 0.0 || t >= next_record || done) {
            traj.times.push_back(t);
            traj.states.push_back(xn);
            while (opt.record_interval > 0.0 && next_record <= t) next_record += opt.record_interval;
        }
        if (absorbed) {
            traj.terminal_reason = TerminalReason::BoundaryAbsorbed;
            return traj;
        }
        if (quiet >= opt.quiet_steps) {
            traj.terminal_reason = TerminalReason::Converged;
            return traj;
        }
    }
    traj.terminal_reason = TerminalReason::MaxTime;
    return traj;
}

// Times at which the trajectory crosses the plane x_a = x_b (linear interpolation).
inline std::vector<double> section_crossings(const Trajectory& traj, int a, int b) {
    std::vector<double> out;
    for (std::size_t s = 1; s < traj.states.size(); ++s) {
        const double d0 = traj.states[s - 1](a) - traj.states[s - 1](b);
        const double d1 = traj.states[s](a) - traj.states[s](b);
        if ((d0 < 0.0 && d1 >= 0.0) || (d0 > 0.0 && d1 <= 0.0)) {
            const double w = d0 / (d0 - d1);
            out.push_back(traj.times[s - 1] + w * (traj.times[s] - traj.times[s - 1]));
        }
    }
    return out;
}

}  // namespace pairdyn
