#pragma once

// Weak-selection replicator right-hand sides on degree-k regular graphs for the
// pairwise-comparison (PC) and death-birth (DB) rules, plus the well-mixed
// baseline. delta rescales time only: equilibria and their stability do not
// depend on it. The well-mixed rule is reported as x_i (pi_i - pi) without delta.

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pairdyn/error.hpp"
#include "pairdyn/pair_approx.hpp"
#include "pairdyn/payoff_model.hpp"

namespace pairdyn {

enum class Rule { PC, DB, WellMixed };
enum class Path { General, LinearFast, Auto };

inline std::string to_string(Rule r) {
    switch (r) {
        case Rule::PC: return "pc";
        case Rule::DB: return "db";
        default: return "wm";
    }
}

inline std::string to_string(Path p) {
    switch (p) {
        case Path::General: return "general";
        case Path::LinearFast: return "linear";
        default: return "auto";
    }
}

inline Rule parse_rule(const std::string& s) {
    if (s == "pc") return Rule::PC;
    if (s == "db") return Rule::DB;
    if (s == "wm" || s == "wellmixed") return Rule::WellMixed;
    throw ValidationError("unknown rule '" + s + "' (expected pc, db or wm)");
}

inline Path parse_path(const std::string& s) {
    if (s == "general") return Path::General;
    if (s == "linear") return Path::LinearFast;
    if (s == "auto") return Path::Auto;
    throw ValidationError("unknown path '" + s + "' (expected general, linear or auto)");
}

// Well-mixed mean payoffs pi_i = E[a_{i|k}] with co-players drawn from x.
inline Eigen::VectorXd wellmixed_payoffs(const PayoffModel& model, const Eigen::VectorXd& x) {
    const auto& space = model.space();
    std::vector<double> w(space.size());
    space.weights_into(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), w);
    Eigen::VectorXd pi = Eigen::VectorXd::Zero(model.n());
    for (std::size_t c = 0; c < w.size(); ++c)
        if (w[c] != 0.0)
            for (int i = 0; i < model.n(); ++i) pi(i) += w[c] * model.at(i, c);
    return pi;
}

inline Eigen::VectorXd wellmixed_rhs(const PayoffModel& model, const Eigen::VectorXd& x) {
    const Eigen::VectorXd pi = wellmixed_payoffs(model, x);
    const double mean = x.dot(pi);
    return x.cwiseProduct((pi.array() - mean).matrix());
}

// Linear well-mixed payoffs pi_i = k sum_l b_il x_l + c_i.
inline Eigen::VectorXd linear_wellmixed_payoffs(const LinearPayoff& lin, int k, const Eigen::VectorXd& x) {
    return k * (lin.b * x) + lin.c;
}

inline Eigen::VectorXd pc_linear_rhs(const LinearPayoff& lin, int k, double delta, const Eigen::VectorXd& x) {
    check_degree(k);
    const auto n = x.size();
    require(lin.n() == n, "linear payoff size differs from state length");
    const Eigen::VectorXd pi = linear_wellmixed_payoffs(lin, k, x);
    const double mean = x.dot(pi);
    const double xbx = x.dot(lin.b * x);
    const double pre = delta * (k - 2) / (2.0 * (k - 1));
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) s += x(j) * (lin.b(i, i) - lin.b(i, j) - lin.b(j, i) - lin.b(j, j));
        out(i) = pre * x(i) * ((k + 1) * (pi(i) - mean) + 3.0 * s + 6.0 * xbx);
    }
    return out;
}

inline Eigen::VectorXd db_linear_rhs(const LinearPayoff& lin, int k, double delta, const Eigen::VectorXd& x) {
    check_degree(k);
    const auto n = x.size();
    require(lin.n() == n, "linear payoff size differs from state length");
    const double kk = k;
    const Eigen::VectorXd pi = linear_wellmixed_payoffs(lin, k, x);
    const double mean = x.dot(pi);
    const Eigen::VectorXd bx = lin.b * x;
    double self_mean = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) self_mean += x(j) * (kk * lin.b(j, j) + lin.c(j));
    const double pre = delta * (kk - 2) / (kk * (kk - 1) * (kk - 1));
    const double c1 = (kk * kk - 2) * (kk * kk - 2) / kk;
    const double c2 = (3 * kk * kk - 4) / kk;
    const double c3 = kk * kk + 2 * kk - 4;
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) s += x(j) * (lin.b(j, i) - bx(j));
        out(i) = pre * x(i) *
                 (c1 * (pi(i) - mean) + c2 * ((kk * lin.b(i, i) + lin.c(i)) - self_mean) - c3 * s);
    }
    return out;
}

// Zero for every i at every x exactly when structured PC dynamics are a constant
// multiple of the well-mixed dynamics.
inline Eigen::VectorXd pc_neutrality_condition(const LinearPayoff& lin, const Eigen::VectorXd& x) {
    const auto n = x.size();
    require(lin.n() == n, "linear payoff size differs from state length");
    const double xbx = x.dot(lin.b * x);
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) s += x(j) * (lin.b(i, j) + lin.b(j, i) + lin.b(j, j));
        out(i) = lin.b(i, i) - s + 2.0 * xbx;
    }
    return out;
}

class ReplicatorSystem {
public:
    ReplicatorSystem(PayoffModel model, Rule rule, double delta = 1.0, Path path = Path::Auto)
        : model_(std::move(model)), rule_(rule), delta_(delta), requested_(path) {
        require(std::isfinite(delta) && delta > 0.0, "selection strength delta must be > 0");
        if (rule_ != Rule::WellMixed) {
            check_degree(model_.k());
            engine_ = std::make_shared<const MeanPayoffEngine>(model_);
        }
        linear_ = try_linear_fit(model_);
        if (path == Path::LinearFast)
            require(linear_.has_value(), "linear fast path requested for a nonlinear payoff model");
        active_ = (rule_ != Rule::WellMixed && path != Path::General && linear_) ? Path::LinearFast : Path::General;
    }

    const PayoffModel& model() const { return model_; }
    const MeanPayoffEngine& engine() const {
        require(engine_ != nullptr, "well-mixed systems carry no pair-approximation engine");
        return *engine_;
    }
    Rule rule() const { return rule_; }
    double delta() const { return delta_; }
    int n() const { return model_.n(); }
    int k() const { return model_.k(); }
    Path active_path() const { return active_; }
    Path requested_path() const { return requested_; }
    const std::optional<LinearPayoff>& linear() const { return linear_; }

    Eigen::VectorXd rhs(const Eigen::VectorXd& x) const {
        require(x.size() == n(), "state length differs from strategy count");
        check_simplex(x);
        return rhs_unchecked(x);
    }

    // No simplex validation; used by integrators and finite differences.
    Eigen::VectorXd rhs_unchecked(const Eigen::VectorXd& x) const;

private:
    PayoffModel model_;
    Rule rule_;
    double delta_;
    Path requested_;
    Path active_ = Path::General;
    std::shared_ptr<const MeanPayoffEngine> engine_;
    std::optional<LinearPayoff> linear_;
};

// PC, single-game assembly:
// dx_i = delta (k-2)/(2(k-1)) x_i sum_j x_j [S_ij + (k-1) N_ij + S_ii - S_ji - N_ji
//        - (k-2) sum_l x_l N_jl - N_jj], with S = A_self, N = A_neigh.
inline Eigen::VectorXd pc_general_rhs(const MeanPayoffEngine& eng, double delta, const Eigen::VectorXd& x) {
    const int k = eng.k();
    const auto n = x.size();
    const auto q = edge_closure(x, k);
    const auto t = eng.tables(q, TableMode::Pairs);
    const Eigen::VectorXd nx = t.neigh * x;
    const double pre = delta * (k - 2) / (2.0 * (k - 1));
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            s += x(j) * (t.self(i, j) + (k - 1) * t.neigh(i, j) + t.self(i, i) - t.self(j, i) - t.neigh(j, i) -
                         (k - 2) * nx(j) - t.neigh(j, j));
        out(i) = pre * x(i) * s;
    }
    return out;
}

// PC, accumulated assembly: dx_i = delta/2 x_i (<pi_i> - sum_j q_{j|i} <pi_j^{k+i}>).
inline Eigen::VectorXd pc_accumulated_rhs(const MeanPayoffEngine& eng, double delta, const Eigen::VectorXd& x) {
    const int k = eng.k();
    const auto n = x.size();
    const auto q = edge_closure(x, k);
    const auto t = eng.tables(q, TableMode::Pairs);
    const Eigen::VectorXd self = accumulated_self(t, q, k);
    const Eigen::MatrixXd nb = accumulated_neighbor(t, q, k);
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) s += q(j, i) * nb(j, i);
        out(i) = 0.5 * delta * x(i) * (self(i) - s);
    }
    return out;
}

// PC with two strategies, written in x_1 alone.
inline Eigen::VectorXd pc_n2_rhs(const MeanPayoffEngine& eng, double delta, const Eigen::VectorXd& x) {
    require(x.size() == 2, "two-strategy reduction needs n = 2");
    const int k = eng.k();
    const auto t = eng.tables(edge_closure(x, k), TableMode::Pairs);
    const double x1 = x(0);
    const double v = delta * (k - 2) / (2.0 * (k - 1)) * x1 * (1 - x1) *
                     (t.self(0, 1) - t.self(1, 0) + ((k - 2) * x1 + 1) * (t.self(0, 0) - t.neigh(1, 0)) +
                      ((k - 2) * (1 - x1) + 1) * (t.neigh(0, 1) - t.self(1, 1)));
    return Eigen::Vector2d(v, -v);
}

// DB: dx_i = delta (k-1)/k x_i (<pi_i> - sum_j sum_i' q_{i'|j} q_{j|i} <pi_{i'|j}^{k+i,+i'}>).
inline Eigen::VectorXd db_general_rhs(const MeanPayoffEngine& eng, double delta, const Eigen::VectorXd& x) {
    const int k = eng.k();
    const auto n = x.size();
    const auto q = edge_closure(x, k);
    const auto t = eng.tables(q, TableMode::WithTriple);
    const Eigen::VectorXd self = accumulated_self(t, q, k);
    const auto second = accumulated_second_order(t, q, k);
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index ip = 0; ip < n; ++ip) s += q(ip, j) * q(j, i) * second[static_cast<std::size_t>(ip)](i, j);
        out(i) = delta * (k - 1) / k * x(i) * (self(i) - s);
    }
    return out;
}

// DB with two strategies, written with the four second-order payoffs <pi_{a|j}^{k+1,+2}>.
inline Eigen::VectorXd db_n2_rhs(const MeanPayoffEngine& eng, double delta, const Eigen::VectorXd& x) {
    require(x.size() == 2, "two-strategy reduction needs n = 2");
    const int k = eng.k();
    const auto q = edge_closure(x, k);
    const auto t = eng.tables(q, TableMode::WithTriple);
    const auto T = accumulated_second_order(t, q, k);
    // <pi_{1|j}^{k+1,+2}> = T[0](1, j) and <pi_{2|j}^{k+1,+2}> = T[1](0, j).
    const double d2 = T[0](1, 1) - T[1](0, 1);
    const double d1 = T[0](1, 0) - T[1](0, 0);
    const double x1 = x(0);
    const double v = delta * (k - 2) / (static_cast<double>(k) * (k - 1)) * x1 * (1 - x1) *
                     (k * d2 + ((k - 2) * x1 + 1) * (d1 - d2));
    return Eigen::Vector2d(v, -v);
}

inline Eigen::VectorXd pc_general_rhs(const ReplicatorSystem& sys, const Eigen::VectorXd& x) {
    return pc_general_rhs(sys.engine(), sys.delta(), x);
}
inline Eigen::VectorXd pc_accumulated_rhs(const ReplicatorSystem& sys, const Eigen::VectorXd& x) {
    return pc_accumulated_rhs(sys.engine(), sys.delta(), x);
}
inline Eigen::VectorXd db_general_rhs(const ReplicatorSystem& sys, const Eigen::VectorXd& x) {
    return db_general_rhs(sys.engine(), sys.delta(), x);
}
inline Eigen::VectorXd pc_linear_rhs(const ReplicatorSystem& sys, const Eigen::VectorXd& x) {
    require(sys.linear().has_value(), "nonlinear payoff model rejected by the linear path");
    return pc_linear_rhs(*sys.linear(), sys.k(), sys.delta(), x);
}
inline Eigen::VectorXd db_linear_rhs(const ReplicatorSystem& sys, const Eigen::VectorXd& x) {
    require(sys.linear().has_value(), "nonlinear payoff model rejected by the linear path");
    return db_linear_rhs(*sys.linear(), sys.k(), sys.delta(), x);
}

inline Eigen::VectorXd ReplicatorSystem::rhs_unchecked(const Eigen::VectorXd& x) const {
    switch (rule_) {
        case Rule::PC:
            return active_ == Path::LinearFast ? pc_linear_rhs(*linear_, k(), delta_, x)
                                               : pc_general_rhs(*engine_, delta_, x);
        case Rule::DB:
            return active_ == Path::LinearFast ? db_linear_rhs(*linear_, k(), delta_, x)
                                               : db_general_rhs(*engine_, delta_, x);
        default:
            return wellmixed_rhs(model_, x);
    }
}

}  // namespace pairdyn
