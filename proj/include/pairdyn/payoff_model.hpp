#pragma once

// Payoff structures a_{i|k}: generic tables, the linear (b, c) family, and the
// built-in public goods games (plain, peer punishment, pool punishment).
// Strategy indices are 0-based; documentation elsewhere numbers them from 1.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pairdyn/config_space.hpp"
#include "pairdyn/error.hpp"

namespace pairdyn {

struct LinearPayoff {
    Eigen::MatrixXd b;  // n x n, per co-player coefficients
    Eigen::VectorXd c;  // n, constants

    int n() const { return static_cast<int>(c.size()); }

    double evaluate(int i, std::span<const int> counts) const {
        double s = c(i);
        for (int j = 0; j < n(); ++j) s += b(i, j) * counts[static_cast<std::size_t>(j)];
        return s;
    }

    void validate() const {
        require(b.rows() == b.cols() && b.rows() == c.size() && c.size() >= 2,
                "linear payoff needs an n x n matrix b and length-n vector c with n >= 2");
        require(b.allFinite() && c.allFinite(), "linear payoff coefficients must be finite");
    }
};

struct GameParams {
    double r = 3.0;
    double cost = 1.0;
    double alpha = 0.0;
    double beta = 0.0;

    void validate() const {
        require(std::isfinite(r) && r > 0.0, "synergy factor r must be > 0");
        require(std::isfinite(cost) && cost > 0.0, "cost c must be > 0");
        require(std::isfinite(alpha) && alpha >= 0.0, "punishment cost alpha must be >= 0");
        require(std::isfinite(beta) && beta >= 0.0, "punishment fine beta must be >= 0");
    }
};

class PayoffModel {
public:
    using Evaluator = std::function<double(int, const Configuration&)>;

    PayoffModel(int n, int k, const Evaluator& f, std::vector<std::string> names = {}, std::string name = "custom")
        : n_(n), k_(k), name_(std::move(name)), names_(std::move(names)) {
        init_space();
        table_.resize(n, static_cast<Eigen::Index>(space_->size()));
        for (std::size_t idx = 0; idx < space_->size(); ++idx)
            for (int i = 0; i < n; ++i) table_(i, static_cast<Eigen::Index>(idx)) = f(i, (*space_)[idx]);
        require(table_.allFinite(), "payoff evaluator returned a non-finite value");
    }

    PayoffModel(const LinearPayoff& lin, int k, std::vector<std::string> names = {}, std::string name = "linear")
        : n_(lin.n()), k_(k), name_(std::move(name)), names_(std::move(names)), linear_(lin) {
        lin.validate();
        init_space();
        table_.resize(n_, static_cast<Eigen::Index>(space_->size()));
        for (std::size_t idx = 0; idx < space_->size(); ++idx)
            for (int i = 0; i < n_; ++i)
                table_(i, static_cast<Eigen::Index>(idx)) = lin.evaluate(i, (*space_)[idx].counts);
    }

    // Explicit generalized payoff matrix; columns follow the enumeration order.
    static PayoffModel from_matrix(int n, int k, const Eigen::MatrixXd& matrix, std::vector<std::string> names = {},
                                   std::string name = "table") {
        require(matrix.rows() == n && static_cast<std::uint64_t>(matrix.cols()) == configuration_count(n, k),
                "payoff matrix must be n x binomial(k+n-1, k)");
        ConfigurationSpace space(n, k);
        return PayoffModel(
            n, k,
            [&](int i, const Configuration& c) { return matrix(i, static_cast<Eigen::Index>(space.index_of(c))); },
            std::move(names), std::move(name));
    }

    int n() const { return n_; }
    int k() const { return k_; }
    const std::string& name() const { return name_; }
    const std::vector<std::string>& strategy_names() const { return names_; }
    const ConfigurationSpace& space() const { return *space_; }
    const Eigen::MatrixXd& matrix() const { return table_; }
    const std::optional<LinearPayoff>& linear() const { return linear_; }

    double at(int i, std::size_t idx) const { return table_(i, static_cast<Eigen::Index>(idx)); }

    double evaluate(int i, const Configuration& c) const {
        require(i >= 0 && i < n_, "focal strategy index out of range");
        require(c.n() == n_ && c.total() == k_, "configuration must have n parts summing to k");
        for (int v : c.counts) require(v >= 0, "configuration counts must be non-negative");
        return at(i, space_->index_of(c));
    }

private:
    void init_space() {
        require(n_ >= 2, "payoff model needs at least two strategies");
        require(k_ >= 1 && k_ <= kMaxCoPlayers, "degree k must lie in [1, 64]");
        if (names_.empty())
            for (int i = 0; i < n_; ++i) names_.push_back("s" + std::to_string(i + 1));
        require(static_cast<int>(names_.size()) == n_, "strategy name count differs from n");
        space_ = std::make_shared<const ConfigurationSpace>(n_, k_);
    }

    int n_;
    int k_;
    std::string name_;
    std::vector<std::string> names_;
    std::shared_ptr<const ConfigurationSpace> space_;
    Eigen::MatrixXd table_;
    std::optional<LinearPayoff> linear_;
};

inline Eigen::MatrixXd as_generalized_matrix(const PayoffModel& model) { return model.matrix(); }

// Least-squares (b, c) over the generalized matrix. Because sum_j k_j = k, row i
// is only determined up to b_ij + t, c_i - k t; the minimum-norm solution is
// returned. Models built from a LinearPayoff return their own coefficients.
inline std::optional<LinearPayoff> try_linear_fit(const PayoffModel& model, double threshold = 1e-9) {
    if (model.linear()) return model.linear();
    const int n = model.n();
    const auto& space = model.space();
    const auto rows = static_cast<Eigen::Index>(space.size());
    Eigen::MatrixXd design(rows, n + 1);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (int j = 0; j < n; ++j) design(r, j) = space[static_cast<std::size_t>(r)][j];
        design(r, n) = 1.0;
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
    LinearPayoff fit{Eigen::MatrixXd(n, n), Eigen::VectorXd(n)};
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd target = model.matrix().row(i).transpose();
        const Eigen::VectorXd coef = cod.solve(target);
        worst = std::max(worst, (design * coef - target).cwiseAbs().maxCoeff());
        fit.b.row(i) = coef.head(n).transpose();
        fit.c(i) = coef(n);
    }
    if (worst >= threshold) return std::nullopt;
    return fit;
}

// Built-in games. R = r c / (k + 1) is one contributor's share of the pot.

inline LinearPayoff pgg(const GameParams& p, int k) {
    p.validate();
    const double R = p.r * p.cost / (k + 1);
    LinearPayoff lin{Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Zero(2)};
    lin.b(0, 0) = R;
    lin.b(1, 0) = R;
    lin.c(0) = R - p.cost;
    return lin;
}

// Strategy order C, D, E. Punishers pay alpha per defector; defectors pay beta per punisher.
inline LinearPayoff peer_punishment(const GameParams& p, int k) {
    p.validate();
    const double R = p.r * p.cost / (k + 1);
    LinearPayoff lin{Eigen::MatrixXd(3, 3), Eigen::VectorXd(3)};
    lin.b << R, 0.0, R,
             R, 0.0, R - p.beta,
             R, -p.alpha, R;
    lin.c << R - p.cost, 0.0, R - p.cost;
    return lin;
}

// Strategy order C, D, O. Pool punishers pay a flat alpha; a defector pays beta
// once if at least one pool punisher is among its co-players.
inline PayoffModel pool_punishment(const GameParams& p, int k) {
    p.validate();
    const double R = p.r * p.cost / (k + 1);
    const double cost = p.cost, alpha = p.alpha, beta = p.beta;
    return PayoffModel(
        3, k,
        [=](int i, const Configuration& c) {
            const double pot = R * (c[0] + c[2]);
            switch (i) {
                case 0: return pot + R - cost;
                case 1: return pot - (c[2] > 0 ? beta : 0.0);
                default: return pot + R - cost - alpha;
            }
        },
        {"C", "D", "O"}, "pool");
}

inline PayoffModel pgg_model(const GameParams& p, int k) { return PayoffModel(pgg(p, k), k, {"C", "D"}, "pgg"); }

inline PayoffModel peer_model(const GameParams& p, int k) {
    return PayoffModel(peer_punishment(p, k), k, {"C", "D", "E"}, "peer");
}

struct GameInfo {
    std::string name;
    std::vector<std::string> strategies;
    std::string description;
};

inline std::vector<GameInfo> builtin_games() {
    return {
        {"pgg", {"C", "D"}, "public goods game; linear"},
        {"peer", {"C", "D", "E"}, "public goods game with peer punishment; linear"},
        {"pool", {"C", "D", "O"}, "public goods game with pool punishment; nonlinear fine"},
    };
}

inline PayoffModel make_builtin(const std::string& game, const GameParams& p, int k) {
    if (game == "pgg") return pgg_model(p, k);
    if (game == "peer") return peer_model(p, k);
    if (game == "pool") return pool_punishment(p, k);
    throw ValidationError("unknown game '" + game + "' (expected pgg, peer or pool)");
}

}  // namespace pairdyn
