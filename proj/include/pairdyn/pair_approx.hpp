#pragma once

// Pair-approximation closure q_{j|i} and the statistical mean payoffs built on it.
// q is stored column-wise: q(j, i) = q_{j|i}, the chance that a neighbor of an
// i-player uses strategy j.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "pairdyn/config_space.hpp"
#include "pairdyn/error.hpp"
#include "pairdyn/payoff_model.hpp"

namespace pairdyn {

inline void check_simplex(const Eigen::VectorXd& x, double tol = 1e-9) {
    require(x.size() >= 1 && x.allFinite(), "state must be a finite vector");
    for (Eigen::Index i = 0; i < x.size(); ++i) require(x(i) >= -1e-12, "state has a negative frequency");
    require(std::abs(x.sum() - 1.0) <= tol, "state frequencies do not sum to 1");
}

inline void check_degree(int k) {
    require(k >= 3, "degree k must be >= 3: the pair-approximation closure degenerates at k = 2");
}

// q_{j|i} = ((k-2) x_j + [i == j]) / (k-1).
inline Eigen::MatrixXd edge_closure(const Eigen::VectorXd& x, int k) {
    check_degree(k);
    const auto n = x.size();
    Eigen::MatrixXd q(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) q(j, i) = ((k - 2) * x(j) + (i == j ? 1.0 : 0.0)) / (k - 1);
    return q;
}

// Order-delta^0 edge dynamics: dq_{l|i}/dt = (theta_il + (k-1) sum_j q_{l|j} q_{j|i} - k q_{l|i}) / k.
inline Eigen::MatrixXd edge_dynamics_rhs(const Eigen::MatrixXd& q, int k) {
    require(q.rows() == q.cols(), "q must be square");
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(q.rows(), q.cols());
    return (id + (k - 1) * (q * q) - k * q) / k;
}

enum class TableMode { Pairs, WithTriple };

struct MeanPayoffTables {
    Eigen::MatrixXd self;                 // (i, j): <a_{i|k+j}>_i
    Eigen::MatrixXd neigh;                // (i, j): <a_{i|k+j}>_j
    std::vector<Eigen::MatrixXd> triple;  // [i'](i, j): <a_{i'|k+i,+j}>_j, empty unless requested
};

// Configuration sums of total k-1 and k-2 with payoff lookups into the model's
// memoized generalized matrix.
class MeanPayoffEngine {
public:
    explicit MeanPayoffEngine(PayoffModel model)
        : model_(std::move(model)), s1_(model_.n(), model_.k() - 1), s2_(model_.n(), std::max(model_.k() - 2, 0)) {
        check_degree(model_.k());
        const int n = model_.n();
        std::vector<int> tmp;
        plus1_.resize(s1_.size() * static_cast<std::size_t>(n));
        for (std::size_t c = 0; c < s1_.size(); ++c) {
            for (int j = 0; j < n; ++j) {
                tmp = s1_[c].counts;
                ++tmp[static_cast<std::size_t>(j)];
                plus1_[c * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] = model_.space().index_of(tmp);
            }
        }
        plus2_.resize(s2_.size() * static_cast<std::size_t>(n * n));
        for (std::size_t c = 0; c < s2_.size(); ++c) {
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    tmp = s2_[c].counts;
                    ++tmp[static_cast<std::size_t>(i)];
                    ++tmp[static_cast<std::size_t>(j)];
                    plus2_[(c * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)) * static_cast<std::size_t>(n) +
                           static_cast<std::size_t>(j)] = model_.space().index_of(tmp);
                }
            }
        }
    }

    const PayoffModel& model() const { return model_; }
    int n() const { return model_.n(); }
    int k() const { return model_.k(); }

    MeanPayoffTables tables(const Eigen::MatrixXd& q, TableMode mode) const {
        const int n = model_.n();
        const auto nn = static_cast<std::size_t>(n);
        std::vector<double> w1(s1_.size() * nn);
        for (int i = 0; i < n; ++i)
            s1_.weights_into(column(q, i), std::span<double>(w1.data() + static_cast<std::size_t>(i) * s1_.size(), s1_.size()));
        MeanPayoffTables t{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n), {}};
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double* wi = w1.data() + static_cast<std::size_t>(i) * s1_.size();
                const double* wj = w1.data() + static_cast<std::size_t>(j) * s1_.size();
                double self = 0.0, neigh = 0.0;
                for (std::size_t c = 0; c < s1_.size(); ++c) {
                    const double a = model_.at(i, plus1_[c * nn + static_cast<std::size_t>(j)]);
                    self += wi[c] * a;
                    neigh += wj[c] * a;
                }
                t.self(i, j) = self;
                t.neigh(i, j) = neigh;
            }
        }
        if (mode == TableMode::WithTriple) {
            std::vector<double> w2(s2_.size() * nn);
            for (int j = 0; j < n; ++j)
                s2_.weights_into(column(q, j),
                                 std::span<double>(w2.data() + static_cast<std::size_t>(j) * s2_.size(), s2_.size()));
            t.triple.assign(nn, Eigen::MatrixXd::Zero(n, n));
            for (int ip = 0; ip < n; ++ip) {
                for (int i = 0; i < n; ++i) {
                    for (int j = 0; j < n; ++j) {
                        const double* wj = w2.data() + static_cast<std::size_t>(j) * s2_.size();
                        double s = 0.0;
                        for (std::size_t c = 0; c < s2_.size(); ++c)
                            s += wj[c] * model_.at(ip, plus2_[(c * nn + static_cast<std::size_t>(i)) * nn +
                                                              static_cast<std::size_t>(j)]);
                        t.triple[static_cast<std::size_t>(ip)](i, j) = s;
                    }
                }
            }
        }
        return t;
    }

    // <a_{i|k}>_i summed directly over configurations of total k.
    Eigen::VectorXd mean_full_game(const Eigen::MatrixXd& q) const {
        const int n = model_.n();
        Eigen::VectorXd out(n);
        std::vector<double> w(model_.space().size());
        for (int i = 0; i < n; ++i) {
            model_.space().weights_into(column(q, i), w);
            double s = 0.0;
            for (std::size_t c = 0; c < w.size(); ++c) s += w[c] * model_.at(i, c);
            out(i) = s;
        }
        return out;
    }

private:
    static std::span<const double> column(const Eigen::MatrixXd& q, int i) {
        return std::span<const double>(q.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(q.rows()),
                                       static_cast<std::size_t>(q.rows()));
    }

    PayoffModel model_;
    ConfigurationSpace s1_;
    ConfigurationSpace s2_;
    std::vector<std::size_t> plus1_;
    std::vector<std::size_t> plus2_;
};

// Accumulated payoffs over the 1 + k games a player joins.

// <pi_i^k> = sum_j q_{j|i} A_self(i,j) + k sum_l q_{l|i} A_neigh(i,l).
inline Eigen::VectorXd accumulated_self(const MeanPayoffTables& t, const Eigen::MatrixXd& q, int k) {
    const auto n = q.rows();
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) s += q(j, i) * (t.self(i, j) + k * t.neigh(i, j));
        out(i) = s;
    }
    return out;
}

// (j, i): <pi_j^{k+i}> = A_self(j,i) + A_neigh(j,i) + (k-1) sum_l q_{l|j} A_neigh(j,l).
inline Eigen::MatrixXd accumulated_neighbor(const MeanPayoffTables& t, const Eigen::MatrixXd& q, int k) {
    const auto n = q.rows();
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double rest = 0.0;
        for (Eigen::Index l = 0; l < n; ++l) rest += q(l, j) * t.neigh(j, l);
        for (Eigen::Index i = 0; i < n; ++i) out(j, i) = t.self(j, i) + t.neigh(j, i) + (k - 1) * rest;
    }
    return out;
}

// [a](b, j): <pi_{a|j}^{k+b,+a}> = A_triple[a](b,j) + A_self(a,j) + (k-1) sum_l q_{l|a} A_neigh(a,l).
inline std::vector<Eigen::MatrixXd> accumulated_second_order(const MeanPayoffTables& t, const Eigen::MatrixXd& q, int k) {
    require(!t.triple.empty(), "second-order payoffs need the triple table");
    const auto n = q.rows();
    std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(n), Eigen::MatrixXd(n, n));
    for (Eigen::Index a = 0; a < n; ++a) {
        double rest = 0.0;
        for (Eigen::Index l = 0; l < n; ++l) rest += q(l, a) * t.neigh(a, l);
        for (Eigen::Index b = 0; b < n; ++b)
            for (Eigen::Index j = 0; j < n; ++j)
                out[static_cast<std::size_t>(a)](b, j) =
                    t.triple[static_cast<std::size_t>(a)](b, j) + t.self(a, j) + (k - 1) * rest;
    }
    return out;
}

inline MeanPayoffTables mean_single_game(const PayoffModel& model, const Eigen::VectorXd& x, TableMode mode) {
    require(x.size() == model.n(), "state length differs from strategy count");
    check_simplex(x);
    return MeanPayoffEngine(model).tables(edge_closure(x, model.k()), mode);
}

inline Eigen::VectorXd mean_accumulated_self(const PayoffModel& model, const Eigen::VectorXd& x) {
    const auto q = edge_closure(x, model.k());
    return accumulated_self(mean_single_game(model, x, TableMode::Pairs), q, model.k());
}

inline Eigen::MatrixXd mean_accumulated_neighbor(const PayoffModel& model, const Eigen::VectorXd& x) {
    const auto q = edge_closure(x, model.k());
    return accumulated_neighbor(mean_single_game(model, x, TableMode::Pairs), q, model.k());
}

inline std::vector<Eigen::MatrixXd> mean_accumulated_second_order(const PayoffModel& model, const Eigen::VectorXd& x) {
    const auto q = edge_closure(x, model.k());
    return accumulated_second_order(mean_single_game(model, x, TableMode::WithTriple), q, model.k());
}

}  // namespace pairdyn
