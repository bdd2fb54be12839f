#pragma once

// Closed-form punishment thresholds and edge rest points for the peer and pool
// punishment games under PC updating. Strategy order is (C, D, E|O).

#include <cmath>
#include <limits>
#include <string>

#include "pairdyn/error.hpp"
#include "pairdyn/payoff_model.hpp"

namespace pairdyn {

enum class GameKind { Peer, Pool };
enum class Population { WellMixed, Structured };

inline std::string to_string(GameKind g) { return g == GameKind::Peer ? "peer" : "pool"; }
inline std::string to_string(Population p) { return p == Population::WellMixed ? "wellmixed" : "structured"; }

inline GameKind parse_game_kind(const std::string& s) {
    if (s == "peer") return GameKind::Peer;
    if (s == "pool") return GameKind::Pool;
    throw ValidationError("game must be peer or pool for threshold analysis, got '" + s + "'");
}

inline Population parse_population(const std::string& s) {
    if (s == "structured" || s == "graph") return Population::Structured;
    if (s == "wellmixed" || s == "wm" || s == "well-mixed") return Population::WellMixed;
    throw ValidationError("population must be structured or wellmixed, got '" + s + "'");
}

// beta0: punishment starts to work; beta_eq: structure overtakes mixing;
// beta_star: the full-defection basin closes (infinite for well-mixed).
struct Thresholds {
    double beta0_wm = 0.0;
    double beta0 = 0.0;
    double beta_eq = 0.0;
    double beta_star = 0.0;
    Population population = Population::Structured;
};

struct ThresholdPair {
    Thresholds well_mixed;
    Thresholds structured;

    const Thresholds& of(Population p) const { return p == Population::WellMixed ? well_mixed : structured; }
};

namespace detail {

inline void check_dilemma(double r, double c, double alpha, int k) {
    GameParams{r, c, alpha, 0.0}.validate();
    require(k >= 3, "degree k must be >= 3");
    require(r < k + 1, "r >= k + 1 is the no-dilemma regime; thresholds are undefined there");
}

inline ThresholdPair assemble(double beta0_wm, double beta0, double beta_eq, double beta_star) {
    ThresholdPair p;
    p.structured = Thresholds{beta0_wm, beta0, beta_eq, beta_star, Population::Structured};
    p.well_mixed = Thresholds{beta0_wm, beta0_wm, beta_eq, std::numeric_limits<double>::infinity(), Population::WellMixed};
    return p;
}

}  // namespace detail

inline ThresholdPair peer_thresholds(double r, double c, double alpha, int k) {
    detail::check_dilemma(r, c, alpha, k);
    const double R = r * c / (k + 1);
    const double gap = c - R;  // -rc/(k+1) + c
    const double kk = static_cast<double>(k) * k + k - 3;
    return detail::assemble(gap / k, ((k + 1) * gap + 3 * alpha) / kk, 2.0 * gap / k + alpha,
                            (k + 1) / 3.0 * (gap + k * alpha) - alpha);
}

inline ThresholdPair pool_thresholds(double r, double c, double alpha, int k) {
    detail::check_dilemma(r, c, alpha, k);
    const double R = r * c / (k + 1);
    const double g = (k + 1) * std::pow(k - 1.0, k - 1);
    const double kern = std::pow(k + 1.0, 1.0 / k) * std::pow(k - 1.0, 1.0 - 1.0 / k) - k + 2;
    const double kp = std::pow(kern, k);
    return detail::assemble(c - R + alpha, g / (1.0 - g) * (R - c - alpha), kp / (1.0 - kp) * (R - c - alpha),
                            (k + 1) / 2.0 * (c - R + alpha));
}

inline ThresholdPair thresholds(GameKind g, double r, double c, double alpha, int k) {
    return g == GameKind::Peer ? peer_thresholds(r, c, alpha, k) : pool_thresholds(r, c, alpha, k);
}

struct EdgeFractions {
    double x_d_edge = std::numeric_limits<double>::quiet_NaN();     // x_D on the DE (peer) or DO (pool) edge
    bool x_d_exists = false;
    double x_ce_star = std::numeric_limits<double>::quiet_NaN();    // peer: x_C where the CE line changes stability
    bool x_ce_exists = false;
};

inline EdgeFractions edge_equilibrium_fractions(GameKind g, const GameParams& p, int k, Population pop) {
    detail::check_dilemma(p.r, p.cost, p.alpha, k);
    require(std::isfinite(p.beta) && p.beta >= 0.0, "punishment fine beta must be >= 0");
    const double R = p.r * p.cost / (k + 1);
    const double a = p.alpha, b = p.beta, c = p.cost;
    EdgeFractions out;
    auto inside = [](double v) { return std::isfinite(v) && v > 0.0 && v < 1.0; };
    if (g == GameKind::Peer) {
        if (a + b > 0.0) {
            out.x_d_edge = pop == Population::Structured
                               ? ((k + 1) * (R - c + k * b) - 3 * (a + b)) / ((k - 2.0) * (k + 3) * (a + b))
                               : (R - c + k * b) / (k * (a + b));
        }
        const double denom = pop == Population::Structured ? k * b - 3 * (a + b) / (k + 1) : k * b;
        if (denom != 0.0) out.x_ce_star = 1.0 + (R - c) / denom;
        out.x_ce_exists = inside(out.x_ce_star);
    } else if (b > 0.0) {
        const double base = 1.0 + (R - c - a) / b;
        if (pop == Population::Structured) {
            const double inner = (k + 1.0) / (k - 1.0) * base;
            if (inner >= 0.0) out.x_d_edge = (k - 1.0) / (k - 2.0) * (-1.0 / (k - 1.0) + std::pow(inner, 1.0 / k));
        } else if (base >= 0.0) {
            out.x_d_edge = std::pow(base, 1.0 / k);
        }
    }
    out.x_d_exists = inside(out.x_d_edge);
    return out;
}

enum class Phase { Defection, Bistable, Punishing };

// Peer: D, D<=>(C+E)_V, (C+E)_V. Pool: D, D_{O<=>D}, (D+C+O)_C.
inline std::string phase_label(GameKind g, Phase ph) {
    switch (ph) {
        case Phase::Defection: return "D";
        case Phase::Bistable: return g == GameKind::Peer ? "D<=>(C+E)_V" : "D_{O<=>D}";
        default: return g == GameKind::Peer ? "(C+E)_V" : "(D+C+O)_C";
    }
}

inline Phase phase_classify(GameKind g, double r, double c, double alpha, double beta, int k, Population pop) {
    require(std::isfinite(beta) && beta >= 0.0, "punishment fine beta must be >= 0");
    const Thresholds t = thresholds(g, r, c, alpha, k).of(pop);
    if (beta < t.beta0) return Phase::Defection;
    if (beta < t.beta_star) return Phase::Bistable;
    return Phase::Punishing;
}

}  // namespace pairdyn
