#pragma once

// alpha-beta phase grids from the closed-form thresholds, with an optional
// check that re-derives labels by integrating the flow from fixed starts.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "pairdyn/dynamics/integrate.hpp"
#include "pairdyn/dynamics/thresholds.hpp"
#include "pairdyn/parallel.hpp"
#include "pairdyn/replicator.hpp"

namespace pairdyn {

enum class CrossCheck { None, Boundary, All };

inline CrossCheck parse_cross_check(const std::string& s) {
    if (s == "none") return CrossCheck::None;
    if (s == "boundary") return CrossCheck::Boundary;
    if (s == "all") return CrossCheck::All;
    throw ValidationError("cross-check mode must be none, boundary or all, got '" + s + "'");
}

struct PhaseOptions {
    CrossCheck cross_check = CrossCheck::None;
    double t_max = 2000.0;
    double tol = 1e-8;
    int jobs = 1;
};

struct PhaseCell {
    double alpha = 0.0;
    double beta = 0.0;
    Phase phase = Phase::Defection;
    double boundary_distance = 0.0;  // |beta - nearest threshold| at this alpha
    bool checked = false;
    std::optional<Phase> ode_phase;  // empty when the flow check was inconclusive
    bool agrees = true;
};

struct PhaseGrid {
    GameKind game = GameKind::Peer;
    Population population = Population::Structured;
    double r = 0.0, c = 0.0;
    int k = 0;
    std::vector<double> alphas, betas;
    std::vector<PhaseCell> cells;  // index = ia * betas.size() + ib

    const PhaseCell& at(std::size_t ia, std::size_t ib) const { return cells[ia * betas.size() + ib]; }
    std::size_t disagreements() const {
        return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return !c.agrees; }));
    }
};

// Inclusive range lo:hi:step; the last point is hi when it falls on the grid.
inline std::vector<double> parse_range(const std::string& text) {
    std::vector<double> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(':', start);
        const std::string tok = text.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(tok, &used));
            require(used == tok.size(), "");
        } catch (const std::exception&) {
            throw ValidationError("bad range '" + text + "': expected value or lo:hi:step");
        }
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    if (parts.size() == 1) return parts;
    require(parts.size() == 3, "bad range '" + text + "': expected value or lo:hi:step");
    const double lo = parts[0], hi = parts[1], step = parts[2];
    require(step > 0.0 && hi >= lo, "range needs lo <= hi and step > 0");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    require(count <= 1'000'000, "range has too many points");
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = lo + static_cast<double>(i) * step;
    return out;
}

inline std::vector<Eigen::VectorXd> canonical_starts(GameKind g) {
    auto v = [](double a, double b, double c) { return Eigen::Vector3d(a, b, c).eval(); };
    if (g == GameKind::Peer)
        return {v(1.0 / 3, 1.0 / 3, 1.0 / 3), v(0.005, 0.99, 0.005), v(0.005, 0.005, 0.99), v(0.99, 0.005, 0.005),
                v(0.25, 0.5, 0.25),           v(0.1, 0.1, 0.8),      v(0.45, 0.1, 0.45),    v(0.1, 0.8, 0.1),
                v(1e-4, 0.9998, 1e-4)};
    return {v(1.0 / 3, 1.0 / 3, 1.0 / 3), v(0.25, 0.5, 0.25), v(0.1, 0.1, 0.8), v(0.45, 0.1, 0.45),
            v(0.1, 0.8, 0.1),             v(0.0, 0.5, 0.5),   v(0.0, 0.005, 0.995), v(0.0, 0.9, 0.1)};
}

// Label from where the flow goes. Peer: every start to D, every start to the
// defector-free edge, or a split. Pool: an interior start that avoids D means
// cycling; otherwise the defector-punisher edge decides between D and bistability.
inline std::optional<Phase> ode_phase(GameKind g, const GameParams& p, int k, Population pop,
                                      const PhaseOptions& opt = {}) {
    const PayoffModel model = g == GameKind::Peer ? peer_model(p, k) : pool_punishment(p, k);
    const ReplicatorSystem sys(model, pop == Population::Structured ? Rule::PC : Rule::WellMixed, 1.0);
    const auto starts = canonical_starts(g);
    IntegrateOptions io;
    io.record_interval = opt.t_max;
    if (g == GameKind::Peer) {
        int to_d = 0, to_ce = 0;
        for (const auto& x0 : starts) {
            const double xd = integrate(sys, x0, opt.t_max, opt.tol, io).final_state()(1);
            if (xd > 0.99) ++to_d;
            else if (xd < 0.01) ++to_ce;
            else return std::nullopt;
        }
        if (to_ce == 0) return Phase::Defection;
        if (to_d == 0) return Phase::Punishing;
        return Phase::Bistable;
    }
    for (std::size_t s = 0; s < 5; ++s)
        if (integrate(sys, starts[s], opt.t_max, opt.tol, io).final_state()(1) < 0.99) return Phase::Punishing;
    for (std::size_t s = 5; s < starts.size(); ++s) {
        const auto end = integrate(sys, starts[s], opt.t_max, opt.tol, io).final_state();
        if (end(2) > 0.99) return Phase::Bistable;
        if (end(1) < 0.99) return std::nullopt;
    }
    return Phase::Defection;
}

inline PhaseGrid phase_diagram(GameKind g, double r, double c, int k, Population pop, const std::vector<double>& alphas,
                               const std::vector<double>& betas, const PhaseOptions& opt = {}) {
    require(!alphas.empty() && !betas.empty(), "phase grid needs at least one alpha and one beta");
    PhaseGrid grid{g, pop, r, c, k, alphas, betas, {}};
    const std::size_t na = alphas.size(), nb = betas.size();
    grid.cells.resize(na * nb);
    for (std::size_t ia = 0; ia < na; ++ia) {
        const Thresholds t = thresholds(g, r, c, alphas[ia], k).of(pop);
        for (std::size_t ib = 0; ib < nb; ++ib) {
            auto& cell = grid.cells[ia * nb + ib];
            cell.alpha = alphas[ia];
            cell.beta = betas[ib];
            cell.phase = phase_classify(g, r, c, alphas[ia], betas[ib], k, pop);
            double d = std::abs(betas[ib] - t.beta0);
            if (std::isfinite(t.beta_star)) d = std::min(d, std::abs(betas[ib] - t.beta_star));
            cell.boundary_distance = d;
        }
    }
    if (opt.cross_check == CrossCheck::None) return grid;

    std::vector<std::size_t> todo;
    for (std::size_t ia = 0; ia < na; ++ia) {
        for (std::size_t ib = 0; ib < nb; ++ib) {
            const Phase ph = grid.cells[ia * nb + ib].phase;
            bool edge = opt.cross_check == CrossCheck::All;
            if (ia > 0 && grid.cells[(ia - 1) * nb + ib].phase != ph) edge = true;
            if (ia + 1 < na && grid.cells[(ia + 1) * nb + ib].phase != ph) edge = true;
            if (ib > 0 && grid.cells[ia * nb + ib - 1].phase != ph) edge = true;
            if (ib + 1 < nb && grid.cells[ia * nb + ib + 1].phase != ph) edge = true;
            if (edge) todo.push_back(ia * nb + ib);
        }
    }
    parallel_for(todo.size(), opt.jobs, [&](std::size_t s) {
        auto& cell = grid.cells[todo[s]];
        cell.checked = true;
        cell.ode_phase = ode_phase(g, GameParams{r, c, cell.alpha, cell.beta}, k, pop, opt);
        cell.agrees = cell.ode_phase && *cell.ode_phase == cell.phase;
    });
    return grid;
}

}  // namespace pairdyn
