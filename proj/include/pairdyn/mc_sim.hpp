#pragma once

// Agent-based Monte Carlo of multiplayer games on finite regular graphs with the
// microscopic pairwise-comparison and death-birth rules.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pairdyn/error.hpp"
#include "pairdyn/pair_approx.hpp"
#include "pairdyn/parallel.hpp"
#include "pairdyn/payoff_model.hpp"
#include "pairdyn/replicator.hpp"

namespace pairdyn {

struct RegularGraph {
    int N = 0;
    int k = 0;
    std::vector<int> adjacency;  // N * k, neighbors of v at [v k, v k + k), sorted
    std::int64_t triangle_count = 0;

    std::span<const int> neighbors(int v) const {
        return {adjacency.data() + static_cast<std::size_t>(v) * static_cast<std::size_t>(k), static_cast<std::size_t>(k)};
    }
    std::int64_t edge_count() const { return static_cast<std::int64_t>(N) * k / 2; }
};

using Rng = std::mt19937_64;

// Stream for (master, salt, index); distinct inputs give unrelated streams.
inline Rng make_rng(std::uint64_t master, std::uint64_t salt, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(salt),   static_cast<std::uint32_t>(salt >> 32),
                      static_cast<std::uint32_t>(index),  static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
}

inline std::int64_t count_triangles(const RegularGraph& g) {
    std::int64_t t = 0;
    for (int u = 0; u < g.N; ++u) {
        const auto nu = g.neighbors(u);
        for (int v : nu) {
            if (v <= u) continue;
            const auto nv = g.neighbors(v);
            for (int w : nu)
                if (w > v && std::binary_search(nv.begin(), nv.end(), w)) ++t;
        }
    }
    return t;
}

inline void finalize_graph(RegularGraph& g) {
    for (int v = 0; v < g.N; ++v) {
        auto first = g.adjacency.begin() + static_cast<std::ptrdiff_t>(v) * g.k;
        std::sort(first, first + g.k);
    }
    g.triangle_count = count_triangles(g);
}

// Pairing model: stubs are matched in random pairs, a pair that would make a
// loop or a repeated edge is redrawn, and the whole matching restarts when no
// admissible pair remains.
inline RegularGraph random_regular_graph(int N, int k, std::uint64_t seed, int max_restarts = 1000) {
    require(k >= 1 && N > k, "random regular graph needs N > k >= 1");
    require((static_cast<std::int64_t>(N) * k) % 2 == 0, "N * k must be even");
    Rng rng = make_rng(seed, 0x67726170ULL, 0);
    RegularGraph g{N, k, std::vector<int>(static_cast<std::size_t>(N) * static_cast<std::size_t>(k)), 0};
    std::vector<int> fill(static_cast<std::size_t>(N));
    std::vector<int> stubs;
    auto adjacent = [&](int u, int v) {
        const auto* base = g.adjacency.data() + static_cast<std::size_t>(u) * static_cast<std::size_t>(k);
        return std::find(base, base + fill[static_cast<std::size_t>(u)], v) != base + fill[static_cast<std::size_t>(u)];
    };
    for (int attempt = 0; attempt < max_restarts; ++attempt) {
        std::fill(fill.begin(), fill.end(), 0);
        stubs.clear();
        for (int v = 0; v < N; ++v)
            for (int s = 0; s < k; ++s) stubs.push_back(v);
        bool stuck = false;
        while (!stubs.empty() && !stuck) {
            std::uniform_int_distribution<std::size_t> pick(0, stubs.size() - 1);
            bool paired = false;
            for (std::size_t tries = 0; tries < 50 * stubs.size() + 100; ++tries) {
                const std::size_t a = pick(rng), b = pick(rng);
                const int u = stubs[a], v = stubs[b];
                if (a == b || u == v || adjacent(u, v)) continue;
                g.adjacency[static_cast<std::size_t>(u) * k + static_cast<std::size_t>(fill[static_cast<std::size_t>(u)]++)] = v;
                g.adjacency[static_cast<std::size_t>(v) * k + static_cast<std::size_t>(fill[static_cast<std::size_t>(v)]++)] = u;
                const std::size_t hi = std::max(a, b), lo = std::min(a, b);
                stubs[hi] = stubs.back();
                stubs.pop_back();
                stubs[lo] = stubs.back();
                stubs.pop_back();
                paired = true;
                break;
            }
            if (!paired) stuck = true;
        }
        if (!stuck) {
            finalize_graph(g);
            return g;
        }
    }
    throw NumericalError("random regular graph construction failed after " + std::to_string(max_restarts) +
                         " restarts (N=" + std::to_string(N) + ", k=" + std::to_string(k) +
                         ", seed=" + std::to_string(seed) + ")");
}

// Each node linked to its k/2 nearest nodes on either side. Contains many
// triangles for k >= 4, so it departs from the tree-like assumption.
inline RegularGraph ring_lattice(int N, int k) {
    require(k >= 2 && k % 2 == 0 && N > k, "ring lattice needs even k >= 2 and N > k");
    RegularGraph g{N, k, std::vector<int>(static_cast<std::size_t>(N) * static_cast<std::size_t>(k)), 0};
    for (int v = 0; v < N; ++v) {
        int s = 0;
        for (int d = 1; d <= k / 2; ++d) {
            g.adjacency[static_cast<std::size_t>(v) * k + static_cast<std::size_t>(s++)] = (v + d) % N;
            g.adjacency[static_cast<std::size_t>(v) * k + static_cast<std::size_t>(s++)] = (v - d + N) % N;
        }
    }
    finalize_graph(g);
    return g;
}

enum class Topology { RandomRegular, RingLattice };

inline Topology parse_topology(const std::string& s) {
    if (s == "rrg" || s == "random") return Topology::RandomRegular;
    if (s == "ring") return Topology::RingLattice;
    throw ValidationError("topology must be rrg or ring, got '" + s + "'");
}

// Strategy labels on a graph plus the strategy counts and directed edge counts
// (E(i, j): ordered neighbor pairs with an i-node looking at a j-node), kept in
// sync under flips.
class World {
public:
    World(const RegularGraph& graph, const PayoffModel& model, std::vector<int> labels)
        : g_(&graph), model_(&model), labels_(std::move(labels)) {
        require(static_cast<int>(labels_.size()) == graph.N, "label count differs from node count");
        require(model.k() == graph.k, "payoff model degree differs from graph degree");
        const int n = model.n();
        counts_.assign(static_cast<std::size_t>(n), 0);
        edges_ = Eigen::MatrixXd::Zero(n, n);
        for (int v = 0; v < graph.N; ++v) {
            const int s = labels_[static_cast<std::size_t>(v)];
            require(s >= 0 && s < n, "strategy label out of range");
            ++counts_[static_cast<std::size_t>(s)];
            for (int u : graph.neighbors(v)) edges_(s, labels_[static_cast<std::size_t>(u)]) += 1.0;
        }
        scratch_.resize(static_cast<std::size_t>(n));
    }

    const RegularGraph& graph() const { return *g_; }
    const PayoffModel& model() const { return *model_; }
    int label(int v) const { return labels_[static_cast<std::size_t>(v)]; }
    const std::vector<int>& labels() const { return labels_; }
    const std::vector<int>& counts() const { return counts_; }

    void set_label(int v, int s) {
        const int old = labels_[static_cast<std::size_t>(v)];
        if (old == s) return;
        for (int u : g_->neighbors(v)) {
            const int su = labels_[static_cast<std::size_t>(u)];
            edges_(old, su) -= 1.0;
            edges_(su, old) -= 1.0;
            edges_(s, su) += 1.0;
            edges_(su, s) += 1.0;
        }
        --counts_[static_cast<std::size_t>(old)];
        ++counts_[static_cast<std::size_t>(s)];
        labels_[static_cast<std::size_t>(v)] = s;
    }

    Eigen::VectorXd frequencies() const {
        Eigen::VectorXd x(model_->n());
        for (int i = 0; i < model_->n(); ++i) x(i) = counts_[static_cast<std::size_t>(i)] / static_cast<double>(g_->N);
        return x;
    }

    // q(j, i) = share of i-nodes' neighbors using j; NaN columns for absent i.
    Eigen::MatrixXd edge_frequencies() const {
        const int n = model_->n();
        Eigen::MatrixXd q(n, n);
        for (int i = 0; i < n; ++i) {
            const double tot = static_cast<double>(counts_[static_cast<std::size_t>(i)]) * g_->k;
            for (int j = 0; j < n; ++j) q(j, i) = tot > 0 ? edges_(i, j) / tot : std::nan("");
        }
        return q;
    }

    bool monomorphic() const {
        return std::count_if(counts_.begin(), counts_.end(), [](int c) { return c > 0; }) == 1;
    }

    // Payoff of node v from the game organized by node org (org itself or a neighbor).
    double game_payoff(int v, int org) const {
        std::fill(scratch_.begin(), scratch_.end(), 0);
        if (org != v) ++scratch_[static_cast<std::size_t>(labels_[static_cast<std::size_t>(org)])];
        for (int u : g_->neighbors(org))
            if (u != v) ++scratch_[static_cast<std::size_t>(labels_[static_cast<std::size_t>(u)])];
        return model_->at(label(v), model_->space().index_of(std::span<const int>(scratch_)));
    }

    // Sum over the 1 + k games organized by v and by each neighbor of v.
    double accumulated_payoff(int v) const {
        double s = game_payoff(v, v);
        for (int u : g_->neighbors(v)) s += game_payoff(v, u);
        return s;
    }

private:
    const RegularGraph* g_;
    const PayoffModel* model_;
    std::vector<int> labels_;
    std::vector<int> counts_;
    Eigen::MatrixXd edges_;
    mutable std::vector<int> scratch_;
};

inline double accumulated_payoff(const World& w, int v) {
    require(v >= 0 && v < w.graph().N, "node index out of range");
    return w.accumulated_payoff(v);
}

inline double fermi_probability(double delta, double pi_b, double pi_a) { return 1.0 / (1.0 + std::exp(-delta * (pi_b - pi_a))); }

// One elementary pairwise-comparison update.
inline void step_pc(World& w, double delta, Rng& rng) {
    const auto& g = w.graph();
    const int a = std::uniform_int_distribution<int>(0, g.N - 1)(rng);
    const int b = g.neighbors(a)[static_cast<std::size_t>(std::uniform_int_distribution<int>(0, g.k - 1)(rng))];
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (w.label(a) == w.label(b)) return;
    const double p = delta == 0.0 ? 0.5 : fermi_probability(delta, w.accumulated_payoff(b), w.accumulated_payoff(a));
    if (u < p) w.set_label(a, w.label(b));
}

// One elementary death-birth update; the focal node's own fitness plays no part.
inline void step_db(World& w, double delta, Rng& rng) {
    const auto& g = w.graph();
    const int a = std::uniform_int_distribution<int>(0, g.N - 1)(rng);
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto nb = g.neighbors(a);
    bool uniform = delta == 0.0;
    if (!uniform) {
        uniform = std::all_of(nb.begin(), nb.end(), [&](int v) { return w.label(v) == w.label(nb[0]); });
    }
    if (uniform) {
        const auto pick = std::min<std::size_t>(static_cast<std::size_t>(u * g.k), static_cast<std::size_t>(g.k - 1));
        w.set_label(a, w.label(nb[pick]));
        return;
    }
    std::vector<double> pi(nb.size());
    for (std::size_t s = 0; s < nb.size(); ++s) pi[s] = w.accumulated_payoff(nb[s]);
    const double top = *std::max_element(pi.begin(), pi.end());
    double total = 0.0;
    for (auto& p : pi) total += (p = std::exp(delta * (p - top)));
    double acc = 0.0;
    std::size_t pick = nb.size() - 1;
    for (std::size_t s = 0; s < nb.size(); ++s) {
        acc += pi[s];
        if (u * total < acc) {
            pick = s;
            break;
        }
    }
    w.set_label(a, w.label(nb[pick]));
}

struct SimConfig {
    int N = 1000;
    int k = 4;
    Topology topology = Topology::RandomRegular;
    std::uint64_t graph_seed = 1;
    Rule rule = Rule::PC;
    double delta = 0.01;
    Eigen::VectorXd x0;         // used when labels is empty
    std::vector<int> labels;    // explicit initial labeling
    int sweeps = 100;
    int measure_every = 1;
    int replicas = 1;
    std::uint64_t seed = 1;
    int jobs = 1;

    void validate(const PayoffModel& model) const {
        require(rule == Rule::PC || rule == Rule::DB, "simulation rule must be pc or db");
        require(std::isfinite(delta) && delta >= 0.0, "selection strength delta must be >= 0");
        require(sweeps >= 1, "sweeps must be >= 1");
        require(measure_every >= 1, "measure_every must be >= 1");
        require(replicas >= 1, "replicas must be >= 1");
        require(model.k() == k, "payoff model degree differs from graph degree");
        require(N > k && (static_cast<std::int64_t>(N) * k) % 2 == 0, "graph needs N > k and N * k even");
        if (labels.empty()) {
            require(x0.size() == model.n(), "initial state length differs from strategy count");
            check_simplex(x0);
        } else {
            require(static_cast<int>(labels.size()) == N, "explicit labeling must have N entries");
        }
    }
};

struct Sample {
    int sweep = 0;
    Eigen::VectorXd x;
    Eigen::MatrixXd q;  // q(j, i) = measured q_{j|i}
};

struct ReplicaResult {
    int replica = 0;
    std::uint64_t seed = 0;        // dynamics stream master seed
    std::uint64_t graph_seed = 0;  // graph stream master seed
    std::int64_t triangle_count = 0;
    std::vector<Sample> samples;
    Eigen::VectorXd final_x;
};

struct SimResult {
    int n = 0;
    std::vector<ReplicaResult> replicas;
};

// Exactly round(N x) nodes per strategy (largest remainder), randomly placed.
inline std::vector<int> initial_labels(const Eigen::VectorXd& x, int N, Rng& rng) {
    const auto n = x.size();
    std::vector<int> count(static_cast<std::size_t>(n));
    std::vector<std::pair<double, int>> rem;
    int used = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double want = x(i) * N;
        count[static_cast<std::size_t>(i)] = static_cast<int>(std::floor(want));
        used += count[static_cast<std::size_t>(i)];
        rem.emplace_back(-(want - std::floor(want)), static_cast<int>(i));
    }
    std::sort(rem.begin(), rem.end());
    for (std::size_t s = 0; used < N; ++s, ++used) ++count[static_cast<std::size_t>(rem[s % rem.size()].second)];
    std::vector<int> labels;
    labels.reserve(static_cast<std::size_t>(N));
    for (Eigen::Index i = 0; i < n; ++i) labels.insert(labels.end(), static_cast<std::size_t>(count[static_cast<std::size_t>(i)]), static_cast<int>(i));
    std::shuffle(labels.begin(), labels.end(), rng);
    return labels;
}

inline ReplicaResult run_replica(const SimConfig& cfg, const PayoffModel& model, int replica) {
    ReplicaResult out;
    out.replica = replica;
    out.seed = cfg.seed;
    out.graph_seed = cfg.graph_seed;
    const RegularGraph graph = cfg.topology == Topology::RandomRegular
                                   ? random_regular_graph(cfg.N, cfg.k, cfg.graph_seed + static_cast<std::uint64_t>(replica))
                                   : ring_lattice(cfg.N, cfg.k);
    out.triangle_count = graph.triangle_count;
    Rng rng = make_rng(cfg.seed, 0x64796eULL, static_cast<std::uint64_t>(replica));
    World w(graph, model, cfg.labels.empty() ? initial_labels(cfg.x0, cfg.N, rng) : cfg.labels);
    auto record = [&](int sweep) { out.samples.push_back(Sample{sweep, w.frequencies(), w.edge_frequencies()}); };
    record(0);
    for (int sweep = 1; sweep <= cfg.sweeps; ++sweep) {
        if (!w.monomorphic()) {
            for (int e = 0; e < cfg.N; ++e) {
                if (cfg.rule == Rule::PC) step_pc(w, cfg.delta, rng);
                else step_db(w, cfg.delta, rng);
            }
        }
        if (sweep % cfg.measure_every == 0 || sweep == cfg.sweeps) record(sweep);
    }
    out.final_x = w.frequencies();
    return out;
}

inline SimResult run(const SimConfig& cfg, const PayoffModel& model) {
    cfg.validate(model);
    SimResult res;
    res.n = model.n();
    res.replicas.resize(static_cast<std::size_t>(cfg.replicas));
    parallel_for(res.replicas.size(), cfg.jobs,
                 [&](std::size_t r) { res.replicas[r] = run_replica(cfg, model, static_cast<int>(r)); });
    return res;
}

struct ClosureReport {
    Eigen::MatrixXd mean_deviation;  // (j, i): replica mean of time-averaged q_hat - closure
    Eigen::MatrixXd std_error;
    Eigen::MatrixXd z_score;
    double max_abs_deviation = 0.0;  // over replicas and entries
    int samples_used = 0;
};

// Time-averaged q_hat(t) - edge_closure(x_hat(t), k) after burn-in.
inline ClosureReport validate_closure(const SimResult& result, int k, int burn_in = 20) {
    require(!result.replicas.empty(), "closure validation needs at least one replica");
    const int n = result.n;
    const auto R = static_cast<double>(result.replicas.size());
    std::vector<Eigen::MatrixXd> per;
    ClosureReport rep;
    for (const auto& r : result.replicas) {
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n), cnt = Eigen::MatrixXd::Zero(n, n);
        for (const auto& s : r.samples) {
            if (s.sweep < burn_in) continue;
            ++rep.samples_used;
            const Eigen::MatrixXd qc = edge_closure(s.x, k);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (std::isfinite(s.q(j, i))) {
                        sum(j, i) += s.q(j, i) - qc(j, i);
                        cnt(j, i) += 1.0;
                    }
        }
        require((cnt.array() > 0).all(), "closure validation found a strategy absent from every sample after burn-in");
        per.push_back(sum.cwiseQuotient(cnt));
    }
    rep.mean_deviation = Eigen::MatrixXd::Zero(n, n);
    for (const auto& m : per) {
        rep.mean_deviation += m / R;
        rep.max_abs_deviation = std::max(rep.max_abs_deviation, m.cwiseAbs().maxCoeff());
    }
    Eigen::MatrixXd var = Eigen::MatrixXd::Zero(n, n);
    for (const auto& m : per) var += (m - rep.mean_deviation).cwiseAbs2();
    rep.std_error = R > 1 ? (var / (R - 1) / R).cwiseSqrt().eval() : Eigen::MatrixXd::Constant(n, n, std::nan(""));
    rep.z_score = rep.mean_deviation.cwiseQuotient(rep.std_error);
    return rep;
}

struct DriftReport {
    int strategy = 0;
    int negative = 0;
    int positive = 0;
    double mean_drift = 0.0;  // per sweep, replica mean of least-squares slopes
    double std_error = 0.0;
    double p_negative = 1.0;  // one-sided binomial P(at least `negative` of the signed replicas | fair coin)
    double p_positive = 1.0;
};

// Binomial tail P(X >= m), X ~ Bin(n, 1/2).
inline double binomial_upper_tail(int m, int n) {
    double p = 0.0;
    for (int j = m; j <= n; ++j) p += std::exp(std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) - n * std::log(2.0));
    return std::min(1.0, p);
}

inline DriftReport drift_sign_test(const SimResult& result, int strategy) {
    require(strategy >= 0 && strategy < result.n, "strategy index out of range");
    DriftReport rep;
    rep.strategy = strategy;
    std::vector<double> slopes;
    for (const auto& r : result.replicas) {
        double st = 0, sx = 0, stt = 0, stx = 0;
        const auto m = static_cast<double>(r.samples.size());
        for (const auto& s : r.samples) {
            st += s.sweep;
            sx += s.x(strategy);
            stt += static_cast<double>(s.sweep) * s.sweep;
            stx += s.sweep * s.x(strategy);
        }
        const double den = m * stt - st * st;
        const double slope = den > 0 ? (m * stx - st * sx) / den : 0.0;
        slopes.push_back(slope);
        if (slope < 0) ++rep.negative;
        else if (slope > 0) ++rep.positive;
    }
    const auto R = static_cast<double>(slopes.size());
    rep.mean_drift = std::accumulate(slopes.begin(), slopes.end(), 0.0) / R;
    double var = 0.0;
    for (double s : slopes) var += (s - rep.mean_drift) * (s - rep.mean_drift);
    rep.std_error = R > 1 ? std::sqrt(var / (R - 1) / R) : 0.0;
    const int signed_count = rep.negative + rep.positive;
    rep.p_negative = binomial_upper_tail(rep.negative, signed_count);
    rep.p_positive = binomial_upper_tail(rep.positive, signed_count);
    return rep;
}

}  // namespace pairdyn
