// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "cli.hpp"
#include "io.hpp"
#include "oracle.hpp"
#include "pairdyn/pairdyn.hpp"

namespace fs = std::filesystem;
using namespace pairdyn;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail = what;
        pass = pass && ok;
    }
};

std::string f(const char* format, double v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

double max_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

oracle::Payoff as_oracle(const PayoffModel& m) {
    return [&m](int i, const oracle::Config& c) { return m.evaluate(i, Configuration{c}); };
}

// 1 -------------------------------------------------------------------------
Verdict configuration_space() {
    Verdict v;
    const auto c = enumerate_configurations(3, 4);
    v.require(c.size() == 15, "(3,4) does not give 15 configurations");
    for (int n = 1; n <= 5; ++n)
        for (int m = 0; m <= 8; ++m) {
            const auto all = enumerate_configurations(n, m);
            v.require(all.size() == oracle::compositions(n, m).size() && all.size() == configuration_count(n, m),
                      "count mismatch at n=" + std::to_string(n) + " m=" + std::to_string(m));
        }
    v.detail = v.pass ? "15 configurations for (3,4); counts match for n<=5, k<=8" : v.detail;
    return v;
}

// 2 -------------------------------------------------------------------------
Verdict theorem_suite() {
    Verdict v;
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> N;
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;
    for (int draw = 0; draw < 50; ++draw) {
        const int n = 2 + draw % 2, k = 3 + (draw / 2) % 3;
        PayoffModel model = [&] {
            if (n == 3 && draw % 4 == 1)
                return pool_punishment(GameParams{1.0 + 2.0 * U(rng), 1.0, U(rng), 5.0 * U(rng)}, k);
            LinearPayoff lin{Eigen::MatrixXd(n, n), Eigen::VectorXd(n)};
            for (int i = 0; i < n; ++i) {
                lin.c(i) = N(rng);
                for (int j = 0; j < n; ++j) lin.b(i, j) = N(rng);
            }
            return PayoffModel(lin, k);
        }();
        const Eigen::VectorXd x = oracle::random_simplex(n, rng);
        const Eigen::MatrixXd q = edge_closure(x, k);
        const MeanPayoffEngine eng(model);
        const auto t = eng.tables(q, TableMode::WithTriple);
        const oracle::Ctx ctx{n, k, as_oracle(model), q};
        const auto self = accumulated_self(t, q, k);
        const auto neigh = accumulated_neighbor(t, q, k);
        const auto second = accumulated_second_order(t, q, k);
        const auto full = eng.mean_full_game(q);
        for (int i = 0; i < n; ++i) {
            const double pi = oracle::mean_pi(ctx, i);
            double via_pairs = 0, via_triples = 0, via_single = 0;
            worst = std::max(worst, rel(self(i), pi));
            for (int j = 0; j < n; ++j) {
                const double pij = oracle::mean_pi_ij(ctx, i, j);
                worst = std::max(worst, rel(neigh(i, j), pij));
                via_pairs += q(j, i) * pij;
                via_single += q(j, i) * t.self(i, j);
                for (int ip = 0; ip < n; ++ip) {
                    const double s = second[static_cast<std::size_t>(i)](ip, j);
                    worst = std::max(worst, rel(s, oracle::mean_pi_second(ctx, i, ip, j)));
                    via_triples += q(ip, j) * q(j, i) * s;
                }
            }
            worst = std::max({worst, rel(via_pairs, pi), rel(via_triples, pi), rel(full(i), oracle::mean_single(ctx, i)),
                              rel(via_single, full(i))});
        }
    }
    v.require(worst < 1e-10, "worst relative error " + f("%.3g", worst));
    v.detail = v.pass ? "50 draws, worst relative error " + f("%.2e", worst) : v.detail;
    return v;
}

// 3 -------------------------------------------------------------------------
Verdict pgg_equivalence() {
    Verdict v;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0, neutral = 0.0;
    for (int s = 0; s < 100; ++s) {
        const int k = 3 + s % 5;
        const double r = 1.0 + (k - 0.5) * U(rng), delta = 0.05 + U(rng);
        const auto model = pgg_model(GameParams{r, 1.0, 0, 0}, k);
        const Eigen::VectorXd x = oracle::random_simplex(2, rng);
        const double factor = delta * (k - 2) * (k + 1) / (2.0 * (k - 1));
        worst = std::max(worst, max_diff(ReplicatorSystem(model, Rule::PC, delta, Path::General).rhs(x),
                                         factor * wellmixed_rhs(model, x)));
        const auto at_threshold = pgg_model(GameParams{k + 1.0, 1.0, 0, 0}, k);
        neutral = std::max(neutral, ReplicatorSystem(at_threshold, Rule::PC, delta, Path::General).rhs(x).cwiseAbs().maxCoeff());
    }
    v.require(worst < 1e-10, "rescaling error " + f("%.3g", worst));
    v.require(neutral < 1e-10, "rhs at r=k+1 is " + f("%.3g", neutral));
    v.detail = v.pass ? "max error " + f("%.2e", worst) + ", max |rhs| at r=k+1 " + f("%.2e", neutral) : v.detail;
    return v;
}

// 4 -------------------------------------------------------------------------
Verdict linear_fast_path() {
    Verdict v;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double pc = 0, db = 0, n2 = 0;
    for (int s = 0; s < 100; ++s) {
        const int k = 3 + s % 4;
        const auto model = peer_model(GameParams{1.0 + (k - 0.5) * U(rng), 1.0, U(rng), 6 * U(rng)}, k);
        const ReplicatorSystem ps(model, Rule::PC, 0.5), ds(model, Rule::DB, 0.5);
        const Eigen::VectorXd x = oracle::random_simplex(3, rng);
        pc = std::max(pc, max_diff(pc_linear_rhs(ps, x), pc_general_rhs(ps, x)));
        db = std::max(db, max_diff(db_linear_rhs(ds, x), db_general_rhs(ds, x)));
        const auto two = PayoffModel::from_matrix(2, k, Eigen::MatrixXd::Random(2, k + 1));
        const MeanPayoffEngine eng(two);
        const Eigen::VectorXd y = oracle::random_simplex(2, rng);
        n2 = std::max(n2, max_diff(db_n2_rhs(eng, 0.5, y), db_general_rhs(eng, 0.5, y)));
    }
    v.require(pc < 1e-10, "pc fast path error " + f("%.3g", pc));
    v.require(db < 1e-10, "db fast path error " + f("%.3g", db));
    v.require(n2 < 1e-10, "db two-strategy reduction error " + f("%.3g", n2));
    v.detail = v.pass ? "pc " + f("%.1e", pc) + ", db " + f("%.1e", db) + ", db n=2 " + f("%.1e", n2) : v.detail;
    return v;
}

double d_vertex_critical(const PayoffModel& model) {
    const ReplicatorSystem sys(model, Rule::PC, 1.0);
    const Eigen::Vector3d d(0, 1, 0);
    double best = -INFINITY;
    for (const auto& z : jacobian_eigenvalues(reduced_jacobian(sys, d))) best = std::max(best, z.real());
    return best;
}

// Bisection on the sign of the D-vertex critical eigenvalue.
double eigen_sign_change(const std::function<PayoffModel(double)>& make, double lo, double hi) {
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (d_vertex_critical(make(mid)) < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// 5 -------------------------------------------------------------------------
Verdict peer_thresholds_check() {
    Verdict v;
    double worst = 0.0, eig = 0.0;
    for (double a : {0.0, 0.25, 0.5, 1.0}) {
        const auto t = peer_thresholds(2.0, 1.0, a, 4).structured;
        worst = std::max({worst, std::abs(t.beta0 - (3.0 / 17 + 3.0 / 17 * a)), std::abs(t.beta_star - (1.0 + 17.0 / 3 * a)),
                          std::abs(peer_thresholds(3.5, 1.0, a, 4).structured.beta0 - (3.0 / 34 + 3.0 / 17 * a))});
        const double found = eigen_sign_change([&](double b) { return peer_model(GameParams{2.0, 1.0, a, b}, 4); },
                                               0.5 * t.beta_star, 2.0 * t.beta_star + 1.0);
        eig = std::max(eig, std::abs(found - t.beta_star));
    }
    v.require(worst < 1e-9, "closed form off by " + f("%.3g", worst));
    v.require(eig < 1e-4, "eigenvalue sign change off by " + f("%.3g", eig));
    v.detail = v.pass ? "closed forms within " + f("%.1e", worst) + ", eigenvalue sign change within " + f("%.1e", eig) : v.detail;
    return v;
}

// 6 -------------------------------------------------------------------------
Verdict pool_thresholds_check() {
    Verdict v;
    double worst = 0.0;
    for (double a : {0.0, 0.25, 0.5, 1.0}) {
        const auto t = pool_thresholds(2.0, 1.0, a, 4).structured;
        worst = std::max({worst, std::abs(t.beta0 - (81.0 / 134 + 135.0 / 134 * a)), std::abs(t.beta_star - (1.5 + 2.5 * a)),
                          std::abs(pool_thresholds(3.5, 1.0, a, 4).structured.beta_star - (0.75 + 2.5 * a))});
    }
    v.require(worst < 1e-9, "closed form off by " + f("%.3g", worst));
    v.detail = v.pass ? "closed forms within " + f("%.1e", worst) : v.detail;
    return v;
}

// 7 -------------------------------------------------------------------------
Verdict qualitative_flows() {
    Verdict v;
    std::mt19937_64 rng(7);
    const auto strong = ReplicatorSystem(peer_model(GameParams{3, 1, 0.7, 5}, 4), Rule::PC);
    double worst = 0.0;
    for (int s = 0; s < 10; ++s) {
        const auto tr = integrate(strong, oracle::random_simplex(3, rng), 2000.0);
        worst = std::max(worst, tr.final_state()(1));
    }
    v.require(worst < 1e-4, "peer beta=5: a start ends at x_D=" + f("%.3g", worst));

    const auto weak = ReplicatorSystem(peer_model(GameParams{3, 1, 0.7, 0.7}, 4), Rule::PC);
    const double root = edge_equilibrium_fractions(GameKind::Peer, GameParams{3, 1, 0.7, 0.7}, 4, Population::Structured).x_d_edge;
    int to_d = 0, to_ce = 0, wrong_side = 0;
    for (int s = 1; s <= 9; ++s) {
        const double xd = 0.1 * s;
        if (std::abs(xd - root) < 0.02) continue;
        const double end = integrate(weak, Eigen::Vector3d(0, xd, 1 - xd), 2000.0).final_state()(1);
        if ((xd > root) != (end > 0.5)) ++wrong_side;
    }
    for (int s = 0; s < 10; ++s) {
        const double end = integrate(weak, oracle::random_simplex(3, rng), 2000.0).final_state()(1);
        if (end > 1 - 1e-4) ++to_d;
        else if (end < 1e-4) ++to_ce;
    }
    v.require(wrong_side == 0, "peer beta=0.7: edge start on the wrong side of the DE root");
    v.require(to_d > 0 && to_ce > 0 && to_d + to_ce == 10, "peer beta=0.7: starts do not split cleanly");

    const auto pool = ReplicatorSystem(pool_punishment(GameParams{3, 1, 0.7, 5}, 4), Rule::PC);
    int unstable_vertices = 0;
    for (const auto& e : find_equilibria(pool))
        if (e.kind == EqKind::Vertex && (e.stability == Stability::Unstable || e.stability == Stability::Saddle))
            ++unstable_vertices;
    const auto cyc = integrate(pool, Eigen::Vector3d(1.0 / 3, 1.0 / 3, 1.0 / 3), 2000.0);
    const auto crossings = section_crossings(cyc, 0, 1).size();
    v.require(unstable_vertices == 3, "pool beta=5: only " + std::to_string(unstable_vertices) + " vertices unstable");
    v.require(crossings >= 3, "pool beta=5: " + std::to_string(crossings) + " section crossings");
    if (v.pass)
        v.detail = "peer beta=5 max x_D " + f("%.1e", worst) + "; peer beta=0.7 split " + std::to_string(to_d) + " D / " +
                   std::to_string(to_ce) + " CE; pool " + std::to_string(crossings) + " crossings";
    return v;
}

// 8 -------------------------------------------------------------------------
Verdict edge_formulas() {
    Verdict v;
    double worst = 0.0;
    for (GameKind g : {GameKind::Peer, GameKind::Pool})
        for (int k : {3, 4, 5, 8})
            for (double a : {0.0, 0.3, 1.0})
                for (double r : {1.5, 2.0, 3.0}) {
                    const auto tp = thresholds(g, r, 1.0, a, k);
                    for (Population pop : {Population::Structured, Population::WellMixed}) {
                        const auto& t = tp.of(pop);
                        auto x_at = [&](double beta) {
                            return edge_equilibrium_fractions(g, GameParams{r, 1.0, a, beta}, k, pop).x_d_edge;
                        };
                        if (t.beta0 > 0) worst = std::max(worst, std::abs(x_at(t.beta0)));
                        if (std::isfinite(t.beta_star)) worst = std::max(worst, std::abs(x_at(t.beta_star) - 1.0));
                    }
                }
    v.require(worst < 1e-8, "edge fraction at a threshold off by " + f("%.3g", worst));
    v.detail = v.pass ? "max deviation " + f("%.1e", worst) : v.detail;
    return v;
}

// 9 -------------------------------------------------------------------------
Verdict closure_validation() {
    Verdict v;
    SimConfig cfg;
    cfg.N = 10000;
    cfg.k = 4;
    cfg.delta = 0.0;
    cfg.x0 = Eigen::Vector3d(1.0 / 3, 1.0 / 3, 1.0 / 3);
    cfg.replicas = 20;
    cfg.sweeps = 200;
    cfg.seed = 9;
    cfg.graph_seed = 900;
    cfg.jobs = 0;
    const auto res = run(cfg, peer_model(GameParams{3, 1, 0.7, 5}, 4));
    const auto rep = validate_closure(res, 4, 20);
    v.require(rep.max_abs_deviation < 0.02, "max |q_hat - closure| = " + f("%.4f", rep.max_abs_deviation));
    v.detail = v.pass ? "max |q_hat - closure| = " + f("%.4f", rep.max_abs_deviation) + " over 20 replicas" : v.detail;
    return v;
}

// 10 ------------------------------------------------------------------------
Verdict drift_validation() {
    Verdict v;
    SimConfig cfg;
    cfg.N = 2000;
    cfg.k = 4;
    cfg.delta = 0.02;
    cfg.replicas = 20;
    cfg.sweeps = 100;
    cfg.seed = 10;
    cfg.graph_seed = 1000;
    cfg.jobs = 0;
    cfg.x0 = Eigen::Vector2d(0.5, 0.5);
    const auto pgg = drift_sign_test(run(cfg, pgg_model(GameParams{3, 1, 0, 0}, 4)), 0);
    cfg.x0 = Eigen::Vector3d(0.3, 0.3, 0.4);
    const auto peer = drift_sign_test(run(cfg, peer_model(GameParams{3, 1, 0.7, 5}, 4)), 1);
    v.require(pgg.p_negative < 0.05, "PGG x_C: " + std::to_string(pgg.negative) + "/20 negative");
    v.require(peer.p_negative < 0.05, "peer x_D: " + std::to_string(peer.negative) + "/20 negative");
    if (v.pass)
        v.detail = "PGG x_C " + std::to_string(pgg.negative) + "/20 negative (p=" + f("%.1e", pgg.p_negative) + "); peer x_D " +
                   std::to_string(peer.negative) + "/20 negative (p=" + f("%.1e", peer.p_negative) + ")";
    return v;
}

// 11 ------------------------------------------------------------------------
int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "pairdyn");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    return cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

Verdict determinism() {
    Verdict v;
    const fs::path root = fs::temp_directory_path() / ("pairdyn_acceptance_" + std::to_string(::getpid()));
    const std::vector<std::vector<std::string>> cmds{
        {"integrate", "--game", "pool", "--beta", "5", "--x0", "0.3,0.3,0.4", "--t-max", "100", "--format", "svg"},
        {"equilibria", "--game", "peer", "--beta", "0.7"},
        {"equilibria", "--game", "pool", "--beta", "1", "--alpha", "0.2", "--r", "2", "--format", "json"},
        {"thresholds", "--game", "pool", "--alpha", "0:1:0.1", "--beta", "2"},
        {"phase", "--game", "peer", "--r", "2", "--alpha", "0:1:0.25", "--beta", "0:8:1", "--cross-check", "boundary",
         "--format", "svg", "--jobs", "4"},
        {"simulate", "--game", "peer", "--N", "500", "--sweeps", "10", "--replicas", "3", "--seed", "5", "--jobs", "3"},
        {"validate", "--game", "pgg", "--N", "500", "--sweeps", "30", "--replicas", "4", "--seed", "5", "--jobs", "2"},
        {"payoff", "export", "--game", "pool", "--format", "json"},
    };
    int compared = 0;
    for (std::size_t c = 0; c < cmds.size(); ++c) {
        std::vector<std::string> texts[2];
        std::vector<std::string> names;
        for (int pass = 0; pass < 2; ++pass) {
            const fs::path dir = root / std::to_string(c);
            fs::remove_all(dir);
            auto cmd = cmds[c];
            cmd.push_back("--out");
            cmd.push_back(dir.string());
            if (run_cli(cmd) != 0) {
                v.require(false, "command failed: " + cmds[c][0]);
                break;
            }
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
            std::sort(files.begin(), files.end());
            if (pass == 0) names.clear();
            for (const auto& p : files) {
                std::string text = cli::read_file(p);
                if (p.filename() == "manifest.json") {
                    auto doc = nlohmann::ordered_json::parse(text);
                    doc.erase("wall_time_seconds");
                    text = doc.dump();
                }
                texts[pass].push_back(text);
                if (pass == 0) names.push_back(p.filename().string());
            }
        }
        v.require(texts[0] == texts[1], cmds[c][0] + ": outputs differ between runs");
        compared += static_cast<int>(texts[0].size());
    }
    fs::remove_all(root);
    v.detail = v.pass ? std::to_string(cmds.size()) + " commands, " + std::to_string(compared) + " files identical" : v.detail;
    return v;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"configuration space", configuration_space},
        {"mean-payoff identities", theorem_suite},
        {"public goods rescaling", pgg_equivalence},
        {"linear fast path", linear_fast_path},
        {"peer thresholds", peer_thresholds_check},
        {"pool thresholds", pool_thresholds_check},
        {"qualitative flows", qualitative_flows},
        {"edge rest points", edge_formulas},
        {"closure validation (MC)", closure_validation},
        {"drift sign (MC)", drift_validation},
        {"CLI determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] %2zu %-26s %8.2f s  %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                    v.detail.c_str());
        std::fflush(stdout);
        failed += !v.pass;
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed ? 1 : 0;
}
