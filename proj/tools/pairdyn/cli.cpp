#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "io.hpp"
#include "pairdyn/pairdyn.hpp"
#include "payoff_file.hpp"
#include "svg.hpp"

namespace pairdyn::cli {
namespace {

namespace fs = std::filesystem;

struct GameOpts {
    std::string game = "peer";
    std::string payoff_file;
    int k = 4;
    double r = 3.0, c = 1.0, alpha = 0.7, beta = 5.0;
    std::vector<CLI::Option*> k_opts;  // one per subcommand
};

struct DynOpts {
    std::string rule = "pc";
    double delta = 1.0;
    std::string path = "auto";
};

struct OutOpts {
    std::string out;
    std::string format = "csv";
    int jobs = 0;
};

void add_game(CLI::App* sub, GameOpts& g, bool with_file = true, bool with_punishment = true) {
    sub->add_option("--game", g.game, "built-in game: pgg, peer or pool");
    if (with_file) sub->add_option("--payoff-file", g.payoff_file, "JSON payoff table; overrides --game");
    g.k_opts.push_back(sub->add_option("--k", g.k, "number of neighbors (co-players per game)"));
    sub->add_option("--r", g.r, "synergy factor");
    sub->add_option("--c", g.c, "contribution cost");
    if (!with_punishment) return;
    sub->add_option("--alpha", g.alpha, "punishment cost");
    sub->add_option("--beta", g.beta, "punishment fine");
}

void add_dyn(CLI::App* sub, DynOpts& d) {
    sub->add_option("--rule", d.rule, "update rule: pc, db or wm (well-mixed)");
    sub->add_option("--delta", d.delta, "selection strength");
    sub->add_option("--path", d.path, "rhs evaluation path: auto, general or linear");
}

void add_out(CLI::App* sub, OutOpts& o, bool with_jobs = false) {
    sub->add_option("--out", o.out, "output directory (default $PAIRDYN_OUTPUT_DIR, else ./pairdyn_out)");
    sub->add_option("--format", o.format, "csv, json or svg (svg also writes csv)")
        ->check(CLI::IsMember({"csv", "json", "svg"}));
    if (with_jobs) sub->add_option("--jobs", o.jobs, "worker threads (0 = hardware concurrency)");
}

PayoffModel build_model(const GameOpts& g) {
    if (!g.payoff_file.empty()) {
        PayoffModel m = load_payoff_file(g.payoff_file);
        const bool k_given = std::any_of(g.k_opts.begin(), g.k_opts.end(), [](const CLI::Option* o) { return o->count() > 0; });
        require(!k_given || m.k() == g.k, "--k differs from the payoff file's k");
        return m;
    }
    return make_builtin(g.game, GameParams{g.r, g.c, g.alpha, g.beta}, g.k);
}

Eigen::VectorXd to_vec(const std::vector<double>& v) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) x(static_cast<Eigen::Index>(i)) = v[i];
    return x;
}

fs::path output_dir(const OutOpts& o) {
    if (!o.out.empty()) return o.out;
    if (const char* env = std::getenv("PAIRDYN_OUTPUT_DIR"); env && *env) return env;
    return "pairdyn_out";
}

std::string join(const std::vector<std::string>& v, const std::string& sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
    return s;
}

std::string path_name(Path p) { return p == Path::LinearFast ? "linear" : "general"; }

// Continued-fraction approximation p/q with q <= 10000 when it matches to 1e-12.
std::string rational_like(double v) {
    if (!std::isfinite(v)) return fmt(v);
    double x = std::abs(v);
    long long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    for (int it = 0; it < 40; ++it) {
        const double a = std::floor(x);
        const long long h2 = static_cast<long long>(a) * h1 + h0, k2 = static_cast<long long>(a) * k1 + k0;
        if (k2 > 10000) break;
        h0 = h1, h1 = h2, k0 = k1, k1 = k2;
        if (std::abs(static_cast<double>(h1) / static_cast<double>(k1) - std::abs(v)) < 1e-12) {
            const std::string sign = v < 0 ? "-" : "";
            return k1 == 1 ? sign + std::to_string(h1) : sign + std::to_string(h1) + "/" + std::to_string(k1);
        }
        if (x - a < 1e-15) break;
        x = 1.0 / (x - a);
    }
    return fmt(v);
}

class Manifest {
public:
    Manifest(std::string command, int argc, const char* const* argv) : start_(std::chrono::steady_clock::now()) {
        doc_["command"] = std::move(command);
        doc_["version"] = kVersion;
        json a = json::array();
        for (int i = 0; i < argc; ++i) a.push_back(argv[i]);
        doc_["argv"] = a;
    }

    void parameters(const CLI::App* root, const CLI::App* sub) {
        json p = json::object();
        auto collect = [&](const CLI::App* app) {
            for (const CLI::Option* o : app->get_options()) {
                const std::string name = o->get_single_name();
                if (name == "help" || name.empty()) continue;
                p[name] = o->count() ? join(o->results(), ",") : o->get_default_str();
            }
        };
        collect(root);
        collect(sub);
        doc_["parameters"] = p;
    }

    json& operator[](const std::string& key) { return doc_[key]; }

    void output(const fs::path& dir, const std::string& name, const std::string& text) {
        write_file(dir / name, text);
        doc_["outputs"].push_back(name);
    }

    void write(const fs::path& dir) {
        doc_["wall_time_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        write_file(dir / "manifest.json", doc_.dump(2) + "\n");
    }

private:
    json doc_;
    std::chrono::steady_clock::time_point start_;
};

std::vector<std::string> x_header(const PayoffModel& m, const std::string& prefix) {
    std::vector<std::string> h;
    for (const auto& s : m.strategy_names()) h.push_back(prefix + s);
    return h;
}

// ---- commands ---------------------------------------------------------------

int cmd_rhs(const GameOpts& g, const DynOpts& d, const std::vector<double>& xv, const std::string& format,
            std::ostream& out) {
    const PayoffModel model = build_model(g);
    const ReplicatorSystem sys(model, parse_rule(d.rule), d.delta, parse_path(d.path));
    const Eigen::VectorXd x = to_vec(xv);
    const Eigen::VectorXd v = sys.rhs(x);
    const std::string path = sys.rule() == Rule::WellMixed ? "wellmixed" : path_name(sys.active_path());
    if (format == "json") {
        json doc;
        doc["game"] = model.name();
        doc["rule"] = to_string(sys.rule());
        doc["k"] = model.k();
        doc["delta"] = num(sys.delta());
        doc["path"] = path;
        doc["strategies"] = model.strategy_names();
        doc["x"] = vec_json(x);
        doc["rhs"] = vec_json(v);
        out << doc.dump(2) << "\n";
    } else {
        CsvWriter w({"strategy", "x", "rhs", "path"});
        for (int i = 0; i < model.n(); ++i)
            w.row({model.strategy_names()[static_cast<std::size_t>(i)], fmt(x(i)), fmt(v(i)), path});
        out << w.str();
    }
    return 0;
}

struct IntegrateArgs {
    std::vector<double> x0;
    double t_max = 200.0;
    double tol = 1e-8;
    double record_interval = 0.0;
};

void cmd_integrate(const GameOpts& g, const DynOpts& d, const IntegrateArgs& a, const OutOpts& o, Manifest& man,
                   std::ostream& out) {
    const PayoffModel model = build_model(g);
    const ReplicatorSystem sys(model, parse_rule(d.rule), d.delta, parse_path(d.path));
    IntegrateOptions io;
    io.record_interval = a.record_interval;
    const Trajectory tr = integrate(sys, to_vec(a.x0), a.t_max, a.tol, io);
    const fs::path dir = output_dir(o);

    json summary;
    summary["terminal_reason"] = to_string(tr.terminal_reason);
    summary["final_time"] = num(tr.final_time());
    summary["final_state"] = vec_json(tr.final_state());
    summary["points"] = tr.states.size();
    if (model.n() >= 2) summary["crossings_x1_eq_x2"] = section_crossings(tr, 0, 1).size();
    if (o.format == "json") {
        json doc = summary;
        doc["strategies"] = model.strategy_names();
        json pts = json::array();
        for (std::size_t s = 0; s < tr.states.size(); ++s) {
            json row = vec_json(tr.states[s]);
            row.insert(row.begin(), num(tr.times[s]));
            pts.push_back(row);
        }
        doc["trajectory"] = pts;
        man.output(dir, "trajectory.json", doc.dump(2) + "\n");
    } else {
        auto h = x_header(model, "x_");
        h.insert(h.begin(), "t");
        CsvWriter w(h);
        for (std::size_t s = 0; s < tr.states.size(); ++s) {
            std::vector<std::string> row{fmt(tr.times[s])};
            for (Eigen::Index i = 0; i < tr.states[s].size(); ++i) row.push_back(fmt(tr.states[s](i)));
            w.row(row);
        }
        man.output(dir, "trajectory.csv", w.str());
        man.output(dir, "trajectory_summary.json", summary.dump(2) + "\n");
    }
    if (o.format == "svg") {
        if (model.n() == 3) {
            man.output(dir, "trajectory.svg", svg::ternary(tr.states, model.strategy_names(), model.name() + " trajectory"));
        } else {
            std::vector<svg::Series> series;
            for (int i = 0; i < model.n(); ++i) {
                svg::Series s{model.strategy_names()[static_cast<std::size_t>(i)], {}};
                for (std::size_t p = 0; p < tr.states.size(); ++p) s.points.emplace_back(tr.times[p], tr.states[p](i));
                series.push_back(s);
            }
            man.output(dir, "trajectory.svg", svg::line_chart(series, "t", "frequency", model.name() + " trajectory"));
        }
    }
    out << "terminal_reason=" << to_string(tr.terminal_reason) << " t=" << fmt(tr.final_time()) << " x=";
    for (Eigen::Index i = 0; i < tr.final_state().size(); ++i) out << (i ? "," : "") << fmt(tr.final_state()(i));
    out << "\n";
}

std::string eig_string(const std::vector<std::complex<double>>& ev) {
    std::vector<std::string> parts;
    for (const auto& e : ev) {
        std::string s = fmt(e.real());
        if (e.imag() != 0.0) s += (e.imag() > 0 ? "+" : "") + fmt(e.imag()) + "i";
        parts.push_back(s);
    }
    return join(parts, ";");
}

void cmd_equilibria(const GameOpts& g, const DynOpts& d, const OutOpts& o, Manifest& man, std::ostream& out) {
    const PayoffModel model = build_model(g);
    const ReplicatorSystem sys(model, parse_rule(d.rule), d.delta, parse_path(d.path));
    const auto eqs = find_equilibria(sys);
    const fs::path dir = output_dir(o);
    auto names = [&](const std::vector<int>& s) {
        std::vector<std::string> v;
        for (int i : s) v.push_back(model.strategy_names()[static_cast<std::size_t>(i)]);
        return join(v, "+");
    };
    if (o.format == "json") {
        json arr = json::array();
        for (const auto& e : eqs) {
            json j;
            j["kind"] = to_string(e.kind);
            j["stability"] = to_string(e.stability);
            j["support"] = names(e.support);
            j["point"] = vec_json(e.point);
            json ev = json::array();
            for (const auto& z : e.eigenvalues) ev.push_back(json::array({num(z.real()), num(z.imag())}));
            j["eigenvalues"] = ev;
            json smp = json::array();
            for (const auto& s : e.samples)
                smp.push_back(json{{"point", vec_json(s.point)}, {"transverse", num(s.transverse)}, {"stable", s.stable}});
            if (!e.samples.empty()) j["samples"] = smp;
            arr.push_back(j);
        }
        man.output(dir, "equilibria.json", json{{"strategies", model.strategy_names()}, {"equilibria", arr}}.dump(2) + "\n");
    } else {
        std::vector<std::string> h{"kind", "stability", "support"};
        for (const auto& s : x_header(model, "x_")) h.push_back(s);
        h.push_back("eigenvalues");
        CsvWriter w(h);
        auto hs = x_header(model, "x_");
        hs.insert(hs.begin(), "support");
        hs.insert(hs.begin(), "segment");
        hs.push_back("transverse");
        hs.push_back("stable");
        CsvWriter ls(hs);
        int segment = 0;
        for (const auto& e : eqs) {
            std::vector<std::string> row{to_string(e.kind), to_string(e.stability), names(e.support)};
            for (Eigen::Index i = 0; i < e.point.size(); ++i) row.push_back(fmt(e.point(i)));
            row.push_back(eig_string(e.eigenvalues));
            w.row(row);
            if (!e.samples.empty()) {
                for (const auto& s : e.samples) {
                    std::vector<std::string> r{std::to_string(segment), names(e.support)};
                    for (Eigen::Index i = 0; i < s.point.size(); ++i) r.push_back(fmt(s.point(i)));
                    r.push_back(fmt(s.transverse));
                    r.push_back(s.stable ? "true" : "false");
                    ls.row(r);
                }
                ++segment;
            }
        }
        man.output(dir, "equilibria.csv", w.str());
        if (segment > 0) man.output(dir, "line_samples.csv", ls.str());
    }
    for (const auto& e : eqs) {
        out << to_string(e.kind) << ' ' << to_string(e.stability) << ' ' << names(e.support) << " x=";
        for (Eigen::Index i = 0; i < e.point.size(); ++i) out << (i ? "," : "") << fmt(e.point(i));
        out << "\n";
    }
}

void cmd_thresholds(const GameOpts& g, const std::string& alpha_range, bool with_beta, const OutOpts& o, Manifest& man,
                    std::ostream& out) {
    const GameKind kind = parse_game_kind(g.game);
    const auto alphas = parse_range(alpha_range);
    const ThresholdPair t0 = thresholds(kind, g.r, g.c, 0.0, g.k), t1 = thresholds(kind, g.r, g.c, 1.0, g.k);
    auto affine = [](double at0, double at1) {
        const double slope = at1 - at0;
        return rational_like(at0) + " + " + rational_like(slope) + "*alpha  (" + fmt(at0) + " + " + fmt(slope) + "*alpha)";
    };
    out << to_string(kind) << " k=" << g.k << " r=" << fmt(g.r) << " c=" << fmt(g.c) << "\n";
    out << "structured: beta0 = " << affine(t0.structured.beta0, t1.structured.beta0) << "\n";
    out << "structured: beta_star = " << affine(t0.structured.beta_star, t1.structured.beta_star) << "\n";
    out << "structured: beta_eq = " << affine(t0.structured.beta_eq, t1.structured.beta_eq) << "\n";
    out << "well-mixed: beta0 = " << affine(t0.well_mixed.beta0, t1.well_mixed.beta0) << "\n";
    out << "well-mixed: beta_star = inf\n";

    std::vector<std::string> h{"alpha", "population", "beta0_wm", "beta0", "beta_eq", "beta_star"};
    if (with_beta) {
        for (const char* s : {"beta", "phase", "x_d_edge", "x_d_exists", "x_ce_star", "x_ce_exists"}) h.push_back(s);
    }
    CsvWriter w(h);
    json rows = json::array();
    for (double a : alphas) {
        const ThresholdPair tp = thresholds(kind, g.r, g.c, a, g.k);
        for (Population pop : {Population::WellMixed, Population::Structured}) {
            const Thresholds& t = tp.of(pop);
            std::vector<std::string> row{fmt(a), to_string(pop), fmt(t.beta0_wm), fmt(t.beta0), fmt(t.beta_eq), fmt(t.beta_star)};
            json j{{"alpha", num(a)}, {"population", to_string(pop)}, {"beta0_wm", num(t.beta0_wm)},
                   {"beta0", num(t.beta0)}, {"beta_eq", num(t.beta_eq)}, {"beta_star", num(t.beta_star)}};
            if (with_beta) {
                const auto ef = edge_equilibrium_fractions(kind, GameParams{g.r, g.c, a, g.beta}, g.k, pop);
                const std::string ph = phase_label(kind, phase_classify(kind, g.r, g.c, a, g.beta, g.k, pop));
                for (const auto& s : {fmt(g.beta), ph, fmt(ef.x_d_edge), std::string(ef.x_d_exists ? "true" : "false"),
                                      fmt(ef.x_ce_star), std::string(ef.x_ce_exists ? "true" : "false")})
                    row.push_back(s);
                j["beta"] = num(g.beta);
                j["phase"] = ph;
                j["x_d_edge"] = num(ef.x_d_edge);
                j["x_d_exists"] = ef.x_d_exists;
                j["x_ce_star"] = num(ef.x_ce_star);
                j["x_ce_exists"] = ef.x_ce_exists;
            }
            w.row(row);
            rows.push_back(j);
        }
    }
    const fs::path dir = output_dir(o);
    if (o.format == "json") man.output(dir, "thresholds.json", json{{"game", to_string(kind)}, {"rows", rows}}.dump(2) + "\n");
    else man.output(dir, "thresholds.csv", w.str());
}

struct PhaseArgs {
    std::string alphas = "0:1:0.05";
    std::string betas = "0:8:0.1";
    std::string population = "structured";
    std::string cross_check = "none";
    double t_max = 2000.0;
};

void cmd_phase(const GameOpts& g, const PhaseArgs& a, const OutOpts& o, Manifest& man, std::ostream& out) {
    const GameKind kind = parse_game_kind(g.game);
    const Population pop = parse_population(a.population);
    PhaseOptions opt;
    opt.cross_check = parse_cross_check(a.cross_check);
    opt.t_max = a.t_max;
    opt.jobs = o.jobs;
    const PhaseGrid grid = phase_diagram(kind, g.r, g.c, g.k, pop, parse_range(a.alphas), parse_range(a.betas), opt);
    const fs::path dir = output_dir(o);
    const std::vector<Phase> phases{Phase::Defection, Phase::Bistable, Phase::Punishing};
    std::map<std::string, int> counts;
    CsvWriter w({"alpha", "beta", "label", "boundary_distance", "checked", "ode_label", "agrees"});
    json cells = json::array();
    std::vector<int> cat;
    for (const auto& c : grid.cells) {
        const std::string label = phase_label(kind, c.phase);
        const std::string ode = c.checked ? (c.ode_phase ? phase_label(kind, *c.ode_phase) : "unresolved") : "";
        ++counts[label];
        cat.push_back(static_cast<int>(c.phase));
        w.row({fmt(c.alpha), fmt(c.beta), label, fmt(c.boundary_distance), c.checked ? "true" : "false", ode,
               c.agrees ? "true" : "false"});
        cells.push_back(json{{"alpha", num(c.alpha)}, {"beta", num(c.beta)}, {"label", label},
                             {"boundary_distance", num(c.boundary_distance)}, {"checked", c.checked}, {"ode_label", ode},
                             {"agrees", c.agrees}});
    }
    json summary{{"game", to_string(kind)}, {"population", to_string(pop)}, {"cells", grid.cells.size()},
                 {"disagreements", grid.disagreements()}, {"label_counts", counts}};
    if (o.format == "json") {
        json doc = summary;
        doc["grid"] = cells;
        man.output(dir, "phase.json", doc.dump(2) + "\n");
    } else {
        man.output(dir, "phase.csv", w.str());
        man.output(dir, "phase_summary.json", summary.dump(2) + "\n");
    }
    if (o.format == "svg") {
        std::vector<svg::Series> lines{{"beta0", {}}, {"beta_star", {}}};
        for (double al : grid.alphas) {
            const Thresholds t = thresholds(kind, g.r, g.c, al, g.k).of(pop);
            lines[0].points.emplace_back(al, t.beta0);
            if (std::isfinite(t.beta_star)) lines[1].points.emplace_back(al, t.beta_star);
        }
        if (lines[1].points.empty()) lines.pop_back();
        std::vector<std::string> names;
        for (Phase p : phases) names.push_back(phase_label(kind, p));
        man.output(dir, "phase.svg",
                   svg::heatmap(grid.alphas, grid.betas, cat, names, lines, "alpha", "beta",
                                to_string(kind) + " " + to_string(pop) + " k=" + std::to_string(g.k) + " r=" + fmt(g.r)));
    }
    out << "cells=" << grid.cells.size() << " disagreements=" << grid.disagreements();
    for (const auto& [k, v] : counts) out << " [" << k << "]=" << v;
    out << "\n";
}

struct SimArgs {
    int N = 1000;
    std::string topology = "rrg";
    std::uint64_t graph_seed = 1;
    std::uint64_t seed = 1;
    int sweeps = 100;
    int measure_every = 1;
    int replicas = 4;
    std::vector<double> x0;
    int burn_in = 20;
};

SimConfig sim_config(const GameOpts& g, const DynOpts& d, const SimArgs& s, int jobs, const PayoffModel& model) {
    SimConfig cfg;
    cfg.N = s.N;
    cfg.k = model.k();
    cfg.topology = parse_topology(s.topology);
    cfg.graph_seed = s.graph_seed;
    cfg.rule = parse_rule(d.rule);
    cfg.delta = d.delta;
    cfg.x0 = s.x0.empty() ? Eigen::VectorXd::Constant(model.n(), 1.0 / model.n()) : to_vec(s.x0);
    cfg.sweeps = s.sweeps;
    cfg.measure_every = s.measure_every;
    cfg.replicas = s.replicas;
    cfg.seed = s.seed;
    cfg.jobs = jobs;
    (void)g;
    cfg.validate(model);
    return cfg;
}

json seeds_json(const SimResult& r) {
    json a = json::array();
    for (const auto& rep : r.replicas)
        a.push_back(json{{"replica", rep.replica}, {"seed", rep.seed}, {"graph_seed", rep.graph_seed},
                         {"triangle_count", rep.triangle_count}, {"final_x", vec_json(rep.final_x)}});
    return a;
}

void cmd_simulate(const GameOpts& g, const DynOpts& d, const SimArgs& s, const OutOpts& o, Manifest& man,
                  std::ostream& out) {
    const PayoffModel model = build_model(g);
    const SimConfig cfg = sim_config(g, d, s, o.jobs, model);
    const SimResult res = run(cfg, model);
    const fs::path dir = output_dir(o);
    const int n = model.n();

    std::vector<std::string> h{"replica", "sweep"};
    for (const auto& x : x_header(model, "x_")) h.push_back(x);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            h.push_back("q_" + model.strategy_names()[static_cast<std::size_t>(j)] + "|" +
                        model.strategy_names()[static_cast<std::size_t>(i)]);
    CsvWriter w(h);
    for (const auto& rep : res.replicas)
        for (const auto& smp : rep.samples) {
            std::vector<std::string> row{std::to_string(rep.replica), std::to_string(smp.sweep)};
            for (int i = 0; i < n; ++i) row.push_back(fmt(smp.x(i)));
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) row.push_back(fmt(smp.q(j, i)));
            w.row(row);
        }

    // Ensemble mean and standard error per recorded sweep.
    const auto& first = res.replicas.front().samples;
    const double R = static_cast<double>(res.replicas.size());
    json series = json::array();
    std::vector<svg::Series> lines(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) lines[static_cast<std::size_t>(i)].name = model.strategy_names()[static_cast<std::size_t>(i)];
    for (std::size_t t = 0; t < first.size(); ++t) {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(n), sq = Eigen::VectorXd::Zero(n);
        for (const auto& rep : res.replicas) {
            mean += rep.samples[t].x / R;
            sq += rep.samples[t].x.cwiseAbs2() / R;
        }
        const Eigen::VectorXd var = (sq - mean.cwiseAbs2()).cwiseMax(0.0) * (R > 1 ? R / (R - 1) : 0.0);
        const Eigen::VectorXd se = (var / R).cwiseSqrt();
        series.push_back(json{{"sweep", first[t].sweep}, {"mean", vec_json(mean)}, {"std_error", vec_json(se)}});
        for (int i = 0; i < n; ++i) lines[static_cast<std::size_t>(i)].points.emplace_back(first[t].sweep, mean(i));
    }
    json summary{{"strategies", model.strategy_names()}, {"replicas", seeds_json(res)}, {"ensemble", series}};
    man["seeds"] = json{{"seed", cfg.seed}, {"graph_seed", cfg.graph_seed}};
    if (o.format == "json") {
        summary["samples_csv_columns"] = h;
        man.output(dir, "simulation_summary.json", summary.dump(2) + "\n");
    } else {
        man.output(dir, "simulation.csv", w.str());
        man.output(dir, "simulation_summary.json", summary.dump(2) + "\n");
    }
    if (o.format == "svg")
        man.output(dir, "simulation.svg", svg::line_chart(lines, "sweep", "mean frequency", model.name() + " ensemble mean"));
    out << "replicas=" << res.replicas.size() << " sweeps=" << cfg.sweeps << " final mean x=";
    const auto& last = series.back()["mean"];
    for (std::size_t i = 0; i < last.size(); ++i) out << (i ? "," : "") << fmt(last[i].get<double>());
    out << "\n";
}

void cmd_validate(const GameOpts& g, const DynOpts& d, const SimArgs& s, const OutOpts& o, Manifest& man,
                  std::ostream& out) {
    const PayoffModel model = build_model(g);
    const SimConfig cfg = sim_config(g, d, s, o.jobs, model);
    const SimResult res = run(cfg, model);
    const ClosureReport cr = validate_closure(res, model.k(), s.burn_in);
    const ReplicatorSystem sys(model, cfg.rule, cfg.delta > 0 ? cfg.delta : 1.0);
    const Eigen::VectorXd v = sys.rhs(cfg.x0);
    json drift = json::array();
    for (int i = 0; i < model.n(); ++i) {
        const DriftReport dr = drift_sign_test(res, i);
        const double predicted = cfg.delta > 0 ? v(i) : 0.0;
        drift.push_back(json{{"strategy", model.strategy_names()[static_cast<std::size_t>(i)]},
                             {"negative", dr.negative}, {"positive", dr.positive}, {"mean_drift", num(dr.mean_drift)},
                             {"std_error", num(dr.std_error)}, {"p_negative", num(dr.p_negative)},
                             {"p_positive", num(dr.p_positive)}, {"replicator_rhs_at_x0", num(predicted)}});
    }
    json doc{{"closure", json{{"max_abs_deviation", num(cr.max_abs_deviation)}, {"mean_deviation", mat_json(cr.mean_deviation)},
                              {"std_error", mat_json(cr.std_error)}, {"z_score", mat_json(cr.z_score)},
                              {"burn_in", s.burn_in}, {"samples_used", cr.samples_used},
                              {"layout", "row i, column j holds q_{i|j}"}}},
             {"drift", drift},
             {"replicas", seeds_json(res)}};
    man["seeds"] = json{{"seed", cfg.seed}, {"graph_seed", cfg.graph_seed}};
    man.output(output_dir(o), "validation.json", doc.dump(2) + "\n");
    out << "closure max |q_hat - q| = " << fmt(cr.max_abs_deviation) << "\n";
    for (const auto& dj : drift)
        out << "drift " << dj["strategy"].get<std::string>() << ": negative " << dj["negative"].get<int>() << "/"
            << res.replicas.size() << " p_neg=" << fmt(dj["p_negative"].get<double>()) << "\n";
}

void cmd_games_list(std::ostream& out) {
    for (const auto& gi : builtin_games()) out << gi.name << "\t" << join(gi.strategies, ",") << "\t" << gi.description << "\n";
}

void cmd_payoff_export(const GameOpts& g, const OutOpts& o, Manifest& man, std::ostream& out) {
    const PayoffModel model = build_model(g);
    const fs::path dir = output_dir(o);
    if (o.format == "json") {
        man.output(dir, "payoff.json", payoff_to_json(model).dump(2) + "\n");
    } else {
        std::vector<std::string> h = x_header(model, "k_");
        for (const auto& s : x_header(model, "a_")) h.push_back(s);
        CsvWriter w(h);
        for (std::size_t idx = 0; idx < model.space().size(); ++idx) {
            std::vector<std::string> row;
            for (int v : model.space()[idx].counts) row.push_back(std::to_string(v));
            for (int i = 0; i < model.n(); ++i) row.push_back(fmt(model.at(i, idx)));
            w.row(row);
        }
        man.output(dir, "payoff.csv", w.str());
    }
    out << model.name() << ": " << model.space().size() << " configurations, n=" << model.n() << ", k=" << model.k() << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Replicator dynamics of multiplayer games on regular graphs (pair approximation), with analysis and "
                 "Monte Carlo tools.",
                 "pairdyn"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_config("--config", "", "INI/TOML config: [command] sections or command.key = value; flags override");
    app.set_version_flag("--version", std::string(kVersion));

    GameOpts g;
    DynOpts d;
    DynOpts ds{"pc", 0.02, "auto"};  // simulation defaults
    OutOpts o;
    std::vector<double> xv;
    IntegrateArgs ia;
    PhaseArgs pa;
    SimArgs sa;
    std::string alpha_range = "0";
    CLI::Option* beta_opt = nullptr;

    auto* rhs = app.add_subcommand("rhs", "print dx/dt at a state and the evaluation path used");
    add_game(rhs, g);
    add_dyn(rhs, d);
    rhs->add_option("--x", xv, "state, comma separated")->delimiter(',')->required();
    rhs->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    rhs->footer("Output (stdout): csv columns strategy,x,rhs,path; json object with x, rhs, path.");

    auto* integ = app.add_subcommand("integrate", "integrate the replicator equation from x0");
    add_game(integ, g);
    add_dyn(integ, d);
    add_out(integ, o);
    integ->add_option("--x0", ia.x0, "initial state, comma separated")->delimiter(',')->required();
    integ->add_option("--t-max", ia.t_max, "final time");
    integ->add_option("--tol", ia.tol, "relative error tolerance");
    integ->add_option("--record-interval", ia.record_interval, "minimum time between recorded points (0 = every step)");
    integ->footer("Files: trajectory.csv (t,x_<s>...), trajectory_summary.json, trajectory.svg with --format svg, "
                  "manifest.json.");

    auto* eq = app.add_subcommand("equilibria", "find and classify rest points (n <= 4)");
    add_game(eq, g);
    add_dyn(eq, d);
    add_out(eq, o);
    eq->footer("Files: equilibria.csv (kind,stability,support,x_<s>...,eigenvalues as re+imi joined by ';'), "
               "line_samples.csv (segment,support,x_<s>...,transverse,stable) for degenerate lines, manifest.json.");

    auto* th = app.add_subcommand("thresholds", "closed-form punishment thresholds (peer or pool)");
    add_game(th, g, false, false);
    th->add_option("--alpha", alpha_range, "punishment cost: value or lo:hi:step");
    beta_opt = th->add_option("--beta", g.beta, "punishment fine; adds phase and edge rest points to the table");
    add_out(th, o);
    th->footer("Files: thresholds.csv (alpha,population,beta0_wm,beta0,beta_eq,beta_star; with --beta also "
               "beta,phase,x_d_edge,x_d_exists,x_ce_star,x_ce_exists), manifest.json.");

    auto* ph = app.add_subcommand("phase", "alpha-beta phase diagram");
    add_game(ph, g, false, false);
    ph->add_option("--alpha", pa.alphas, "punishment cost grid lo:hi:step");
    ph->add_option("--beta", pa.betas, "punishment fine grid lo:hi:step");
    ph->add_option("--population", pa.population, "structured or wellmixed");
    ph->add_option("--cross-check", pa.cross_check, "none, boundary or all: re-derive labels by integration");
    ph->add_option("--t-max", pa.t_max, "integration horizon for the cross-check");
    add_out(ph, o, true);
    ph->footer("Files: phase.csv (alpha,beta,label,boundary_distance,checked,ode_label,agrees), "
               "phase_summary.json, phase.svg with --format svg, manifest.json.");

    auto add_sim = [&](CLI::App* sub) {
        add_game(sub, g);
        add_dyn(sub, ds);
        add_out(sub, o, true);
        sub->add_option("--N", sa.N, "node count");
        sub->add_option("--topology", sa.topology, "rrg (random regular) or ring");
        sub->add_option("--graph-seed", sa.graph_seed, "graph seed; replica r uses graph-seed + r");
        sub->add_option("--seed", sa.seed, "master seed for the dynamics");
        sub->add_option("--sweeps", sa.sweeps, "Monte Carlo sweeps (N elementary updates each)");
        sub->add_option("--measure-every", sa.measure_every, "sweeps between measurements");
        sub->add_option("--replicas", sa.replicas, "independent replicas");
        sub->add_option("--x0", sa.x0, "initial frequencies, comma separated (default uniform)")->delimiter(',');
    };
    auto* sim = app.add_subcommand("simulate", "agent-based Monte Carlo on a regular graph");
    add_sim(sim);
    sim->footer("Files: simulation.csv (replica,sweep,x_<s>...,q_<j>|<i>... with i outer), simulation_summary.json "
                "(seeds, triangle counts, ensemble mean and standard error), simulation.svg with --format svg, "
                "manifest.json.");
    auto* val = app.add_subcommand("validate", "simulate, then test the closure and the drift direction");
    add_sim(val);
    val->add_option("--burn-in", sa.burn_in, "sweeps skipped before averaging");
    val->footer("Files: validation.json (closure deviation, z-scores, per-strategy drift sign tests), manifest.json.");

    auto* games = app.add_subcommand("games", "built-in games");
    games->require_subcommand(1);
    auto* games_list = games->add_subcommand("list", "list built-in games");

    auto* payoff = app.add_subcommand("payoff", "payoff tables");
    payoff->require_subcommand(1);
    auto* pexport = payoff->add_subcommand("export", "write the generalized payoff matrix");
    add_game(pexport, g);
    add_out(pexport, o);
    pexport->footer("Files: payoff.csv (k_<s>... then a_<s>..., one row per configuration) or payoff.json "
                    "(loadable with --payoff-file), manifest.json.");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    auto with_manifest = [&](const std::string& name, CLI::App* sub, const std::function<void(Manifest&)>& body) {
        Manifest man(name, argc, argv);
        man.parameters(&app, sub);
        man["outputs"] = json::array();
        body(man);
        man.write(output_dir(o));
    };

    try {
        if (rhs->parsed()) return cmd_rhs(g, d, xv, o.format, out);
        if (integ->parsed()) with_manifest("integrate", integ, [&](Manifest& m) { cmd_integrate(g, d, ia, o, m, out); });
        if (eq->parsed()) with_manifest("equilibria", eq, [&](Manifest& m) { cmd_equilibria(g, d, o, m, out); });
        if (th->parsed())
            with_manifest("thresholds", th, [&](Manifest& m) { cmd_thresholds(g, alpha_range, beta_opt->count() > 0, o, m, out); });
        if (ph->parsed()) with_manifest("phase", ph, [&](Manifest& m) { cmd_phase(g, pa, o, m, out); });
        if (sim->parsed()) with_manifest("simulate", sim, [&](Manifest& m) { cmd_simulate(g, ds, sa, o, m, out); });
        if (val->parsed()) with_manifest("validate", val, [&](Manifest& m) { cmd_validate(g, ds, sa, o, m, out); });
        if (games_list->parsed()) cmd_games_list(out);
        if (pexport->parsed()) with_manifest("payoff export", pexport, [&](Manifest& m) { cmd_payoff_export(g, o, m, out); });
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const fs::filesystem_error& e) {
        err << "i/o error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}

}  // namespace pairdyn::cli
