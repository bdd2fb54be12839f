#include <catch_amalgamated.hpp>

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "io.hpp"
#include "pairdyn/pairdyn.hpp"

namespace fs = std::filesystem;
using namespace pairdyn;
using Catch::Approx;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "pairdyn");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& tag) {
    static std::atomic<int> counter{0};
    const fs::path p = fs::temp_directory_path() / ("pairdyn_cli_test_" + std::to_string(::getpid()) + "_" + tag + "_" +
                                                    std::to_string(counter++));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) { return cli::read_file(p); }

nlohmann::json parse(const std::string& s) { return nlohmann::json::parse(s); }

}  // namespace

TEST_CASE("rhs vanishes for the neutral public goods game and at vertices", "[cli]") {
    const auto a = run({"rhs", "--game", "pgg", "--k", "4", "--r", "5", "--x", "0.3,0.7", "--format", "json"});
    REQUIRE(a.code == 0);
    for (const auto& v : parse(a.out)["rhs"]) CHECK(std::abs(v.get<double>()) < 1e-14);
    const auto b = run({"rhs", "--game", "peer", "--x", "0,1,0"});
    REQUIRE(b.code == 0);
    CHECK(b.out.rfind("strategy,x,rhs,path\n", 0) == 0);
    std::istringstream rows(b.out);
    std::string line;
    std::getline(rows, line);
    while (std::getline(rows, line)) {
        const auto f1 = line.find(','), f2 = line.find(',', f1 + 1), f3 = line.find(',', f2 + 1);
        CHECK(std::stod(line.substr(f2 + 1, f3 - f2 - 1)) == 0.0);
        CHECK(line.substr(f3 + 1) == "linear");
    }
}

TEST_CASE("rhs json matches the library to the last bit", "[cli]") {
    const auto a = run({"rhs", "--game", "pool", "--k", "4", "--r", "3", "--alpha", "0.7", "--beta", "5", "--rule", "db",
                        "--x", "0.2,0.3,0.5", "--format", "json"});
    REQUIRE(a.code == 0);
    const auto doc = parse(a.out);
    CHECK(doc["path"] == "general");
    const ReplicatorSystem sys(pool_punishment(GameParams{3, 1, 0.7, 5}, 4), Rule::DB, 1.0);
    const Eigen::VectorXd v = sys.rhs(Eigen::Vector3d(0.2, 0.3, 0.5));
    for (int i = 0; i < 3; ++i) CHECK(doc["rhs"][static_cast<std::size_t>(i)].get<double>() == v(i));
}

TEST_CASE("integrate writes trajectory files and a manifest", "[cli]") {
    const auto dir = scratch("integrate");
    const auto a = run({"integrate", "--game", "peer", "--beta", "5", "--x0", "0.4,0.4,0.2", "--t-max", "100", "--out",
                        dir.string(), "--format", "svg"});
    REQUIRE(a.code == 0);
    CHECK(a.out.find("terminal_reason=converged") != std::string::npos);
    CHECK(slurp(dir / "trajectory.csv").rfind("t,x_C,x_D,x_E\n", 0) == 0);
    CHECK(slurp(dir / "trajectory.svg").find("<svg") != std::string::npos);
    const auto man = parse(slurp(dir / "manifest.json"));
    CHECK(man["command"] == "integrate");
    CHECK(man["parameters"]["beta"] == "5");
    CHECK(man["parameters"]["alpha"] == "0.7");
    const auto summary = parse(slurp(dir / "trajectory_summary.json"));
    CHECK(summary["final_state"][1].get<double>() < 1e-6);
    fs::remove_all(dir);
}

TEST_CASE("thresholds prints the affine forms", "[cli]") {
    const auto dir = scratch("thresholds");
    const auto a = run({"thresholds", "--game", "peer", "--k", "4", "--r", "2", "--c", "1", "--alpha", "0:1:0.5", "--beta",
                        "2", "--out", dir.string()});
    REQUIRE(a.code == 0);
    CHECK(a.out.find("structured: beta0 = 3/17 + 3/17*alpha") != std::string::npos);
    CHECK(a.out.find("structured: beta_star = 1 + 17/3*alpha") != std::string::npos);
    const auto csv = slurp(dir / "thresholds.csv");
    CHECK(csv.rfind("alpha,population,beta0_wm,beta0,beta_eq,beta_star,beta,phase", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
    CHECK(csv.find("D<=>(C+E)_V") != std::string::npos);
    const auto pool = run({"thresholds", "--game", "pool", "--r", "2", "--out", dir.string()});
    CHECK(pool.out.find("structured: beta_star = 3/2 + 5/2*alpha") != std::string::npos);
    CHECK(run({"thresholds", "--game", "pgg", "--out", dir.string()}).code == 2);
    fs::remove_all(dir);
}

TEST_CASE("phase writes a grid, a summary and a heatmap", "[cli]") {
    const auto dir = scratch("phase");
    const auto a = run({"phase", "--game", "pool", "--r", "2", "--alpha", "0:1:0.25", "--beta", "0:4:1", "--format", "svg",
                        "--cross-check", "boundary", "--out", dir.string()});
    REQUIRE(a.code == 0);
    const auto csv = slurp(dir / "phase.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 26);
    const auto svg = slurp(dir / "phase.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("(D+C+O)_C") != std::string::npos);
    const auto summary = parse(slurp(dir / "phase_summary.json"));
    CHECK(summary["cells"] == 25);
    fs::remove_all(dir);
}

TEST_CASE("exported payoff tables load back unchanged", "[cli]") {
    const auto dir = scratch("payoff");
    REQUIRE(run({"payoff", "export", "--game", "pool", "--k", "3", "--beta", "2", "--format", "json", "--out", dir.string()})
                .code == 0);
    const auto file = (dir / "payoff.json").string();
    const auto from_file = run({"rhs", "--payoff-file", file, "--x", "0.2,0.3,0.5", "--format", "json"});
    const auto builtin = run({"rhs", "--game", "pool", "--k", "3", "--beta", "2", "--x", "0.2,0.3,0.5", "--format", "json"});
    REQUIRE(from_file.code == 0);
    CHECK(parse(from_file.out)["rhs"] == parse(builtin.out)["rhs"]);
    CHECK(run({"rhs", "--payoff-file", file, "--k", "4", "--x", "0.2,0.3,0.5"}).code == 2);

    REQUIRE(run({"payoff", "export", "--game", "peer", "--k", "3", "--out", dir.string()}).code == 0);
    const auto csv = slurp(dir / "payoff.csv");
    CHECK(csv.rfind("k_C,k_D,k_E,a_C,a_D,a_E\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
    fs::remove_all(dir);
}

TEST_CASE("incomplete payoff tables are rejected with the missing configuration", "[cli]") {
    const auto dir = scratch("badtable");
    const auto file = dir / "t.json";
    cli::write_file(file, R"({"k": 2, "strategies": ["A", "B"],
        "table": [{"config": [2, 0], "payoffs": [1, 2]}, {"config": [1, 1], "payoffs": [0, 1]}]})");
    const auto a = run({"rhs", "--payoff-file", file.string(), "--x", "0.5,0.5"});
    CHECK(a.code == 2);
    CHECK(a.err.find("(0,2)") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("exit codes", "[cli]") {
    const auto dir = scratch("codes");
    CHECK(run({"rhs", "--x", "0.5,0.6,0.1"}).code == 2);
    CHECK(run({"rhs", "--game", "nope", "--x", "0.5,0.5"}).code == 2);
    CHECK(run({"rhs", "--bogus"}).code == 2);
    CHECK(run({"simulate", "--delta", "-1", "--out", dir.string()}).code == 2);
    CHECK(run({"--help"}).code == 0);

    const auto huge = dir / "huge.json";
    cli::write_file(huge, R"({"k": 3, "linear": {"b": [[0, 0], [0, 0]], "c": [1e308, -1e308]}})");
    CHECK(run({"integrate", "--payoff-file", huge.string(), "--x0", "0.5,0.5", "--out", dir.string()}).code == 3);

    CHECK(run({"rhs", "--payoff-file", (dir / "missing.json").string(), "--x", "0.5,0.5"}).code == 4);
    cli::write_file(dir / "blocker", "x");
    CHECK(run({"thresholds", "--out", (dir / "blocker" / "sub").string()}).code == 4);
    fs::remove_all(dir);
}

TEST_CASE("config files set options and flags override them", "[cli]") {
    const auto dir = scratch("config");
    const auto ini = dir / "run.ini";
    cli::write_file(ini, "[rhs]\ngame = pgg\nr = 5\nformat = json\n");
    const auto a = run({"--config", ini.string(), "rhs", "--x", "0.3,0.7"});
    REQUIRE(a.code == 0);
    for (const auto& v : parse(a.out)["rhs"]) CHECK(std::abs(v.get<double>()) < 1e-14);
    const auto b = run({"--config", ini.string(), "rhs", "--x", "0.3,0.7", "--r", "3"});
    REQUIRE(b.code == 0);
    CHECK(parse(b.out)["rhs"][0].get<double>() < 0.0);
    fs::remove_all(dir);
}

TEST_CASE("output directory falls back to the environment variable", "[cli]") {
    const auto dir = scratch("env");
    ::setenv("PAIRDYN_OUTPUT_DIR", dir.string().c_str(), 1);
    const auto a = run({"thresholds", "--game", "peer"});
    ::unsetenv("PAIRDYN_OUTPUT_DIR");
    REQUIRE(a.code == 0);
    CHECK(fs::exists(dir / "thresholds.csv"));
    fs::remove_all(dir);
}

TEST_CASE("reruns produce byte-identical outputs", "[cli]") {
    const auto dir = scratch("rerun");
    const std::vector<std::vector<std::string>> cmds{
        {"simulate", "--game", "peer", "--N", "200", "--sweeps", "5", "--replicas", "2", "--seed", "7", "--jobs", "2"},
        {"equilibria", "--game", "pool", "--beta", "1", "--alpha", "0.2", "--r", "2", "--format", "json"},
        {"integrate", "--game", "pool", "--beta", "5", "--x0", "0.3,0.3,0.4", "--t-max", "50"},
    };
    for (auto cmd : cmds) {
        cmd.push_back("--out");
        cmd.push_back(dir.string());
        REQUIRE(run(cmd).code == 0);
        std::vector<std::pair<std::string, std::string>> first;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.path().filename() != "manifest.json") first.emplace_back(e.path().string(), slurp(e.path()));
        auto man1 = parse(slurp(dir / "manifest.json"));
        REQUIRE(run(cmd).code == 0);
        for (const auto& [path, text] : first) CHECK(slurp(path) == text);
        auto man2 = parse(slurp(dir / "manifest.json"));
        man1.erase("wall_time_seconds");
        man2.erase("wall_time_seconds");
        CHECK(man1 == man2);
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    fs::remove_all(dir);
}

TEST_CASE("games list names the built-ins", "[cli]") {
    const auto a = run({"games", "list"});
    REQUIRE(a.code == 0);
    for (const char* g : {"pgg", "peer", "pool"}) CHECK(a.out.find(g) != std::string::npos);
}
