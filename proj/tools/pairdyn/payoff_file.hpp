#pragma once

// JSON payoff tables. Either a linear form
//   {"name": "g", "k": 4, "strategies": ["A", "B"], "linear": {"b": [[..], ..], "c": [..]}}
// or one row per co-player configuration
//   {"name": "g", "k": 4, "strategies": [..], "table": [{"config": [k1, ..], "payoffs": [a1, ..]}, ..]}
// Tables must list every configuration exactly once.

#include <Eigen/Dense>
#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "io.hpp"
#include "pairdyn/payoff_model.hpp"

namespace pairdyn::cli {

inline PayoffModel payoff_from_json(const json& doc) {
    try {
        require(doc.is_object(), "payoff file must hold a JSON object");
        const int k = doc.at("k").get<int>();
        std::vector<std::string> names = doc.value("strategies", std::vector<std::string>{});
        const std::string name = doc.value("name", std::string("custom"));
        if (doc.contains("linear")) {
            const auto& lin = doc.at("linear");
            const auto b = lin.at("b").get<std::vector<std::vector<double>>>();
            const auto c = lin.at("c").get<std::vector<double>>();
            const auto n = static_cast<Eigen::Index>(c.size());
            LinearPayoff lp{Eigen::MatrixXd(n, n), Eigen::VectorXd(n)};
            require(static_cast<Eigen::Index>(b.size()) == n, "linear.b must have one row per strategy");
            for (Eigen::Index i = 0; i < n; ++i) {
                require(static_cast<Eigen::Index>(b[static_cast<std::size_t>(i)].size()) == n, "linear.b must be square");
                for (Eigen::Index j = 0; j < n; ++j) lp.b(i, j) = b[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                lp.c(i) = c[static_cast<std::size_t>(i)];
            }
            return PayoffModel(lp, k, names, name);
        }
        const auto& rows = doc.at("table");
        require(rows.is_array() && !rows.empty(), "table must be a non-empty array");
        const int n = static_cast<int>(rows.at(0).at("config").size());
        require(n >= 2, "table configurations need at least two strategies");
        require(k >= 1 && k <= kMaxCoPlayers, "k must lie in [1, 64]");
        ConfigurationSpace space(n, k);
        Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, static_cast<Eigen::Index>(space.size()), std::nan(""));
        std::vector<bool> seen(space.size(), false);
        for (const auto& row : rows) {
            const auto cfg = row.at("config").get<std::vector<int>>();
            const auto pay = row.at("payoffs").get<std::vector<double>>();
            require(static_cast<int>(cfg.size()) == n && static_cast<int>(pay.size()) == n,
                    "every table row needs n config counts and n payoffs");
            int total = 0;
            for (int v : cfg) {
                require(v >= 0, "configuration counts must be non-negative");
                total += v;
            }
            require(total == k, "configuration counts must sum to k");
            const auto idx = space.index_of(std::span<const int>(cfg));
            require(!seen[idx], "configuration listed twice in payoff table");
            seen[idx] = true;
            for (int i = 0; i < n; ++i) m(i, static_cast<Eigen::Index>(idx)) = pay[static_cast<std::size_t>(i)];
        }
        for (std::size_t idx = 0; idx < seen.size(); ++idx) {
            if (!seen[idx]) {
                std::string cfg;
                for (int v : space[idx].counts) cfg += (cfg.empty() ? "" : ",") + std::to_string(v);
                throw ValidationError("payoff table is missing configuration (" + cfg + ")");
            }
        }
        return PayoffModel::from_matrix(n, k, m, names, name);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed payoff file: ") + e.what());
    }
}

inline PayoffModel load_payoff_file(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ValidationError("payoff file " + path.string() + " is not valid JSON: " + e.what());
    }
    return payoff_from_json(doc);
}

inline json payoff_to_json(const PayoffModel& model) {
    json doc;
    doc["name"] = model.name();
    doc["k"] = model.k();
    doc["strategies"] = model.strategy_names();
    json rows = json::array();
    for (std::size_t idx = 0; idx < model.space().size(); ++idx) {
        json pay = json::array();
        for (int i = 0; i < model.n(); ++i) pay.push_back(num(model.at(i, idx)));
        rows.push_back(json{{"config", model.space()[idx].counts}, {"payoffs", pay}});
    }
    doc["table"] = rows;
    return doc;
}

}  // namespace pairdyn::cli
