#include <catch_amalgamated.hpp>

#include <numeric>
#include <random>

#include "oracle.hpp"
#include "pairdyn/config_space.hpp"

using namespace pairdyn;
using Catch::Approx;

TEST_CASE("three strategies and four co-players give fifteen configurations", "[config_space]") {
    const auto all = enumerate_configurations(3, 4);
    REQUIRE(all.size() == 15);
    CHECK(all.front().counts == std::vector<int>{4, 0, 0});
    CHECK(all.back().counts == std::vector<int>{0, 0, 4});
    CHECK(all[1].counts == std::vector<int>{3, 1, 0});
}

TEST_CASE("configuration count is the stars-and-bars binomial", "[config_space]") {
    for (int n = 1; n <= 5; ++n)
        for (int m = 0; m <= 8; ++m) {
            const auto all = enumerate_configurations(n, m);
            CHECK(all.size() == configuration_count(n, m));
            CHECK(all.size() == oracle::compositions(n, m).size());
        }
    CHECK(configuration_count(2, 0) == 1);
    CHECK(enumerate_configurations(2, 0).front().counts == std::vector<int>{0, 0});
}

TEST_CASE("enumeration is strictly descending and index_of inverts it", "[config_space]") {
    for (int n = 1; n <= 5; ++n)
        for (int m = 0; m <= 7; ++m) {
            const ConfigurationSpace space(n, m);
            for (std::size_t idx = 0; idx < space.size(); ++idx) {
                CHECK(space[idx].total() == m);
                CHECK(space.index_of(space[idx]) == idx);
                if (idx > 0) CHECK(space[idx - 1].counts > space[idx].counts);
            }
        }
}

TEST_CASE("multinomial weights sum to one and match factorial formula", "[config_space]") {
    std::mt19937_64 rng(11);
    for (int n = 2; n <= 4; ++n)
        for (int m = 0; m <= 6; ++m) {
            const Eigen::VectorXd p = oracle::random_simplex(n, rng);
            const std::span<const double> ps(p.data(), static_cast<std::size_t>(n));
            const ConfigurationSpace space(n, m);
            const auto w = space.weights(ps);
            CHECK(std::accumulate(w.begin(), w.end(), 0.0) == Approx(1.0).epsilon(1e-12));
            for (std::size_t idx = 0; idx < space.size(); ++idx) {
                CHECK(w[idx] == Approx(oracle::weight(space[idx].counts, p)).epsilon(1e-12));
                CHECK(multinomial_weight(space[idx], ps) == Approx(w[idx]).epsilon(1e-12));
            }
        }
}

TEST_CASE("zero probabilities use 0^0 = 1", "[config_space]") {
    const std::vector<double> p{1.0, 0.0, 0.0};
    const ConfigurationSpace space(3, 4);
    const auto w = space.weights(p);
    CHECK(w[0] == 1.0);
    for (std::size_t idx = 1; idx < w.size(); ++idx) CHECK(w[idx] == 0.0);
}

TEST_CASE("count-weighted sums reduce to one fewer co-player", "[config_space]") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + trial % 3, m = 1 + trial % 6;
        const Eigen::VectorXd p = oracle::random_simplex(n, rng);
        const std::span<const double> ps(p.data(), static_cast<std::size_t>(n));
        std::vector<double> table(100);
        for (auto& v : table) v = std::normal_distribution<double>()(rng);
        auto g = [&](const Configuration& c) {
            std::size_t h = 0;
            for (int v : c.counts) h = h * 7 + static_cast<std::size_t>(v);
            return table[h % table.size()];
        };
        for (int i = 0; i < n; ++i) {
            const double lhs = weighted_sum(n, m, ps, [&](const Configuration& c) { return c[i] * g(c); });
            CHECK(weighted_count_sum(n, m, ps, i, g) == Approx(lhs).epsilon(1e-12).margin(1e-14));
        }
    }
}

TEST_CASE("configuration edits validate their inputs", "[config_space]") {
    const Configuration c{{1, 0, 2}};
    CHECK(with_added(c, 1).counts == std::vector<int>{1, 1, 2});
    CHECK(with_swapped(c, 2, 1).counts == std::vector<int>{1, 1, 1});
    CHECK_THROWS_AS(with_swapped(c, 1, 0), ValidationError);
    CHECK_THROWS_AS(with_added(c, 3), ValidationError);
    CHECK_THROWS_AS(ConfigurationSpace(0, 3), ValidationError);
    CHECK_THROWS_AS(ConfigurationSpace(2, 65), ValidationError);
    const std::vector<double> bad{0.5, 0.6};
    CHECK_THROWS_AS(multinomial_weight(Configuration{{1, 1}}, bad), ValidationError);
}
