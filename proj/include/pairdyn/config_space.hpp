#pragma once

// Co-player configurations: compositions of m co-players into n strategies,
// multinomial weights, and configuration-weighted sums.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pairdyn/error.hpp"

namespace pairdyn {

inline constexpr int kMaxCoPlayers = 64;

struct Configuration {
    std::vector<int> counts;

    int n() const { return static_cast<int>(counts.size()); }
    int total() const {
        int s = 0;
        for (int v : counts) s += v;
        return s;
    }
    int operator[](int i) const { return counts[static_cast<std::size_t>(i)]; }
    bool operator==(const Configuration&) const = default;
};

namespace detail {

inline const std::vector<double>& log_factorials() {
    static const std::vector<double> table = [] {
        std::vector<double> t(kMaxCoPlayers + 3, 0.0);
        for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i));
        return t;
    }();
    return table;
}

inline std::uint64_t binomial(int a, int b) {
    if (b < 0 || a < b) return 0;
    if (b > a - b) b = a - b;
    std::uint64_t r = 1;
    for (int i = 1; i <= b; ++i) r = r * static_cast<std::uint64_t>(a - b + i) / static_cast<std::uint64_t>(i);
    return r;
}

inline void enumerate_into(int pos, int remaining, std::vector<int>& cur, std::vector<Configuration>& out) {
    const int n = static_cast<int>(cur.size());
    if (pos == n - 1) {
        cur[static_cast<std::size_t>(pos)] = remaining;
        out.push_back(Configuration{cur});
        return;
    }
    for (int v = remaining; v >= 0; --v) {
        cur[static_cast<std::size_t>(pos)] = v;
        enumerate_into(pos + 1, remaining - v, cur, out);
    }
}

}  // namespace detail

inline std::uint64_t configuration_count(int n, int m) { return detail::binomial(m + n - 1, m); }

// All compositions of m into n parts, lexicographically descending on counts:
// (m,0,..,0) first, (0,..,0,m) last.
inline std::vector<Configuration> enumerate_configurations(int n, int m) {
    require(n >= 1, "strategy count n must be >= 1");
    require(m >= 0, "co-player total m must be >= 0");
    std::vector<Configuration> out;
    out.reserve(static_cast<std::size_t>(configuration_count(n, m)));
    std::vector<int> cur(static_cast<std::size_t>(n), 0);
    detail::enumerate_into(0, m, cur, out);
    return out;
}

inline Configuration with_added(const Configuration& c, int l) {
    require(l >= 0 && l < c.n(), "strategy index out of range in with_added");
    Configuration r = c;
    ++r.counts[static_cast<std::size_t>(l)];
    return r;
}

inline Configuration with_swapped(const Configuration& c, int i, int j) {
    require(i >= 0 && i < c.n() && j >= 0 && j < c.n(), "strategy index out of range in with_swapped");
    if (c[i] < 1)
        throw ValidationError("with_swapped underflow: no co-player of strategy " + std::to_string(i) +
                              " to substitute");
    Configuration r = c;
    --r.counts[static_cast<std::size_t>(i)];
    ++r.counts[static_cast<std::size_t>(j)];
    return r;
}

inline void check_probability_vector(std::span<const double> p, double tol = 1e-12) {
    double s = 0.0;
    for (double v : p) {
        require(v >= -tol && v <= 1.0 + tol, "probability entry outside [0,1]");
        s += v;
    }
    require(std::abs(s - 1.0) <= tol * static_cast<double>(p.size() + 1), "probability vector does not sum to 1");
}

// m!/prod(k_i!) * prod(p_i^k_i), with 0^0 = 1.
inline double multinomial_weight(const Configuration& c, std::span<const double> p) {
    require(static_cast<std::size_t>(c.n()) == p.size(), "configuration and probability vector differ in length");
    check_probability_vector(p);
    const auto& lf = detail::log_factorials();
    const int m = c.total();
    require(m <= kMaxCoPlayers, "co-player total exceeds 64");
    double logc = lf[static_cast<std::size_t>(m)];
    double prod = 1.0;
    for (int i = 0; i < c.n(); ++i) {
        logc -= lf[static_cast<std::size_t>(c[i])];
        prod *= std::pow(p[static_cast<std::size_t>(i)], c[i]);
    }
    return std::exp(logc) * prod;
}

class ConfigurationSpace {
public:
    ConfigurationSpace(int n, int m) : n_(n), m_(m) {
        require(n >= 1, "strategy count n must be >= 1");
        require(m >= 0 && m <= kMaxCoPlayers, "co-player total m must lie in [0, 64]");
        require(configuration_count(n, m) <= 5'000'000, "configuration space too large");
        configs_ = enumerate_configurations(n, m);
        const auto& lf = detail::log_factorials();
        coeff_.reserve(configs_.size());
        for (const auto& c : configs_) {
            double logc = lf[static_cast<std::size_t>(m)];
            for (int v : c.counts) logc -= lf[static_cast<std::size_t>(v)];
            coeff_.push_back(std::exp(logc));
        }
    }

    int n() const { return n_; }
    int m() const { return m_; }
    std::size_t size() const { return configs_.size(); }
    const Configuration& operator[](std::size_t idx) const { return configs_[idx]; }
    const std::vector<Configuration>& configurations() const { return configs_; }
    double coefficient(std::size_t idx) const { return coeff_[idx]; }

    // Rank of counts in the descending lexicographic order.
    std::size_t index_of(std::span<const int> counts) const {
        std::size_t rank = 0;
        int remaining = m_;
        for (int p = 0; p + 1 < n_; ++p) {
            const int v = counts[static_cast<std::size_t>(p)];
            const int parts = n_ - p;
            if (remaining - v >= 1) rank += detail::binomial(remaining - v + parts - 2, parts - 1);
            remaining -= v;
        }
        return rank;
    }
    std::size_t index_of(const Configuration& c) const { return index_of(std::span<const int>(c.counts)); }

    // Weights for every configuration; p is not validated.
    void weights_into(std::span<const double> p, std::span<double> out) const {
        for (std::size_t idx = 0; idx < configs_.size(); ++idx) {
            double w = coeff_[idx];
            const auto& c = configs_[idx].counts;
            for (std::size_t i = 0; i < c.size() && w != 0.0; ++i)
                if (c[i] != 0) w *= std::pow(p[i], c[i]);
            out[idx] = w;
        }
    }

    std::vector<double> weights(std::span<const double> p) const {
        require(p.size() == static_cast<std::size_t>(n_), "probability vector length differs from n");
        check_probability_vector(p);
        std::vector<double> w(configs_.size());
        weights_into(p, w);
        return w;
    }

    template <class F>
    double weighted_sum(std::span<const double> p, F&& f) const {
        const auto w = weights(p);
        double s = 0.0;
        for (std::size_t idx = 0; idx < configs_.size(); ++idx)
            if (w[idx] != 0.0) s += w[idx] * f(configs_[idx]);
        return s;
    }

private:
    int n_;
    int m_;
    std::vector<Configuration> configs_;
    std::vector<double> coeff_;
};

// Sum over all configurations of total m of multinomial_weight(c, p) * f(c).
template <class F>
double weighted_sum(int n, int m, std::span<const double> p, F&& f) {
    return ConfigurationSpace(n, m).weighted_sum(p, std::forward<F>(f));
}

// E_m[k_i g(k)] evaluated through the reduced form m p_i E_{m-1}[g(k_{+i})].
template <class G>
double weighted_count_sum(int n, int m, std::span<const double> p, int i, G&& g) {
    require(i >= 0 && i < n, "strategy index out of range");
    if (m == 0) return 0.0;
    const double pi = p[static_cast<std::size_t>(i)];
    return m * pi * weighted_sum(n, m - 1, p, [&](const Configuration& c) { return g(with_added(c, i)); });
}

}  // namespace pairdyn
