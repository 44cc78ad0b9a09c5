#pragma once

// Independent reference implementations used only by tests. The production
// code never includes this header; agreement between the two is the point.

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace oracle {

// Minimum-cost transportation problem via successive shortest paths with
// Bellman-Ford on the residual graph. Sized for test instances (m <= ~10);
// flows are continuous.
inline double transport_cost(const std::vector<double>& supply,
                             const std::vector<double>& demand,
                             const std::vector<std::vector<double>>& cost) {
    const int m = static_cast<int>(supply.size());
    const int n = static_cast<int>(demand.size());
    const int source = 0;
    const int sink = 1 + m + n;
    const int nodes = sink + 1;
    constexpr double eps = 1e-12;

    struct Edge {
        int to;
        double cap;
        double cost;
        int rev; // index of the reverse edge in graph[to]
    };
    std::vector<std::vector<Edge>> graph(nodes);
    auto add_edge = [&](int from, int to, double cap, double edge_cost) {
        graph[from].push_back({to, cap, edge_cost, static_cast<int>(graph[to].size())});
        graph[to].push_back({from, 0.0, -edge_cost, static_cast<int>(graph[from].size()) - 1});
    };
    for (int i = 0; i < m; ++i) add_edge(source, 1 + i, supply[i], 0.0);
    for (int j = 0; j < n; ++j) add_edge(1 + m + j, sink, demand[j], 0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) add_edge(1 + i, 1 + m + j, supply[i], cost[i][j]);

    double total = 0.0;
    while (true) {
        // Bellman-Ford shortest path source -> sink on residual capacity.
        std::vector<double> dist(nodes, std::numeric_limits<double>::infinity());
        std::vector<int> prev_node(nodes, -1), prev_edge(nodes, -1);
        dist[source] = 0.0;
        for (int round = 0; round < nodes; ++round) {
            bool changed = false;
            for (int u = 0; u < nodes; ++u) {
                if (!std::isfinite(dist[u])) continue;
                for (int k = 0; k < static_cast<int>(graph[u].size()); ++k) {
                    const Edge& e = graph[u][k];
                    if (e.cap <= eps) continue;
                    if (dist[u] + e.cost < dist[e.to] - 1e-15) {
                        dist[e.to] = dist[u] + e.cost;
                        prev_node[e.to] = u;
                        prev_edge[e.to] = k;
                        changed = true;
                    }
                }
            }
            if (!changed) break;
        }
        if (!std::isfinite(dist[sink])) break;

        double push = std::numeric_limits<double>::infinity();
        for (int v = sink; v != source; v = prev_node[v])
            push = std::min(push, graph[prev_node[v]][prev_edge[v]].cap);
        if (push <= eps) break;
        for (int v = sink; v != source; v = prev_node[v]) {
            Edge& e = graph[prev_node[v]][prev_edge[v]];
            e.cap -= push;
            graph[v][e.rev].cap += push;
            total += push * e.cost;
        }
    }
    return total;
}

// EMD between two distributions over the same m categories with an equal
// ("is it the same category or not") ground distance.
inline double emd_equal_oracle(const std::vector<double>& p, const std::vector<double>& q) {
    const int m = static_cast<int>(p.size());
    std::vector<std::vector<double>> cost(m, std::vector<double>(m));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) cost[i][j] = (i == j) ? 0.0 : 1.0;
    return transport_cost(p, q, cost);
}

// EMD with ordered ground distance |i - j| / (m - 1).
inline double emd_ordered_oracle(const std::vector<double>& p, const std::vector<double>& q) {
    const int m = static_cast<int>(p.size());
    std::vector<std::vector<double>> cost(m, std::vector<double>(m));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) cost[i][j] = std::abs(i - j) / static_cast<double>(m - 1);
    return transport_cost(p, q, cost);
}

// All partitions of severities 0..7 into ordered contiguous ranges of
// length 1 or 2. Each partition is a list of (low, high) pairs.
inline std::vector<std::vector<std::pair<int, int>>> contiguous_partitions_of_8() {
    std::vector<std::vector<std::pair<int, int>>> all;
    std::vector<std::pair<int, int>> current;
    auto rec = [&](auto&& self, int next) -> void {
        if (next == 8) {
            all.push_back(current);
            return;
        }
        for (int width = 1; width <= 2 && next + width <= 8; ++width) {
            current.emplace_back(next, next + width - 1);
            self(self, next + width);
            current.pop_back();
        }
    };
    rec(rec, 0);
    return all;
}

// Deterministic 64-bit generator for test inputs (split-mix style), so test
// vectors do not depend on library RNG implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, bound)
    std::uint64_t below(std::uint64_t bound) { return next() % bound; }

    double unit() { return static_cast<double>(next() >> 11) / 9007199254740992.0; }

    // Random probability vector of length m (normalized uniforms, occasionally
    // with hard zeros to exercise sparse supports).
    std::vector<double> distribution(int m, bool allow_zeros = true) {
        std::vector<double> p(m);
        double sum = 0.0;
        for (int i = 0; i < m; ++i) {
            double v = unit();
            if (allow_zeros && below(5) == 0) v = 0.0;
            p[i] = v;
            sum += v;
        }
        if (sum == 0.0) {
            p[static_cast<int>(below(m))] = 1.0;
            return p;
        }
        for (auto& v : p) v /= sum;
        return p;
    }

private:
    std::uint64_t state_;
};

} // namespace oracle
