#pragma once

// Independent brute-force references for the graph builder. Adjacency here is
// derived from an all-pairs L1-distance scan, never from the library's
// neighbor enumeration.

#include <cstdint>
#include <cstdlib>
#include <deque>
#include <random>
#include <set>
#include <vector>

#include "cubeletworld/world.hpp"

namespace oracle {

namespace cw = cubeletworld;

inline std::vector<cw::CubeletIndex> all_cells(const cw::GridShape& s) {
    std::vector<cw::CubeletIndex> out;
    for (std::uint32_t i = 0; i < s.n1; ++i)
        for (std::uint32_t j = 0; j < s.n2; ++j)
            for (std::uint32_t k = 0; k < s.n3; ++k) out.push_back({i, j, k});
    return out;
}

inline int l1(const cw::CubeletIndex& a, const cw::CubeletIndex& b) {
    return std::abs(static_cast<int>(a.i) - static_cast<int>(b.i)) +
           std::abs(static_cast<int>(a.j) - static_cast<int>(b.j)) +
           std::abs(static_cast<int>(a.k) - static_cast<int>(b.k));
}

/// Unordered pairs at L1 distance exactly one, found by scanning all pairs.
inline std::set<std::pair<cw::CubeletIndex, cw::CubeletIndex>> brute_edges(const cw::GridShape& s) {
    const auto cells = all_cells(s);
    std::set<std::pair<cw::CubeletIndex, cw::CubeletIndex>> out;
    for (std::size_t a = 0; a < cells.size(); ++a)
        for (std::size_t b = a + 1; b < cells.size(); ++b)
            if (l1(cells[a], cells[b]) == 1) out.insert({cells[a], cells[b]});
    return out;
}

/// Multi-source BFS over the brute-force adjacency.
inline std::set<cw::CubeletIndex> bfs_ball(const std::vector<cw::CubeletIndex>& sources, const cw::GridShape& s,
                                           int k) {
    const auto cells = all_cells(s);
    std::vector<std::vector<std::size_t>> adj(cells.size());
    for (std::size_t a = 0; a < cells.size(); ++a)
        for (std::size_t b = 0; b < cells.size(); ++b)
            if (l1(cells[a], cells[b]) == 1) adj[a].push_back(b);
    std::vector<int> dist(cells.size(), -1);
    std::deque<std::size_t> q;
    for (const auto& src : sources) {
        const auto idx = s.linear(src);  // all_cells is in linear order
        if (dist[idx] < 0) {
            dist[idx] = 0;
            q.push_back(idx);
        }
    }
    while (!q.empty()) {
        const auto u = q.front();
        q.pop_front();
        if (dist[u] == k) continue;
        for (auto v : adj[u]) {
            if (dist[v] < 0) {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
        }
    }
    std::set<cw::CubeletIndex> out;
    for (std::size_t n = 0; n < cells.size(); ++n)
        if (dist[n] >= 0) out.insert(cells[n]);
    return out;
}

inline std::vector<cw::OccupancyFrame> random_frames(std::mt19937_64& gen, const cw::GridShape& s, int count,
                                                     double density) {
    std::bernoulli_distribution occ(density);
    std::vector<cw::OccupancyFrame> out;
    for (int t = 0; t < count; ++t) {
        std::vector<cw::CubeletIndex> cells;
        for (const auto& c : all_cells(s))
            if (occ(gen)) cells.push_back(c);
        out.emplace_back(t, s, cells);
    }
    return out;
}

}  // namespace oracle
