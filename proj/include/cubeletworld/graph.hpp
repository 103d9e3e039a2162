#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cubeletworld/error.hpp"
#include "cubeletworld/world.hpp"

namespace cubeletworld {

enum class GraphMode { full_graph, multi_subgraph };

inline std::string to_string(GraphMode m) { return m == GraphMode::full_graph ? "full_graph" : "multi_subgraph"; }

inline GraphMode parse_graph_mode(std::string_view s) {
    if (s == "full_graph" || s == "fg") return GraphMode::full_graph;
    if (s == "multi_subgraph" || s == "msg") return GraphMode::multi_subgraph;
    throw ConfigError("unknown graph mode '" + std::string(s) + "'");
}

/// Connectivity is fixed to 6-neighbor face adjacency.
struct GraphConfig {
    GraphMode mode = GraphMode::full_graph;
    std::uint32_t k = 1;
};

/// Undirected edge between node ordinals, stored with u < v.
struct Edge {
    std::uint32_t u = 0;
    std::uint32_t v = 0;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Face neighbors of `c` that lie inside `shape`, in the order
/// -i, +i, -j, +j, -k, +k.
inline std::vector<CubeletIndex> face_neighbors(const CubeletIndex& c, const GridShape& shape) {
    std::vector<CubeletIndex> out;
    out.reserve(6);
    if (c.i > 0) out.push_back({c.i - 1, c.j, c.k});
    if (c.i + 1 < shape.n1) out.push_back({c.i + 1, c.j, c.k});
    if (c.j > 0) out.push_back({c.i, c.j - 1, c.k});
    if (c.j + 1 < shape.n2) out.push_back({c.i, c.j + 1, c.k});
    if (c.k > 0) out.push_back({c.i, c.j, c.k - 1});
    if (c.k + 1 < shape.n3) out.push_back({c.i, c.j, c.k + 1});
    return out;
}

inline std::uint64_t lattice_edge_count(const GridShape& s) {
    const std::uint64_t n1 = s.n1, n2 = s.n2, n3 = s.n3;
    return n2 * n3 * (n1 - 1) + n1 * n3 * (n2 - 1) + n1 * n2 * (n3 - 1);
}

/// Every face-adjacent pair of the full lattice, as (lower, upper) cubelets
/// in lexicographic order. Materializes all edges; meant for small grids.
inline std::vector<std::pair<CubeletIndex, CubeletIndex>> build_adjacency(const GridShape& shape) {
    std::vector<std::pair<CubeletIndex, CubeletIndex>> edges;
    edges.reserve(lattice_edge_count(shape));
    for (std::uint32_t i = 0; i < shape.n1; ++i)
        for (std::uint32_t j = 0; j < shape.n2; ++j)
            for (std::uint32_t k = 0; k < shape.n3; ++k) {
                const CubeletIndex c{i, j, k};
                if (k + 1 < shape.n3) edges.push_back({c, {i, j, k + 1}});
                if (j + 1 < shape.n2) edges.push_back({c, {i, j + 1, k}});
                if (i + 1 < shape.n1) edges.push_back({c, {i + 1, j, k}});
            }
    return edges;
}

/// Lattice nodes within `k` hops of any source (breadth-first, bounded by
/// the grid). Result is sorted lexicographically.
inline std::vector<CubeletIndex> khop_ball(std::span<const CubeletIndex> sources, const GridShape& shape,
                                           std::uint32_t k) {
    std::unordered_set<std::uint64_t> seen;
    std::vector<CubeletIndex> frontier;
    for (const auto& c : sources) {
        if (!shape.contains(c)) throw BoundsError("cubelet " + to_string(c) + " outside grid " + to_string(shape));
        if (seen.insert(shape.linear(c)).second) frontier.push_back(c);
    }
    std::vector<CubeletIndex> all = frontier;
    for (std::uint32_t hop = 0; hop < k && !frontier.empty(); ++hop) {
        std::vector<CubeletIndex> next;
        for (const auto& c : frontier) {
            for (const auto& n : face_neighbors(c, shape)) {
                if (seen.insert(shape.linear(n)).second) next.push_back(n);
            }
        }
        all.insert(all.end(), next.begin(), next.end());
        frontier = std::move(next);
    }
    std::sort(all.begin(), all.end());
    return all;
}

inline std::vector<CubeletIndex> khop_neighbors(const CubeletIndex& center, const GridShape& shape, std::uint32_t k) {
    return khop_ball(std::span<const CubeletIndex>(&center, 1), shape, k);
}

namespace detail {

/// Lattice edges induced on a sorted node list, as ordinal pairs sorted by (u, v).
inline std::vector<Edge> induced_edges(std::span<const CubeletIndex> nodes, const GridShape& shape) {
    std::unordered_map<std::uint64_t, std::uint32_t> ord;
    ord.reserve(nodes.size() * 2);
    for (std::uint32_t n = 0; n < nodes.size(); ++n) ord.emplace(shape.linear(nodes[n]), n);
    std::vector<Edge> edges;
    for (std::uint32_t n = 0; n < nodes.size(); ++n) {
        const auto& c = nodes[n];
        const CubeletIndex up[3] = {{c.i, c.j, c.k + 1}, {c.i, c.j + 1, c.k}, {c.i + 1, c.j, c.k}};
        for (const auto& u : up) {
            if (!shape.contains(u)) continue;
            if (auto it = ord.find(shape.linear(u)); it != ord.end()) edges.push_back({n, it->second});
        }
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

/// Sorted, duplicate-free union of every occupied cubelet across frames.
inline std::vector<CubeletIndex> ever_occupied(std::span<const OccupancyFrame> frames) {
    std::vector<CubeletIndex> all;
    for (const auto& f : frames) all.insert(all.end(), f.occupied().begin(), f.occupied().end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
}

inline GridShape common_shape(std::span<const OccupancyFrame> frames, const GridShape& shape) {
    for (const auto& f : frames) {
        if (!(f.shape() == shape)) throw InputError("frame shape differs from graph shape");
    }
    return shape;
}

/// Occupied timesteps per cubelet, keyed by linear index.
inline std::unordered_map<std::uint64_t, std::vector<std::int64_t>> occupancy_timeline(
    std::span<const OccupancyFrame> frames, const GridShape& shape) {
    std::unordered_map<std::uint64_t, std::vector<std::int64_t>> tl;
    for (std::size_t t = 0; t < frames.size(); ++t) {
        for (const auto& c : frames[t].occupied()) tl[shape.linear(c)].push_back(static_cast<std::int64_t>(t));
    }
    return tl;
}

}  // namespace detail

/**
 * Node set, undirected lattice edges, and per-node occupancy over time. The
 * occupancy is stored sparsely as the timesteps at which each node is
 * occupied; `feature_row` materializes the dense binary sequence.
 */
struct CubeletGraph {
    GridShape shape;
    std::size_t num_timesteps = 0;
    std::vector<CubeletIndex> nodes;
    std::vector<Edge> edges;
    std::vector<std::vector<std::int64_t>> occupied_at;

    std::optional<std::uint32_t> ordinal(const CubeletIndex& c) const {
        auto it = std::lower_bound(nodes.begin(), nodes.end(), c);
        if (it == nodes.end() || !(*it == c)) return std::nullopt;
        return static_cast<std::uint32_t>(it - nodes.begin());
    }

    std::vector<std::uint8_t> feature_row(std::uint32_t node) const {
        std::vector<std::uint8_t> row(num_timesteps, 0);
        for (auto t : occupied_at[node]) row[static_cast<std::size_t>(t)] = 1;
        return row;
    }
};

struct Subgraph {
    CubeletIndex center;
    std::uint32_t k = 0;
    CubeletGraph graph;
};

/**
 * Full graph with never-occupied cubelets removed: the ever-occupied set
 * plus every lattice node within `k` hops of it.
 */
inline CubeletGraph prune_full_graph(std::span<const OccupancyFrame> frames, const GridShape& shape, std::uint32_t k) {
    detail::common_shape(frames, shape);
    const auto seeds = detail::ever_occupied(frames);
    if (seeds.empty()) throw InputError("no cubelet is ever occupied; cannot build a graph (check the upstream frames)");
    CubeletGraph g;
    g.shape = shape;
    g.num_timesteps = frames.size();
    g.nodes = khop_ball(seeds, shape, k);
    g.edges = detail::induced_edges(g.nodes, shape);
    g.occupied_at.resize(g.nodes.size());
    for (std::size_t t = 0; t < frames.size(); ++t) {
        for (const auto& c : frames[t].occupied()) g.occupied_at[*g.ordinal(c)].push_back(static_cast<std::int64_t>(t));
    }
    return g;
}

/// One k-hop subgraph per ever-occupied cubelet, ordered by center.
inline std::vector<Subgraph> decompose_subgraphs(std::span<const OccupancyFrame> frames, const GridShape& shape,
                                                 std::uint32_t k) {
    if (k < 1) throw ConfigError("subgraph decomposition requires k >= 1");
    detail::common_shape(frames, shape);
    const auto centers = detail::ever_occupied(frames);
    const auto timeline = detail::occupancy_timeline(frames, shape);
    std::vector<Subgraph> out;
    out.reserve(centers.size());
    for (const auto& center : centers) {
        Subgraph sg;
        sg.center = center;
        sg.k = k;
        sg.graph.shape = shape;
        sg.graph.num_timesteps = frames.size();
        sg.graph.nodes = khop_neighbors(center, shape, k);
        sg.graph.edges = detail::induced_edges(sg.graph.nodes, shape);
        sg.graph.occupied_at.reserve(sg.graph.nodes.size());
        for (const auto& n : sg.graph.nodes) {
            auto it = timeline.find(shape.linear(n));
            sg.graph.occupied_at.push_back(it == timeline.end() ? std::vector<std::int64_t>{} : it->second);
        }
        out.push_back(std::move(sg));
    }
    return out;
}

}  // namespace cubeletworld
