#pragma once

#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cubeletworld/error.hpp"
#include "cubeletworld/graph.hpp"
#include "cubeletworld/io.hpp"

namespace cubeletworld {

// Graph files are JSON lines. The first line is a header; node records carry
// (ordinal, i, j, k) and edge records carry ordinal pairs. Multi-subgraph
// files prefix each subgraph's node and edge records with a `subgraph`
// record; ordinals are local to that subgraph. Occupancy features are not
// duplicated: the header names the sparse frames file they come from.

namespace detail {

inline void write_nodes_edges(std::ostream& out, const CubeletGraph& g) {
    for (std::uint32_t n = 0; n < g.nodes.size(); ++n) {
        const auto& c = g.nodes[n];
        out << nlohmann::json{{"type", "node"}, {"ordinal", n}, {"i", c.i}, {"j", c.j}, {"k", c.k}}.dump() << '\n';
    }
    for (const auto& e : g.edges) out << nlohmann::json{{"type", "edge"}, {"u", e.u}, {"v", e.v}}.dump() << '\n';
}

}  // namespace detail

inline void write_graph_jsonl(std::ostream& out, const CubeletGraph& g, std::uint32_t k, std::string_view frames_ref) {
    out << nlohmann::json{{"type", "header"},
                          {"mode", to_string(GraphMode::full_graph)},
                          {"k", k},
                          {"shape", {g.shape.n1, g.shape.n2, g.shape.n3}},
                          {"node_count", g.nodes.size()},
                          {"edge_count", g.edges.size()},
                          {"num_timesteps", g.num_timesteps},
                          {"features", frames_ref}}
               .dump()
        << '\n';
    detail::write_nodes_edges(out, g);
}

inline void write_subgraphs_jsonl(std::ostream& out, std::span<const Subgraph> subgraphs, const GridShape& shape,
                                  std::uint32_t k, std::size_t num_timesteps, std::string_view frames_ref) {
    std::size_t total_nodes = 0;
    for (const auto& s : subgraphs) total_nodes += s.graph.nodes.size();
    out << nlohmann::json{{"type", "header"},
                          {"mode", to_string(GraphMode::multi_subgraph)},
                          {"k", k},
                          {"shape", {shape.n1, shape.n2, shape.n3}},
                          {"node_count", total_nodes},
                          {"subgraph_count", subgraphs.size()},
                          {"num_timesteps", num_timesteps},
                          {"features", frames_ref}}
               .dump()
        << '\n';
    for (std::size_t s = 0; s < subgraphs.size(); ++s) {
        const auto& sg = subgraphs[s];
        out << nlohmann::json{{"type", "subgraph"},
                              {"ordinal", s},
                              {"center", {sg.center.i, sg.center.j, sg.center.k}},
                              {"node_count", sg.graph.nodes.size()},
                              {"edge_count", sg.graph.edges.size()}}
                   .dump()
            << '\n';
        detail::write_nodes_edges(out, sg.graph);
    }
}

/// Parsed graph file. Full graphs yield one entry in `graphs`; multi-subgraph
/// files yield one per subgraph with `centers` filled. Feature rows are left
/// empty (they live in the frames file).
struct GraphFile {
    GraphMode mode = GraphMode::full_graph;
    std::uint32_t k = 0;
    GridShape shape;
    std::size_t num_timesteps = 0;
    std::string features;
    std::vector<CubeletGraph> graphs;
    std::vector<CubeletIndex> centers;
};

inline GraphFile parse_graph_jsonl(std::string_view text, std::string_view source) {
    GraphFile gf;
    std::size_t line_no = 0;
    bool header = false;
    auto fail = [&](const std::string& msg) {
        return FormatError(std::string(source) + ":" + std::to_string(line_no) + ": " + msg);
    };
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const auto line = io::trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            const auto type = j.at("type").get<std::string>();
            if (!header) {
                if (type != "header") throw fail("first record must be the header");
                gf.mode = parse_graph_mode(j.at("mode").get<std::string>());
                gf.k = j.at("k").get<std::uint32_t>();
                const auto s = j.at("shape").get<std::vector<std::uint32_t>>();
                if (s.size() != 3) throw fail("shape needs 3 values");
                gf.shape = {s[0], s[1], s[2]};
                gf.num_timesteps = j.at("num_timesteps").get<std::size_t>();
                gf.features = j.at("features").get<std::string>();
                if (gf.mode == GraphMode::full_graph) gf.graphs.emplace_back();
                header = true;
            } else if (type == "subgraph") {
                if (gf.mode != GraphMode::multi_subgraph) throw fail("subgraph record in a full graph file");
                const auto c = j.at("center").get<std::vector<std::uint32_t>>();
                if (c.size() != 3) throw fail("center needs 3 values");
                gf.centers.push_back({c[0], c[1], c[2]});
                gf.graphs.emplace_back();
            } else if (type == "node" || type == "edge") {
                if (gf.graphs.empty()) throw fail("node/edge record before any subgraph record");
                auto& g = gf.graphs.back();
                g.shape = gf.shape;
                g.num_timesteps = gf.num_timesteps;
                if (type == "node") {
                    if (j.at("ordinal").get<std::size_t>() != g.nodes.size()) throw fail("node ordinals out of order");
                    const CubeletIndex c{j.at("i").get<std::uint32_t>(), j.at("j").get<std::uint32_t>(),
                                         j.at("k").get<std::uint32_t>()};
                    if (!gf.shape.contains(c)) throw fail("node outside grid");
                    g.nodes.push_back(c);
                    g.occupied_at.emplace_back();
                } else {
                    const Edge e{j.at("u").get<std::uint32_t>(), j.at("v").get<std::uint32_t>()};
                    if (e.u >= g.nodes.size() || e.v >= g.nodes.size() || e.u == e.v) throw fail("bad edge endpoints");
                    g.edges.push_back(e);
                }
            } else {
                throw fail("unknown record type '" + type + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw fail(e.what());
        }
    }
    if (!header) throw FormatError(std::string(source) + ": empty graph file");
    return gf;
}

}  // namespace cubeletworld
