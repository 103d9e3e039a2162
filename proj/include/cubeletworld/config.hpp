#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cubeletworld/boids.hpp"
#include "cubeletworld/error.hpp"
#include "cubeletworld/graph.hpp"
#include "cubeletworld/io.hpp"
#include "cubeletworld/terrain.hpp"
#include "cubeletworld/world.hpp"

namespace cubeletworld {

/// Graph mode selection; `automatic` uses subgraphs once a grid has at
/// least `subgraph_min_cells` cubelets.
enum class GraphModeChoice { automatic, full_graph, multi_subgraph };

struct GraphSettings {
    GraphModeChoice mode = GraphModeChoice::automatic;
    std::uint32_t k_full = 1;
    std::uint32_t k_subgraph = 2;
    std::uint64_t subgraph_min_cells = 1'000'000;

    GraphConfig for_shape(const GridShape& shape) const {
        const bool msg = mode == GraphModeChoice::multi_subgraph ||
                         (mode == GraphModeChoice::automatic && shape.cell_count() >= subgraph_min_cells);
        return msg ? GraphConfig{GraphMode::multi_subgraph, k_subgraph} : GraphConfig{GraphMode::full_graph, k_full};
    }
};

inline const std::set<std::string>& known_models() {
    static const std::set<std::string> m = {"persistence", "frequency", "neighborhood"};
    return m;
}

struct PipelineConfig {
    /// Empty means "generate procedurally".
    std::filesystem::path terrain_path;
    TerrainGenConfig terrain_gen;
    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 42;
    std::uint32_t num_boids = 30;
    std::uint32_t num_steps = 1000;
    WorldExtent extent;
    FlockParams flock;
    std::vector<Resolution> resolutions;
    std::size_t t1 = 10;
    std::size_t t2 = 10;
    std::size_t folds = 5;
    GraphSettings graph;
    std::vector<std::string> models;
    double threshold = 0.5;
    std::size_t train_epochs = 200;
    double train_learning_rate = 0.05;
    /// Dense CWDS/CWPR exports are skipped when they would exceed this size.
    std::uint64_t dense_limit_bytes = 64ULL << 20;
};

/// Directory-safe label such as "103x93x21".
inline std::string resolution_label(const Resolution& r) {
    auto num = [](double v) {
        auto s = io::format_double(v);
        return s;
    };
    return num(r.cx) + "x" + num(r.cy) + "x" + num(r.cz);
}

inline Resolution parse_resolution(std::string_view s) {
    const auto parts = io::split(s, ',');
    if (parts.size() != 3) throw InputError("resolution needs three comma-separated values, got '" + std::string(s) + "'");
    return Resolution(io::parse_double(parts[0], "cx"), io::parse_double(parts[1], "cy"),
                      io::parse_double(parts[2], "cz"));
}

namespace detail {

inline std::string graph_choice_name(GraphModeChoice c) {
    switch (c) {
        case GraphModeChoice::automatic: return "auto";
        case GraphModeChoice::full_graph: return "full_graph";
        case GraphModeChoice::multi_subgraph: return "multi_subgraph";
    }
    return "auto";
}

inline GraphModeChoice parse_graph_choice(std::string_view s) {
    if (s == "auto") return GraphModeChoice::automatic;
    return parse_graph_mode(s) == GraphMode::full_graph ? GraphModeChoice::full_graph
                                                        : GraphModeChoice::multi_subgraph;
}

}  // namespace detail

/**
 * Parses the `key = value` config format. Blank lines and `#` comments are
 * ignored; `resolution` and `model` may repeat, every other key may appear
 * once. Values are checked for syntax here; cross-field invariants are
 * checked by `validate`. All problems are collected and reported together,
 * each prefixed with `source:line`.
 */
inline PipelineConfig parse_config(std::string_view text, std::string_view source) {
    PipelineConfig cfg;
    std::vector<std::string> errors;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = io::trim(line);
        if (line.empty()) {
            if (nl == text.size()) break;
            continue;
        }
        const std::string where = std::string(source) + ":" + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            errors.push_back(where + "expected 'key = value'");
            continue;
        }
        const std::string key(io::trim(line.substr(0, eq)));
        const std::string_view value = io::trim(line.substr(eq + 1));
        if (key != "resolution" && key != "model" && !seen.insert(key).second) {
            errors.push_back(where + "duplicate key '" + key + "'");
            continue;
        }
        try {
            auto d = [&] { return io::parse_double(value, key); };
            auto u32 = [&] { return io::parse_int<std::uint32_t>(value, key); };
            auto u64 = [&] { return io::parse_int<std::uint64_t>(value, key); };
            auto sz = [&] { return io::parse_int<std::size_t>(value, key); };
            auto& f = cfg.flock;
            if (key == "terrain") cfg.terrain_path = value == "generate" ? std::filesystem::path{} : std::filesystem::path(value);
            else if (key == "out") cfg.out_dir = std::filesystem::path(value);
            else if (key == "seed") cfg.seed = u64();
            else if (key == "sim.num_boids") cfg.num_boids = u32();
            else if (key == "sim.num_steps") cfg.num_steps = u32();
            else if (key == "world.extent") {
                const auto p = io::split(value, ',');
                if (p.size() != 3) throw InputError("world.extent needs three values");
                cfg.extent = WorldExtent(io::parse_double(p[0], "dx"), io::parse_double(p[1], "dy"),
                                         io::parse_double(p[2], "dz"));
            }
            else if (key == "flock.neighbor_radius") f.neighbor_radius = d();
            else if (key == "flock.view_half_angle") f.view_half_angle = d();
            else if (key == "flock.sep_radius") f.sep_radius = d();
            else if (key == "flock.w_sep") f.w_sep = d();
            else if (key == "flock.w_align") f.w_align = d();
            else if (key == "flock.w_coh") f.w_coh = d();
            else if (key == "flock.w_avoid") f.w_avoid = d();
            else if (key == "flock.v_init") f.v_init = d();
            else if (key == "flock.v_max") f.v_max = d();
            else if (key == "flock.dt") f.dt = d();
            else if (key == "terrain.seed") cfg.terrain_gen.seed = u64();
            else if (key == "terrain.buildings") cfg.terrain_gen.buildings = static_cast<int>(u32());
            else if (key == "terrain.trees") cfg.terrain_gen.trees = static_cast<int>(u32());
            else if (key == "terrain.street_width") cfg.terrain_gen.street_width = d();
            else if (key == "resolution") cfg.resolutions.push_back(parse_resolution(value));
            else if (key == "t1") cfg.t1 = sz();
            else if (key == "t2") cfg.t2 = sz();
            else if (key == "folds") cfg.folds = sz();
            else if (key == "graph.mode") cfg.graph.mode = detail::parse_graph_choice(value);
            else if (key == "graph.k_full") cfg.graph.k_full = u32();
            else if (key == "graph.k_subgraph") cfg.graph.k_subgraph = u32();
            else if (key == "graph.subgraph_min_cells") cfg.graph.subgraph_min_cells = u64();
            else if (key == "model") cfg.models.emplace_back(value);
            else if (key == "threshold") cfg.threshold = d();
            else if (key == "neighborhood.epochs") cfg.train_epochs = sz();
            else if (key == "neighborhood.learning_rate") cfg.train_learning_rate = d();
            else if (key == "export.dense_limit_bytes") cfg.dense_limit_bytes = u64();
            else errors.push_back(where + "unknown key '" + key + "'");
        } catch (const Error& e) {
            errors.push_back(where + e.what());
        }
        if (nl == text.size()) break;
    }
    if (!errors.empty()) {
        std::string msg;
        for (const auto& e : errors) msg += e + "\n";
        throw ConfigError(msg);
    }
    return cfg;
}

/// Fills defaults and checks every cross-field invariant; throws a
/// ConfigError listing all violations.
inline PipelineConfig validate(PipelineConfig cfg) {
    std::vector<std::string> errors;
    if (cfg.resolutions.empty()) cfg.resolutions.push_back(Resolution(103, 93, 21));
    if (cfg.models.empty()) cfg.models.push_back("persistence");
    if (cfg.t1 < 1) errors.push_back("t1 must be >= 1");
    if (cfg.t2 < 1) errors.push_back("t2 must be >= 1");
    if (cfg.folds < 2) errors.push_back("folds must be >= 2");
    if (cfg.num_boids < 1) errors.push_back("sim.num_boids must be >= 1");
    if (cfg.num_steps < 1) errors.push_back("sim.num_steps must be >= 1");
    if (cfg.num_steps >= 1 && cfg.t1 >= 1 && cfg.t2 >= 1 && cfg.num_steps < cfg.t1 + cfg.t2 + cfg.folds - 1) {
        errors.push_back("sim.num_steps must be >= t1 + t2 + folds - 1 to give every fold a sample");
    }
    try {
        cfg.flock.validate();
    } catch (const ConfigError& e) {
        errors.emplace_back(e.what());
    }
    for (const auto& r : cfg.resolutions) {
        if (r.cx > cfg.extent.dx || r.cy > cfg.extent.dy || r.cz > cfg.extent.dz) {
            errors.push_back("resolution " + resolution_label(r) + " is larger than the world extent");
        }
    }
    std::set<std::string> labels;
    for (const auto& r : cfg.resolutions) {
        if (!labels.insert(resolution_label(r)).second) errors.push_back("duplicate resolution " + resolution_label(r));
    }
    std::set<std::string> models;
    for (const auto& m : cfg.models) {
        if (!known_models().contains(m)) errors.push_back("unknown model '" + m + "'");
        if (!models.insert(m).second) errors.push_back("duplicate model '" + m + "'");
    }
    if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0)) errors.push_back("threshold must be in (0,1)");
    if (cfg.graph.k_subgraph < 1) errors.push_back("graph.k_subgraph must be >= 1");
    if (!(cfg.train_learning_rate > 0.0)) errors.push_back("neighborhood.learning_rate must be > 0");
    if (!cfg.terrain_path.empty() && !std::filesystem::exists(cfg.terrain_path)) {
        errors.push_back("terrain file not found: " + cfg.terrain_path.string());
    }
    if (!errors.empty()) {
        std::string msg = "invalid configuration:\n";
        for (const auto& e : errors) msg += "  " + e + "\n";
        throw ConfigError(msg);
    }
    return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
    return parse_config(io::read_file(path), path.string());
}

/// Normalized config text listing every key; parses back to the same config.
inline std::string config_to_text(const PipelineConfig& c) {
    std::ostringstream o;
    auto d = io::format_double;
    o << "terrain = " << (c.terrain_path.empty() ? std::string("generate") : c.terrain_path.string()) << '\n'
      << "terrain.seed = " << c.terrain_gen.seed << '\n'
      << "terrain.buildings = " << c.terrain_gen.buildings << '\n'
      << "terrain.trees = " << c.terrain_gen.trees << '\n'
      << "terrain.street_width = " << d(c.terrain_gen.street_width) << '\n'
      << "out = " << c.out_dir.string() << '\n'
      << "seed = " << c.seed << '\n'
      << "sim.num_boids = " << c.num_boids << '\n'
      << "sim.num_steps = " << c.num_steps << '\n'
      << "world.extent = " << d(c.extent.dx) << ',' << d(c.extent.dy) << ',' << d(c.extent.dz) << '\n'
      << "flock.neighbor_radius = " << d(c.flock.neighbor_radius) << '\n'
      << "flock.view_half_angle = " << d(c.flock.view_half_angle) << '\n'
      << "flock.sep_radius = " << d(c.flock.sep_radius) << '\n'
      << "flock.w_sep = " << d(c.flock.w_sep) << '\n'
      << "flock.w_align = " << d(c.flock.w_align) << '\n'
      << "flock.w_coh = " << d(c.flock.w_coh) << '\n'
      << "flock.w_avoid = " << d(c.flock.w_avoid) << '\n'
      << "flock.v_init = " << d(c.flock.v_init) << '\n'
      << "flock.v_max = " << d(c.flock.v_max) << '\n'
      << "flock.dt = " << d(c.flock.dt) << '\n';
    for (const auto& r : c.resolutions) o << "resolution = " << d(r.cx) << ',' << d(r.cy) << ',' << d(r.cz) << '\n';
    o << "t1 = " << c.t1 << '\n'
      << "t2 = " << c.t2 << '\n'
      << "folds = " << c.folds << '\n'
      << "graph.mode = " << detail::graph_choice_name(c.graph.mode) << '\n'
      << "graph.k_full = " << c.graph.k_full << '\n'
      << "graph.k_subgraph = " << c.graph.k_subgraph << '\n'
      << "graph.subgraph_min_cells = " << c.graph.subgraph_min_cells << '\n';
    for (const auto& m : c.models) o << "model = " << m << '\n';
    o << "threshold = " << d(c.threshold) << '\n'
      << "neighborhood.epochs = " << c.train_epochs << '\n'
      << "neighborhood.learning_rate = " << d(c.train_learning_rate) << '\n'
      << "export.dense_limit_bytes = " << c.dense_limit_bytes << '\n';
    return o.str();
}

}  // namespace cubeletworld
