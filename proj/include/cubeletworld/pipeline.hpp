#pragma once

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "cubeletworld/baselines.hpp"
#include "cubeletworld/boids.hpp"
#include "cubeletworld/config.hpp"
#include "cubeletworld/dataset_io.hpp"
#include "cubeletworld/discretizer.hpp"
#include "cubeletworld/error.hpp"
#include "cubeletworld/evaluator.hpp"
#include "cubeletworld/graph.hpp"
#include "cubeletworld/graph_io.hpp"
#include "cubeletworld/io.hpp"
#include "cubeletworld/terrain.hpp"

namespace cubeletworld {

namespace fs = std::filesystem;

/// Artifact addresses inside an output directory.
struct ArtifactLayout {
    fs::path root;

    fs::path config_echo() const { return root / "config.normalized.cfg"; }
    fs::path terrain() const { return root / "traj" / "terrain.csv"; }
    fs::path trajectory() const { return root / "traj" / "trajectory.csv"; }
    fs::path frames_dir(const Resolution& r) const { return root / "frames" / resolution_label(r); }
    fs::path frames(const Resolution& r) const { return frames_dir(r) / "frames.csv"; }
    fs::path manifest(const Resolution& r) const { return frames_dir(r) / "manifest.json"; }
    fs::path dataset(const Resolution& r) const { return frames_dir(r) / "dataset.cwds"; }
    fs::path graph(const Resolution& r) const { return root / "graphs" / resolution_label(r) / "graph.jsonl"; }
    fs::path preds_dir(const std::string& model, const Resolution& r) const {
        return root / "preds" / model / resolution_label(r);
    }
    fs::path predictions(const std::string& model, const Resolution& r) const {
        return preds_dir(model, r) / "predictions.csv";
    }
    fs::path predictions_dense(const std::string& model, const Resolution& r) const {
        return preds_dir(model, r) / "predictions.cwpr";
    }
    fs::path report_json() const { return root / "report.json"; }
    fs::path report_text() const { return root / "report.txt"; }
};

/// Exclusive lock on an output directory, released on destruction.
class OutputLock {
public:
    explicit OutputLock(const fs::path& dir) : path_(dir / ".lock") {
        fs::create_directories(dir);
        std::FILE* f = std::fopen(path_.c_str(), "wx");
        if (!f) {
            throw Error("output directory " + dir.string() + " is locked by another run (remove " + path_.string() +
                        " if it is stale)");
        }
        std::fclose(f);
    }
    ~OutputLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    fs::path path_;
};

namespace detail {

inline void require(const fs::path& p, const std::string& what, const std::string& command) {
    if (!fs::exists(p)) throw MissingArtifactError("missing " + what + "; run " + command + " (expected " + p.string() + ")");
}

inline SimConfig sim_config(const PipelineConfig& cfg, std::shared_ptr<const TerrainMap> terrain) {
    SimConfig s;
    s.num_boids = cfg.num_boids;
    s.num_steps = cfg.num_steps;
    s.seed = cfg.seed;
    s.extent = cfg.extent;
    s.params = cfg.flock;
    s.terrain = std::move(terrain);
    return s;
}

inline DatasetManifest load_manifest(const ArtifactLayout& lay, const Resolution& r) {
    detail::require(lay.manifest(r), "frames for " + resolution_label(r), "discretize");
    return manifest_from_json(nlohmann::json::parse(io::read_file(lay.manifest(r))));
}

inline std::vector<OccupancyFrame> load_frames(const ArtifactLayout& lay, const Resolution& r,
                                               const DatasetManifest& m, std::size_t num_frames) {
    detail::require(lay.frames(r), "frames for " + resolution_label(r), "discretize");
    return parse_frames_csv(io::read_file(lay.frames(r)), m.grid.shape, num_frames, lay.frames(r).string());
}

inline std::size_t frames_in(const DatasetManifest& m) { return m.num_samples + m.t1 + m.t2 - 1; }

}  // namespace detail

/// Terrain from the configured file, or the procedural generator.
inline std::shared_ptr<const TerrainMap> load_terrain(const PipelineConfig& cfg) {
    if (cfg.terrain_path.empty()) {
        return std::make_shared<TerrainMap>(cfg.extent, generate_terrain(cfg.extent, cfg.terrain_gen));
    }
    return std::make_shared<TerrainMap>(
        cfg.extent, parse_terrain_csv(io::read_file(cfg.terrain_path), cfg.terrain_path.string()));
}

inline void run_simulate(const PipelineConfig& cfg, std::ostream& log) {
    const ArtifactLayout lay{cfg.out_dir};
    auto terrain = load_terrain(cfg);
    if (cfg.terrain_path.empty()) {
        io::write_atomic(lay.terrain(), [&](std::ostream& o) { write_terrain_csv(o, terrain->points()); });
    }
    const auto traj = simulate(detail::sim_config(cfg, terrain));
    io::write_atomic(lay.trajectory(), [&](std::ostream& o) { write_trajectory_csv(o, traj); });
    log << "simulate: " << traj.num_steps() << " steps x " << traj.num_boids() << " boids -> "
        << lay.trajectory().string() << '\n';
}

inline void run_discretize(const PipelineConfig& cfg, std::ostream& log) {
    const ArtifactLayout lay{cfg.out_dir};
    detail::require(lay.trajectory(), "trajectory", "simulate");
    const auto text = io::read_file(lay.trajectory());
    const auto traj = parse_trajectory_csv(text, lay.trajectory().string());
    const auto hash = io::hex64(io::fnv1a64(text));
    for (const auto& r : cfg.resolutions) {
        const GridSpec grid(cfg.extent, r);
        const auto frames = voxelize_log(traj, grid);
        DatasetManifest m;
        m.grid = grid;
        m.t1 = cfg.t1;
        m.t2 = cfg.t2;
        m.num_samples = window_count(frames.size(), cfg.t1, cfg.t2);
        m.folds = split_folds(m.num_samples, cfg.folds);
        m.seed = cfg.seed;
        m.source_hash = hash;
        io::write_atomic(lay.frames(r), [&](std::ostream& o) { write_frames_csv(o, frames); });
        const auto dense_bytes = dataset_file_bytes(cfg.t1, cfg.t2, grid.shape, m.num_samples);
        if (dense_bytes <= cfg.dense_limit_bytes) {
            io::write_atomic(lay.dataset(r), [&](std::ostream& o) { write_dataset(o, frames, grid.shape, cfg.t1, cfg.t2); });
        } else {
            log << "discretize: skipping dense dataset for " << resolution_label(r) << " (" << dense_bytes
                << " bytes > export.dense_limit_bytes)\n";
        }
        io::write_atomic(lay.manifest(r), manifest_to_json(m).dump(2) + "\n");
        log << "discretize: " << resolution_label(r) << " grid " << to_string(grid.shape) << ", " << m.num_samples
            << " samples\n";
    }
}

inline void run_graph(const PipelineConfig& cfg, std::ostream& log) {
    const ArtifactLayout lay{cfg.out_dir};
    for (const auto& r : cfg.resolutions) {
        const auto m = detail::load_manifest(lay, r);
        const auto frames = detail::load_frames(lay, r, m, detail::frames_in(m));
        const auto gc = cfg.graph.for_shape(m.grid.shape);
        const std::string ref = "../../frames/" + resolution_label(r) + "/frames.csv";
        if (gc.mode == GraphMode::full_graph) {
            const auto g = prune_full_graph(frames, m.grid.shape, gc.k);
            io::write_atomic(lay.graph(r), [&](std::ostream& o) { write_graph_jsonl(o, g, gc.k, ref); });
            log << "graph: " << resolution_label(r) << " full graph, " << g.nodes.size() << " nodes, "
                << g.edges.size() << " edges\n";
        } else {
            const auto subs = decompose_subgraphs(frames, m.grid.shape, gc.k);
            io::write_atomic(lay.graph(r), [&](std::ostream& o) {
                write_subgraphs_jsonl(o, subs, m.grid.shape, gc.k, frames.size(), ref);
            });
            log << "graph: " << resolution_label(r) << " " << subs.size() << " subgraphs (k=" << gc.k << ")\n";
        }
    }
}

/**
 * Cross-validated multi-step predictions for every sample: each sample is
 * forecast by a model that did not train on its fold.
 */
inline std::vector<std::vector<OccupancyFrame>> predict_samples(const std::string& model,
                                                                std::span<const Sample> samples,
                                                                const FoldAssignment& folds, std::size_t t2,
                                                                const PipelineConfig& cfg) {
    std::vector<std::vector<OccupancyFrame>> out(samples.size());
    for (std::size_t f = 0; f < folds.num_folds; ++f) {
        const auto test = folds.test_indices(f);
        if (model == "persistence") {
            for (auto s : test) out[s] = forecast_recursive(PersistencePredictor{}, samples[s].x, t2, cfg.threshold);
        } else if (model == "frequency") {
            for (auto s : test) out[s] = forecast_recursive(FrequencyPredictor{}, samples[s].x, t2, cfg.threshold);
        } else if (model == "neighborhood") {
            std::vector<Sample> train;
            for (auto s : folds.train_indices(f)) train.push_back(samples[s]);
            const auto trained = train_neighborhood(NeighborhoodModel(samples.front().x.size(), cfg.threshold), train,
                                                    {cfg.train_epochs, cfg.train_learning_rate});
            for (auto s : test) out[s] = forecast_recursive(trained, samples[s].x, t2, cfg.threshold);
        } else {
            throw ConfigError("unknown model '" + model + "'");
        }
    }
    return out;
}

inline void run_predict(const PipelineConfig& cfg, std::ostream& log) {
    const ArtifactLayout lay{cfg.out_dir};
    for (const auto& r : cfg.resolutions) {
        const auto m = detail::load_manifest(lay, r);
        if (m.folds.num_folds != cfg.folds) {
            throw ConfigError("manifest for " + resolution_label(r) + " has " + std::to_string(m.folds.num_folds) +
                              " folds but config asks for " + std::to_string(cfg.folds) + "; re-run discretize");
        }
        const auto frames = detail::load_frames(lay, r, m, detail::frames_in(m));
        const auto samples = make_windows(frames, m.t1, m.t2);
        for (const auto& model : cfg.models) {
            const auto preds = predict_samples(model, samples, m.folds, m.t2, cfg);
            io::write_atomic(lay.predictions(model, r), [&](std::ostream& o) { write_predictions_csv(o, preds); });
            if (predictions_file_bytes(m.t2, m.grid.shape, preds.size()) <= cfg.dense_limit_bytes) {
                io::write_atomic(lay.predictions_dense(model, r),
                                 [&](std::ostream& o) { write_predictions(o, preds, m.grid.shape, m.t2); });
            }
            log << "predict: " << model << " @ " << resolution_label(r) << ", " << preds.size() << " samples\n";
        }
    }
}

/// Per-subgraph confusion counts over the given samples' target frames.
inline std::vector<ConfusionCounts> subgraph_confusion(std::span<const CubeletGraph> subgraphs,
                                                       std::span<const std::size_t> sample_ids,
                                                       std::span<const Sample> samples,
                                                       const std::vector<std::vector<OccupancyFrame>>& predictions) {
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> owners;
    const auto shape = subgraphs.empty() ? GridShape{} : subgraphs.front().shape;
    for (std::uint32_t g = 0; g < subgraphs.size(); ++g) {
        for (const auto& n : subgraphs[g].nodes) owners[shape.linear(n)].push_back(g);
    }
    std::vector<ConfusionCounts> counts(subgraphs.size());
    std::uint64_t frames_seen = 0;
    for (auto s : sample_ids) {
        const auto& truth = samples[s].y;
        const auto& pred = predictions[s];
        for (std::size_t step = 0; step < truth.size(); ++step, ++frames_seen) {
            for (const auto& c : pred[step].occupied()) {
                auto it = owners.find(shape.linear(c));
                if (it == owners.end()) continue;
                const bool y = truth[step].query(c);
                for (auto g : it->second) (y ? counts[g].tp : counts[g].fp)++;
            }
            for (const auto& c : truth[step].occupied()) {
                if (pred[step].query(c)) continue;
                auto it = owners.find(shape.linear(c));
                if (it == owners.end()) continue;
                for (auto g : it->second) counts[g].fn++;
            }
        }
    }
    for (std::size_t g = 0; g < subgraphs.size(); ++g) {
        counts[g].tn = subgraphs[g].nodes.size() * frames_seen - counts[g].tp - counts[g].fp - counts[g].fn;
    }
    return counts;
}

/**
 * Fold-averaged metrics for one model at one resolution. With subgraphs,
 * each fold's record is the unweighted mean over subgraphs; otherwise it is
 * micro-averaged over the whole grid.
 */
inline MetricsRecord evaluate_predictions(std::span<const Sample> samples, const FoldAssignment& folds,
                                          const std::vector<std::vector<OccupancyFrame>>& predictions,
                                          const std::vector<CubeletGraph>* subgraphs = nullptr) {
    if (predictions.size() != samples.size()) throw InputError("prediction count does not match sample count");
    std::vector<MetricsRecord> per_fold;
    for (std::size_t f = 0; f < folds.num_folds; ++f) {
        const auto test = folds.test_indices(f);
        if (subgraphs) {
            std::vector<MetricsRecord> recs;
            for (const auto& c : subgraph_confusion(*subgraphs, test, samples, predictions)) {
                recs.push_back(metrics_from_counts(c, MetricScope::subgraph));
            }
            auto fold = aggregate_subgraphs(recs);
            fold.scope = MetricScope::fold;
            per_fold.push_back(fold);
        } else {
            ConfusionCounts c;
            for (auto s : test) c += confusion(predictions[s], samples[s].y);
            per_fold.push_back(metrics_from_counts(c, MetricScope::fold));
        }
    }
    return aggregate_folds(per_fold, folds.num_folds);
}

inline std::vector<ReportRow> run_evaluate(const PipelineConfig& cfg, std::ostream& log) {
    const ArtifactLayout lay{cfg.out_dir};
    std::vector<ReportRow> rows;
    for (const auto& r : cfg.resolutions) {
        const auto m = detail::load_manifest(lay, r);
        const auto gc = cfg.graph.for_shape(m.grid.shape);
        std::optional<GraphFile> graph;
        if (gc.mode == GraphMode::multi_subgraph) {
            detail::require(lay.graph(r), "graph for " + resolution_label(r), "graph");
            graph = parse_graph_jsonl(io::read_file(lay.graph(r)), lay.graph(r).string());
            if (graph->mode != GraphMode::multi_subgraph) {
                throw MissingArtifactError("graph for " + resolution_label(r) + " is not a subgraph decomposition; run graph");
            }
        }
        for (const auto& model : cfg.models) {
            detail::require(lay.predictions(model, r), "predictions", "predict");
        }
        const auto frames = detail::load_frames(lay, r, m, detail::frames_in(m));
        const auto samples = make_windows(frames, m.t1, m.t2);
        for (const auto& model : cfg.models) {
            const auto preds = parse_predictions_csv(io::read_file(lay.predictions(model, r)), m.grid.shape,
                                                     m.num_samples, m.t2, lay.predictions(model, r).string());
            const auto rec = evaluate_predictions(samples, m.folds, preds, graph ? &graph->graphs : nullptr);
            rows.push_back({graph ? model + " (MSG)" : model, r, rec});
        }
    }
    io::write_atomic(lay.report_json(), report_json(rows).dump(2) + "\n");
    const auto table = render_table(rows);
    io::write_atomic(lay.report_text(), table);
    log << table;
    return rows;
}

enum class Command { simulate, discretize, graph, predict, evaluate, all };

inline Command parse_command(std::string_view s) {
    if (s == "simulate") return Command::simulate;
    if (s == "discretize") return Command::discretize;
    if (s == "graph") return Command::graph;
    if (s == "predict") return Command::predict;
    if (s == "evaluate") return Command::evaluate;
    if (s == "all") return Command::all;
    throw ConfigError("unknown command '" + std::string(s) + "'");
}

/// Runs one command under the output-directory lock. `cfg` must already be validated.
inline void run(Command cmd, const PipelineConfig& cfg, std::ostream& log = std::cout) {
    OutputLock lock(cfg.out_dir);
    io::write_atomic(ArtifactLayout{cfg.out_dir}.config_echo(), config_to_text(cfg));
    switch (cmd) {
        case Command::simulate: run_simulate(cfg, log); break;
        case Command::discretize: run_discretize(cfg, log); break;
        case Command::graph: run_graph(cfg, log); break;
        case Command::predict: run_predict(cfg, log); break;
        case Command::evaluate: run_evaluate(cfg, log); break;
        case Command::all:
            run_simulate(cfg, log);
            run_discretize(cfg, log);
            run_graph(cfg, log);
            run_predict(cfg, log);
            run_evaluate(cfg, log);
            break;
    }
}

}  // namespace cubeletworld
