#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include "cubeletworld/pipeline.hpp"

namespace cw = cubeletworld;
namespace fs = std::filesystem;

namespace {

const std::string kSmallWorld =
    "world.extent = 80,80,40\n"
    "terrain.buildings = 2\n"
    "sim.num_boids = 12\n"
    "sim.num_steps = 40\n"
    "t1 = 3\n"
    "t2 = 2\n"
    "folds = 3\n"
    "resolution = 10,10,10\n"
    "resolution = 20,20,20\n"
    "model = persistence\n";

class PipelineTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("cw_pipeline_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    cw::PipelineConfig config(const std::string& extra = "", const std::string& sub = "out") const {
        auto cfg = cw::parse_config(kSmallWorld + extra, "test.cfg");
        cfg.out_dir = dir_ / sub;
        return cw::validate(cfg);
    }

    fs::path dir_;
};

}  // namespace

TEST_F(PipelineTest, AllProducesOneRowPerResolution) {
    const auto cfg = config();
    std::ostringstream log;
    cw::run(cw::Command::all, cfg, log);
    const cw::ArtifactLayout lay{cfg.out_dir};
    const auto report = nlohmann::json::parse(cw::io::read_file(lay.report_json()));
    ASSERT_EQ(report["rows"].size(), 2u);
    EXPECT_EQ(report["rows"][0]["cubelet_size"], nlohmann::json({20.0, 20.0, 20.0}));
    EXPECT_EQ(report["rows"][1]["cubelet_size"], nlohmann::json({10.0, 10.0, 10.0}));
    for (const auto& r : cfg.resolutions) {
        EXPECT_TRUE(fs::exists(lay.dataset(r)));
        EXPECT_TRUE(fs::exists(lay.graph(r)));
        EXPECT_TRUE(fs::exists(lay.predictions("persistence", r)));
        EXPECT_TRUE(fs::exists(lay.predictions_dense("persistence", r)));
    }
    EXPECT_FALSE(fs::exists(cfg.out_dir / ".lock"));
    EXPECT_NE(log.str().find("F1-Score"), std::string::npos);
}

TEST_F(PipelineTest, RerunIsByteIdentical) {
    const auto a = config("", "a");
    const auto b = config("", "b");
    std::ostringstream log;
    cw::run(cw::Command::all, a, log);
    cw::run(cw::Command::all, b, log);
    const cw::ArtifactLayout la{a.out_dir}, lb{b.out_dir};
    EXPECT_EQ(cw::io::read_file(la.trajectory()), cw::io::read_file(lb.trajectory()));
    EXPECT_EQ(cw::io::read_file(la.report_json()), cw::io::read_file(lb.report_json()));
    EXPECT_EQ(cw::io::read_file(la.report_text()), cw::io::read_file(lb.report_text()));
    for (const auto& r : a.resolutions) {
        EXPECT_EQ(cw::io::read_file(la.dataset(r)), cw::io::read_file(lb.dataset(r)));
        EXPECT_EQ(cw::io::read_file(la.frames(r)), cw::io::read_file(lb.frames(r)));
        EXPECT_EQ(cw::io::read_file(la.manifest(r)), cw::io::read_file(lb.manifest(r)));
        EXPECT_EQ(cw::io::read_file(la.graph(r)), cw::io::read_file(lb.graph(r)));
    }
}

TEST_F(PipelineTest, StagesInOrderMatchAll) {
    const auto a = config("", "a");
    const auto b = config("", "b");
    std::ostringstream log;
    cw::run(cw::Command::all, a, log);
    for (auto c : {"simulate", "discretize", "graph", "predict", "evaluate"}) cw::run(cw::parse_command(c), b, log);
    EXPECT_EQ(cw::io::read_file(cw::ArtifactLayout{a.out_dir}.report_json()),
              cw::io::read_file(cw::ArtifactLayout{b.out_dir}.report_json()));
}

TEST_F(PipelineTest, EvaluateBeforePredictNamesMissingStage) {
    const auto cfg = config();
    std::ostringstream log;
    cw::run(cw::Command::simulate, cfg, log);
    cw::run(cw::Command::discretize, cfg, log);
    try {
        cw::run(cw::Command::evaluate, cfg, log);
        FAIL() << "expected MissingArtifactError";
    } catch (const cw::MissingArtifactError& e) {
        EXPECT_NE(std::string(e.what()).find("missing predictions; run predict"), std::string::npos) << e.what();
    }
}

TEST_F(PipelineTest, DiscretizeBeforeSimulate) {
    const auto cfg = config();
    std::ostringstream log;
    try {
        cw::run(cw::Command::discretize, cfg, log);
        FAIL();
    } catch (const cw::MissingArtifactError& e) {
        EXPECT_NE(std::string(e.what()).find("run simulate"), std::string::npos);
    }
}

TEST_F(PipelineTest, LockedOutputDirectoryRejected) {
    const auto cfg = config();
    cw::OutputLock held(cfg.out_dir);
    std::ostringstream log;
    EXPECT_THROW(cw::run(cw::Command::simulate, cfg, log), cw::Error);
    EXPECT_FALSE(fs::exists(cw::ArtifactLayout{cfg.out_dir}.trajectory()));
}

TEST_F(PipelineTest, DenseDatasetMatchesFramesCsv) {
    const auto cfg = config();
    std::ostringstream log;
    cw::run(cw::Command::simulate, cfg, log);
    cw::run(cw::Command::discretize, cfg, log);
    const cw::ArtifactLayout lay{cfg.out_dir};
    const auto& r = cfg.resolutions.front();
    const auto m = cw::manifest_from_json(nlohmann::json::parse(cw::io::read_file(lay.manifest(r))));
    const auto frames = cw::parse_frames_csv(cw::io::read_file(lay.frames(r)), m.grid.shape, 40, "frames");
    cw::DenseDatasetHeader h;
    const auto samples = cw::read_dataset(cw::io::read_file(lay.dataset(r)), &h);
    EXPECT_EQ(h.num_samples, m.num_samples);
    const auto expected = cw::make_windows(frames, 3, 2);
    ASSERT_EQ(samples.size(), expected.size());
    for (std::size_t s = 0; s < samples.size(); ++s) {
        for (std::size_t h1 = 0; h1 < 3; ++h1) EXPECT_TRUE(samples[s].x[h1] == expected[s].x[h1]);
        for (std::size_t h2 = 0; h2 < 2; ++h2) EXPECT_TRUE(samples[s].y[h2] == expected[s].y[h2]);
    }
}

TEST_F(PipelineTest, DenseExportSkippedAboveLimit) {
    const auto cfg = config("export.dense_limit_bytes = 16\n");
    std::ostringstream log;
    cw::run(cw::Command::all, cfg, log);
    const cw::ArtifactLayout lay{cfg.out_dir};
    for (const auto& r : cfg.resolutions) {
        EXPECT_FALSE(fs::exists(lay.dataset(r)));
        EXPECT_FALSE(fs::exists(lay.predictions_dense("persistence", r)));
        EXPECT_TRUE(fs::exists(lay.predictions("persistence", r)));
    }
    EXPECT_NE(log.str().find("skipping dense dataset"), std::string::npos);
}

TEST_F(PipelineTest, SubgraphModeEvaluatesPerSubgraph) {
    const auto cfg = config("graph.mode = msg\nmodel = frequency\n");
    std::ostringstream log;
    const auto rows = [&] {
        cw::run(cw::Command::all, cfg, log);
        return nlohmann::json::parse(cw::io::read_file(cw::ArtifactLayout{cfg.out_dir}.report_json()))["rows"];
    }();
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0]["model"], "persistence (MSG)");
    EXPECT_EQ(rows[1]["model"], "frequency (MSG)");
    const auto graph = cw::parse_graph_jsonl(
        cw::io::read_file(cw::ArtifactLayout{cfg.out_dir}.graph(cfg.resolutions.front())), "graph");
    EXPECT_EQ(graph.mode, cw::GraphMode::multi_subgraph);
    EXPECT_FALSE(graph.graphs.empty());
}

TEST(SubgraphConfusion, MatchesPerSubgraphRecount) {
    // Oracle: restrict truth and prediction to each subgraph's node set and count directly.
    std::mt19937_64 gen(11);
    const cw::GridShape shape{4, 4, 3};
    std::vector<cw::OccupancyFrame> frames;
    std::bernoulli_distribution coin(0.15);
    for (std::uint32_t t = 0; t < 12; ++t) {
        std::vector<cw::CubeletIndex> cells;
        for (std::uint32_t i = 0; i < 4; ++i)
            for (std::uint32_t j = 0; j < 4; ++j)
                for (std::uint32_t k = 0; k < 3; ++k)
                    if (coin(gen)) cells.push_back({i, j, k});
        frames.emplace_back(t, shape, cells);
    }
    const auto samples = cw::make_windows(frames, 2, 2);
    std::vector<std::vector<cw::OccupancyFrame>> preds;
    for (const auto& s : samples) preds.push_back(cw::forecast_recursive(cw::FrequencyPredictor{}, s.x, 2));
    const auto subs = cw::decompose_subgraphs(frames, shape, 1);
    std::vector<cw::CubeletGraph> graphs;
    for (const auto& s : subs) graphs.push_back(s.graph);
    std::vector<std::size_t> ids{0, 2, 3, 5};
    const auto got = cw::subgraph_confusion(graphs, ids, samples, preds);
    ASSERT_EQ(got.size(), graphs.size());
    for (std::size_t g = 0; g < graphs.size(); ++g) {
        cw::ConfusionCounts want;
        for (auto s : ids)
            for (std::size_t h = 0; h < 2; ++h)
                for (const auto& c : graphs[g].nodes) {
                    const bool p = preds[s][h].query(c), y = samples[s].y[h].query(c);
                    if (p && y) ++want.tp;
                    else if (p) ++want.fp;
                    else if (y) ++want.fn;
                    else ++want.tn;
                }
        EXPECT_TRUE(got[g] == want) << "subgraph " << g;
    }
}

#ifdef CUBELETWORLD_CLI
TEST_F(PipelineTest, CliRunsAndReportsErrors) {
    const auto cfg_path = dir_ / "run.cfg";
    cw::io::write_atomic(cfg_path, kSmallWorld + "out = " + (dir_ / "cli").string() + "\n");
    const std::string cli = CUBELETWORLD_CLI;
    const auto quiet = " > " + (dir_ / "log.txt").string() + " 2>&1";
    EXPECT_EQ(std::system((cli + " --config " + cfg_path.string() + " all" + quiet).c_str()), 0);
    EXPECT_TRUE(fs::exists(dir_ / "cli" / "report.txt"));
    EXPECT_NE(std::system((cli + " --config " + cfg_path.string() + " --model nonsense evaluate" + quiet).c_str()), 0);
    EXPECT_NE(cw::io::read_file(dir_ / "log.txt").find("unknown model 'nonsense'"), std::string::npos);

    const auto bad = dir_ / "bad.cfg";
    cw::io::write_atomic(bad, "seed = 1\nt1 = 0\n");
    EXPECT_NE(std::system((cli + " --config " + bad.string() + " validate" + quiet).c_str()), 0);
    EXPECT_NE(cw::io::read_file(dir_ / "log.txt").find("t1 must be >= 1"), std::string::npos);
}
#endif
