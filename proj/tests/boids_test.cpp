#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <sstream>

#include "cubeletworld/boids.hpp"

namespace cw = cubeletworld;

namespace {

cw::FlockParams params() { return cw::FlockParams{}; }

void expect_vec_near(const cw::Vec3& a, const cw::Vec3& b, double tol = 1e-12) {
    EXPECT_NEAR(a.x, b.x, tol);
    EXPECT_NEAR(a.y, b.y, tol);
    EXPECT_NEAR(a.z, b.z, tol);
}

cw::SimConfig open_world(std::uint32_t boids, std::uint32_t steps, std::uint64_t seed = 1) {
    cw::SimConfig c;
    c.num_boids = boids;
    c.num_steps = steps;
    c.seed = seed;
    c.extent = cw::WorldExtent(200, 200, 100);
    return c;
}

}  // namespace

TEST(FindNeighbors, DistanceThreshold) {
    auto p = params();
    const cw::BoidState self{{0, 0, 0}, {1, 0, 0}};
    const std::vector<cw::BoidState> others = {{{p.neighbor_radius + 0.1, 0, 0}, {}}};
    EXPECT_TRUE(cw::find_neighbors(self, others, p).empty());
}

TEST(FindNeighbors, ViewArc) {
    auto p = params();
    p.view_half_angle = std::numbers::pi / 2;
    const cw::BoidState self{{0, 0, 0}, {1, 0, 0}};
    const std::vector<cw::BoidState> behind = {{{-5, 0, 0}, {}}};
    const std::vector<cw::BoidState> ahead = {{{5, 0, 0}, {}}};
    EXPECT_TRUE(cw::find_neighbors(self, behind, p).empty());
    EXPECT_EQ(cw::find_neighbors(self, ahead, p), std::vector<std::size_t>{0});
}

TEST(FindNeighbors, ZeroVelocitySeesFullSphere) {
    auto p = params();
    p.view_half_angle = 0.1;
    const cw::BoidState self{{0, 0, 0}, {0, 0, 0}};
    const std::vector<cw::BoidState> others = {{{-5, 0, 0}, {}}, {{0, 0, 5}, {}}};
    EXPECT_EQ(cw::find_neighbors(self, others, p).size(), 2u);
}

TEST(Steering, NoNeighborsGivesZeros) {
    const auto f = cw::steering({{1, 2, 3}, {1, 0, 0}}, {}, params());
    EXPECT_EQ(f.separation, cw::Vec3{});
    EXPECT_EQ(f.alignment, cw::Vec3{});
    EXPECT_EQ(f.cohesion, cw::Vec3{});
}

TEST(Steering, CohesionPointsAtCentroid) {
    const cw::BoidState self{{0, 0, 0}, {0, 0, 0}};
    const std::vector<cw::BoidState> n = {{{10, 0, 0}, {0, 0, 0}}};
    const auto f = cw::steering(self, n, params());
    expect_vec_near(f.cohesion, {1, 0, 0});
    EXPECT_EQ(f.separation, cw::Vec3{});  // 10 > sep_radius
}

TEST(Steering, AlignmentMatchesNeighborVelocity) {
    const cw::BoidState self{{0, 0, 0}, {0, 0, 0}};
    const std::vector<cw::BoidState> n = {{{10, 0, 0}, {0, 1, 0}}};
    expect_vec_near(cw::steering(self, n, params()).alignment, {0, 1, 0});
}

TEST(Steering, SeparationPushesAway) {
    const cw::BoidState self{{0, 0, 0}, {0, 0, 0}};
    const std::vector<cw::BoidState> n = {{{3, 0, 0}, {}}, {{0, 4, 0}, {}}};
    // (-3,0,0)/9 + (0,-4,0)/16 = (-1/3, -1/4, 0)
    const auto sep = cw::steering(self, n, params()).separation;
    expect_vec_near(sep, cw::normalized({-1.0 / 3.0, -0.25, 0}));
}

TEST(Steering, CoincidentPairGetsSeededUnitRepulsion) {
    const cw::BoidState self{{5, 5, 5}, {1, 0, 0}};
    const std::vector<cw::BoidState> n = {{{5, 5, 5}, {1, 0, 0}}};
    const auto a = cw::steering(self, n, params(), 99);
    const auto b = cw::steering(self, n, params(), 99);
    EXPECT_NEAR(cw::norm(a.separation), 1.0, 1e-12);
    EXPECT_EQ(a.separation, b.separation);
    EXPECT_TRUE(std::isfinite(a.separation.x));
}

class AvoidTerrain : public ::testing::Test {
protected:
    cw::WorldExtent extent{20, 20, 20};
    cw::BoidState boid{{5.5, 5.5, 5.5}, {0, 0, 0}};
    cw::FlockParams p = [] {
        cw::FlockParams f;
        f.sep_radius = 5;
        return f;
    }();
};

TEST_F(AvoidTerrain, NothingNearby) {
    const cw::TerrainMap t(extent, {{18.5, 18.5, 18.5, 0, 0, 0, 0}});
    EXPECT_EQ(cw::avoid_terrain(boid, t, p), cw::Vec3{});
}

TEST_F(AvoidTerrain, PushesAwayFromCellBelow) {
    const cw::TerrainMap t(extent, {{5.5, 5.5, 3.5, 0, 0, 0, 0}});  // center 2 below
    const auto v = cw::avoid_terrain(boid, t, p);
    expect_vec_near(cw::normalized(v), {0, 0, 1});
    EXPECT_NEAR(cw::norm(v), 0.25, 1e-12);  // inverse square at distance 2
}

TEST_F(AvoidTerrain, SymmetricCellsCancel) {
    const cw::TerrainMap t(extent, {{3.5, 5.5, 5.5, 0, 0, 0, 0}, {7.5, 5.5, 5.5, 0, 0, 0, 0}});
    EXPECT_EQ(cw::avoid_terrain(boid, t, p).x, 0.0);
}

TEST(Step, ForceFreeMotion) {
    auto c = open_world(1, 1);
    c.params.w_sep = c.params.w_align = c.params.w_coh = c.params.w_avoid = 0;
    c.params.dt = 0.5;
    const std::vector<cw::BoidState> s = {{{50, 50, 50}, {1, 0, 0}}};
    const auto n = cw::step(s, c);
    expect_vec_near(n[0].position, {50.5, 50, 50});
    EXPECT_EQ(n[0].velocity, (cw::Vec3{1, 0, 0}));
}

TEST(Step, ClampsSpeed) {
    auto c = open_world(1, 1);
    c.params.w_sep = c.params.w_align = c.params.w_coh = c.params.w_avoid = 0;
    c.params.v_max = 5;
    const std::vector<cw::BoidState> s = {{{50, 50, 50}, {6, 8, 0}}};
    const auto n = cw::step(s, c);
    EXPECT_NEAR(cw::norm(n[0].velocity), 5.0, 1e-10);
    EXPECT_LE(cw::norm(n[0].velocity), 5.0);
    expect_vec_near(cw::normalized(n[0].velocity), {0.6, 0.8, 0});
}

TEST(Simulate, DisplacementNeverExceedsSpeedCap) {
    auto c = open_world(30, 2000, 9);
    c.extent = cw::WorldExtent(827, 748, 173);
    c.params.v_init = c.params.v_max;
    const auto log = cw::simulate(c);
    for (std::size_t t = 1; t < log.num_steps(); ++t)
        for (std::size_t b = 0; b < log.num_boids(); ++b)
            ASSERT_LE(cw::norm(log.positions[t][b] - log.positions[t - 1][b]), c.params.v_max * c.params.dt)
                << "t=" << t << " boid " << b;
}

TEST(Step, ReflectsAtWalls) {
    auto c = open_world(1, 1);
    c.params.w_sep = c.params.w_align = c.params.w_coh = c.params.w_avoid = 0;
    const std::vector<cw::BoidState> s = {{{0.5, 199.5, 50}, {-2, 2, 0}}};
    const auto n = cw::step(s, c);
    expect_vec_near(n[0].position, {1.5, 198.5, 50});
    EXPECT_EQ(n[0].velocity, (cw::Vec3{2, -2, 0}));
}

TEST(Step, MirrorSymmetricPairStaysMirrored) {
    auto c = open_world(2, 1);
    const std::vector<cw::BoidState> s = {{{90, 100, 50}, {1, 0.5, 0.25}}, {{110, 100, 50}, {-1, 0.5, 0.25}}};
    auto cur = s;
    for (int t = 0; t < 20; ++t) {
        cur = cw::step(cur, c, t);
        EXPECT_NEAR(cur[0].position.x, 200.0 - cur[1].position.x, 1e-9);
        EXPECT_NEAR(cur[0].position.y, cur[1].position.y, 1e-9);
        EXPECT_NEAR(cur[0].position.z, cur[1].position.z, 1e-9);
        EXPECT_NEAR(cur[0].velocity.x, -cur[1].velocity.x, 1e-9);
    }
}

TEST(Step, MirroredRunMatchesMirrorOfRun) {
    auto c = open_world(12, 1, 5);
    auto states = cw::initial_states(c);
    for (auto& s : states) {  // keep away from walls so reflections do not kick in
        s.position.x = 60 + std::fmod(s.position.x, 80);
        s.position.y = 60 + std::fmod(s.position.y, 80);
        s.position.z = 30 + std::fmod(s.position.z, 40);
    }
    auto mirrored = states;
    for (auto& s : mirrored) {
        s.position.x = 200 - s.position.x;
        s.velocity.x = -s.velocity.x;
    }
    for (int t = 0; t < 15; ++t) {
        states = cw::step(states, c, t);
        mirrored = cw::step(mirrored, c, t);
    }
    for (std::size_t b = 0; b < states.size(); ++b) {
        EXPECT_NEAR(states[b].position.x, 200 - mirrored[b].position.x, 1e-8);
        EXPECT_NEAR(states[b].position.y, mirrored[b].position.y, 1e-8);
        EXPECT_NEAR(states[b].position.z, mirrored[b].position.z, 1e-8);
    }
}

TEST(Step, ExchangeSymmetry) {
    auto c = open_world(10, 1, 9);
    c.extent = cw::WorldExtent(60, 60, 60);
    auto states = cw::initial_states(c);
    std::vector<cw::BoidState> permuted(states.rbegin(), states.rend());
    for (int t = 0; t < 25; ++t) {
        states = cw::step(states, c, t);
        permuted = cw::step(permuted, c, t);
    }
    for (std::size_t b = 0; b < states.size(); ++b) {
        const auto& q = permuted[states.size() - 1 - b];
        EXPECT_NEAR(states[b].position.x, q.position.x, 1e-8);
        EXPECT_NEAR(states[b].position.y, q.position.y, 1e-8);
        EXPECT_NEAR(states[b].position.z, q.position.z, 1e-8);
    }
}

TEST(Step, IsolatedBoidFeelsNoForce) {
    auto c = open_world(2, 1);
    const std::vector<cw::BoidState> s = {{{20, 20, 20}, {1, 1, 0}}, {{150, 150, 80}, {0, 1, 0}}};
    const auto n = cw::step(s, c);
    EXPECT_EQ(n[0].velocity, s[0].velocity);
    EXPECT_EQ(n[1].velocity, s[1].velocity);
}

TEST(Simulate, ShapeMatchesBoidsAndSteps) {
    auto c = open_world(30, 100);
    const auto log = cw::simulate(c);
    ASSERT_EQ(log.num_steps(), 100u);
    for (const auto& row : log.positions) EXPECT_EQ(row.size(), 30u);
}

TEST(Simulate, SameSeedSameLog) {
    auto c = open_world(30, 100, 77);
    EXPECT_EQ(cw::simulate(c), cw::simulate(c));
    auto d = c;
    d.seed = 78;
    EXPECT_NE(cw::simulate(c), cw::simulate(d));
}

TEST(Simulate, ForceFreeRunStaysInExtent) {
    auto c = open_world(30, 3000, 4);
    c.extent = cw::WorldExtent(40, 30, 20);
    c.params.w_sep = c.params.w_align = c.params.w_coh = c.params.w_avoid = 0;
    c.params.v_init = c.params.v_max;
    for (const auto& row : cw::simulate(c).positions)
        for (const auto& p : row) ASSERT_TRUE(c.extent.contains(p.x, p.y, p.z));
}

TEST(Simulate, InitialPlacementAvoidsTerrain) {
    auto c = open_world(30, 1, 3);
    c.extent = cw::WorldExtent(10, 10, 10);
    std::vector<cw::TerrainPoint> pts;
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j)
            for (int k = 0; k < 5; ++k) pts.push_back({i + 0.5, j + 0.5, k + 0.5, 0, 0, 0, 0});
    c.terrain = std::make_shared<cw::TerrainMap>(c.extent, pts);
    const auto log = cw::simulate(c);
    for (const auto& p : log.positions[0]) EXPECT_GE(p.z, 5.0);
}

TEST(Simulate, FullyBlockedWorldIsPlacementError) {
    auto c = open_world(3, 1);
    c.extent = cw::WorldExtent(2, 2, 2);
    std::vector<cw::TerrainPoint> pts;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) pts.push_back({i + 0.5, j + 0.5, k + 0.5, 0, 0, 0, 0});
    c.terrain = std::make_shared<cw::TerrainMap>(c.extent, pts);
    EXPECT_THROW(cw::simulate(c), cw::PlacementError);
}

TEST(Simulate, InvalidParamsRejected) {
    auto c = open_world(0, 10);
    EXPECT_THROW(cw::simulate(c), cw::ConfigError);
    c = open_world(3, 10);
    c.params.sep_radius = c.params.neighbor_radius + 1;
    EXPECT_THROW(cw::simulate(c), cw::ConfigError);
}

TEST(TrajectoryCsv, RoundTripIsExact) {
    const auto log = cw::simulate(open_world(5, 20, 12));
    std::ostringstream a;
    cw::write_trajectory_csv(a, log);
    const auto parsed = cw::parse_trajectory_csv(a.str(), "mem");
    EXPECT_EQ(parsed, log);
    std::ostringstream b;
    cw::write_trajectory_csv(b, parsed);
    EXPECT_EQ(a.str(), b.str());
}

TEST(TrajectoryCsv, RejectsUnsortedRows) {
    EXPECT_THROW(cw::parse_trajectory_csv("t,boid_id,x,y,z\n0,1,1,1,1\n0,0,1,1,1\n", "mem"), cw::FormatError);
}
