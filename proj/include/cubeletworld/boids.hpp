#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cubeletworld/error.hpp"
#include "cubeletworld/io.hpp"
#include "cubeletworld/rng.hpp"
#include "cubeletworld/terrain.hpp"
#include "cubeletworld/vec3.hpp"
#include "cubeletworld/world.hpp"

namespace cubeletworld {

struct BoidState {
    Vec3 position;
    Vec3 velocity;

    friend bool operator==(const BoidState&, const BoidState&) = default;
};

struct FlockParams {
    double neighbor_radius = 25.0;
    double view_half_angle = 3.0 * std::numbers::pi / 4.0;
    double sep_radius = 8.0;
    double w_sep = 1.5;
    double w_align = 1.0;
    double w_coh = 1.0;
    double w_avoid = 2.0;
    double v_init = 2.0;
    double v_max = 4.0;
    double dt = 1.0;

    void validate() const {
        if (!(sep_radius > 0.0 && sep_radius <= neighbor_radius)) {
            throw ConfigError("flock: require 0 < sep_radius <= neighbor_radius");
        }
        if (!(view_half_angle > 0.0 && view_half_angle <= std::numbers::pi)) {
            throw ConfigError("flock: view_half_angle must be in (0, pi]");
        }
        if (!(v_max > 0.0)) throw ConfigError("flock: v_max must be > 0");
        if (!(v_init >= 0.0 && v_init <= v_max)) throw ConfigError("flock: v_init must be in [0, v_max]");
        if (!(dt > 0.0)) throw ConfigError("flock: dt must be > 0");
        if (w_sep < 0 || w_align < 0 || w_coh < 0 || w_avoid < 0) {
            throw ConfigError("flock: weights must be non-negative");
        }
    }
};

struct SimConfig {
    std::uint32_t num_boids = 30;
    std::uint32_t num_steps = 1000;
    std::uint64_t seed = 0;
    WorldExtent extent;
    FlockParams params;
    /// Shared because the unit occupancy bitset of a full-size world is large.
    std::shared_ptr<const TerrainMap> terrain;

    void validate() const {
        if (num_boids < 1) throw ConfigError("sim: num_boids must be >= 1");
        if (num_steps < 1) throw ConfigError("sim: num_steps must be >= 1");
        params.validate();
        if (terrain && !(terrain->extent() == extent)) {
            throw ConfigError("sim: terrain extent differs from world extent");
        }
    }
};

/// Boid coordinates per timestep: `positions[t][b]`.
struct TrajectoryLog {
    std::vector<std::vector<Vec3>> positions;

    std::size_t num_steps() const { return positions.size(); }
    std::size_t num_boids() const { return positions.empty() ? 0 : positions.front().size(); }
    friend bool operator==(const TrajectoryLog&, const TrajectoryLog&) = default;
};

/// Distance-and-view-arc membership test. A zero velocity sees the full sphere.
inline bool in_neighborhood(const BoidState& self, const BoidState& other, const FlockParams& params) {
    const Vec3 offset = other.position - self.position;
    const double dist = norm(offset);
    if (dist > params.neighbor_radius) return false;
    const double speed = norm(self.velocity);
    if (speed == 0.0 || dist == 0.0) return true;
    const double cos_angle = std::clamp(dot(self.velocity, offset) / (speed * dist), -1.0, 1.0);
    return std::acos(cos_angle) <= params.view_half_angle;
}

inline std::vector<std::size_t> find_neighbors(const BoidState& self, std::span<const BoidState> others,
                                               const FlockParams& params) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < others.size(); ++i) {
        if (in_neighborhood(self, others[i], params)) out.push_back(i);
    }
    return out;
}

struct SteeringForces {
    Vec3 separation;
    Vec3 alignment;
    Vec3 cohesion;
};

/**
 * Unit steering directions from the neighbor set.
 *
 * Separation sums (self - other) / d^2 over neighbors within sep_radius.
 * Coincident pairs contribute a unit vector in a direction drawn from
 * `tie_seed`, so the result never divides by zero.
 */
inline SteeringForces steering(const BoidState& self, std::span<const BoidState> neighbors,
                               const FlockParams& params, std::uint64_t tie_seed = 0) {
    SteeringForces f;
    if (neighbors.empty()) return f;
    Vec3 sep;
    Vec3 mean_velocity;
    Vec3 centroid;
    for (std::size_t n = 0; n < neighbors.size(); ++n) {
        const auto& other = neighbors[n];
        const Vec3 away = self.position - other.position;
        const double d2 = dot(away, away);
        if (d2 == 0.0) {
            Rng rng(mix_seed(tie_seed, n));
            sep += rng.unit_vector();
        } else if (d2 <= params.sep_radius * params.sep_radius) {
            sep += away * (1.0 / d2);
        }
        mean_velocity += other.velocity;
        centroid += other.position;
    }
    const double inv = 1.0 / static_cast<double>(neighbors.size());
    f.separation = normalized(sep);
    f.alignment = normalized(mean_velocity * inv - self.velocity);
    f.cohesion = normalized(centroid * inv - self.position);
    return f;
}

/// Inverse-square repulsion from terrain unit cubelets whose centers lie
/// within sep_radius of the boid.
inline Vec3 avoid_terrain(const BoidState& self, const TerrainMap& terrain, const FlockParams& params) {
    Vec3 total;
    if (terrain.occupied().empty()) return total;
    const double r = params.sep_radius;
    const double r2 = r * r;
    const auto& shape = terrain.unit_shape();
    auto range = [&](double c, std::uint32_t n) {
        const double lo = std::max(0.0, std::floor(c - r - 0.5));
        const double hi = std::min(static_cast<double>(n) - 1.0, std::floor(c + r - 0.5) + 1.0);
        return std::pair<std::int64_t, std::int64_t>{static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)};
    };
    const auto [i0, i1] = range(self.position.x, shape.n1);
    const auto [j0, j1] = range(self.position.y, shape.n2);
    const auto [k0, k1] = range(self.position.z, shape.n3);
    for (std::int64_t i = i0; i <= i1; ++i) {
        for (std::int64_t j = j0; j <= j1; ++j) {
            for (std::int64_t k = k0; k <= k1; ++k) {
                const CubeletIndex c{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                     static_cast<std::uint32_t>(k)};
                if (!terrain.is_occupied(c)) continue;
                const Vec3 center{i + 0.5, j + 0.5, k + 0.5};
                const Vec3 away = self.position - center;
                const double d2 = dot(away, away);
                if (d2 > r2 || d2 == 0.0) continue;
                total += away * (1.0 / (d2 * std::sqrt(d2)));
            }
        }
    }
    return total;
}

namespace detail {

/// Reflects one coordinate back into [0, len), negating the velocity component.
inline void reflect_axis(double& p, double& v, double len) {
    if (p < 0.0) {
        p = -p;
        v = -v;
    } else if (p >= len) {
        p = 2.0 * len - p;
        v = -v;
    }
    if (p >= len) p = std::nextafter(len, 0.0);
    if (p < 0.0) p = 0.0;
}

}  // namespace detail

/// Speeds are capped a hair under v_max so that the rounded displacement
/// `p + dt*v - p` never exceeds v_max*dt.
inline constexpr double kSpeedCapMargin = 1.0 - 1e-12;

/**
 * One synchronous update: every force is computed from `states`, then all
 * boids move. `step_index` only seeds tie-breaking for coincident boids.
 */
inline std::vector<BoidState> step(std::span<const BoidState> states, const SimConfig& config,
                                   std::uint64_t step_index = 0) {
    const auto& p = config.params;
    std::vector<BoidState> next(states.begin(), states.end());
    std::vector<BoidState> neigh;
    for (std::size_t b = 0; b < states.size(); ++b) {
        const auto& self = states[b];
        neigh.clear();
        for (std::size_t o = 0; o < states.size(); ++o) {
            if (o != b && in_neighborhood(self, states[o], p)) neigh.push_back(states[o]);
        }
        const auto f = steering(self, neigh, p, mix_seed(config.seed, step_index, b));
        Vec3 accel = p.w_sep * f.separation + p.w_align * f.alignment + p.w_coh * f.cohesion;
        if (config.terrain && p.w_avoid != 0.0) accel += p.w_avoid * avoid_terrain(self, *config.terrain, p);
        Vec3 v = clamp_norm(self.velocity + p.dt * accel, p.v_max * kSpeedCapMargin);
        Vec3 pos = self.position + p.dt * v;
        detail::reflect_axis(pos.x, v.x, config.extent.dx);
        detail::reflect_axis(pos.y, v.y, config.extent.dy);
        detail::reflect_axis(pos.z, v.z, config.extent.dz);
        next[b] = {pos, v};
    }
    return next;
}

/**
 * Seeded initial placement. Positions are drawn first, boid by boid, each
 * retried until it lands outside terrain; velocities follow, uniform on the
 * sphere scaled to v_init.
 */
inline std::vector<BoidState> initial_states(const SimConfig& config) {
    Rng rng(config.seed);
    const auto& e = config.extent;
    constexpr int kMaxAttempts = 10000;
    std::vector<BoidState> states(config.num_boids);
    for (std::uint32_t b = 0; b < config.num_boids; ++b) {
        bool placed = false;
        for (int a = 0; a < kMaxAttempts && !placed; ++a) {
            Vec3 pos{rng.uniform(0.0, e.dx), rng.uniform(0.0, e.dy), rng.uniform(0.0, e.dz)};
            if (config.terrain && config.terrain->is_occupied_at(pos.x, pos.y, pos.z)) continue;
            if (!e.contains(pos.x, pos.y, pos.z)) continue;
            states[b].position = pos;
            placed = true;
        }
        if (!placed) {
            throw PlacementError("cannot place boid " + std::to_string(b) +
                                 " outside terrain after " + std::to_string(kMaxAttempts) + " attempts");
        }
    }
    for (auto& s : states) s.velocity = rng.unit_vector() * config.params.v_init;
    return states;
}

/// Runs the simulation; entry t holds the coordinates after t updates
/// (entry 0 is the initial placement), T entries in total.
inline TrajectoryLog simulate(const SimConfig& config) {
    config.validate();
    TrajectoryLog log;
    log.positions.reserve(config.num_steps);
    auto states = initial_states(config);
    for (std::uint32_t t = 0; t < config.num_steps; ++t) {
        if (t > 0) states = step(states, config, t);
        std::vector<Vec3> row;
        row.reserve(states.size());
        for (const auto& s : states) row.push_back(s.position);
        log.positions.push_back(std::move(row));
    }
    return log;
}

inline constexpr std::string_view kTrajectoryHeader = "t,boid_id,x,y,z";

inline void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log) {
    out << kTrajectoryHeader << '\n';
    for (std::size_t t = 0; t < log.positions.size(); ++t) {
        for (std::size_t b = 0; b < log.positions[t].size(); ++b) {
            const auto& p = log.positions[t][b];
            out << t << ',' << b << ',' << io::format_double(p.x) << ',' << io::format_double(p.y)
                << ',' << io::format_double(p.z) << '\n';
        }
    }
}

/// Parses a trajectory file; rows must be sorted by (t, boid_id) with no gaps.
inline TrajectoryLog parse_trajectory_csv(std::string_view text, std::string_view source) {
    TrajectoryLog log;
    io::for_each_csv_row(text, kTrajectoryHeader, source, [&](const auto& f, std::size_t) {
        if (f.size() != 5) throw InputError("expected 5 fields");
        const auto t = io::parse_int<std::size_t>(f[0], "t");
        const auto b = io::parse_int<std::size_t>(f[1], "boid_id");
        if (t == log.positions.size()) log.positions.emplace_back();
        if (t + 1 != log.positions.size() || b != log.positions.back().size()) {
            throw InputError("rows not sorted by (t, boid_id) without gaps");
        }
        log.positions.back().push_back(
            {io::parse_double(f[2], "x"), io::parse_double(f[3], "y"), io::parse_double(f[4], "z")});
    });
    for (const auto& row : log.positions) {
        if (row.size() != log.num_boids()) throw FormatError(std::string(source) + ": ragged boid count");
    }
    return log;
}

}  // namespace cubeletworld
