#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cubeletworld/boids.hpp"
#include "cubeletworld/error.hpp"
#include "cubeletworld/io.hpp"
#include "cubeletworld/vec3.hpp"
#include "cubeletworld/world.hpp"

namespace cubeletworld {

struct GridSpec {
    WorldExtent extent;
    Resolution resolution;
    GridShape shape;

    GridSpec() = default;
    GridSpec(WorldExtent e, Resolution r) : extent(e), resolution(r), shape(grid_shape(e, r)) {
        check_fits(e, r);
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Floor-divides each in-extent point into its cubelet.
inline OccupancyFrame voxelize_frame(std::span<const Vec3> points, const GridSpec& grid, std::int64_t t = 0) {
    std::vector<CubeletIndex> occ;
    occ.reserve(points.size());
    auto axis = [](double v, double cell, std::uint32_t n) {
        return std::min(static_cast<std::uint32_t>(std::floor(v / cell)), n - 1);
    };
    for (const auto& p : points) {
        if (!grid.extent.contains(p.x, p.y, p.z)) {
            throw InputError("point (" + io::format_double(p.x) + "," + io::format_double(p.y) + "," +
                             io::format_double(p.z) + ") at t=" + std::to_string(t) +
                             " outside world extent");
        }
        occ.push_back({axis(p.x, grid.resolution.cx, grid.shape.n1),
                       axis(p.y, grid.resolution.cy, grid.shape.n2),
                       axis(p.z, grid.resolution.cz, grid.shape.n3)});
    }
    return {t, grid.shape, std::move(occ)};
}

inline std::vector<OccupancyFrame> voxelize_log(const TrajectoryLog& log, const GridSpec& grid) {
    std::vector<OccupancyFrame> frames;
    frames.reserve(log.num_steps());
    for (std::size_t t = 0; t < log.positions.size(); ++t) {
        frames.push_back(voxelize_frame(log.positions[t], grid, static_cast<std::int64_t>(t)));
    }
    return frames;
}

/// Integer ratio coarse/fine on one axis, or 0 when the cells do not nest.
inline std::uint32_t nesting_ratio(double fine, double coarse) {
    const double q = coarse / fine;
    const double r = std::round(q);
    if (r < 1.0 || std::abs(q - r) > 1e-9 * r) return 0;
    return static_cast<std::uint32_t>(r);
}

/**
 * OR-aggregation onto a coarser grid: a coarse cubelet is occupied iff any
 * fine cubelet inside it is. Both grids must share the extent and the coarse
 * edge must be an integer multiple of the fine edge on every axis.
 */
inline OccupancyFrame aggregate(const OccupancyFrame& frame, const GridSpec& fine, const GridSpec& coarse) {
    if (!(frame.shape() == fine.shape)) throw InputError("frame shape does not match fine grid");
    if (!(fine.extent == coarse.extent)) throw InputError("aggregation grids must share the world extent");
    const auto ri = nesting_ratio(fine.resolution.cx, coarse.resolution.cx);
    const auto rj = nesting_ratio(fine.resolution.cy, coarse.resolution.cy);
    const auto rk = nesting_ratio(fine.resolution.cz, coarse.resolution.cz);
    if (ri == 0 || rj == 0 || rk == 0) {
        throw InputError("coarse resolution is not an integer multiple of the fine resolution; "
                         "re-voxelize from the trajectory points instead");
    }
    std::vector<CubeletIndex> occ;
    occ.reserve(frame.size());
    for (const auto& c : frame.occupied()) occ.push_back({c.i / ri, c.j / rj, c.k / rk});
    return {frame.t(), coarse.shape, std::move(occ)};
}

/// One training instance: t1 history frames followed by t2 target frames.
struct Sample {
    std::int64_t start_t = 0;
    std::vector<OccupancyFrame> x;
    std::vector<OccupancyFrame> y;
};

/// Number of stride-1 windows of length t1 + t2 in T frames.
inline std::size_t window_count(std::size_t num_frames, std::size_t t1, std::size_t t2) {
    if (t1 < 1 || t2 < 1) throw ConfigError("t1 and t2 must be >= 1");
    if (num_frames < t1 + t2) {
        throw InputError("sequence of " + std::to_string(num_frames) + " frames is too short; need at least " +
                         std::to_string(t1 + t2) + " (t1 + t2)");
    }
    return num_frames - (t1 + t2) + 1;
}

inline Sample make_sample(std::span<const OccupancyFrame> frames, std::size_t start, std::size_t t1,
                          std::size_t t2) {
    Sample s;
    s.start_t = static_cast<std::int64_t>(start);
    s.x.assign(frames.begin() + static_cast<std::ptrdiff_t>(start),
               frames.begin() + static_cast<std::ptrdiff_t>(start + t1));
    s.y.assign(frames.begin() + static_cast<std::ptrdiff_t>(start + t1),
               frames.begin() + static_cast<std::ptrdiff_t>(start + t1 + t2));
    return s;
}

inline std::vector<Sample> make_windows(std::span<const OccupancyFrame> frames, std::size_t t1, std::size_t t2) {
    const auto n = window_count(frames.size(), t1, t2);
    std::vector<Sample> out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) out.push_back(make_sample(frames, s, t1, t2));
    return out;
}

/**
 * Contiguous time-ordered blocks. `fold_of[s]` is the fold in which sample s
 * is held out; the first `num_samples % num_folds` blocks get one extra.
 */
struct FoldAssignment {
    std::size_t num_folds = 0;
    std::vector<std::uint32_t> fold_of;

    std::size_t test_size(std::size_t fold) const {
        return static_cast<std::size_t>(std::count(fold_of.begin(), fold_of.end(), fold));
    }
    std::size_t train_size(std::size_t fold) const { return fold_of.size() - test_size(fold); }

    std::vector<std::size_t> test_indices(std::size_t fold) const {
        std::vector<std::size_t> out;
        for (std::size_t s = 0; s < fold_of.size(); ++s)
            if (fold_of[s] == fold) out.push_back(s);
        return out;
    }
    std::vector<std::size_t> train_indices(std::size_t fold) const {
        std::vector<std::size_t> out;
        for (std::size_t s = 0; s < fold_of.size(); ++s)
            if (fold_of[s] != fold) out.push_back(s);
        return out;
    }
};

inline FoldAssignment split_folds(std::size_t num_samples, std::size_t num_folds) {
    if (num_folds < 2) throw ConfigError("fold count must be >= 2");
    if (num_samples < num_folds) {
        throw ConfigError("need at least " + std::to_string(num_folds) + " samples for " +
                          std::to_string(num_folds) + " folds, have " + std::to_string(num_samples));
    }
    FoldAssignment a{num_folds, std::vector<std::uint32_t>(num_samples)};
    const std::size_t base = num_samples / num_folds;
    const std::size_t extra = num_samples % num_folds;
    std::size_t s = 0;
    for (std::size_t f = 0; f < num_folds; ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        for (std::size_t n = 0; n < len; ++n) a.fold_of[s++] = static_cast<std::uint32_t>(f);
    }
    return a;
}

struct DatasetManifest {
    GridSpec grid;
    std::size_t t1 = 10;
    std::size_t t2 = 10;
    std::size_t num_samples = 0;
    FoldAssignment folds;
    std::uint64_t seed = 0;
    std::string source_hash;
};

}  // namespace cubeletworld
