#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cubeletworld/error.hpp"
#include "cubeletworld/io.hpp"
#include "cubeletworld/rng.hpp"
#include "cubeletworld/world.hpp"

namespace cubeletworld {

struct TerrainPoint {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
    double reflectance = 0.0;

    friend bool operator==(const TerrainPoint&, const TerrainPoint&) = default;
};

/**
 * Static scene: the raw colored points plus their occupancy at unit
 * resolution. The unit occupancy is kept both as a sorted index list and as
 * a dense bitset for O(1) lookups during simulation.
 */
class TerrainMap {
public:
    TerrainMap() : TerrainMap(WorldExtent{}, {}) {}

    TerrainMap(WorldExtent extent, std::vector<TerrainPoint> points)
        : extent_(extent), points_(std::move(points)), shape_(grid_shape(extent, Resolution{})) {
        bits_.assign((shape_.cell_count() + 63) / 64, 0);
        for (const auto& p : points_) {
            if (!extent_.contains(p.x, p.y, p.z)) {
                throw InputError("terrain point (" + io::format_double(p.x) + "," +
                                 io::format_double(p.y) + "," + io::format_double(p.z) +
                                 ") outside world extent");
            }
            if (p.r < 0 || p.r > 255 || p.g < 0 || p.g > 255 || p.b < 0 || p.b > 255) {
                throw InputError("terrain color channel outside [0,255]");
            }
            if (p.reflectance < 0 || p.reflectance > 1) {
                throw InputError("terrain reflectance outside [0,1]");
            }
            const CubeletIndex c = unit_index(p.x, p.y, p.z);
            const auto l = shape_.linear(c);
            if (!(bits_[l / 64] & (std::uint64_t{1} << (l % 64)))) {
                bits_[l / 64] |= std::uint64_t{1} << (l % 64);
                occupied_.push_back(c);
            }
        }
        std::sort(occupied_.begin(), occupied_.end());
    }

    const WorldExtent& extent() const { return extent_; }
    std::span<const TerrainPoint> points() const { return points_; }
    /// Unit-resolution grid the occupancy lives on.
    const GridShape& unit_shape() const { return shape_; }
    /// Sorted unit cubelets containing at least one terrain point.
    std::span<const CubeletIndex> occupied() const { return occupied_; }

    bool is_occupied(const CubeletIndex& c) const {
        if (!shape_.contains(c)) return false;
        const auto l = shape_.linear(c);
        return (bits_[l / 64] >> (l % 64)) & 1U;
    }

    bool is_occupied_at(double x, double y, double z) const {
        if (!extent_.contains(x, y, z)) return false;
        return is_occupied(unit_index(x, y, z));
    }

private:
    CubeletIndex unit_index(double x, double y, double z) const {
        auto axis = [](double v, std::uint32_t n) {
            return std::min(static_cast<std::uint32_t>(v), n - 1);
        };
        return {axis(x, shape_.n1), axis(y, shape_.n2), axis(z, shape_.n3)};
    }

    WorldExtent extent_;
    std::vector<TerrainPoint> points_;
    GridShape shape_;
    std::vector<CubeletIndex> occupied_;
    std::vector<std::uint64_t> bits_;
};

inline constexpr std::string_view kTerrainHeader = "x,y,z,r,g,b,reflectance";

inline std::vector<TerrainPoint> parse_terrain_csv(std::string_view text, std::string_view source) {
    std::vector<TerrainPoint> pts;
    io::for_each_csv_row(text, kTerrainHeader, source, [&](const auto& f, std::size_t) {
        if (f.size() != 7) throw InputError("expected 7 fields");
        pts.push_back({io::parse_double(f[0], "x"), io::parse_double(f[1], "y"),
                       io::parse_double(f[2], "z"), io::parse_double(f[3], "r"),
                       io::parse_double(f[4], "g"), io::parse_double(f[5], "b"),
                       io::parse_double(f[6], "reflectance")});
    });
    return pts;
}

inline void write_terrain_csv(std::ostream& out, std::span<const TerrainPoint> points) {
    out << kTerrainHeader << '\n';
    for (const auto& p : points) {
        out << io::format_double(p.x) << ',' << io::format_double(p.y) << ','
            << io::format_double(p.z) << ',' << io::format_double(p.r) << ','
            << io::format_double(p.g) << ',' << io::format_double(p.b) << ','
            << io::format_double(p.reflectance) << '\n';
    }
}

struct TerrainGenConfig {
    std::uint64_t seed = 7;
    int buildings = 6;
    double building_min_side = 15.0;
    double building_max_side = 30.0;
    double building_min_height = 30.0;
    double building_max_height = 100.0;
    double street_width = 12.0;
    int trees = 12;
    double tree_height = 8.0;
};

/**
 * Procedural city block: solid axis-aligned box buildings, a one-cell-thick
 * street slab along y through the middle of the x axis, and single-column
 * trees lining the street. One point per unit cubelet, at the cell center.
 */
inline std::vector<TerrainPoint> generate_terrain(const WorldExtent& extent,
                                                  const TerrainGenConfig& cfg) {
    Rng rng(cfg.seed);
    std::vector<TerrainPoint> pts;
    const GridShape unit = grid_shape(extent, Resolution{});
    auto cell_center_ok = [&](double x, double y, double z) { return extent.contains(x, y, z); };

    const double street_x0 = std::floor(extent.dx / 2.0 - cfg.street_width / 2.0);
    const double street_x1 = street_x0 + cfg.street_width;

    // street
    for (double x = std::max(0.0, street_x0); x < std::min(extent.dx, street_x1); x += 1.0) {
        for (std::uint32_t y = 0; y < unit.n2; ++y) {
            if (cell_center_ok(x + 0.5, y + 0.5, 0.5)) {
                pts.push_back({x + 0.5, y + 0.5, 0.5, 90, 90, 95, 0.2});
            }
        }
    }
    // trees alongside the street
    for (int t = 0; t < cfg.trees; ++t) {
        const double x = (t % 2 == 0) ? street_x0 - 2.0 : street_x1 + 1.0;
        const double y = std::floor(extent.dy * (t / 2 + 0.5) / std::max(1, (cfg.trees + 1) / 2));
        for (double z = 1.0; z < cfg.tree_height; z += 1.0) {
            if (cell_center_ok(x + 0.5, y + 0.5, z + 0.5)) {
                pts.push_back({x + 0.5, y + 0.5, z + 0.5, 40, 140, 50, 0.4});
            }
        }
    }
    // buildings, kept off the street
    for (int b = 0; b < cfg.buildings; ++b) {
        const double sx = std::floor(rng.uniform(cfg.building_min_side, cfg.building_max_side));
        const double sy = std::floor(rng.uniform(cfg.building_min_side, cfg.building_max_side));
        const double h = std::floor(rng.uniform(cfg.building_min_height, cfg.building_max_height));
        const bool left = (b % 2 == 0);
        const double lo = left ? 0.0 : street_x1 + 4.0;
        const double hi = left ? street_x0 - 4.0 - sx : extent.dx - sx;
        if (hi <= lo) continue;
        const double x0 = std::floor(rng.uniform(lo, hi));
        const double y0 = std::floor(rng.uniform(0.0, std::max(0.0, extent.dy - sy)));
        const double grey = std::floor(rng.uniform(100.0, 200.0));
        for (double x = x0; x < x0 + sx; x += 1.0)
            for (double y = y0; y < y0 + sy; y += 1.0)
                for (double z = 0.0; z < h; z += 1.0)
                    if (cell_center_ok(x + 0.5, y + 0.5, z + 0.5))
                        pts.push_back({x + 0.5, y + 0.5, z + 0.5, grey, grey, grey, 0.6});
    }
    return pts;
}

}  // namespace cubeletworld
