#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cubeletworld/error.hpp"

namespace cubeletworld {

/// Bounding box of the world. Coordinates live in [0,dx) x [0,dy) x [0,dz).
struct WorldExtent {
    double dx = 827.0;
    double dy = 748.0;
    double dz = 173.0;

    WorldExtent() = default;
    WorldExtent(double x, double y, double z) : dx(x), dy(y), dz(z) {
        if (!(dx > 0.0 && dy > 0.0 && dz > 0.0) || !std::isfinite(dx) || !std::isfinite(dy) ||
            !std::isfinite(dz)) {
            throw ConfigError("world extent must be strictly positive");
        }
    }

    bool contains(double x, double y, double z) const {
        return x >= 0.0 && x < dx && y >= 0.0 && y < dy && z >= 0.0 && z < dz;
    }

    friend bool operator==(const WorldExtent&, const WorldExtent&) = default;
};

/// Cubelet edge length along each axis.
struct Resolution {
    double cx = 1.0;
    double cy = 1.0;
    double cz = 1.0;

    Resolution() = default;
    Resolution(double x, double y, double z) : cx(x), cy(y), cz(z) {
        if (!(cx > 0.0 && cy > 0.0 && cz > 0.0) || !std::isfinite(cx) || !std::isfinite(cy) ||
            !std::isfinite(cz)) {
            throw ConfigError("resolution must be strictly positive");
        }
    }

    double volume() const { return cx * cy * cz; }

    friend bool operator==(const Resolution&, const Resolution&) = default;
};

/// Throws unless `res` fits inside `extent` on every axis.
inline void check_fits(const WorldExtent& extent, const Resolution& res) {
    if (res.cx > extent.dx || res.cy > extent.dy || res.cz > extent.dz) {
        throw ConfigError("resolution larger than world extent");
    }
}

struct CubeletIndex {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    std::uint32_t k = 0;

    friend auto operator<=>(const CubeletIndex&, const CubeletIndex&) = default;
};

/// Number of cubelets along each axis (n1, n2, n3).
struct GridShape {
    std::uint32_t n1 = 1;
    std::uint32_t n2 = 1;
    std::uint32_t n3 = 1;

    std::uint64_t cell_count() const {
        return std::uint64_t{n1} * std::uint64_t{n2} * std::uint64_t{n3};
    }

    bool contains(const CubeletIndex& c) const { return c.i < n1 && c.j < n2 && c.k < n3; }

    /// Row-major position with k varying fastest.
    std::uint64_t linear(const CubeletIndex& c) const {
        return (std::uint64_t{c.i} * n2 + c.j) * n3 + c.k;
    }

    CubeletIndex unlinear(std::uint64_t l) const {
        const auto k = static_cast<std::uint32_t>(l % n3);
        l /= n3;
        const auto j = static_cast<std::uint32_t>(l % n2);
        return {static_cast<std::uint32_t>(l / n2), j, k};
    }

    friend bool operator==(const GridShape&, const GridShape&) = default;
};

inline std::string to_string(const CubeletIndex& c) {
    return "(" + std::to_string(c.i) + "," + std::to_string(c.j) + "," + std::to_string(c.k) + ")";
}

inline std::string to_string(const GridShape& s) {
    return "(" + std::to_string(s.n1) + "," + std::to_string(s.n2) + "," + std::to_string(s.n3) + ")";
}

/// Per-axis count ceil(extent / resolution).
inline GridShape grid_shape(const WorldExtent& extent, const Resolution& res) {
    auto axis = [](double len, double cell) {
        const double n = std::ceil(len / cell);
        if (n < 1.0 || n > 4.0e9) throw ConfigError("grid axis count out of range");
        return static_cast<std::uint32_t>(n);
    };
    return {axis(extent.dx, res.cx), axis(extent.dy, res.cy), axis(extent.dz, res.cz)};
}

/// Dense binary volume of one frame, k-fastest layout.
struct DenseFrame {
    GridShape shape;
    std::vector<std::uint8_t> cells;

    std::uint8_t at(const CubeletIndex& c) const { return cells[shape.linear(c)]; }
};

/**
 * Sparse occupancy at one timestep: the sorted, duplicate-free list of
 * occupied cubelets. Immutable after construction.
 */
class OccupancyFrame {
public:
    OccupancyFrame() = default;

    /// Sorts and deduplicates `occupied`; throws BoundsError for any index
    /// outside `shape`.
    OccupancyFrame(std::int64_t t, GridShape shape, std::vector<CubeletIndex> occupied)
        : t_(t), shape_(shape), occupied_(std::move(occupied)) {
        for (const auto& c : occupied_) {
            if (!shape_.contains(c)) {
                throw BoundsError("cubelet " + to_string(c) + " outside grid " + to_string(shape_));
            }
        }
        std::sort(occupied_.begin(), occupied_.end());
        occupied_.erase(std::unique(occupied_.begin(), occupied_.end()), occupied_.end());
    }

    std::int64_t t() const { return t_; }
    const GridShape& shape() const { return shape_; }
    std::span<const CubeletIndex> occupied() const { return occupied_; }
    std::size_t size() const { return occupied_.size(); }
    bool empty() const { return occupied_.empty(); }

    /// True iff `idx` is occupied. Throws BoundsError when `idx` is outside the grid.
    bool query(const CubeletIndex& idx) const {
        if (!shape_.contains(idx)) {
            throw BoundsError("query " + to_string(idx) + " outside grid " + to_string(shape_));
        }
        return std::binary_search(occupied_.begin(), occupied_.end(), idx);
    }

    /// Same occupancy relabelled to timestep `t`.
    OccupancyFrame with_time(std::int64_t t) const {
        OccupancyFrame f = *this;
        f.t_ = t;
        return f;
    }

    friend bool operator==(const OccupancyFrame&, const OccupancyFrame&) = default;

private:
    std::int64_t t_ = 0;
    GridShape shape_;
    std::vector<CubeletIndex> occupied_;
};

inline DenseFrame frame_to_dense(const OccupancyFrame& frame) {
    DenseFrame d{frame.shape(), std::vector<std::uint8_t>(frame.shape().cell_count(), 0)};
    for (const auto& c : frame.occupied()) d.cells[frame.shape().linear(c)] = 1;
    return d;
}

inline OccupancyFrame dense_to_frame(const DenseFrame& dense, std::int64_t t) {
    if (dense.cells.size() != dense.shape.cell_count()) {
        throw InputError("dense frame size does not match its shape");
    }
    std::vector<CubeletIndex> occ;
    for (std::uint64_t l = 0; l < dense.cells.size(); ++l) {
        if (dense.cells[l]) occ.push_back(dense.shape.unlinear(l));
    }
    return {t, dense.shape, std::move(occ)};
}

/// Number of cubelets on which two same-shaped frames agree in occupancy.
inline std::size_t intersection_size(const OccupancyFrame& a, const OccupancyFrame& b) {
    std::size_t n = 0;
    auto ia = a.occupied().begin();
    auto ib = b.occupied().begin();
    while (ia != a.occupied().end() && ib != b.occupied().end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++n;
            ++ia;
            ++ib;
        }
    }
    return n;
}

}  // namespace cubeletworld
