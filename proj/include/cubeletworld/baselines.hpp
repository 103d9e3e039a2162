#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cubeletworld/discretizer.hpp"
#include "cubeletworld/error.hpp"
#include "cubeletworld/world.hpp"

namespace cubeletworld {

/**
 * Occupancy probabilities for one frame. Cells listed in `cells` carry their
 * own probability; every other cell has probability `background`.
 */
struct ProbabilityFrame {
    GridShape shape;
    double background = 0.0;
    std::vector<std::pair<CubeletIndex, double>> cells;  // sorted by index

    double at(const CubeletIndex& c) const {
        auto it = std::lower_bound(cells.begin(), cells.end(), c,
                                   [](const auto& e, const CubeletIndex& v) { return e.first < v; });
        return (it != cells.end() && it->first == c) ? it->second : background;
    }
};

/// Occupied iff p > threshold.
inline OccupancyFrame binarize(const ProbabilityFrame& p, double threshold, std::int64_t t = 0) {
    std::vector<CubeletIndex> occ;
    if (p.background > threshold) {
        // every unlisted cell is occupied; walk the whole grid
        std::size_t next = 0;
        for (std::uint64_t l = 0; l < p.shape.cell_count(); ++l) {
            const auto c = p.shape.unlinear(l);
            if (next < p.cells.size() && p.cells[next].first == c) {
                if (p.cells[next].second > threshold) occ.push_back(c);
                ++next;
            } else {
                occ.push_back(c);
            }
        }
    } else {
        for (const auto& [c, prob] : p.cells)
            if (prob > threshold) occ.push_back(c);
    }
    return {t, p.shape, std::move(occ)};
}

/// A one-step forecaster: history frames (oldest first) -> next-frame probabilities.
template <typename P>
concept Predictor = requires(const P& p, std::span<const OccupancyFrame> history) {
    { p.predict(history) } -> std::same_as<ProbabilityFrame>;
};

namespace detail {
inline void require_history(std::span<const OccupancyFrame> history) {
    if (history.empty()) throw InputError("predictor needs at least one history frame");
}
}  // namespace detail

/// Repeats the most recent frame.
struct PersistencePredictor {
    ProbabilityFrame predict(std::span<const OccupancyFrame> history) const {
        detail::require_history(history);
        ProbabilityFrame p{history.back().shape(), 0.0, {}};
        for (const auto& c : history.back().occupied()) p.cells.emplace_back(c, 1.0);
        return p;
    }
};

/// Fraction of history frames in which each cubelet was occupied.
struct FrequencyPredictor {
    ProbabilityFrame predict(std::span<const OccupancyFrame> history) const {
        detail::require_history(history);
        std::vector<CubeletIndex> all;
        for (const auto& f : history) all.insert(all.end(), f.occupied().begin(), f.occupied().end());
        std::sort(all.begin(), all.end());
        ProbabilityFrame p{history.back().shape(), 0.0, {}};
        const double inv = 1.0 / static_cast<double>(history.size());
        for (std::size_t a = 0; a < all.size();) {
            std::size_t b = a;
            while (b < all.size() && all[b] == all[a]) ++b;
            p.cells.emplace_back(all[a], static_cast<double>(b - a) * inv);
            a = b;
        }
        return p;
    }
};

/**
 * Logistic model over each cubelet's own occupancy and its six face
 * neighbors' occupancy at every history frame. Feature `h * 7 + o` is the
 * occupancy at history frame h (oldest first) of the neighbor at offset o,
 * with offsets ordered self, -i, +i, -j, +j, -k, +k; the last weight is the
 * bias. Neighbors outside the grid read 0.
 */
struct NeighborhoodModel {
    static constexpr std::size_t kOffsets = 7;

    std::size_t t1 = 0;
    std::vector<double> weights;
    bool trained = false;
    double threshold = 0.5;

    NeighborhoodModel() = default;
    explicit NeighborhoodModel(std::size_t history_len, double thresh = 0.5)
        : t1(history_len), weights(feature_dim(history_len), 0.0), threshold(thresh) {
        if (history_len < 1) throw ConfigError("t1 must be >= 1");
        if (!(thresh > 0.0 && thresh < 1.0)) throw ConfigError("threshold must be in (0,1)");
    }

    static std::size_t feature_dim(std::size_t history_len) { return history_len * kOffsets + 1; }
    std::size_t bias_index() const { return t1 * kOffsets; }

    /// Cells with at least one nonzero feature and the indices of those
    /// features, ascending by cell.
    static std::vector<std::pair<CubeletIndex, std::vector<std::uint32_t>>> active_features(
        std::span<const OccupancyFrame> history) {
        static constexpr std::array<std::array<int, 3>, kOffsets> kDelta = {
            {{0, 0, 0}, {-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}}};
        std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> by_cell;
        const auto shape = history.back().shape();
        for (std::size_t h = 0; h < history.size(); ++h) {
            for (const auto& q : history[h].occupied()) {
                for (std::size_t o = 0; o < kOffsets; ++o) {
                    // cell c whose neighbor at offset o is q
                    const std::int64_t ci = std::int64_t{q.i} - kDelta[o][0];
                    const std::int64_t cj = std::int64_t{q.j} - kDelta[o][1];
                    const std::int64_t ck = std::int64_t{q.k} - kDelta[o][2];
                    if (ci < 0 || cj < 0 || ck < 0 || ci >= shape.n1 || cj >= shape.n2 || ck >= shape.n3) continue;
                    const CubeletIndex c{static_cast<std::uint32_t>(ci), static_cast<std::uint32_t>(cj),
                                         static_cast<std::uint32_t>(ck)};
                    by_cell[shape.linear(c)].push_back(static_cast<std::uint32_t>(h * kOffsets + o));
                }
            }
        }
        std::vector<std::pair<CubeletIndex, std::vector<std::uint32_t>>> out;
        out.reserve(by_cell.size());
        for (auto& [l, f] : by_cell) out.emplace_back(shape.unlinear(l), std::move(f));
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        return out;
    }

    static double sigmoid(double z) {
        return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    }

    ProbabilityFrame predict(std::span<const OccupancyFrame> history) const {
        detail::require_history(history);
        if (history.size() != t1) {
            throw InputError("neighborhood model expects " + std::to_string(t1) + " history frames, got " +
                             std::to_string(history.size()));
        }
        const double bias = weights[bias_index()];
        ProbabilityFrame p{history.back().shape(), sigmoid(bias), {}};
        for (const auto& [c, feats] : active_features(history)) {
            double z = bias;
            for (auto f : feats) z += weights[f];
            p.cells.emplace_back(c, sigmoid(z));
        }
        return p;
    }
};

struct TrainOptions {
    std::size_t epochs = 200;
    double learning_rate = 0.05;
};

/**
 * Full-batch fit of the neighborhood model on mean log-loss against each
 * sample's first future frame, starting from zero weights. Updates use Adam
 * (beta1 0.9, beta2 0.999) so the step size does not depend on how sparse the
 * grid is. Cells whose features are all zero share the bias-only logit and
 * are accounted for in closed form rather than enumerated.
 */
inline NeighborhoodModel train_neighborhood(NeighborhoodModel model, std::span<const Sample> samples,
                                            const TrainOptions& opts = {}) {
    if (samples.empty()) throw ConfigError("cannot train on an empty sample list");
    if (model.t1 == 0) throw ConfigError("model has no history length");
    const auto shape = samples.front().x.front().shape();

    struct Prepared {
        std::vector<std::vector<std::uint32_t>> feats;
        std::vector<std::uint8_t> target;
        double zero_cells = 0;      // cells with no active feature
        double zero_positives = 0;  // of which occupied in the target
    };
    std::vector<Prepared> prep;
    prep.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.x.size() != model.t1 || s.y.empty()) throw InputError("sample history length does not match model");
        if (!(s.x.front().shape() == shape)) throw InputError("samples do not share a grid shape");
        Prepared p;
        const auto& target = s.y.front();
        std::size_t active_pos = 0;
        for (auto& [c, f] : NeighborhoodModel::active_features(s.x)) {
            const bool y = target.query(c);
            active_pos += y;
            p.target.push_back(y);
            p.feats.push_back(std::move(f));
        }
        p.zero_cells = static_cast<double>(shape.cell_count() - p.feats.size());
        p.zero_positives = static_cast<double>(target.size() - active_pos);
        prep.push_back(std::move(p));
    }

    const double total = static_cast<double>(shape.cell_count()) * static_cast<double>(samples.size());
    const std::size_t dim = model.weights.size();
    const std::size_t bias = model.bias_index();
    std::vector<double> grad(dim), m(dim, 0.0), v(dim, 0.0);
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        const double bias_p = NeighborhoodModel::sigmoid(model.weights[bias]);
        for (const auto& p : prep) {
            for (std::size_t c = 0; c < p.feats.size(); ++c) {
                double z = model.weights[bias];
                for (auto f : p.feats[c]) z += model.weights[f];
                const double err = NeighborhoodModel::sigmoid(z) - p.target[c];
                for (auto f : p.feats[c]) grad[f] += err;
                grad[bias] += err;
            }
            grad[bias] += p.zero_cells * bias_p - p.zero_positives;
        }
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(epoch));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(epoch));
        for (std::size_t d = 0; d < dim; ++d) {
            const double g = grad[d] / total;
            m[d] = beta1 * m[d] + (1 - beta1) * g;
            v[d] = beta2 * v[d] + (1 - beta2) * g * g;
            model.weights[d] -= opts.learning_rate * (m[d] / c1) / (std::sqrt(v[d] / c2) + eps);
        }
    }
    model.trained = true;
    return model;
}

/**
 * Multi-step rollout: predict one frame, binarize it, slide it into the
 * history in place of the oldest frame, repeat `t2` times.
 */
template <Predictor P>
std::vector<OccupancyFrame> forecast_recursive(const P& predictor, std::span<const OccupancyFrame> history,
                                               std::size_t t2, double threshold = 0.5) {
    if (t2 < 1) throw ConfigError("t2 must be >= 1");
    if (history.empty()) throw InputError("forecast needs at least one history frame");
    std::vector<OccupancyFrame> window(history.begin(), history.end());
    std::vector<OccupancyFrame> out;
    out.reserve(t2);
    const auto t0 = history.back().t();
    for (std::size_t step = 0; step < t2; ++step) {
        auto next = binarize(predictor.predict(window), threshold, t0 + 1 + static_cast<std::int64_t>(step));
        window.erase(window.begin());
        window.push_back(next);
        out.push_back(std::move(next));
    }
    return out;
}

}  // namespace cubeletworld
