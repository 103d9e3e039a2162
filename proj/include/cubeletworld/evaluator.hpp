#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cubeletworld/error.hpp"
#include "cubeletworld/world.hpp"

namespace cubeletworld {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }

    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
    friend ConfusionCounts operator+(ConfusionCounts a, const ConfusionCounts& b) { return a += b; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

enum class MetricScope { fold, subgraph, aggregate };

struct MetricsRecord {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    ConfusionCounts counts;
    MetricScope scope = MetricScope::fold;
    /// Set when any metric hit a zero denominator and was reported as 0.
    bool degenerate = false;
    /// For aggregates: how many input records were degenerate.
    std::size_t degenerate_count = 0;
};

/// Metrics from pooled counts. A zero denominator yields 0 and flags the record.
inline MetricsRecord metrics_from_counts(const ConfusionCounts& c, MetricScope scope = MetricScope::fold) {
    MetricsRecord r;
    r.counts = c;
    r.scope = scope;
    auto ratio = [&](std::uint64_t num, std::uint64_t den) {
        if (den == 0) {
            r.degenerate = true;
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    r.accuracy = ratio(c.tp + c.tn, c.total());
    r.precision = ratio(c.tp, c.tp + c.fp);
    r.recall = ratio(c.tp, c.tp + c.fn);
    if (r.precision + r.recall > 0.0) {
        r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    } else {
        r.f1 = 0.0;
        r.degenerate = true;
    }
    return r;
}

/// Confusion counts of one predicted frame against its ground truth.
inline ConfusionCounts confusion(const OccupancyFrame& predicted, const OccupancyFrame& truth) {
    if (!(predicted.shape() == truth.shape())) {
        throw InputError("shape mismatch: prediction " + to_string(predicted.shape()) + " vs truth " +
                         to_string(truth.shape()));
    }
    const std::uint64_t both = intersection_size(predicted, truth);
    ConfusionCounts c;
    c.tp = both;
    c.fp = predicted.size() - both;
    c.fn = truth.size() - both;
    c.tn = truth.shape().cell_count() - c.tp - c.fp - c.fn;
    return c;
}

inline ConfusionCounts confusion(std::span<const OccupancyFrame> predicted, std::span<const OccupancyFrame> truth) {
    if (predicted.size() != truth.size()) throw InputError("shape mismatch: differing frame counts");
    ConfusionCounts c;
    for (std::size_t t = 0; t < truth.size(); ++t) c += confusion(predicted[t], truth[t]);
    return c;
}

/// Micro-averaged metrics over every cubelet of every frame.
inline MetricsRecord compute_metrics(std::span<const OccupancyFrame> predicted, std::span<const OccupancyFrame> truth) {
    return metrics_from_counts(confusion(predicted, truth));
}

/// Dense overload: flattened binary tensors of identical shape.
inline MetricsRecord compute_metrics(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth) {
    if (predicted.size() != truth.size()) throw InputError("shape mismatch between prediction and truth tensors");
    ConfusionCounts c;
    for (std::size_t n = 0; n < truth.size(); ++n) {
        const bool p = predicted[n] != 0, y = truth[n] != 0;
        if (p && y) ++c.tp;
        else if (p) ++c.fp;
        else if (y) ++c.fn;
        else ++c.tn;
    }
    return metrics_from_counts(c);
}

namespace detail {
inline MetricsRecord mean_of(std::span<const MetricsRecord> records, bool count_flags) {
    MetricsRecord r;
    r.scope = MetricScope::aggregate;
    for (const auto& x : records) {
        r.accuracy += x.accuracy;
        r.precision += x.precision;
        r.recall += x.recall;
        r.f1 += x.f1;
        r.counts += x.counts;
        r.degenerate_count += count_flags ? (x.degenerate ? 1 : 0) : x.degenerate_count;
        r.degenerate = r.degenerate || x.degenerate;
    }
    const double n = static_cast<double>(records.size());
    r.accuracy /= n;
    r.precision /= n;
    r.recall /= n;
    r.f1 /= n;
    return r;
}
}  // namespace detail

/// Unweighted mean of per-fold metrics; counts and degenerate-subgraph
/// tallies are summed.
inline MetricsRecord aggregate_folds(std::span<const MetricsRecord> records, std::size_t expected_folds) {
    if (records.size() != expected_folds) {
        throw ConfigError("expected " + std::to_string(expected_folds) + " fold records, got " +
                          std::to_string(records.size()));
    }
    return detail::mean_of(records, false);
}

/// Unweighted mean across subgraphs; degenerate records count as reported (0s).
inline MetricsRecord aggregate_subgraphs(std::span<const MetricsRecord> records) {
    if (records.empty()) throw InputError("no subgraph metrics to aggregate");
    return detail::mean_of(records, true);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct ReportRow {
    std::string model;
    Resolution cubelet_size;
    MetricsRecord metrics;
};

/// Four decimals; printf rounds the exact binary value to nearest, ties to even.
inline std::string format_metric(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

inline std::string format_size(const Resolution& r) {
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", v);
        return std::string(buf);
    };
    return "(" + num(r.cx) + ", " + num(r.cy) + ", " + num(r.cz) + ")";
}

/// Coarse to fine by cubelet volume; stable for rows sharing a size.
inline std::vector<ReportRow> sorted_rows(std::vector<ReportRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return a.cubelet_size.volume() > b.cubelet_size.volume();
    });
    return rows;
}

inline nlohmann::json report_json(const std::vector<ReportRow>& rows) {
    nlohmann::json out{{"rows", nlohmann::json::array()}};
    for (const auto& r : sorted_rows(rows)) {
        const auto pooled = metrics_from_counts(r.metrics.counts);
        out["rows"].push_back({
            {"model", r.model},
            {"cubelet_size", {r.cubelet_size.cx, r.cubelet_size.cy, r.cubelet_size.cz}},
            {"accuracy", r.metrics.accuracy},
            {"precision", r.metrics.precision},
            {"recall", r.metrics.recall},
            {"f1", r.metrics.f1},
            {"degenerate_subgraphs", r.metrics.degenerate_count},
            {"pooled",
             {{"accuracy", pooled.accuracy},
              {"precision", pooled.precision},
              {"recall", pooled.recall},
              {"f1", pooled.f1},
              {"tp", r.metrics.counts.tp},
              {"fp", r.metrics.counts.fp},
              {"fn", r.metrics.counts.fn},
              {"tn", r.metrics.counts.tn}}},
        });
    }
    return out;
}

inline std::string render_table(const std::vector<ReportRow>& rows) {
    const std::vector<std::string> header = {"Model", "Size of each cubelet", "Accuracy", "Precision", "Recall",
                                             "F1-Score"};
    std::vector<std::vector<std::string>> cells;
    for (const auto& r : sorted_rows(rows)) {
        cells.push_back({r.model, format_size(r.cubelet_size), format_metric(r.metrics.accuracy),
                         format_metric(r.metrics.precision), format_metric(r.metrics.recall),
                         format_metric(r.metrics.f1)});
    }
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
    }
    auto line = [&](const std::vector<std::string>& row) {
        std::string s;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) s += "  ";
            s += row[c];
            if (c + 1 < row.size()) s.append(width[c] - row[c].size(), ' ');
        }
        return s + "\n";
    };
    std::string out = line(header);
    for (const auto& row : cells) out += line(row);
    return out;
}

}  // namespace cubeletworld
