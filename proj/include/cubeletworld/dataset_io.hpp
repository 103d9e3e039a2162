#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cubeletworld/discretizer.hpp"
#include "cubeletworld/error.hpp"
#include "cubeletworld/io.hpp"
#include "cubeletworld/world.hpp"

namespace cubeletworld {

// ---------------------------------------------------------------------------
// Sparse frames: CSV `t,i,j,k`, sorted by (t, i, j, k)
// ---------------------------------------------------------------------------

inline constexpr std::string_view kFramesHeader = "t,i,j,k";

inline void write_frames_csv(std::ostream& out, std::span<const OccupancyFrame> frames) {
    out << kFramesHeader << '\n';
    for (const auto& f : frames) {
        for (const auto& c : f.occupied()) out << f.t() << ',' << c.i << ',' << c.j << ',' << c.k << '\n';
    }
}

/// Frames 0..num_frames-1 on `shape`; timesteps without rows are empty.
inline std::vector<OccupancyFrame> parse_frames_csv(std::string_view text, const GridShape& shape,
                                                    std::size_t num_frames, std::string_view source) {
    std::vector<std::vector<CubeletIndex>> occ(num_frames);
    std::int64_t last_t = -1;
    io::for_each_csv_row(text, kFramesHeader, source, [&](const auto& f, std::size_t) {
        if (f.size() != 4) throw InputError("expected 4 fields");
        const auto t = io::parse_int<std::int64_t>(f[0], "t");
        if (t < 0 || static_cast<std::size_t>(t) >= num_frames) throw InputError("timestep out of range");
        if (t < last_t) throw InputError("rows not sorted by t");
        last_t = t;
        occ[static_cast<std::size_t>(t)].push_back({io::parse_int<std::uint32_t>(f[1], "i"),
                                                     io::parse_int<std::uint32_t>(f[2], "j"),
                                                     io::parse_int<std::uint32_t>(f[3], "k")});
    });
    std::vector<OccupancyFrame> frames;
    frames.reserve(num_frames);
    for (std::size_t t = 0; t < num_frames; ++t) {
        frames.emplace_back(static_cast<std::int64_t>(t), shape, std::move(occ[t]));
    }
    return frames;
}

// ---------------------------------------------------------------------------
// Dense binary formats
//
//   CWDS: "CWDS" u32 version, u32 t1, t2, n1, n2, n3, num_samples, then per
//         sample its t1 X frames followed by its t2 Y frames.
//   CWPR: "CWPR" u32 version, u32 t2, n1, n2, n3, num_samples, then per
//         sample its t2 predicted frames.
//
// All integers little-endian. Each frame is bit-packed in k-fastest cell
// order, least significant bit first within a byte, padded to a whole byte.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kDenseFormatVersion = 1;

inline std::uint64_t packed_frame_bytes(const GridShape& shape) { return (shape.cell_count() + 7) / 8; }

inline void write_packed_frame(std::ostream& out, const OccupancyFrame& frame) {
    std::vector<char> bytes(packed_frame_bytes(frame.shape()), 0);
    for (const auto& c : frame.occupied()) {
        const auto l = frame.shape().linear(c);
        bytes[l / 8] = static_cast<char>(static_cast<unsigned char>(bytes[l / 8]) | (1U << (l % 8)));
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline OccupancyFrame read_packed_frame(std::string_view data, std::size_t offset, const GridShape& shape,
                                        std::int64_t t) {
    const auto nbytes = packed_frame_bytes(shape);
    if (offset + nbytes > data.size()) throw FormatError("truncated payload");
    std::vector<CubeletIndex> occ;
    for (std::uint64_t b = 0; b < nbytes; ++b) {
        const auto byte = static_cast<unsigned char>(data[offset + b]);
        if (byte == 0) continue;
        for (unsigned bit = 0; bit < 8; ++bit) {
            if (!(byte & (1U << bit))) continue;
            const auto l = b * 8 + bit;
            if (l >= shape.cell_count()) throw FormatError("nonzero padding bit");
            occ.push_back(shape.unlinear(l));
        }
    }
    return {t, shape, std::move(occ)};
}

inline std::uint64_t dataset_file_bytes(std::size_t t1, std::size_t t2, const GridShape& shape,
                                        std::size_t num_samples) {
    return 32 + std::uint64_t{num_samples} * (t1 + t2) * packed_frame_bytes(shape);
}

/// Streams the CWDS file for the stride-1 windows over `frames`.
inline void write_dataset(std::ostream& out, std::span<const OccupancyFrame> frames, const GridShape& shape,
                          std::size_t t1, std::size_t t2) {
    const auto n = window_count(frames.size(), t1, t2);
    out.write("CWDS", 4);
    for (std::uint32_t v : {kDenseFormatVersion, static_cast<std::uint32_t>(t1), static_cast<std::uint32_t>(t2),
                            shape.n1, shape.n2, shape.n3, static_cast<std::uint32_t>(n)}) {
        io::put_u32(out, v);
    }
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t f = s; f < s + t1 + t2; ++f) write_packed_frame(out, frames[f]);
    }
}

struct DenseDatasetHeader {
    std::uint32_t version = kDenseFormatVersion;
    std::uint32_t t1 = 0;
    std::uint32_t t2 = 0;
    GridShape shape;
    std::uint32_t num_samples = 0;
};

inline DenseDatasetHeader read_dataset_header(std::string_view data) {
    if (data.size() < 32 || data.substr(0, 4) != "CWDS") throw FormatError("not a CWDS dataset (bad magic)");
    DenseDatasetHeader h;
    h.version = io::get_u32(data, 4);
    if (h.version != kDenseFormatVersion) throw FormatError("unsupported CWDS version " + std::to_string(h.version));
    h.t1 = io::get_u32(data, 8);
    h.t2 = io::get_u32(data, 12);
    h.shape = {io::get_u32(data, 16), io::get_u32(data, 20), io::get_u32(data, 24)};
    h.num_samples = io::get_u32(data, 28);
    return h;
}

/// Decodes a whole CWDS file into sparse samples. Frame timesteps are
/// relative to the sample (0..t1+t2-1); `start_t` is the sample ordinal.
inline std::vector<Sample> read_dataset(std::string_view data, DenseDatasetHeader* header_out = nullptr) {
    const auto h = read_dataset_header(data);
    const auto fb = packed_frame_bytes(h.shape);
    if (data.size() != dataset_file_bytes(h.t1, h.t2, h.shape, h.num_samples)) {
        throw FormatError("CWDS payload size does not match header");
    }
    std::vector<Sample> out(h.num_samples);
    std::size_t off = 32;
    for (std::uint32_t s = 0; s < h.num_samples; ++s) {
        out[s].start_t = s;
        for (std::uint32_t f = 0; f < h.t1 + h.t2; ++f, off += fb) {
            auto frame = read_packed_frame(data, off, h.shape, static_cast<std::int64_t>(s) + f);
            (f < h.t1 ? out[s].x : out[s].y).push_back(std::move(frame));
        }
    }
    if (header_out) *header_out = h;
    return out;
}

inline std::uint64_t predictions_file_bytes(std::size_t t2, const GridShape& shape, std::size_t num_samples) {
    return 28 + std::uint64_t{num_samples} * t2 * packed_frame_bytes(shape);
}

/// `predictions[s]` holds the t2 predicted frames of sample s.
inline void write_predictions(std::ostream& out, const std::vector<std::vector<OccupancyFrame>>& predictions,
                              const GridShape& shape, std::size_t t2) {
    out.write("CWPR", 4);
    for (std::uint32_t v : {kDenseFormatVersion, static_cast<std::uint32_t>(t2), shape.n1, shape.n2, shape.n3,
                            static_cast<std::uint32_t>(predictions.size())}) {
        io::put_u32(out, v);
    }
    for (const auto& sample : predictions) {
        if (sample.size() != t2) throw InputError("prediction does not have t2 frames");
        for (const auto& f : sample) write_packed_frame(out, f);
    }
}

inline std::vector<std::vector<OccupancyFrame>> read_predictions(std::string_view data) {
    if (data.size() < 28 || data.substr(0, 4) != "CWPR") throw FormatError("not a CWPR file (bad magic)");
    if (io::get_u32(data, 4) != kDenseFormatVersion) throw FormatError("unsupported CWPR version");
    const auto t2 = io::get_u32(data, 8);
    const GridShape shape{io::get_u32(data, 12), io::get_u32(data, 16), io::get_u32(data, 20)};
    const auto n = io::get_u32(data, 24);
    if (data.size() != predictions_file_bytes(t2, shape, n)) throw FormatError("CWPR payload size mismatch");
    std::vector<std::vector<OccupancyFrame>> out(n);
    std::size_t off = 28;
    for (auto& sample : out) {
        for (std::uint32_t f = 0; f < t2; ++f, off += packed_frame_bytes(shape)) {
            sample.push_back(read_packed_frame(data, off, shape, f));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sparse predictions: CSV `sample,step,i,j,k`
// ---------------------------------------------------------------------------

inline constexpr std::string_view kPredictionsHeader = "sample,step,i,j,k";

inline void write_predictions_csv(std::ostream& out, const std::vector<std::vector<OccupancyFrame>>& predictions) {
    out << kPredictionsHeader << '\n';
    for (std::size_t s = 0; s < predictions.size(); ++s) {
        for (std::size_t step = 0; step < predictions[s].size(); ++step) {
            for (const auto& c : predictions[s][step].occupied()) {
                out << s << ',' << step << ',' << c.i << ',' << c.j << ',' << c.k << '\n';
            }
        }
    }
}

inline std::vector<std::vector<OccupancyFrame>> parse_predictions_csv(std::string_view text, const GridShape& shape,
                                                                      std::size_t num_samples, std::size_t t2,
                                                                      std::string_view source) {
    std::vector<std::vector<std::vector<CubeletIndex>>> occ(num_samples, std::vector<std::vector<CubeletIndex>>(t2));
    io::for_each_csv_row(text, kPredictionsHeader, source, [&](const auto& f, std::size_t) {
        if (f.size() != 5) throw InputError("expected 5 fields");
        const auto s = io::parse_int<std::size_t>(f[0], "sample");
        const auto step = io::parse_int<std::size_t>(f[1], "step");
        if (s >= num_samples || step >= t2) throw InputError("sample or step out of range");
        occ[s][step].push_back({io::parse_int<std::uint32_t>(f[2], "i"), io::parse_int<std::uint32_t>(f[3], "j"),
                                io::parse_int<std::uint32_t>(f[4], "k")});
    });
    std::vector<std::vector<OccupancyFrame>> out(num_samples);
    for (std::size_t s = 0; s < num_samples; ++s) {
        for (std::size_t step = 0; step < t2; ++step) {
            out[s].emplace_back(static_cast<std::int64_t>(step), shape, std::move(occ[s][step]));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Manifest JSON
// ---------------------------------------------------------------------------

inline nlohmann::json manifest_to_json(const DatasetManifest& m) {
    nlohmann::json j;
    j["grid"] = {
        {"extent", {m.grid.extent.dx, m.grid.extent.dy, m.grid.extent.dz}},
        {"resolution", {m.grid.resolution.cx, m.grid.resolution.cy, m.grid.resolution.cz}},
        {"shape", {m.grid.shape.n1, m.grid.shape.n2, m.grid.shape.n3}},
    };
    j["t1"] = m.t1;
    j["t2"] = m.t2;
    j["num_samples"] = m.num_samples;
    j["num_folds"] = m.folds.num_folds;
    j["folds"] = m.folds.fold_of;
    j["seed"] = m.seed;
    j["source_hash"] = m.source_hash;
    return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
    try {
        DatasetManifest m;
        const auto& g = j.at("grid");
        const auto e = g.at("extent").get<std::vector<double>>();
        const auto r = g.at("resolution").get<std::vector<double>>();
        const auto s = g.at("shape").get<std::vector<std::uint32_t>>();
        if (e.size() != 3 || r.size() != 3 || s.size() != 3) throw FormatError("manifest grid arrays need 3 values");
        m.grid = GridSpec({e[0], e[1], e[2]}, {r[0], r[1], r[2]});
        if (!(m.grid.shape == GridShape{s[0], s[1], s[2]})) throw FormatError("manifest shape inconsistent");
        m.t1 = j.at("t1").get<std::size_t>();
        m.t2 = j.at("t2").get<std::size_t>();
        m.num_samples = j.at("num_samples").get<std::size_t>();
        m.folds.num_folds = j.at("num_folds").get<std::size_t>();
        m.folds.fold_of = j.at("folds").get<std::vector<std::uint32_t>>();
        if (m.folds.fold_of.size() != m.num_samples) throw FormatError("manifest fold list length mismatch");
        m.seed = j.at("seed").get<std::uint64_t>();
        m.source_hash = j.at("source_hash").get<std::string>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed manifest: ") + e.what());
    }
}

}  // namespace cubeletworld
