// Copyright 2026 The FRVQA Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "frvqa/util.hpp"
#include "frvqa/video.hpp"

namespace frvqa {

// Spatio-temporal patch size. Production default is 256x256x12; desk-scale
// tests shrink this to keep runtimes in seconds.
struct PatchGeometry {
    int width = 256;
    int height = 256;
    int frames = 12;

    bool operator==(const PatchGeometry&) const = default;

    size_t samples() const { return static_cast<size_t>(frames) * height * width; }
};

struct PatchOrigin {
    std::string sequence_id;
    int frame_offset = 0;
    int x = 0;
    int y = 0;

    bool colocated_with(const PatchOrigin& other) const {
        return frame_offset == other.frame_offset && x == other.x && y == other.y;
    }
};

// Luma-only crop of a sequence. Proxy metrics and the model both consume luma,
// so chroma never enters a patch.
struct Patch {
    PatchGeometry geom;
    int bit_depth = 8;
    PatchOrigin origin;
    std::vector<uint16_t> data;  // frame-major geom.frames * geom.height * geom.width

    int max_value() const { return (1 << bit_depth) - 1; }

    uint16_t at(int t, int y, int x) const {
        return data[(static_cast<size_t>(t) * geom.height + y) * geom.width + x];
    }

    std::span<const uint16_t> frame(int t) const {
        const size_t fsize = static_cast<size_t>(geom.height) * geom.width;
        return std::span<const uint16_t>(data).subspan(t * fsize, fsize);
    }
};

// Co-located (reference, distorted) crop pair. The source crop is carried only
// while proxy labels are being computed and is stripped before an instance is
// stored.
struct PatchPairing {
    std::string id;
    Patch ref_patch;
    Patch dist_patch;
    std::optional<Patch> src_patch;

    void validate() const {
        require(ref_patch.origin.colocated_with(dist_patch.origin),
                "pairing '" + id + "': ref and dist origins differ");
        require(ref_patch.geom == dist_patch.geom, "pairing '" + id + "': patch geometry differs");
        if (src_patch) {
            require(src_patch->origin.colocated_with(ref_patch.origin),
                    "pairing '" + id + "': src origin differs");
            require(src_patch->geom == ref_patch.geom,
                    "pairing '" + id + "': src patch geometry differs");
        }
    }
};

inline void check_patch_fits(const VideoSequence& seq, const PatchGeometry& geom) {
    if (seq.width < geom.width || seq.height < geom.height || seq.frame_count < geom.frames) {
        fail("sequence '" + seq.id + "' (" + std::to_string(seq.width) + "x" +
             std::to_string(seq.height) + "x" + std::to_string(seq.frame_count) +
             ") is smaller than the patch geometry " + std::to_string(geom.width) + "x" +
             std::to_string(geom.height) + "x" + std::to_string(geom.frames));
    }
}

inline Patch extract_patch(const VideoSequence& seq, int frame_offset, int x, int y,
                           const PatchGeometry& geom) {
    require(frame_offset >= 0 && x >= 0 && y >= 0, "patch origin must be non-negative");
    require(frame_offset + geom.frames <= seq.frame_count && x + geom.width <= seq.width &&
                y + geom.height <= seq.height,
            "patch exceeds the bounds of sequence '" + seq.id + "'");
    Patch p;
    p.geom = geom;
    p.bit_depth = seq.bit_depth;
    p.origin = {seq.id, frame_offset, x, y};
    p.data.resize(geom.samples());
    size_t k = 0;
    for (int t = 0; t < geom.frames; ++t) {
        for (int row = 0; row < geom.height; ++row) {
            const uint16_t* src =
                seq.luma.data() +
                (static_cast<size_t>(frame_offset + t) * seq.height + (y + row)) * seq.width + x;
            std::copy(src, src + geom.width, p.data.begin() + k);
            k += geom.width;
        }
    }
    return p;
}

struct SequenceTriplet {
    const VideoSequence* source = nullptr;  // optional, present only during labeling
    const VideoSequence* reference = nullptr;
    const VideoSequence* transcoded = nullptr;
};

inline void check_codimension(const SequenceTriplet& t) {
    require(t.reference && t.transcoded, "triplet needs both a reference and a transcoded sequence");
    if (!t.reference->same_dimensions(*t.transcoded)) {
        fail("reference '" + t.reference->id + "' and transcoded '" + t.transcoded->id +
             "' have different dimensions");
    }
    if (t.source && !t.source->same_dimensions(*t.reference)) {
        fail("source '" + t.source->id + "' and reference '" + t.reference->id +
             "' have different dimensions");
    }
}

// Draw `count` co-located pairings with origins uniform over valid positions.
// Pure function of (dimensions, count, seed, geometry); the source crop is
// attached iff the triplet carries a source.
inline std::vector<PatchPairing> sample_colocated_patches(const SequenceTriplet& triplet, int count,
                                                          uint64_t rng_seed,
                                                          const PatchGeometry& geom) {
    check_codimension(triplet);
    check_patch_fits(*triplet.reference, geom);
    require(count >= 1, "patch count must be positive");

    const VideoSequence& ref = *triplet.reference;
    const int max_t = ref.frame_count - geom.frames;
    const int max_x = ref.width - geom.width;
    const int max_y = ref.height - geom.height;

    Rng rng(rng_seed);
    std::vector<PatchPairing> pairings;
    pairings.reserve(count);
    for (int i = 0; i < count; ++i) {
        const int t = static_cast<int>(rng.below(static_cast<uint64_t>(max_t) + 1));
        const int x = static_cast<int>(rng.below(static_cast<uint64_t>(max_x) + 1));
        const int y = static_cast<int>(rng.below(static_cast<uint64_t>(max_y) + 1));
        PatchPairing pairing;
        pairing.ref_patch = extract_patch(ref, t, x, y, geom);
        pairing.dist_patch = extract_patch(*triplet.transcoded, t, x, y, geom);
        if (triplet.source) {
            pairing.src_patch = extract_patch(*triplet.source, t, x, y, geom);
        }
        pairings.push_back(std::move(pairing));
    }
    return pairings;
}

// 1-D tile anchors: 0, stride, 2*stride, ... with the final anchor re-pinned
// to extent-patch so the boundary is always covered exactly once.
inline std::vector<int> tile_positions(int extent, int patch, int stride) {
    require(stride >= 1, "stride must be positive");
    require(extent >= patch, "extent smaller than patch");
    std::vector<int> pos;
    for (int p = 0; p + patch <= extent; p += stride) pos.push_back(p);
    if (pos.back() + patch < extent) pos.push_back(extent - patch);
    return pos;
}

struct TileStride {
    int pixels = 0;  // 0 means "patch size" (non-overlapping)
    int frames = 0;
};

// Deterministic raster-order tiling of a (reference, transcoded) pair:
// temporal windows outermost, then rows, then columns.
inline std::vector<PatchPairing> tile_patches(const VideoSequence& ref, const VideoSequence& dist,
                                              const PatchGeometry& geom,
                                              TileStride stride = {}) {
    SequenceTriplet triplet{nullptr, &ref, &dist};
    check_codimension(triplet);
    check_patch_fits(ref, geom);
    const int sp = stride.pixels > 0 ? stride.pixels : geom.width;
    const int sf = stride.frames > 0 ? stride.frames : geom.frames;

    const auto ts = tile_positions(ref.frame_count, geom.frames, sf);
    const auto ys = tile_positions(ref.height, geom.height, sp);
    const auto xs = tile_positions(ref.width, geom.width, sp);

    std::vector<PatchPairing> pairings;
    pairings.reserve(ts.size() * ys.size() * xs.size());
    for (int t : ts) {
        for (int y : ys) {
            for (int x : xs) {
                PatchPairing pairing;
                pairing.ref_patch = extract_patch(ref, t, x, y, geom);
                pairing.dist_patch = extract_patch(dist, t, x, y, geom);
                pairings.push_back(std::move(pairing));
            }
        }
    }
    return pairings;
}

// ---------------------------------------------------------------------------
// Patch store: one binary file of concatenated raw patch tensors plus a CSV
// index (pairing_id, role, sequence_id, frame_offset, x, y, byte_offset).
// Geometry and bit depth live in a sidecar meta.json.
// ---------------------------------------------------------------------------

class PatchStoreWriter {
  public:
    PatchStoreWriter(const std::filesystem::path& dir, const PatchGeometry& geom, int bit_depth)
        : dir_(dir), geom_(geom), bit_depth_(bit_depth) {
        std::filesystem::create_directories(dir);
        blob_.open(dir / "patches.bin", std::ios::binary);
        if (!blob_) fail("cannot write patch blob in " + dir.string());
        index_.header = {"pairing_id", "role", "sequence_id", "frame_offset", "x", "y",
                         "byte_offset"};
    }

    void add(const std::string& pairing_id, const std::string& role, const Patch& patch) {
        require(patch.geom == geom_, "patch store: geometry mismatch");
        require(patch.bit_depth == bit_depth_, "patch store: bit depth mismatch");
        index_.rows.push_back({pairing_id, role, patch.origin.sequence_id,
                               std::to_string(patch.origin.frame_offset),
                               std::to_string(patch.origin.x), std::to_string(patch.origin.y),
                               std::to_string(offset_)});
        const int sample_bytes = bit_depth_ > 8 ? 2 : 1;
        std::vector<uint8_t> raw(patch.data.size() * sample_bytes);
        for (size_t i = 0; i < patch.data.size(); ++i) {
            if (sample_bytes == 2) {
                raw[2 * i] = static_cast<uint8_t>(patch.data[i] & 0xff);
                raw[2 * i + 1] = static_cast<uint8_t>(patch.data[i] >> 8);
            } else {
                raw[i] = static_cast<uint8_t>(patch.data[i] & 0xff);
            }
        }
        blob_.write(reinterpret_cast<const char*>(raw.data()),
                    static_cast<std::streamsize>(raw.size()));
        offset_ += raw.size();
    }

    void finish() {
        blob_.close();
        write_csv(dir_ / "patch_index.csv", index_);
        std::ostringstream meta;
        meta << "{\"patch_width\": " << geom_.width << ", \"patch_height\": " << geom_.height
             << ", \"patch_frames\": " << geom_.frames << ", \"bit_depth\": " << bit_depth_
             << "}\n";
        write_file(dir_ / "meta.json", meta.str());
    }

  private:
    std::filesystem::path dir_;
    PatchGeometry geom_;
    int bit_depth_;
    std::ofstream blob_;
    CsvTable index_;
    uint64_t offset_ = 0;
};

struct StoredPatchRef {
    std::string pairing_id;
    std::string role;
    PatchOrigin origin;
    uint64_t byte_offset = 0;
};

class PatchStoreReader {
  public:
    explicit PatchStoreReader(const std::filesystem::path& dir) : dir_(dir) {
        const std::string meta = read_file(dir / "meta.json");
        geom_.width = meta_int(meta, "patch_width");
        geom_.height = meta_int(meta, "patch_height");
        geom_.frames = meta_int(meta, "patch_frames");
        bit_depth_ = meta_int(meta, "bit_depth");
        CsvTable index = read_csv(dir / "patch_index.csv");
        const int c_pid = index.column("pairing_id");
        const int c_role = index.column("role");
        const int c_seq = index.column("sequence_id");
        const int c_t = index.column("frame_offset");
        const int c_x = index.column("x");
        const int c_y = index.column("y");
        const int c_off = index.column("byte_offset");
        for (const auto& row : index.rows) {
            StoredPatchRef ref;
            ref.pairing_id = row[c_pid];
            ref.role = row[c_role];
            ref.origin.sequence_id = row[c_seq];
            ref.origin.frame_offset = static_cast<int>(parse_int(row[c_t], "frame_offset"));
            ref.origin.x = static_cast<int>(parse_int(row[c_x], "x"));
            ref.origin.y = static_cast<int>(parse_int(row[c_y], "y"));
            ref.byte_offset = static_cast<uint64_t>(parse_int(row[c_off], "byte_offset"));
            entries_.push_back(std::move(ref));
        }
        blob_.open(dir / "patches.bin", std::ios::binary);
        if (!blob_) fail("cannot open patch blob in " + dir.string());
    }

    const PatchGeometry& geometry() const { return geom_; }
    int bit_depth() const { return bit_depth_; }
    const std::vector<StoredPatchRef>& entries() const { return entries_; }

    Patch read(const StoredPatchRef& ref) {
        Patch p;
        p.geom = geom_;
        p.bit_depth = bit_depth_;
        p.origin = ref.origin;
        p.data.resize(geom_.samples());
        const int sample_bytes = bit_depth_ > 8 ? 2 : 1;
        std::vector<uint8_t> raw(p.data.size() * sample_bytes);
        blob_.seekg(static_cast<std::streamoff>(ref.byte_offset));
        blob_.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (!blob_) fail("short read in patch blob");
        for (size_t i = 0; i < p.data.size(); ++i) {
            p.data[i] = sample_bytes == 2
                            ? static_cast<uint16_t>(raw[2 * i] | (raw[2 * i + 1] << 8))
                            : raw[i];
        }
        return p;
    }

  private:
    static int meta_int(const std::string& meta, const std::string& key) {
        auto pos = meta.find("\"" + key + "\"");
        if (pos == std::string::npos) fail("patch store meta.json lacks " + key);
        pos = meta.find(':', pos);
        return static_cast<int>(std::strtol(meta.c_str() + pos + 1, nullptr, 10));
    }

    std::filesystem::path dir_;
    PatchGeometry geom_;
    int bit_depth_ = 8;
    std::vector<StoredPatchRef> entries_;
    std::ifstream blob_;
};

}  // namespace frvqa
