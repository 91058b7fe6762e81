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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "frvqa/util.hpp"

namespace frvqa {

// Pipeline role of a sequence in the transcoding chain:
// source -> reference (device-compressed upload) -> transcoded.
enum class Role { source, reference, transcoded };

inline std::string role_name(Role r) {
    switch (r) {
        case Role::source: return "source";
        case Role::reference: return "reference";
        case Role::transcoded: return "transcoded";
    }
    return "?";
}

inline Role role_from_name(const std::string& s) {
    if (s == "source") return Role::source;
    if (s == "reference") return Role::reference;
    if (s == "transcoded") return Role::transcoded;
    fail("unknown role: '" + s + "'");
}

enum class ChromaFormat { c400, c420, c444 };

inline std::string chroma_name(ChromaFormat f) {
    switch (f) {
        case ChromaFormat::c400: return "400";
        case ChromaFormat::c420: return "420";
        case ChromaFormat::c444: return "444";
    }
    return "?";
}

inline ChromaFormat chroma_from_name(const std::string& s) {
    if (s == "400" || s == "mono") return ChromaFormat::c400;
    if (s == "420") return ChromaFormat::c420;
    if (s == "444") return ChromaFormat::c444;
    fail("unsupported chroma format: '" + s + "'");
}

// Geometry declared by the caller for headerless raw input, or read from the
// stream header for self-describing input. frame_count, when declared, is
// validated against the file size.
struct VideoGeometry {
    int width = 0;
    int height = 0;
    int bit_depth = 8;
    ChromaFormat chroma = ChromaFormat::c420;
    double frame_rate = 30.0;
    std::optional<int> frame_count;
};

// Decoded planar frames plus lineage metadata. Samples are stored as uint16_t
// regardless of bit depth; on-disk width is 1 byte for 8-bit and 2 bytes
// (little-endian) for 10-bit.
struct VideoSequence {
    std::string id;
    Role role = Role::source;
    std::string parent_id;  // empty iff role == source
    int width = 0;
    int height = 0;
    int bit_depth = 8;
    ChromaFormat chroma = ChromaFormat::c420;
    double frame_rate = 30.0;
    int frame_count = 0;
    std::vector<uint16_t> luma;  // frame-major, frame_count * height * width
    std::vector<uint16_t> cb;    // retained when present, may be empty
    std::vector<uint16_t> cr;

    int max_value() const { return (1 << bit_depth) - 1; }

    size_t luma_frame_size() const { return static_cast<size_t>(width) * height; }

    std::span<const uint16_t> luma_frame(int t) const {
        return std::span<const uint16_t>(luma).subspan(t * luma_frame_size(), luma_frame_size());
    }

    std::span<uint16_t> luma_frame(int t) {
        return std::span<uint16_t>(luma).subspan(t * luma_frame_size(), luma_frame_size());
    }

    uint16_t at(int t, int y, int x) const {
        return luma[(static_cast<size_t>(t) * height + y) * width + x];
    }

    bool same_dimensions(const VideoSequence& other) const {
        return width == other.width && height == other.height && frame_count == other.frame_count;
    }

    void validate() const {
        require(frame_count >= 1, "sequence '" + id + "' has no frames");
        require(width > 0 && height > 0, "sequence '" + id + "' has empty geometry");
        require(bit_depth == 8 || bit_depth == 10,
                "sequence '" + id + "': unsupported bit depth " + std::to_string(bit_depth));
        require(luma.size() == static_cast<size_t>(frame_count) * luma_frame_size(),
                "sequence '" + id + "': luma plane size mismatch");
        if (role == Role::source) {
            require(parent_id.empty(), "source sequence '" + id + "' must not have a parent");
        } else {
            require(!parent_id.empty(),
                    role_name(role) + " sequence '" + id + "' must name its parent");
        }
    }
};

namespace detail {

inline size_t chroma_plane_samples(int w, int h, ChromaFormat f) {
    switch (f) {
        case ChromaFormat::c400: return 0;
        case ChromaFormat::c420: return static_cast<size_t>((w + 1) / 2) * ((h + 1) / 2);
        case ChromaFormat::c444: return static_cast<size_t>(w) * h;
    }
    return 0;
}

inline size_t frame_bytes(const VideoGeometry& g) {
    const size_t samples = static_cast<size_t>(g.width) * g.height +
                           2 * chroma_plane_samples(g.width, g.height, g.chroma);
    return samples * (g.bit_depth > 8 ? 2 : 1);
}

inline void read_plane(std::istream& in, std::vector<uint16_t>& plane, size_t offset, size_t count,
                       int bit_depth, const std::string& what) {
    if (bit_depth > 8) {
        std::vector<uint8_t> raw(count * 2);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (!in) fail("short read in " + what);
        for (size_t i = 0; i < count; ++i) {
            plane[offset + i] = static_cast<uint16_t>(raw[2 * i] | (raw[2 * i + 1] << 8));
        }
    } else {
        std::vector<uint8_t> raw(count);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (!in) fail("short read in " + what);
        for (size_t i = 0; i < count; ++i) plane[offset + i] = raw[i];
    }
}

inline void write_plane(std::ostream& out, const std::vector<uint16_t>& plane, size_t offset,
                        size_t count, int bit_depth) {
    if (bit_depth > 8) {
        std::vector<uint8_t> raw(count * 2);
        for (size_t i = 0; i < count; ++i) {
            raw[2 * i] = static_cast<uint8_t>(plane[offset + i] & 0xff);
            raw[2 * i + 1] = static_cast<uint8_t>(plane[offset + i] >> 8);
        }
        out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    } else {
        std::vector<uint8_t> raw(count);
        for (size_t i = 0; i < count; ++i) raw[i] = static_cast<uint8_t>(plane[offset + i] & 0xff);
        out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Headerless planar raw (.yuv): frame-major planes Y, Cb, Cr; 10-bit samples
// little-endian. Geometry must be supplied by the caller.
// ---------------------------------------------------------------------------

inline VideoSequence load_raw(const std::filesystem::path& path, const VideoGeometry& geom) {
    namespace fs = std::filesystem;
    if (!fs::exists(path)) fail("file does not exist: " + path.string());
    require(geom.width > 0 && geom.height > 0, "raw input needs an explicit width and height");
    require(geom.bit_depth == 8 || geom.bit_depth == 10,
            "unsupported bit depth " + std::to_string(geom.bit_depth));

    const uintmax_t size = fs::file_size(path);
    const size_t fbytes = detail::frame_bytes(geom);
    if (size == 0 || size % fbytes != 0) {
        fail("geometry inconsistent with file size: " + path.string() + " is " +
             std::to_string(size) + " bytes, not a multiple of the " + std::to_string(fbytes) +
             "-byte frame implied by " + std::to_string(geom.width) + "x" +
             std::to_string(geom.height));
    }
    const int frames = static_cast<int>(size / fbytes);
    if (geom.frame_count && *geom.frame_count != frames) {
        fail("geometry inconsistent with file size: declared " +
             std::to_string(*geom.frame_count) + " frames but " + path.string() + " holds " +
             std::to_string(frames));
    }

    VideoSequence seq;
    seq.width = geom.width;
    seq.height = geom.height;
    seq.bit_depth = geom.bit_depth;
    seq.chroma = geom.chroma;
    seq.frame_rate = geom.frame_rate;
    seq.frame_count = frames;
    const size_t ysize = seq.luma_frame_size();
    const size_t csize = detail::chroma_plane_samples(geom.width, geom.height, geom.chroma);
    seq.luma.resize(ysize * frames);
    seq.cb.resize(csize * frames);
    seq.cr.resize(csize * frames);

    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open file: " + path.string());
    for (int t = 0; t < frames; ++t) {
        detail::read_plane(in, seq.luma, t * ysize, ysize, geom.bit_depth, path.string());
        if (csize > 0) {
            detail::read_plane(in, seq.cb, t * csize, csize, geom.bit_depth, path.string());
            detail::read_plane(in, seq.cr, t * csize, csize, geom.bit_depth, path.string());
        }
    }
    return seq;
}

inline void save_raw(const std::filesystem::path& path, const VideoSequence& seq) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot write file: " + path.string());
    const size_t ysize = seq.luma_frame_size();
    const size_t csize = detail::chroma_plane_samples(seq.width, seq.height, seq.chroma);
    for (int t = 0; t < seq.frame_count; ++t) {
        detail::write_plane(out, seq.luma, t * ysize, ysize, seq.bit_depth);
        if (csize > 0) {
            detail::write_plane(out, seq.cb, t * csize, csize, seq.bit_depth);
            detail::write_plane(out, seq.cr, t * csize, csize, seq.bit_depth);
        }
    }
    if (!out) fail("short write to " + path.string());
}

// ---------------------------------------------------------------------------
// Self-describing raw stream (YUV4MPEG2): plain-text header carrying geometry,
// then FRAME-delimited planar data.
// ---------------------------------------------------------------------------

inline bool is_y4m(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    char magic[9] = {};
    in.read(magic, 9);
    return in && std::string_view(magic, 9) == "YUV4MPEG2";
}

inline VideoSequence load_y4m(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open file: " + path.string());
    std::string header;
    if (!std::getline(in, header)) fail("missing stream header in " + path.string());
    auto tokens = split(header, ' ');
    if (tokens.empty() || tokens[0] != "YUV4MPEG2") fail("not a YUV4MPEG2 stream: " + path.string());

    VideoGeometry geom;
    geom.chroma = ChromaFormat::c420;
    int fps_num = 30, fps_den = 1;
    for (size_t i = 1; i < tokens.size(); ++i) {
        const std::string& tok = tokens[i];
        if (tok.empty()) continue;
        switch (tok[0]) {
            case 'W': geom.width = static_cast<int>(parse_int(tok.substr(1), "Y4M width")); break;
            case 'H': geom.height = static_cast<int>(parse_int(tok.substr(1), "Y4M height")); break;
            case 'F': {
                auto parts = split(tok.substr(1), ':');
                if (parts.size() == 2) {
                    fps_num = static_cast<int>(parse_int(parts[0], "Y4M fps"));
                    fps_den = static_cast<int>(parse_int(parts[1], "Y4M fps"));
                }
                break;
            }
            case 'C': {
                std::string cs = tok.substr(1);
                geom.bit_depth = 8;
                if (cs.size() > 3 && cs.substr(cs.size() - 3) == "p10") {
                    geom.bit_depth = 10;
                    cs = cs.substr(0, cs.size() - 3);
                }
                if (starts_with(cs, "420")) geom.chroma = ChromaFormat::c420;
                else if (starts_with(cs, "444")) geom.chroma = ChromaFormat::c444;
                else if (cs == "mono") geom.chroma = ChromaFormat::c400;
                else fail("unsupported Y4M colorspace C" + tok.substr(1) + " in " + path.string());
                break;
            }
            default: break;  // interlacing / aspect tokens are ignored
        }
    }
    require(geom.width > 0 && geom.height > 0, "Y4M header lacks geometry in " + path.string());
    geom.frame_rate = fps_den > 0 ? static_cast<double>(fps_num) / fps_den : 30.0;

    VideoSequence seq;
    seq.width = geom.width;
    seq.height = geom.height;
    seq.bit_depth = geom.bit_depth;
    seq.chroma = geom.chroma;
    seq.frame_rate = geom.frame_rate;
    const size_t ysize = seq.luma_frame_size();
    const size_t csize = detail::chroma_plane_samples(geom.width, geom.height, geom.chroma);

    std::string frame_header;
    while (std::getline(in, frame_header)) {
        if (!starts_with(frame_header, "FRAME")) {
            fail("malformed frame marker in " + path.string());
        }
        const size_t base_y = seq.luma.size();
        const size_t base_c = seq.cb.size();
        seq.luma.resize(base_y + ysize);
        seq.cb.resize(base_c + csize);
        seq.cr.resize(base_c + csize);
        detail::read_plane(in, seq.luma, base_y, ysize, geom.bit_depth, path.string());
        if (csize > 0) {
            detail::read_plane(in, seq.cb, base_c, csize, geom.bit_depth, path.string());
            detail::read_plane(in, seq.cr, base_c, csize, geom.bit_depth, path.string());
        }
        ++seq.frame_count;
    }
    require(seq.frame_count >= 1, "stream holds no frames: " + path.string());
    return seq;
}

inline void save_y4m(const std::filesystem::path& path, const VideoSequence& seq) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot write file: " + path.string());
    std::string cs;
    switch (seq.chroma) {
        case ChromaFormat::c400: cs = "mono"; break;
        case ChromaFormat::c420: cs = "420"; break;
        case ChromaFormat::c444: cs = "444"; break;
    }
    if (seq.bit_depth == 10) cs += "p10";
    int fps_num = static_cast<int>(std::lround(seq.frame_rate * 1000));
    out << "YUV4MPEG2 W" << seq.width << " H" << seq.height << " F" << fps_num << ":1000"
        << " Ip A1:1 C" << cs << "\n";
    const size_t ysize = seq.luma_frame_size();
    const size_t csize = detail::chroma_plane_samples(seq.width, seq.height, seq.chroma);
    for (int t = 0; t < seq.frame_count; ++t) {
        out << "FRAME\n";
        detail::write_plane(out, seq.luma, t * ysize, ysize, seq.bit_depth);
        if (csize > 0) {
            detail::write_plane(out, seq.cb, t * csize, csize, seq.bit_depth);
            detail::write_plane(out, seq.cr, t * csize, csize, seq.bit_depth);
        }
    }
    if (!out) fail("short write to " + path.string());
}

// Decode a video file into planar integer tensors. Self-describing streams
// (YUV4MPEG2) carry their own geometry; headerless raw needs `geometry`.
inline VideoSequence load_sequence(const std::filesystem::path& path,
                                   const std::optional<VideoGeometry>& geometry, Role role,
                                   const std::string& id, const std::string& parent_id = {}) {
    if (!std::filesystem::exists(path)) fail("file does not exist: " + path.string());
    VideoSequence seq;
    if (is_y4m(path)) {
        seq = load_y4m(path);
        if (geometry) {
            if (geometry->width > 0 && geometry->width != seq.width)
                fail("declared width " + std::to_string(geometry->width) +
                     " contradicts stream header width " + std::to_string(seq.width));
            if (geometry->height > 0 && geometry->height != seq.height)
                fail("declared height " + std::to_string(geometry->height) +
                     " contradicts stream header height " + std::to_string(seq.height));
            if (geometry->frame_count && *geometry->frame_count != seq.frame_count)
                fail("declared frame count contradicts the stream");
        }
    } else {
        if (!geometry) fail("headerless raw input needs explicit geometry: " + path.string());
        seq = load_raw(path, *geometry);
    }
    seq.id = id;
    seq.role = role;
    seq.parent_id = parent_id;
    seq.validate();
    return seq;
}

}  // namespace frvqa
