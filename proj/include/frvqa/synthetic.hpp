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

#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "frvqa/codec.hpp"
#include "frvqa/util.hpp"
#include "frvqa/video.hpp"

namespace frvqa {

// Procedural test content: a moving sinusoidal gradient over a scrolling
// low-pass-filtered noise texture. Cheap, deterministic, and busy enough that
// added distortion noise is measurable everywhere in the frame.
inline VideoSequence make_synthetic_source(const std::string& id, int width, int height,
                                           int frames, uint64_t seed) {
    require(width >= 8 && height >= 8 && frames >= 1, "synthetic source too small");
    Rng rng(seed);

    const double wavelength_x = rng.uniform(12.0, 40.0);
    const double wavelength_y = rng.uniform(12.0, 40.0);
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    const double speed = rng.uniform(0.02, 0.12);  // cycles per frame
    const double amplitude = rng.uniform(35.0, 55.0);

    // Scrolling texture with margin for per-frame motion.
    const int dx = static_cast<int>(rng.below(3)) - 1;
    const int dy = static_cast<int>(rng.below(3)) - 1;
    const int margin = frames + 1;
    const int tw = width + 2 * margin;
    const int th = height + 2 * margin;
    std::vector<double> texture(static_cast<size_t>(tw) * th);
    for (double& v : texture) v = rng.uniform(-1.0, 1.0);
    // Two 3x3 box passes as the low-pass filter.
    for (int pass = 0; pass < 2; ++pass) {
        std::vector<double> blurred(texture.size());
        for (int y = 0; y < th; ++y) {
            for (int x = 0; x < tw; ++x) {
                double acc = 0.0;
                int n = 0;
                for (int oy = -1; oy <= 1; ++oy) {
                    for (int ox = -1; ox <= 1; ++ox) {
                        const int yy = y + oy, xx = x + ox;
                        if (yy < 0 || yy >= th || xx < 0 || xx >= tw) continue;
                        acc += texture[static_cast<size_t>(yy) * tw + xx];
                        ++n;
                    }
                }
                blurred[static_cast<size_t>(y) * tw + x] = acc / n;
            }
        }
        texture.swap(blurred);
    }
    const double texture_gain = rng.uniform(30.0, 60.0);

    VideoSequence seq;
    seq.id = id;
    seq.role = Role::source;
    seq.width = width;
    seq.height = height;
    seq.bit_depth = 8;
    seq.chroma = ChromaFormat::c420;
    seq.frame_count = frames;
    seq.luma.resize(static_cast<size_t>(frames) * height * width);
    const size_t csize = detail::chroma_plane_samples(width, height, seq.chroma);
    seq.cb.assign(csize * frames, 128);
    seq.cr.assign(csize * frames, 128);

    for (int t = 0; t < frames; ++t) {
        const int ox = margin + t * dx;
        const int oy = margin + t * dy;
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const double grad = amplitude * std::sin(2.0 * M_PI * (x / wavelength_x +
                                                                       y / wavelength_y +
                                                                       t * speed) +
                                                         phase);
                const double tex =
                    texture_gain * texture[static_cast<size_t>(y + oy) * tw + (x + ox)];
                const double v = 128.0 + grad + tex;
                seq.luma[(static_cast<size_t>(t) * height + y) * width + x] =
                    static_cast<uint16_t>(std::clamp(static_cast<int>(std::lround(v)), 0, 255));
            }
        }
    }
    return seq;
}

struct SyntheticCorpusOptions {
    int n_sources = 4;
    int width = 48;
    int height = 48;
    int frames = 6;
    int reference_noise_level = 3;          // sigma of the device-codec stand-in
    std::vector<int> distortion_grid = {2, 8};  // transcode noise sigmas
    uint64_t seed = 1;
    int jobs = 1;
};

// Desk-scale corpus with analytic ground truth. Distortion is seeded additive
// luma noise standing in for codecs, so the true degradation of every
// transcoded sequence relative to its reference is the realized noise energy,
// recorded in the manifest and in ground_truth.csv.
inline CorpusManifest make_synthetic_corpus(const SyntheticCorpusOptions& options,
                                            const std::filesystem::path& out_dir,
                                            EncodeStats* stats = nullptr) {
    namespace fs = std::filesystem;
    require(options.n_sources >= 1, "need at least one synthetic source");
    require(!options.distortion_grid.empty(), "distortion grid is empty");

    const fs::path src_dir = out_dir / "src";
    fs::create_directories(src_dir);
    std::vector<fs::path> sources;
    for (int i = 0; i < options.n_sources; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "s%03d", i);
        const fs::path path = src_dir / (std::string(name) + ".y4m");
        if (!fs::exists(path)) {
            save_y4m(path, make_synthetic_source(name, options.width, options.height,
                                                 options.frames,
                                                 mix_seed(options.seed, name)));
        }
        sources.push_back(path);
    }

    CodecRegistry registry = CodecRegistry::with_defaults();
    std::vector<CodecConfig> ref_cfgs = {{"noise", options.reference_noise_level, "", {}}};
    std::vector<CodecConfig> transcode_cfgs;
    for (int level : options.distortion_grid) transcode_cfgs.push_back({"noise", level, "", {}});

    BuildCorpusOptions build;
    build.jobs = options.jobs;
    build.seed = options.seed;
    CorpusManifest manifest =
        build_corpus(sources, ref_cfgs, transcode_cfgs, registry, out_dir, build, stats);

    CsvTable truth;
    truth.header = {"distorted_id", "true_degradation"};
    for (const auto& e : manifest.entries) {
        if (e.role != Role::transcoded) continue;
        require(e.true_degradation.has_value(),
                "synthetic transcode '" + e.id + "' lacks its recorded degradation");
        truth.rows.push_back({e.id, format_double(*e.true_degradation)});
    }
    write_csv(out_dir / "ground_truth.csv", truth);
    return manifest;
}

inline std::map<std::string, double> load_ground_truth(const std::filesystem::path& csv_path) {
    const CsvTable table = read_csv(csv_path);
    const int c_id = table.column("distorted_id");
    const int c_val = table.column("true_degradation");
    std::map<std::string, double> truth;
    for (const auto& row : table.rows) {
        truth[row[c_id]] = parse_double(row[c_val], "true_degradation");
    }
    return truth;
}

}  // namespace frvqa
