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

#include <filesystem>
#include <memory>
#include <string>

#include "frvqa/frame_metrics.hpp"
#include "frvqa/patch.hpp"
#include "frvqa/util.hpp"
#include "frvqa/video.hpp"

namespace frvqa {

// Proxy quality metric used for weak labels. It always compares against a
// pristine source crop; the trained model never sees that crop. A patch is
// scored as a standalone clip with frame scores pooled by arithmetic mean.
class ProxyScorer {
  public:
    virtual ~ProxyScorer() = default;
    virtual std::string name() const = 0;
    virtual double perfect_score() const = 0;
    virtual double min_score() const = 0;
    virtual double score_patch(const Patch& src, const Patch& test) const = 0;
};

// Hermetic PSNR-based proxy on the declared [0, 100] scale. Identical content
// scores the cap; everything else is plain per-frame PSNR, mean-pooled.
class PsnrProxyScorer final : public ProxyScorer {
  public:
    std::string name() const override { return "psnr"; }
    double perfect_score() const override { return kPsnrCap; }
    double min_score() const override { return 0.0; }

    double score_patch(const Patch& src, const Patch& test) const override {
        double acc = 0.0;
        for (int t = 0; t < src.geom.frames; ++t) {
            acc += psnr_frame(src.frame(t), test.frame(t), src.max_value());
        }
        return acc / static_cast<double>(src.geom.frames);
    }
};

// External proxy tool (VMAF in production). The command template is expanded
// with {reference}, {distorted} and optionally {output}; the score is read
// from the JSON output file when {output} is present ("pooled_metrics" mean),
// otherwise from the last number the tool prints.
class ExternalProxyScorer final : public ProxyScorer {
  public:
    explicit ExternalProxyScorer(std::string command_template, std::string name = "vmaf",
                                 double perfect = 100.0, double minimum = 0.0)
        : template_(std::move(command_template)),
          name_(std::move(name)),
          perfect_(perfect),
          min_(minimum) {}

    std::string name() const override { return name_; }
    double perfect_score() const override { return perfect_; }
    double min_score() const override { return min_; }

    double score_patch(const Patch& src, const Patch& test) const override {
        namespace fs = std::filesystem;
        static std::atomic<uint64_t> counter{0};
        const uint64_t tag = counter.fetch_add(1);
        const fs::path dir = fs::temp_directory_path();
        const std::string stem =
            "frvqa_proxy_" + std::to_string(::getpid()) + "_" + std::to_string(tag);
        const fs::path ref_path = dir / (stem + "_ref.y4m");
        const fs::path dist_path = dir / (stem + "_dist.y4m");
        const fs::path out_path = dir / (stem + "_score.json");

        save_y4m(ref_path, patch_as_sequence(src, "proxy_ref"));
        save_y4m(dist_path, patch_as_sequence(test, "proxy_dist"));

        std::string cmd = template_;
        cmd = replace_all(cmd, "{reference}", ref_path.string());
        cmd = replace_all(cmd, "{distorted}", dist_path.string());
        const bool has_output = cmd.find("{output}") != std::string::npos;
        cmd = replace_all(cmd, "{output}", out_path.string());

        const ProcessResult proc = run_process(cmd);
        double value = 0.0;
        bool parsed = false;
        if (proc.ok()) {
            if (has_output && fs::exists(out_path)) {
                parsed = parse_score(read_file(out_path), &value);
            } else {
                parsed = parse_score(proc.out, &value);
            }
        }
        std::error_code ec;
        fs::remove(ref_path, ec);
        fs::remove(dist_path, ec);
        fs::remove(out_path, ec);
        if (!proc.ok()) {
            fail("proxy scorer '" + name_ + "' failed (exit " + std::to_string(proc.exit_code) +
                 "): " + trim(proc.err.substr(0, 500)));
        }
        if (!parsed) fail("proxy scorer '" + name_ + "' produced no parsable score");
        return value;
    }

  private:
    static VideoSequence patch_as_sequence(const Patch& p, const std::string& id) {
        VideoSequence seq;
        seq.id = id;
        seq.role = Role::source;
        seq.width = p.geom.width;
        seq.height = p.geom.height;
        seq.bit_depth = p.bit_depth;
        seq.chroma = ChromaFormat::c420;
        seq.frame_count = p.geom.frames;
        seq.luma = p.data;
        const size_t csize = detail::chroma_plane_samples(p.geom.width, p.geom.height, seq.chroma);
        const uint16_t mid = static_cast<uint16_t>(1 << (p.bit_depth - 1));
        seq.cb.assign(csize * p.geom.frames, mid);
        seq.cr.assign(csize * p.geom.frames, mid);
        return seq;
    }

    // Accepts either a VMAF-style JSON report or free text; the score is the
    // "mean" entry under a pooled "vmaf" block when present, else the last
    // number in the text.
    static bool parse_score(const std::string& text, double* value) {
        auto vmaf_pos = text.find("\"vmaf\"");
        if (vmaf_pos != std::string::npos) {
            auto mean_pos = text.find("\"mean\"", vmaf_pos);
            if (mean_pos != std::string::npos) {
                auto colon = text.find(':', mean_pos);
                if (colon != std::string::npos) {
                    char* end = nullptr;
                    const double v = std::strtod(text.c_str() + colon + 1, &end);
                    if (end != text.c_str() + colon + 1) {
                        *value = v;
                        return true;
                    }
                }
            }
        }
        bool found = false;
        double last = 0.0;
        const char* p = text.c_str();
        const char* stop = p + text.size();
        while (p < stop) {
            if (std::isdigit(static_cast<unsigned char>(*p)) ||
                ((*p == '-' || *p == '+') && p + 1 < stop &&
                 std::isdigit(static_cast<unsigned char>(p[1])))) {
                char* end = nullptr;
                const double v = std::strtod(p, &end);
                if (end != p) {
                    last = v;
                    found = true;
                    p = end;
                    continue;
                }
            }
            ++p;
        }
        *value = last;
        return found;
    }

    std::string template_;
    std::string name_;
    double perfect_;
    double min_;
};

// Proxy score of `test_patch` against the pristine-source crop.
inline double compute_proxy(const Patch& src_patch, const Patch& test_patch,
                            const ProxyScorer& scorer) {
    require(src_patch.geom == test_patch.geom, "compute_proxy: patch dimensions differ");
    require(src_patch.bit_depth == test_patch.bit_depth, "compute_proxy: bit depth differs");
    require(src_patch.origin.colocated_with(test_patch.origin),
            "compute_proxy: patches are not co-located");
    return scorer.score_patch(src_patch, test_patch);
}

// Delta quality: degradation of the transcoded crop relative to its reference,
// both measured against the pristine source.
inline double delta_quality(double score_src_ref, double score_src_dist) {
    return score_src_ref - score_src_dist;
}

}  // namespace frvqa
