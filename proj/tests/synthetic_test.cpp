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

#include "frvqa/synthetic.hpp"

#include <map>

#include "frvqa/labeling.hpp"
#include "frvqa/stats.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace frvqa {
namespace {

using testing::TempDir;

TEST(Synthetic, SourcesAreDeterministicPerSeed) {
    const auto a = make_synthetic_source("s", 32, 32, 4, 77);
    const auto b = make_synthetic_source("s", 32, 32, 4, 77);
    const auto c = make_synthetic_source("s", 32, 32, 4, 78);
    EXPECT_EQ(a.luma, b.luma);
    EXPECT_NE(a.luma, c.luma);
}

TEST(Synthetic, ZeroNoiseGridHasZeroDegradation) {
    TempDir dir("frvqa_syn");
    SyntheticCorpusOptions opt;
    opt.n_sources = 2;
    opt.width = 24;
    opt.height = 24;
    opt.frames = 3;
    opt.distortion_grid = {0};
    const auto manifest = make_synthetic_corpus(opt, dir.path);
    const auto truth = load_ground_truth(dir.path / "ground_truth.csv");
    ASSERT_EQ(truth.size(), 2u);
    for (const auto& [id, degradation] : truth) EXPECT_DOUBLE_EQ(degradation, 0.0);
}

TEST(Synthetic, HigherNoiseLevelDegradesStrictlyMore) {
    TempDir dir("frvqa_syn");
    SyntheticCorpusOptions opt;
    opt.n_sources = 3;
    opt.width = 24;
    opt.height = 24;
    opt.frames = 4;
    opt.distortion_grid = {2, 8};
    const auto manifest = make_synthetic_corpus(opt, dir.path);
    const auto truth = load_ground_truth(dir.path / "ground_truth.csv");
    for (const auto* ref : manifest.with_role(Role::reference)) {
        double low = -1.0, high = -1.0;
        for (const auto* d : manifest.with_role(Role::transcoded)) {
            if (d->parent_id != ref->id) continue;
            if (d->codec->quality_param == 2) low = truth.at(d->id);
            if (d->codec->quality_param == 8) high = truth.at(d->id);
        }
        ASSERT_GE(low, 0.0);
        EXPECT_GT(high, low);
    }
}

TEST(Synthetic, GroundTruthOrderingIsTotalAcrossTheGrid) {
    TempDir dir("frvqa_syn");
    SyntheticCorpusOptions opt;
    opt.n_sources = 4;
    opt.width = 24;
    opt.height = 24;
    opt.frames = 4;
    opt.distortion_grid = {1, 4, 10};
    const auto manifest = make_synthetic_corpus(opt, dir.path);
    const auto truth = load_ground_truth(dir.path / "ground_truth.csv");
    std::map<int, std::vector<double>> by_level;
    for (const auto* d : manifest.with_role(Role::transcoded)) {
        by_level[d->codec->quality_param].push_back(truth.at(d->id));
    }
    // Every level-10 child degrades more than every level-1 child.
    for (double hi : by_level.at(10)) {
        for (double lo : by_level.at(1)) EXPECT_GT(hi, lo);
    }
}

TEST(Synthetic, ProxyDeltaTracksGroundTruth) {
    // The PSNR-proxy delta-quality computed on sampled patches must rank the
    // transcodes essentially as the analytic ground truth does.
    TempDir dir("frvqa_syn");
    SyntheticCorpusOptions opt;
    opt.n_sources = 6;
    opt.width = 32;
    opt.height = 32;
    opt.frames = 4;
    opt.reference_noise_level = 2;
    opt.distortion_grid = {1, 3, 6, 10};
    opt.seed = 3;
    const auto manifest = make_synthetic_corpus(opt, dir.path);
    const auto truth = load_ground_truth(dir.path / "ground_truth.csv");

    PsnrProxyScorer scorer;
    const PatchGeometry geom{16, 16, 2};
    std::vector<double> deltas, truths;
    std::map<std::string, VideoSequence> cache;
    auto load_cached = [&](const ManifestEntry& e) -> const VideoSequence& {
        auto it = cache.find(e.id);
        if (it != cache.end()) return it->second;
        return cache
            .emplace(e.id, load_sequence(manifest.resolve(e), std::nullopt, e.role, e.id,
                                         e.parent_id))
            .first->second;
    };
    for (const auto* d : manifest.with_role(Role::transcoded)) {
        const auto* r = manifest.find(d->parent_id);
        const auto* s = manifest.find(r->parent_id);
        SequenceTriplet triplet{&load_cached(*s), &load_cached(*r), &load_cached(*d)};
        for (auto& pairing : sample_colocated_patches(triplet, 5, hash64(d->id), geom)) {
            const auto ann = annotate_pairing(pairing, scorer);
            deltas.push_back(ann.delta);
            truths.push_back(truth.at(d->id));
        }
    }
    ASSERT_GE(deltas.size(), 100u);
    EXPECT_GE(srocc(deltas, truths), 0.95);
}

}  // namespace
}  // namespace frvqa
