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

#include "frvqa/labeling.hpp"

#include <sys/stat.h>

#include <cmath>

#include "frvqa/synthetic.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace frvqa {
namespace {

using testing::TempDir;
using testing::make_constant_patch;
using testing::make_random_patch;

TEST(Proxy, IdenticalContentScoresThePerfectValue) {
    PsnrProxyScorer scorer;
    const auto src = make_random_patch(16, 16, 3, 1);
    EXPECT_DOUBLE_EQ(compute_proxy(src, src, scorer), scorer.perfect_score());
}

TEST(Proxy, UniformOffsetHasClosedFormPsnr) {
    PsnrProxyScorer scorer;
    const auto src = make_constant_patch(16, 16, 3, 100);
    auto test = src;
    for (auto& v : test.data) v = static_cast<uint16_t>(v + 2);
    // 20*log10(255/2) dB for a constant error of 2 on 8-bit samples.
    EXPECT_NEAR(compute_proxy(src, test, scorer), 20.0 * std::log10(255.0 / 2.0), 1e-12);
}

TEST(Proxy, DimensionMismatchIsRejected) {
    PsnrProxyScorer scorer;
    const auto a = make_random_patch(16, 16, 3, 1);
    const auto b = make_random_patch(8, 8, 3, 2);
    EXPECT_THROW(compute_proxy(a, b, scorer), Error);
}

TEST(Proxy, TenBitSamplesUseTheirFullRange) {
    PsnrProxyScorer scorer;
    auto src = make_random_patch(16, 16, 2, 5, 10);
    for (auto& v : src.data) v = 500;
    auto test = src;
    for (auto& v : test.data) v = 502;
    EXPECT_NEAR(compute_proxy(src, test, scorer), 20.0 * std::log10(1023.0 / 2.0), 1e-12);
}

TEST(Proxy, ExternalScorerRoundTripsThroughTheToolProtocol) {
    testing::TempDir dir("frvqa_extproxy");
    const auto src = make_random_patch(16, 16, 2, 11);
    const auto test = make_random_patch(16, 16, 2, 12);

    // Tool printing its score on stdout.
    const auto stdout_tool = dir.path / "stdout_tool.sh";
    write_file(stdout_tool, "#!/bin/sh\ntest -f \"$1\" && test -f \"$2\" || exit 9\n"
                            "echo \"frames pooled, score: 87.5\"\n");
    ::chmod(stdout_tool.c_str(), 0755);
    ExternalProxyScorer via_stdout(stdout_tool.string() + " {reference} {distorted}", "fake");
    EXPECT_DOUBLE_EQ(compute_proxy(src, test, via_stdout), 87.5);

    // Tool writing a pooled-metrics JSON report to {output}.
    const auto json_tool = dir.path / "json_tool.sh";
    write_file(json_tool,
               "#!/bin/sh\nprintf '{\"pooled_metrics\": {\"vmaf\": {\"mean\": 91.25}}}' > \"$3\"\n");
    ::chmod(json_tool.c_str(), 0755);
    ExternalProxyScorer via_json(json_tool.string() + " {reference} {distorted} {output}", "fake");
    EXPECT_DOUBLE_EQ(compute_proxy(src, test, via_json), 91.25);

    // Tool failure surfaces as a scorer error.
    const auto broken_tool = dir.path / "broken.sh";
    write_file(broken_tool, "#!/bin/sh\necho doomed >&2\nexit 2\n");
    ::chmod(broken_tool.c_str(), 0755);
    ExternalProxyScorer broken(broken_tool.string() + " {reference} {distorted}", "fake");
    EXPECT_THROW(compute_proxy(src, test, broken), Error);
}

TEST(Proxy, DeltaQualityArithmetic) {
    EXPECT_DOUBLE_EQ(delta_quality(90.0, 70.0), 20.0);
    EXPECT_DOUBLE_EQ(delta_quality(55.5, 55.5), 0.0);
    EXPECT_DOUBLE_EQ(delta_quality(70.0, 90.0), -20.0);
}

TEST(RankLabel, ThresholdGate) {
    EXPECT_EQ(rank_label(10.0, 3.0, 6.0), std::optional<int>(1));
    EXPECT_EQ(rank_label(3.0, 10.0, 6.0), std::optional<int>(0));
    EXPECT_EQ(rank_label(5.0, 5.0, 0.0), std::nullopt);  // not strictly greater
    EXPECT_EQ(rank_label(8.0, 3.0, 5.0), std::nullopt);  // exactly at the gate
    EXPECT_THROW(rank_label(1.0, 2.0, -1.0), Error);
}

TEST(RankLabel, AntisymmetryAndSymmetricExclusion) {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double d1 = rng.uniform(-20.0, 20.0);
        const double d2 = rng.uniform(-20.0, 20.0);
        const double sigma = rng.uniform(0.0, 8.0);
        const auto fwd = rank_label(d1, d2, sigma);
        const auto rev = rank_label(d2, d1, sigma);
        if (fwd.has_value()) {
            ASSERT_TRUE(rev.has_value());
            EXPECT_EQ(*fwd, 1 - *rev);
        } else {
            EXPECT_FALSE(rev.has_value());
        }
    }
}

TEST(RankLabel, InvariantUnderCommonOffsetPerSourcePair) {
    // Adding a constant to both proxy scores of each (S, .) pair cancels in
    // the delta, so the label cannot move.
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        const double s1r = rng.uniform(0, 100), s1d = rng.uniform(0, 100);
        const double s2r = rng.uniform(0, 100), s2d = rng.uniform(0, 100);
        const double c1 = rng.uniform(-10, 10), c2 = rng.uniform(-10, 10);
        const double sigma = rng.uniform(0.0, 6.0);
        const auto base = rank_label(delta_quality(s1r, s1d), delta_quality(s2r, s2d), sigma);
        const auto shifted = rank_label(delta_quality(s1r + c1, s1d + c1),
                                        delta_quality(s2r + c2, s2d + c2), sigma);
        // Deltas are bit-identical only when the offset cancels exactly, so
        // compare the labels through the recomputed deltas.
        EXPECT_NEAR(delta_quality(s1r + c1, s1d + c1), delta_quality(s1r, s1d), 1e-9);
        if (base.has_value()) {
            ASSERT_TRUE(shifted.has_value());
            EXPECT_EQ(*base, *shifted);
        }
    }
}

struct LabelingWorld {
    TempDir dir{"frvqa_label"};
    CorpusManifest manifest;

    explicit LabelingWorld(int n_sources = 3, std::vector<int> grid = {2, 8},
                           int patches = 4) {
        SyntheticCorpusOptions opt;
        opt.n_sources = n_sources;
        opt.width = 24;
        opt.height = 24;
        opt.frames = 4;
        opt.reference_noise_level = 2;
        opt.distortion_grid = std::move(grid);
        opt.seed = 9;
        manifest = make_synthetic_corpus(opt, dir.path);
    }
};

TEST(Labeling, BuildTrainingSetIsDeterministic) {
    LabelingWorld world;
    LabelingOptions opt;
    opt.patch_geometry = {8, 8, 2};
    opt.patches_per_sequence = 3;
    opt.seed = 21;
    PsnrProxyScorer scorer;
    const auto a = build_training_set(world.manifest, opt, scorer);
    const auto b = build_training_set(world.manifest, opt, scorer);
    ASSERT_EQ(a.instances.size(), b.instances.size());
    ASSERT_FALSE(a.instances.empty());
    for (size_t i = 0; i < a.instances.size(); ++i) {
        EXPECT_EQ(a.instances[i].id, b.instances[i].id);
        EXPECT_EQ(a.instances[i].rank, b.instances[i].rank);
        EXPECT_EQ(a.instances[i].mode, b.instances[i].mode);
        EXPECT_EQ(a.instances[i].pairing_1.id, b.instances[i].pairing_1.id);
        EXPECT_DOUBLE_EQ(a.instances[i].delta_1, b.instances[i].delta_1);
    }
}

TEST(Labeling, InstancesNeverRetainSourcePatches) {
    LabelingWorld world;
    LabelingOptions opt;
    opt.patch_geometry = {8, 8, 2};
    opt.patches_per_sequence = 3;
    PsnrProxyScorer scorer;
    const auto set = build_training_set(world.manifest, opt, scorer);
    ASSERT_FALSE(set.instances.empty());
    for (const auto& inst : set.instances) {
        EXPECT_FALSE(inst.pairing_1.src_patch.has_value());
        EXPECT_FALSE(inst.pairing_2.src_patch.has_value());
        EXPECT_NO_THROW(inst.validate());
        // Labels agree with the recorded deltas under the mode's gate.
        const RankThresholds thresholds;
        const auto expect =
            rank_label(inst.delta_1, inst.delta_2, thresholds.sigma_for(inst.mode));
        ASSERT_TRUE(expect.has_value());
        EXPECT_EQ(inst.rank, *expect);
    }
}

TEST(Labeling, AllIdenticalTranscodesAreExcluded) {
    // Noise level 0 keeps D identical to R, so every delta is exactly 0 and
    // every candidate falls inside the gate.
    LabelingWorld world(2, {0}, 3);
    LabelingOptions opt;
    opt.patch_geometry = {8, 8, 2};
    opt.patches_per_sequence = 3;
    opt.thresholds.sigma_ss = 0.0;
    opt.thresholds.sigma_ds = 0.0;
    PsnrProxyScorer scorer;
    const auto set = build_training_set(world.manifest, opt, scorer);
    EXPECT_TRUE(set.instances.empty());
    EXPECT_NE(set.stats.diagnostic.find("excluded"), std::string::npos);
    EXPECT_EQ(set.stats.excluded, set.stats.candidates);
}

TEST(Labeling, CandidateSsFractionTracksTarget) {
    LabelingWorld world(12, {2, 5, 8}, 40);
    LabelingOptions opt;
    opt.patch_geometry = {8, 8, 2};
    opt.patches_per_sequence = 40;
    opt.ss_fraction = 0.8;
    opt.seed = 33;
    PsnrProxyScorer scorer;
    const auto set = build_training_set(world.manifest, opt, scorer);
    // 12 sources x 3 transcodes x 40 patches = 1440 candidates drawn
    // Bernoulli(0.8); +-2% is a > 5 sigma band at this count.
    EXPECT_GT(set.stats.candidates, 1000u);
    EXPECT_NEAR(set.stats.candidate_ss_fraction, 0.8, 0.02);
}

TEST(Labeling, ModeReflectsReferenceLineage) {
    LabelingWorld world(3, {2, 8}, 6);
    LabelingOptions opt;
    opt.patch_geometry = {8, 8, 2};
    opt.patches_per_sequence = 6;
    PsnrProxyScorer scorer;
    const auto set = build_training_set(world.manifest, opt, scorer);
    ASSERT_FALSE(set.instances.empty());
    bool saw_ss = false, saw_ds = false;
    for (const auto& inst : set.instances) {
        const bool same_ref = inst.pairing_1.ref_patch.origin.sequence_id ==
                              inst.pairing_2.ref_patch.origin.sequence_id;
        EXPECT_EQ(same_ref, inst.mode == PairMode::SS);
        saw_ss = saw_ss || inst.mode == PairMode::SS;
        saw_ds = saw_ds || inst.mode == PairMode::DS;
    }
    EXPECT_TRUE(saw_ss);
    EXPECT_TRUE(saw_ds);
}

TEST(Labeling, DatasetRoundTripsThroughDisk) {
    LabelingWorld world;
    LabelingOptions opt;
    opt.patch_geometry = {8, 8, 2};
    opt.patches_per_sequence = 3;
    PsnrProxyScorer scorer;
    const auto set = build_training_set(world.manifest, opt, scorer);
    ASSERT_FALSE(set.instances.empty());

    TempDir out("frvqa_dataset");
    save_training_set(out.path, set);
    const auto loaded = load_training_set(out.path);
    ASSERT_EQ(loaded.instances.size(), set.instances.size());
    for (size_t i = 0; i < set.instances.size(); ++i) {
        EXPECT_EQ(loaded.instances[i].id, set.instances[i].id);
        EXPECT_EQ(loaded.instances[i].rank, set.instances[i].rank);
        EXPECT_EQ(loaded.instances[i].mode, set.instances[i].mode);
        EXPECT_EQ(loaded.instances[i].pairing_1.ref_patch.data,
                  set.instances[i].pairing_1.ref_patch.data);
        EXPECT_EQ(loaded.instances[i].pairing_2.dist_patch.data,
                  set.instances[i].pairing_2.dist_patch.data);
        EXPECT_NEAR(loaded.instances[i].delta_1, set.instances[i].delta_1, 1e-12);
    }
}

TEST(Labeling, MissingSourceIsAnError) {
    LabelingWorld world(2, {2}, 2);
    // Strip the sources out of the manifest copy.
    CorpusManifest broken;
    broken.corpus_root = world.manifest.corpus_root;
    for (const auto& e : world.manifest.entries) {
        if (e.role == Role::source) continue;
        auto copy = e;
        if (copy.role == Role::reference) copy.parent_id.clear();
        broken.entries.push_back(copy);
    }
    LabelingOptions opt;
    opt.patch_geometry = {8, 8, 2};
    opt.patches_per_sequence = 2;
    PsnrProxyScorer scorer;
    EXPECT_THROW(build_training_set(broken, opt, scorer), Error);
}

}  // namespace
}  // namespace frvqa
