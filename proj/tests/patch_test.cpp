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

#include "frvqa/patch.hpp"

#include <set>

#include "gtest/gtest.h"
#include "test_util.hpp"

namespace frvqa {
namespace {

using testing::TempDir;
using testing::make_random_sequence;

TEST(Patch, ExtractMatchesDirectIndexing) {
    const auto seq = make_random_sequence("s", 20, 18, 6, 3);
    const PatchGeometry geom{5, 4, 2};
    const auto p = extract_patch(seq, 1, 7, 3, geom);
    for (int t = 0; t < geom.frames; ++t) {
        for (int y = 0; y < geom.height; ++y) {
            for (int x = 0; x < geom.width; ++x) {
                EXPECT_EQ(p.at(t, y, x), seq.at(1 + t, 3 + y, 7 + x));
            }
        }
    }
    EXPECT_THROW(extract_patch(seq, 5, 0, 0, geom), Error);   // frame overrun
    EXPECT_THROW(extract_patch(seq, 0, 16, 0, geom), Error);  // x overrun
}

TEST(Patch, SingleValidPositionSamplesOrigin) {
    const auto ref = make_random_sequence("r", 32, 32, 4, 1, 8, Role::reference);
    auto dist = make_random_sequence("d", 32, 32, 4, 2, 8, Role::transcoded);
    const PatchGeometry geom{32, 32, 4};
    SequenceTriplet triplet{nullptr, &ref, &dist};
    const auto pairings = sample_colocated_patches(triplet, 1, 12345, geom);
    ASSERT_EQ(pairings.size(), 1u);
    EXPECT_EQ(pairings[0].ref_patch.origin.x, 0);
    EXPECT_EQ(pairings[0].ref_patch.origin.y, 0);
    EXPECT_EQ(pairings[0].ref_patch.origin.frame_offset, 0);
    EXPECT_FALSE(pairings[0].src_patch.has_value());
}

TEST(Patch, SamplingIsDeterministicUnderSeed) {
    const auto ref = make_random_sequence("r", 64, 64, 8, 1, 8, Role::reference);
    const auto dist = make_random_sequence("d", 64, 64, 8, 2, 8, Role::transcoded);
    const PatchGeometry geom{16, 16, 4};
    SequenceTriplet triplet{nullptr, &ref, &dist};
    const auto a = sample_colocated_patches(triplet, 4, 7, geom);
    const auto b = sample_colocated_patches(triplet, 4, 7, geom);
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        EXPECT_TRUE(a[i].ref_patch.origin.colocated_with(b[i].ref_patch.origin));
    }
    const auto c = sample_colocated_patches(triplet, 4, 8, geom);
    bool any_differ = false;
    for (size_t i = 0; i < a.size(); ++i) {
        any_differ = any_differ || !a[i].ref_patch.origin.colocated_with(c[i].ref_patch.origin);
    }
    EXPECT_TRUE(any_differ);
}

TEST(Patch, SamplingAttachesSourceIffSupplied) {
    const auto src = make_random_sequence("s", 32, 32, 4, 1);
    const auto ref = make_random_sequence("r", 32, 32, 4, 2, 8, Role::reference);
    const auto dist = make_random_sequence("d", 32, 32, 4, 3, 8, Role::transcoded);
    const PatchGeometry geom{8, 8, 2};
    SequenceTriplet with_src{&src, &ref, &dist};
    for (const auto& pairing : sample_colocated_patches(with_src, 3, 5, geom)) {
        ASSERT_TRUE(pairing.src_patch.has_value());
        EXPECT_TRUE(pairing.src_patch->origin.colocated_with(pairing.ref_patch.origin));
        EXPECT_TRUE(pairing.dist_patch.origin.colocated_with(pairing.ref_patch.origin));
    }
}

TEST(Patch, CodimensionViolationIsRejected) {
    const auto ref = make_random_sequence("r", 40, 40, 4, 1, 8, Role::reference);
    const auto dist = make_random_sequence("d", 32, 32, 4, 2, 8, Role::transcoded);
    SequenceTriplet triplet{nullptr, &ref, &dist};
    EXPECT_THROW(sample_colocated_patches(triplet, 1, 1, {8, 8, 2}), Error);
}

TEST(Patch, SequenceSmallerThanPatchIsRejected) {
    const auto ref = make_random_sequence("r", 16, 16, 2, 1, 8, Role::reference);
    const auto dist = make_random_sequence("d", 16, 16, 2, 2, 8, Role::transcoded);
    SequenceTriplet triplet{nullptr, &ref, &dist};
    EXPECT_THROW(sample_colocated_patches(triplet, 1, 1, {32, 32, 2}), Error);
    EXPECT_THROW(tile_patches(ref, dist, {16, 16, 4}), Error);
}

TEST(Patch, TilingExactGrid) {
    const auto ref = make_random_sequence("r", 512, 512, 12, 1, 8, Role::reference);
    const auto dist = make_random_sequence("d", 512, 512, 12, 2, 8, Role::transcoded);
    const auto pairings = tile_patches(ref, dist, {256, 256, 12}, {256, 12});
    ASSERT_EQ(pairings.size(), 4u);
    std::set<std::pair<int, int>> corners;
    for (const auto& p : pairings) corners.insert({p.ref_patch.origin.x, p.ref_patch.origin.y});
    EXPECT_EQ(corners, (std::set<std::pair<int, int>>{{0, 0}, {256, 0}, {0, 256}, {256, 256}}));
}

TEST(Patch, TilingClampsFinalColumn) {
    const auto ref = make_random_sequence("r", 384, 256, 12, 1, 8, Role::reference);
    const auto dist = make_random_sequence("d", 384, 256, 12, 2, 8, Role::transcoded);
    const auto pairings = tile_patches(ref, dist, {256, 256, 12}, {256, 12});
    ASSERT_EQ(pairings.size(), 2u);
    EXPECT_EQ(pairings[0].ref_patch.origin.x, 0);
    EXPECT_EQ(pairings[1].ref_patch.origin.x, 128);  // re-anchored to fit
}

TEST(Patch, TilingTemporalWindows) {
    const auto ref = make_random_sequence("r", 256, 256, 24, 1, 8, Role::reference);
    const auto dist = make_random_sequence("d", 256, 256, 24, 2, 8, Role::transcoded);
    const auto pairings = tile_patches(ref, dist, {256, 256, 12}, {256, 12});
    ASSERT_EQ(pairings.size(), 2u);
    EXPECT_EQ(pairings[0].ref_patch.origin.frame_offset, 0);
    EXPECT_EQ(pairings[1].ref_patch.origin.frame_offset, 12);
}

TEST(Patch, TilingCoversEveryPixelAtLeastOnce) {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const int w = 8 + static_cast<int>(rng.below(40));
        const int h = 8 + static_cast<int>(rng.below(40));
        const int t = 2 + static_cast<int>(rng.below(6));
        const int pw = 4 + static_cast<int>(rng.below(static_cast<uint64_t>(std::min(w, h) - 4)));
        const int stride = 1 + static_cast<int>(rng.below(pw));
        const int pt = 1 + static_cast<int>(rng.below(t));
        const auto ref = make_random_sequence("r", w, h, t, trial, 8, Role::reference);
        const auto dist = make_random_sequence("d", w, h, t, trial + 1, 8, Role::transcoded);
        const PatchGeometry geom{pw, pw, pt};
        const auto pairings = tile_patches(ref, dist, geom, {stride, pt});
        std::vector<char> covered(static_cast<size_t>(w) * h * t, 0);
        for (const auto& p : pairings) {
            const auto& o = p.ref_patch.origin;
            for (int dt = 0; dt < pt; ++dt) {
                for (int dy = 0; dy < pw; ++dy) {
                    for (int dx = 0; dx < pw; ++dx) {
                        covered[(static_cast<size_t>(o.frame_offset + dt) * h + o.y + dy) * w +
                                o.x + dx] = 1;
                    }
                }
            }
        }
        for (char c : covered) ASSERT_EQ(c, 1);
    }
}

TEST(Patch, StoreRoundTrip) {
    TempDir dir("frvqa_patchstore");
    const auto ref = make_random_sequence("r", 32, 32, 4, 1, 8, Role::reference);
    const auto dist = make_random_sequence("d", 32, 32, 4, 2, 8, Role::transcoded);
    const PatchGeometry geom{8, 8, 2};
    const auto pairings = tile_patches(ref, dist, geom);

    PatchStoreWriter writer(dir.path, geom, 8);
    int counter = 0;
    for (const auto& p : pairings) {
        const std::string id = "p" + std::to_string(counter++);
        writer.add(id, "ref", p.ref_patch);
        writer.add(id, "dist", p.dist_patch);
    }
    writer.finish();

    PatchStoreReader reader(dir.path);
    EXPECT_EQ(reader.geometry(), geom);
    ASSERT_EQ(reader.entries().size(), pairings.size() * 2);
    size_t k = 0;
    for (const auto& p : pairings) {
        const Patch back_ref = reader.read(reader.entries()[k++]);
        const Patch back_dist = reader.read(reader.entries()[k++]);
        EXPECT_EQ(back_ref.data, p.ref_patch.data);
        EXPECT_EQ(back_dist.data, p.dist_patch.data);
        EXPECT_TRUE(back_ref.origin.colocated_with(p.ref_patch.origin));
    }
}

}  // namespace
}  // namespace frvqa
