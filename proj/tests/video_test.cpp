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

#include "frvqa/video.hpp"

#include "gtest/gtest.h"
#include "test_util.hpp"

namespace frvqa {
namespace {

using testing::TempDir;
using testing::make_random_sequence;

TEST(Video, RawLoadDerivesFrameCountFromFileSize) {
    TempDir dir("frvqa_video");
    const auto seq = make_random_sequence("s", 64, 64, 12, 42);
    const auto path = dir.path / "clip.yuv";
    save_raw(path, seq);
    // 64*64*1.5*12 bytes of 4:2:0 content.
    ASSERT_EQ(std::filesystem::file_size(path), static_cast<uintmax_t>(64 * 64 * 1.5 * 12));

    VideoGeometry geom;
    geom.width = 64;
    geom.height = 64;
    const auto loaded = load_sequence(path, geom, Role::source, "s");
    EXPECT_EQ(loaded.frame_count, 12);
    EXPECT_EQ(loaded.width, 64);
    EXPECT_EQ(loaded.height, 64);
}

TEST(Video, RawLoadRejectsInconsistentGeometry) {
    TempDir dir("frvqa_video");
    const auto seq = make_random_sequence("s", 64, 64, 12, 42);
    const auto path = dir.path / "clip.yuv";
    save_raw(path, seq);

    // Same bytes declared as 128x128x12: the size arithmetic cannot hold.
    VideoGeometry wrong;
    wrong.width = 128;
    wrong.height = 128;
    wrong.frame_count = 12;
    EXPECT_THROW(load_sequence(path, wrong, Role::source, "s"), Error);

    // Width that does not divide the file size at all.
    VideoGeometry odd;
    odd.width = 100;
    odd.height = 100;
    EXPECT_THROW(load_sequence(path, odd, Role::source, "s"), Error);
}

TEST(Video, SelfDescribingHeaderSuppliesGeometry) {
    TempDir dir("frvqa_video");
    const auto seq = make_random_sequence("s", 256, 256, 2, 7);
    const auto path = dir.path / "clip.y4m";
    save_y4m(path, seq);
    // No geometry declared; everything comes from the stream header.
    const auto loaded = load_sequence(path, std::nullopt, Role::source, "s");
    EXPECT_EQ(loaded.width, 256);
    EXPECT_EQ(loaded.height, 256);
    EXPECT_EQ(loaded.frame_count, 2);
}

TEST(Video, RawRoundTripIsBitExact) {
    TempDir dir("frvqa_video");
    for (int bit_depth : {8, 10}) {
        const auto seq = make_random_sequence("s", 32, 24, 5, 99 + bit_depth, bit_depth);
        const auto path = dir.path / ("clip" + std::to_string(bit_depth) + ".yuv");
        save_raw(path, seq);
        VideoGeometry geom;
        geom.width = 32;
        geom.height = 24;
        geom.bit_depth = bit_depth;
        const auto loaded = load_raw(path, geom);
        EXPECT_EQ(loaded.luma, seq.luma);
        EXPECT_EQ(loaded.cb, seq.cb);
        EXPECT_EQ(loaded.cr, seq.cr);
    }
}

TEST(Video, Y4mRoundTripIsBitExact) {
    TempDir dir("frvqa_video");
    for (int bit_depth : {8, 10}) {
        for (ChromaFormat chroma :
             {ChromaFormat::c420, ChromaFormat::c444, ChromaFormat::c400}) {
            auto seq = make_random_sequence("s", 48, 32, 3, 5 + bit_depth, bit_depth);
            seq.chroma = chroma;
            const size_t csize = detail::chroma_plane_samples(48, 32, chroma);
            seq.cb.resize(csize * 3);
            seq.cr.resize(csize * 3);
            const auto path = dir.path / "clip.y4m";
            save_y4m(path, seq);
            const auto loaded = load_y4m(path);
            EXPECT_EQ(loaded.bit_depth, bit_depth);
            EXPECT_EQ(loaded.chroma, chroma);
            EXPECT_EQ(loaded.luma, seq.luma);
            EXPECT_EQ(loaded.cb, seq.cb);
            EXPECT_EQ(loaded.cr, seq.cr);
        }
    }
}

TEST(Video, LineageInvariants) {
    auto seq = make_random_sequence("r0", 16, 16, 2, 1);
    seq.role = Role::reference;
    seq.parent_id = "";
    EXPECT_THROW(seq.validate(), Error);  // non-source needs a parent
    seq.parent_id = "s0";
    EXPECT_NO_THROW(seq.validate());
    seq.role = Role::source;
    EXPECT_THROW(seq.validate(), Error);  // source must not have one
}

TEST(Video, MissingFileAndBadDepth) {
    VideoGeometry geom;
    geom.width = 16;
    geom.height = 16;
    EXPECT_THROW(load_sequence("/nonexistent/clip.yuv", geom, Role::source, "x"), Error);

    TempDir dir("frvqa_video");
    const auto seq = make_random_sequence("s", 16, 16, 1, 3);
    const auto path = dir.path / "c.yuv";
    save_raw(path, seq);
    geom.bit_depth = 12;
    EXPECT_THROW(load_raw(path, geom), Error);
}

}  // namespace
}  // namespace frvqa
