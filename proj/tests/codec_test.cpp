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

#include "frvqa/codec.hpp"

#include "frvqa/synthetic.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace frvqa {
namespace {

using testing::TempDir;

std::vector<std::filesystem::path> write_tiny_sources(const std::filesystem::path& dir, int n) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> paths;
    for (int i = 0; i < n; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "s%04d", i);
        const auto path = dir / (std::string(name) + ".y4m");
        save_y4m(path, make_synthetic_source(name, 8, 8, 1, 1000 + i));
        paths.push_back(path);
    }
    return paths;
}

std::vector<CodecConfig> stub_configs(int count, int qp_base = 10) {
    std::vector<CodecConfig> cfgs;
    for (int i = 0; i < count; ++i) cfgs.push_back({"stub", qp_base + i, "", {}});
    return cfgs;
}

TEST(Codec, RegistryValidatesQualityRange) {
    const auto registry = CodecRegistry::with_defaults();
    EXPECT_NO_THROW(registry.validate({"x264", 37, "medium", {}}));
    EXPECT_THROW(registry.validate({"x264", 60, "medium", {}}), Error);  // CRF beyond 51
    EXPECT_THROW(registry.validate({"x264", -1, "medium", {}}), Error);
    EXPECT_THROW(registry.validate({"webm", 30, "", {}}), Error);  // not registered
}

TEST(Codec, MinimalCorpusIsAThreeEntryChain) {
    TempDir dir("frvqa_codec");
    const auto sources = write_tiny_sources(dir.path / "src", 1);
    const auto registry = CodecRegistry::with_defaults();
    const auto manifest = build_corpus(sources, stub_configs(1), stub_configs(1, 20), registry,
                                       dir.path / "corpus");
    ASSERT_EQ(manifest.entries.size(), 3u);
    EXPECT_EQ(manifest.entries[0].role, Role::source);
    EXPECT_EQ(manifest.entries[1].role, Role::reference);
    EXPECT_EQ(manifest.entries[2].role, Role::transcoded);
    EXPECT_EQ(manifest.entries[1].parent_id, manifest.entries[0].id);
    EXPECT_EQ(manifest.entries[2].parent_id, manifest.entries[1].id);
}

TEST(Codec, EntryCountArithmetic) {
    TempDir dir("frvqa_codec");
    const auto sources = write_tiny_sources(dir.path / "src", 2);
    const auto registry = CodecRegistry::with_defaults();
    const auto manifest = build_corpus(sources, stub_configs(2), stub_configs(4, 30), registry,
                                       dir.path / "corpus");
    EXPECT_EQ(manifest.with_role(Role::source).size(), 2u);
    EXPECT_EQ(manifest.with_role(Role::reference).size(), 4u);
    EXPECT_EQ(manifest.with_role(Role::transcoded).size(), 16u);
}

TEST(Codec, EntryCountArithmeticHoldsForRandomShapes) {
    Rng rng(71);
    for (int trial = 0; trial < 4; ++trial) {
        TempDir dir("frvqa_codec_prop");
        const int n_src = 1 + static_cast<int>(rng.below(3));
        const int n_ref = 1 + static_cast<int>(rng.below(3));
        const int n_tr = 1 + static_cast<int>(rng.below(4));
        const auto sources = write_tiny_sources(dir.path / "src", n_src);
        const auto registry = CodecRegistry::with_defaults();
        const auto manifest = build_corpus(sources, stub_configs(n_ref),
                                           stub_configs(n_tr, 30), registry, dir.path / "c");
        EXPECT_EQ(manifest.with_role(Role::reference).size(),
                  static_cast<size_t>(n_src) * n_ref);
        EXPECT_EQ(manifest.with_role(Role::transcoded).size(),
                  static_cast<size_t>(n_src) * n_ref * n_tr);
        EXPECT_NO_THROW(manifest.validate());
    }
}

TEST(Codec, LineageDepthIsExactlyTwo) {
    TempDir dir("frvqa_codec");
    const auto sources = write_tiny_sources(dir.path / "src", 2);
    const auto registry = CodecRegistry::with_defaults();
    const auto manifest = build_corpus(sources, stub_configs(1), stub_configs(2, 20), registry,
                                       dir.path / "corpus");
    for (const auto& e : manifest.entries) {
        int depth = 0;
        const ManifestEntry* cursor = &e;
        while (!cursor->parent_id.empty()) {
            cursor = manifest.find(cursor->parent_id);
            ASSERT_NE(cursor, nullptr);
            ++depth;
            ASSERT_LE(depth, 2);
        }
        if (e.role == Role::transcoded) EXPECT_EQ(depth, 2);
        if (e.role == Role::reference) EXPECT_EQ(depth, 1);
        if (e.role == Role::source) EXPECT_EQ(depth, 0);
    }
}

TEST(Codec, RerunPerformsZeroEncoderInvocations) {
    TempDir dir("frvqa_codec");
    const auto sources = write_tiny_sources(dir.path / "src", 2);
    const auto registry = CodecRegistry::with_defaults();
    EncodeStats first;
    const auto manifest =
        build_corpus(sources, stub_configs(2), stub_configs(3, 30), registry,
                     dir.path / "corpus", {}, &first);
    EXPECT_EQ(first.encoder_invocations.load(), 4 + 12);

    EncodeStats second;
    const auto again =
        build_corpus(sources, stub_configs(2), stub_configs(3, 30), registry,
                     dir.path / "corpus", {}, &second);
    EXPECT_EQ(second.encoder_invocations.load(), 0);
    ASSERT_EQ(again.entries.size(), manifest.entries.size());
    for (size_t i = 0; i < again.entries.size(); ++i) {
        EXPECT_EQ(again.entries[i].id, manifest.entries[i].id);
        EXPECT_EQ(again.entries[i].path, manifest.entries[i].path);
    }
}

TEST(Codec, MissingEncoderBinaryNamesTheBinary) {
    TempDir dir("frvqa_codec");
    const auto sources = write_tiny_sources(dir.path / "src", 1);
    CodecRegistry registry;
    registry.add({"ghost", BuiltinCodec::none, "frvqa-nonexistent-encoder -o {output} {input}",
                  "", 0, 63});
    CorpusManifest manifest;
    manifest.corpus_root = dir.path;
    ManifestEntry src;
    src.id = "s0000";
    src.role = Role::source;
    src.path = std::filesystem::relative(sources[0], dir.path).string();
    src.size_bytes = std::filesystem::file_size(sources[0]);
    manifest.entries.push_back(src);
    try {
        synthesize_reference(registry, {"ghost", 10, "", {}}, manifest, manifest.entries[0]);
        FAIL() << "expected an environment error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("frvqa-nonexistent-encoder"), std::string::npos);
    }
}

TEST(Codec, UnloadableSourceViolatesThePrecondition) {
    TempDir dir("frvqa_codec");
    auto sources = write_tiny_sources(dir.path / "src", 2);
    std::filesystem::remove(sources[1]);
    const auto registry = CodecRegistry::with_defaults();
    EXPECT_THROW(build_corpus(sources, stub_configs(1), stub_configs(1, 20), registry,
                              dir.path / "corpus"),
                 Error);
}

TEST(Codec, FailedBranchesAreLoggedAndOthersContinue) {
    TempDir dir("frvqa_codec");
    const auto sources = write_tiny_sources(dir.path / "src", 2);
    CodecRegistry registry = CodecRegistry::with_defaults();
    registry.add({"ghost", BuiltinCodec::none, "frvqa-nonexistent-encoder {input} {output}", "",
                  0, 63});
    // One good and one doomed reference config: every source keeps exactly
    // one reference branch alive, and each failure lands in failures.log.
    std::vector<CodecConfig> ref_cfgs = {{"stub", 10, "", {}}, {"ghost", 11, "", {}}};
    const auto manifest = build_corpus(sources, ref_cfgs, stub_configs(2, 30), registry,
                                       dir.path / "corpus");
    EXPECT_EQ(manifest.with_role(Role::reference).size(), 2u);
    EXPECT_EQ(manifest.with_role(Role::transcoded).size(), 4u);
    EXPECT_NO_THROW(manifest.validate());
    const auto log = read_file(dir.path / "corpus" / "failures.log");
    EXPECT_NE(log.find("ghost"), std::string::npos);
}

TEST(Codec, ExternalStageRejectsGeometryDrift) {
    // An "encoder" that substitutes a clip of different geometry: the decoded
    // output no longer matches its parent and the stage must fail.
    TempDir dir("frvqa_codec");
    const auto sources = write_tiny_sources(dir.path / "src", 1);
    const auto other = dir.path / "other.y4m";
    save_y4m(other, make_synthetic_source("other", 16, 16, 1, 9));

    CodecRegistry registry;
    registry.add({"swap", BuiltinCodec::none, "cp " + other.string() + " {output}", "", 0, 63});
    CorpusManifest manifest;
    manifest.corpus_root = dir.path;
    ManifestEntry src;
    src.id = "s0000";
    src.role = Role::source;
    src.path = std::filesystem::relative(sources[0], dir.path).string();
    src.size_bytes = std::filesystem::file_size(sources[0]);
    manifest.entries.push_back(src);
    try {
        synthesize_reference(registry, {"swap", 10, "", {}}, manifest, manifest.entries[0]);
        FAIL() << "expected a dimension mismatch error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("dimensions"), std::string::npos);
    }
}

TEST(Codec, ManifestJsonlRoundTrip) {
    TempDir dir("frvqa_codec");
    const auto sources = write_tiny_sources(dir.path / "src", 1);
    const auto registry = CodecRegistry::with_defaults();
    const auto manifest = build_corpus(sources, stub_configs(1), stub_configs(2, 20), registry,
                                       dir.path / "corpus");
    const auto loaded = load_manifest(dir.path / "corpus" / "manifest.jsonl");
    ASSERT_EQ(loaded.entries.size(), manifest.entries.size());
    for (size_t i = 0; i < loaded.entries.size(); ++i) {
        EXPECT_EQ(loaded.entries[i].id, manifest.entries[i].id);
        EXPECT_EQ(loaded.entries[i].role, manifest.entries[i].role);
        EXPECT_EQ(loaded.entries[i].parent_id, manifest.entries[i].parent_id);
        EXPECT_EQ(loaded.entries[i].size_bytes, manifest.entries[i].size_bytes);
        if (manifest.entries[i].codec) {
            ASSERT_TRUE(loaded.entries[i].codec.has_value());
            EXPECT_EQ(loaded.entries[i].codec->codec_name,
                      manifest.entries[i].codec->codec_name);
            EXPECT_EQ(loaded.entries[i].codec->quality_param,
                      manifest.entries[i].codec->quality_param);
        }
    }
}

TEST(Codec, StubTranscodePreservesContentExactly) {
    TempDir dir("frvqa_codec");
    const auto sources = write_tiny_sources(dir.path / "src", 1);
    const auto registry = CodecRegistry::with_defaults();
    const auto manifest = build_corpus(sources, stub_configs(1), stub_configs(1, 20), registry,
                                       dir.path / "corpus");
    const auto src = load_sequence(manifest.resolve(manifest.entries[0]), std::nullopt,
                                   Role::source, "s");
    const auto dist = load_sequence(manifest.resolve(manifest.entries[2]), std::nullopt,
                                    Role::transcoded, "d", "r");
    EXPECT_EQ(src.luma, dist.luma);
}

TEST(Codec, ConfigFileOverridesRegistry) {
    Config cfg;
    cfg.parse("[codec.x264]\nqp_max = 40\n[codec.custom]\nencode = mytool {input} {output}\n"
              "qp_min = 1\nqp_max = 9\n");
    auto registry = CodecRegistry::with_defaults();
    registry.apply_config(cfg);
    EXPECT_THROW(registry.validate({"x264", 45, "", {}}), Error);  // tightened range
    EXPECT_NO_THROW(registry.validate({"custom", 5, "", {}}));
    EXPECT_THROW(registry.validate({"custom", 0, "", {}}), Error);
}

}  // namespace
}  // namespace frvqa
