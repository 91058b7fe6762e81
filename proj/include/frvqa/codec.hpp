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

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "frvqa/util.hpp"
#include "frvqa/video.hpp"

namespace frvqa {

// One encoder configuration: constant-quality level plus preset/extra args.
struct CodecConfig {
    std::string codec_name;
    int quality_param = 0;
    std::string preset;
    std::vector<std::string> extra_args;

    std::string tag() const {
        std::string t = codec_name + ".q" + std::to_string(quality_param);
        if (!preset.empty()) t += "." + preset;
        return t;
    }
};

enum class BuiltinCodec { none, stub_copy, add_noise };

// Registry entry. External codecs run through command templates with
// {input}/{output}/{qp}/{preset}/{extra} placeholders; builtin codecs run
// in-process so the pipeline stays hermetic without encoder binaries.
struct CodecSpec {
    std::string name;
    BuiltinCodec builtin = BuiltinCodec::none;
    std::string encode_template;
    std::string decode_template;  // empty: the encoded artifact is already raw
    int qp_min = 0;
    int qp_max = 63;
};

class CodecRegistry {
  public:
    // Builtins: "stub" copies the input verbatim and only declares its QP;
    // "noise" adds seeded Gaussian luma noise with sigma = QP. External
    // entries for the usual transcoding codecs are present but need their
    // binaries on PATH (or templates overridden via the config file).
    static CodecRegistry with_defaults() {
        CodecRegistry reg;
        reg.add({"stub", BuiltinCodec::stub_copy, "", "", 0, 63});
        reg.add({"noise", BuiltinCodec::add_noise, "", "", 0, 64});
        reg.add({"x264", BuiltinCodec::none,
                 "x264 --crf {qp} --preset {preset} {extra} -o {output} {input}",
                 "ffmpeg -y -loglevel error -i {input} {output}", 0, 51});
        reg.add({"x265", BuiltinCodec::none,
                 "x265 --crf {qp} --preset {preset} {extra} --output {output} {input}",
                 "ffmpeg -y -loglevel error -i {input} {output}", 0, 51});
        reg.add({"vp9", BuiltinCodec::none,
                 "vpxenc --codec=vp9 --end-usage=q --cq-level={qp} {extra} -o {output} {input}",
                 "ffmpeg -y -loglevel error -i {input} {output}", 0, 63});
        reg.add({"av1", BuiltinCodec::none,
                 "aomenc --end-usage=q --cq-level={qp} {extra} -o {output} {input}",
                 "ffmpeg -y -loglevel error -i {input} {output}", 0, 63});
        return reg;
    }

    void add(CodecSpec spec) { specs_[spec.name] = std::move(spec); }

    // Config file sections named [codec.NAME] override or extend the registry.
    void apply_config(const Config& cfg) {
        for (const auto& section : cfg.section_names()) {
            if (!starts_with(section, "codec.")) continue;
            const std::string name = section.substr(6);
            CodecSpec spec;
            auto existing = specs_.find(name);
            if (existing != specs_.end()) spec = existing->second;
            spec.name = name;
            if (cfg.has(section, "encode")) {
                spec.encode_template = cfg.get(section, "encode");
                spec.builtin = BuiltinCodec::none;
            }
            if (cfg.has(section, "decode")) spec.decode_template = cfg.get(section, "decode");
            spec.qp_min = static_cast<int>(cfg.get_int(section, "qp_min", spec.qp_min));
            spec.qp_max = static_cast<int>(cfg.get_int(section, "qp_max", spec.qp_max));
            specs_[name] = std::move(spec);
        }
    }

    const CodecSpec& lookup(const std::string& name) const {
        auto it = specs_.find(name);
        if (it == specs_.end()) fail("codec '" + name + "' is not in the encoder registry");
        return it->second;
    }

    void validate(const CodecConfig& cfg) const {
        const CodecSpec& spec = lookup(cfg.codec_name);
        if (cfg.quality_param < spec.qp_min || cfg.quality_param > spec.qp_max) {
            fail("quality parameter " + std::to_string(cfg.quality_param) + " for codec '" +
                 cfg.codec_name + "' is outside its documented range [" +
                 std::to_string(spec.qp_min) + ", " + std::to_string(spec.qp_max) + "]");
        }
    }

  private:
    std::map<std::string, CodecSpec> specs_;
};

// ---------------------------------------------------------------------------
// Corpus manifest: JSON lines, one entry per line. The lineage graph is a
// forest of source -> reference -> transcoded chains.
// ---------------------------------------------------------------------------

struct ManifestEntry {
    std::string id;
    Role role = Role::source;
    std::string path;  // decoded raw stream, relative to corpus_root when inside it
    std::optional<CodecConfig> codec;
    std::string parent_id;
    uint64_t size_bytes = 0;
    std::optional<double> true_degradation;  // synthetic corpora only
};

struct CorpusManifest {
    std::vector<ManifestEntry> entries;
    std::filesystem::path corpus_root;

    const ManifestEntry* find(const std::string& id) const {
        for (const auto& e : entries) {
            if (e.id == id) return &e;
        }
        return nullptr;
    }

    std::vector<const ManifestEntry*> with_role(Role role) const {
        std::vector<const ManifestEntry*> out;
        for (const auto& e : entries) {
            if (e.role == role) out.push_back(&e);
        }
        return out;
    }

    std::filesystem::path resolve(const ManifestEntry& e) const {
        std::filesystem::path p(e.path);
        return p.is_absolute() ? p : corpus_root / p;
    }

    void validate() const {
        std::map<std::string, const ManifestEntry*> by_id;
        for (const auto& e : entries) {
            require(by_id.emplace(e.id, &e).second, "duplicate manifest id '" + e.id + "'");
        }
        for (const auto& e : entries) {
            if (e.role == Role::source) {
                require(e.parent_id.empty(), "source '" + e.id + "' must not have a parent");
                continue;
            }
            auto parent = by_id.find(e.parent_id);
            require(parent != by_id.end(),
                    "entry '" + e.id + "' names missing parent '" + e.parent_id + "'");
            const Role expected =
                e.role == Role::reference ? Role::source : Role::reference;
            require(parent->second->role == expected,
                    "entry '" + e.id + "' has a parent of the wrong role");
        }
    }
};

inline nlohmann::json manifest_entry_to_json(const ManifestEntry& e) {
    nlohmann::json j;
    j["id"] = e.id;
    j["role"] = role_name(e.role);
    j["path"] = e.path;
    j["codec"] = e.codec ? nlohmann::json(e.codec->codec_name) : nlohmann::json();
    j["quality_param"] = e.codec ? nlohmann::json(e.codec->quality_param) : nlohmann::json();
    j["preset"] = e.codec ? nlohmann::json(e.codec->preset) : nlohmann::json();
    j["parent_id"] = e.parent_id.empty() ? nlohmann::json() : nlohmann::json(e.parent_id);
    j["size_bytes"] = e.size_bytes;
    if (e.true_degradation) j["true_degradation"] = *e.true_degradation;
    return j;
}

inline ManifestEntry manifest_entry_from_json(const nlohmann::json& j) {
    ManifestEntry e;
    e.id = j.at("id").get<std::string>();
    e.role = role_from_name(j.at("role").get<std::string>());
    e.path = j.at("path").get<std::string>();
    if (!j.at("codec").is_null()) {
        CodecConfig cfg;
        cfg.codec_name = j.at("codec").get<std::string>();
        cfg.quality_param = j.at("quality_param").get<int>();
        cfg.preset = j.value("preset", nlohmann::json()).is_null()
                         ? ""
                         : j.at("preset").get<std::string>();
        e.codec = cfg;
    }
    if (!j.at("parent_id").is_null()) e.parent_id = j.at("parent_id").get<std::string>();
    e.size_bytes = j.value("size_bytes", uint64_t{0});
    if (j.contains("true_degradation")) e.true_degradation = j.at("true_degradation").get<double>();
    return e;
}

inline void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
    std::ostringstream ss;
    for (const auto& e : manifest.entries) ss << manifest_entry_to_json(e).dump() << '\n';
    write_file_atomic(path, ss.str());
}

inline CorpusManifest load_manifest(const std::filesystem::path& path) {
    CorpusManifest manifest;
    manifest.corpus_root = path.parent_path();
    std::ifstream in(path);
    if (!in) fail("cannot open manifest: " + path.string());
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        manifest.entries.push_back(manifest_entry_from_json(nlohmann::json::parse(line)));
    }
    manifest.validate();
    return manifest;
}

// ---------------------------------------------------------------------------
// Encoding stages
// ---------------------------------------------------------------------------

struct EncodeStats {
    std::atomic<int> encoder_invocations{0};  // builtin and external alike
    std::atomic<int> skipped{0};
    std::atomic<int> failed{0};
};

struct EncodeOutcome {
    ManifestEntry entry;
    std::optional<double> realized_mse;  // builtin noise records its own degradation
};

namespace detail {

inline void add_luma_noise(VideoSequence& seq, double sigma, uint64_t seed, double* realized_mse) {
    Rng rng(seed);
    const int max_value = seq.max_value();
    double acc = 0.0;
    for (auto& sample : seq.luma) {
        const double noisy = sigma > 0.0 ? sample + sigma * rng.normal() : sample;
        const int clamped =
            std::clamp(static_cast<int>(std::lround(noisy)), 0, max_value);
        const double d = static_cast<double>(clamped) - static_cast<double>(sample);
        acc += d * d;
        sample = static_cast<uint16_t>(clamped);
    }
    if (realized_mse) *realized_mse = acc / static_cast<double>(seq.luma.size());
}

inline std::string expand_template(const std::string& tmpl, const std::string& input,
                                   const std::string& output, const CodecConfig& cfg) {
    std::string cmd = tmpl;
    cmd = replace_all(cmd, "{input}", input);
    cmd = replace_all(cmd, "{output}", output);
    cmd = replace_all(cmd, "{qp}", std::to_string(cfg.quality_param));
    cmd = replace_all(cmd, "{preset}", cfg.preset.empty() ? "medium" : cfg.preset);
    std::string extra;
    for (const auto& a : cfg.extra_args) {
        if (!extra.empty()) extra += ' ';
        extra += a;
    }
    cmd = replace_all(cmd, "{extra}", extra);
    return cmd;
}

inline std::string binary_name(const std::string& command) {
    const auto space = command.find(' ');
    return command.substr(0, space == std::string::npos ? command.size() : space);
}

}  // namespace detail

// Encode `parent` at cfg and decode the result back to a raw stream at
// `decoded_path`. Returns the manifest entry for the child.
inline EncodeOutcome run_codec_stage(const CodecRegistry& registry, const CodecConfig& cfg,
                                     const CorpusManifest& manifest, const ManifestEntry& parent,
                                     Role child_role, const std::string& child_id,
                                     const std::filesystem::path& decoded_path, uint64_t seed,
                                     EncodeStats* stats) {
    namespace fs = std::filesystem;
    registry.validate(cfg);
    const CodecSpec& spec = registry.lookup(cfg.codec_name);
    const fs::path input = manifest.resolve(parent);
    if (spec.builtin == BuiltinCodec::none && !fs::exists(input)) {
        fail("input file missing for '" + parent.id + "': " + input.string());
    }

    EncodeOutcome outcome;
    if (stats) stats->encoder_invocations.fetch_add(1);

    if (spec.builtin == BuiltinCodec::stub_copy) {
        // Identity output: hard link where the filesystem allows (the corpus
        // is write-once), byte copy otherwise. A stale output from an
        // interrupted run is removed on the retry path.
        std::error_code ec;
        fs::create_hard_link(input, decoded_path, ec);
        if (ec) {
            ec.clear();
            fs::remove(decoded_path, ec);
            ec.clear();
            fs::create_hard_link(input, decoded_path, ec);
        }
        if (ec) {
            ec.clear();
            fs::copy_file(input, decoded_path, fs::copy_options::overwrite_existing, ec);
            if (ec) {
                fail("stub encode of '" + child_id + "' failed: " + ec.message() + " (" +
                     input.string() + ")");
            }
        }
    } else if (spec.builtin == BuiltinCodec::add_noise) {
        VideoSequence seq =
            load_sequence(input, std::nullopt, parent.role, parent.id, parent.parent_id);
        double mse = 0.0;
        detail::add_luma_noise(seq, static_cast<double>(cfg.quality_param),
                               mix_seed(seed, child_id), &mse);
        save_y4m(decoded_path, seq);
        outcome.realized_mse = mse;
    } else {
        require(!spec.encode_template.empty(),
                "codec '" + cfg.codec_name + "' has no encode command configured");
        const std::string binary = detail::binary_name(spec.encode_template);
        if (run_process("command -v " + binary + " >/dev/null").exit_code != 0) {
            fail("encoder binary '" + binary + "' is not available for codec '" + cfg.codec_name +
                 "'");
        }
        const fs::path encoded = fs::path(decoded_path.string() + ".bitstream");
        const std::string encode_cmd =
            detail::expand_template(spec.encode_template, input.string(), encoded.string(), cfg);
        const ProcessResult enc = run_process(encode_cmd);
        if (!enc.ok()) {
            fail("encoder for '" + child_id + "' exited with status " +
                 std::to_string(enc.exit_code) + ": " + trim(enc.err.substr(0, 800)));
        }
        if (spec.decode_template.empty()) {
            fs::rename(encoded, decoded_path);
        } else {
            const std::string decode_cmd = detail::expand_template(
                spec.decode_template, encoded.string(), decoded_path.string(), cfg);
            const ProcessResult dec = run_process(decode_cmd);
            if (!dec.ok()) {
                fail("decoder for '" + child_id + "' exited with status " +
                     std::to_string(dec.exit_code) + ": " + trim(dec.err.substr(0, 800)));
            }
        }
        // Transcoding must preserve resolution and duration.
        VideoSequence in_seq =
            load_sequence(input, std::nullopt, parent.role, parent.id, parent.parent_id);
        VideoSequence out_seq =
            load_sequence(decoded_path, std::nullopt, child_role, child_id, parent.id);
        if (!in_seq.same_dimensions(out_seq)) {
            fail("decoded output of '" + child_id + "' has different dimensions or frame count " +
                 "than its parent '" + parent.id + "'");
        }
    }

    ManifestEntry entry;
    entry.id = child_id;
    entry.role = child_role;
    entry.path = fs::relative(decoded_path, manifest.corpus_root).string();
    entry.codec = cfg;
    entry.parent_id = parent.id;
    // The identity stub preserves the byte count; everything else is measured.
    entry.size_bytes = spec.builtin == BuiltinCodec::stub_copy ? parent.size_bytes
                                                               : fs::file_size(decoded_path);
    entry.true_degradation = outcome.realized_mse;
    outcome.entry = entry;
    return outcome;
}

// Device-codec emulation: source -> distorted reference.
inline EncodeOutcome synthesize_reference(const CodecRegistry& registry, const CodecConfig& cfg,
                                          const CorpusManifest& manifest,
                                          const ManifestEntry& source, uint64_t seed = 0,
                                          EncodeStats* stats = nullptr) {
    require(source.role == Role::source, "synthesize_reference needs a source entry");
    const std::string child_id = source.id + "." + cfg.tag();
    const auto decoded = manifest.corpus_root / "ref" / (child_id + ".y4m");
    std::error_code ec;
    if (!std::filesystem::exists(decoded.parent_path(), ec)) {
        std::filesystem::create_directories(decoded.parent_path());
    }
    return run_codec_stage(registry, cfg, manifest, source, Role::reference, child_id, decoded,
                           seed, stats);
}

// Platform transcoding: reference -> transcoded.
inline EncodeOutcome transcode(const CodecRegistry& registry, const CodecConfig& cfg,
                               const CorpusManifest& manifest, const ManifestEntry& reference,
                               uint64_t seed = 0, EncodeStats* stats = nullptr) {
    require(reference.role == Role::reference, "transcode needs a reference entry");
    const std::string child_id = reference.id + "." + cfg.tag();
    const auto decoded = manifest.corpus_root / "dist" / (child_id + ".y4m");
    std::error_code ec;
    if (!std::filesystem::exists(decoded.parent_path(), ec)) {
        std::filesystem::create_directories(decoded.parent_path());
    }
    return run_codec_stage(registry, cfg, manifest, reference, Role::transcoded, child_id, decoded,
                           seed, stats);
}

struct BuildCorpusOptions {
    int jobs = 1;
    uint64_t seed = 0;
};

namespace detail {

// Fixed-size job pool; results land in pre-assigned slots so the manifest
// order is independent of scheduling.
inline void run_jobs(const std::vector<std::function<void()>>& jobs, int parallelism) {
    if (parallelism <= 1 || jobs.size() <= 1) {
        for (const auto& job : jobs) job();
        return;
    }
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            jobs[i]();
        }
    };
    std::vector<std::thread> threads;
    const int count = std::min<int>(parallelism, static_cast<int>(jobs.size()));
    threads.reserve(count);
    for (int i = 0; i < count; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
}

}  // namespace detail

// Build the full three-stage corpus: every source is encoded once per
// reference config, every resulting reference once per transcode config.
// Branch failures are logged and skipped; completed outputs are reused, so a
// re-run over a finished corpus performs zero encoder invocations. The
// manifest is written atomically on completion.
inline CorpusManifest build_corpus(const std::vector<std::filesystem::path>& sources,
                                   const std::vector<CodecConfig>& ref_cfgs,
                                   const std::vector<CodecConfig>& transcode_cfgs,
                                   const CodecRegistry& registry,
                                   const std::filesystem::path& out_dir,
                                   const BuildCorpusOptions& options = {},
                                   EncodeStats* stats = nullptr) {
    namespace fs = std::filesystem;
    require(!sources.empty(), "build_corpus: no sources given");
    require(!ref_cfgs.empty() && !transcode_cfgs.empty(),
            "build_corpus: need at least one reference and one transcode config");
    for (const auto& cfg : ref_cfgs) registry.validate(cfg);
    for (const auto& cfg : transcode_cfgs) registry.validate(cfg);
    fs::create_directories(out_dir);

    CorpusManifest manifest;
    manifest.corpus_root = out_dir;
    const fs::path manifest_path = out_dir / "manifest.jsonl";

    // Previous run, if any, keyed by id for resume.
    std::map<std::string, ManifestEntry> previous;
    if (fs::exists(manifest_path)) {
        for (auto& e : load_manifest(manifest_path).entries) previous[e.id] = e;
    }
    auto reusable = [&](const std::string& id) -> std::optional<ManifestEntry> {
        auto it = previous.find(id);
        if (it == previous.end()) return std::nullopt;
        const fs::path p = fs::path(it->second.path).is_absolute() ? fs::path(it->second.path)
                                                                   : out_dir / it->second.path;
        std::error_code ec;
        if (!fs::exists(p, ec) || fs::file_size(p, ec) != it->second.size_bytes) {
            return std::nullopt;
        }
        return it->second;
    };

    std::mutex failures_mutex;
    std::vector<std::string> failures;
    auto record_failure = [&](const std::string& id, const std::string& why) {
        std::lock_guard<std::mutex> lock(failures_mutex);
        failures.push_back(id + ": " + why);
        if (stats) stats->failed.fetch_add(1);
    };

    for (const auto& src : sources) {
        ManifestEntry e;
        e.id = src.stem().string();
        e.role = Role::source;
        e.path = fs::relative(fs::absolute(src), fs::absolute(out_dir)).string();
        std::error_code ec;
        if (!fs::exists(src, ec)) fail("source file missing: " + src.string());
        e.size_bytes = fs::file_size(src);
        manifest.entries.push_back(std::move(e));
    }
    const size_t n_sources = manifest.entries.size();

    // Stage 1: references, in parallel.
    std::vector<std::optional<EncodeOutcome>> ref_slots(n_sources * ref_cfgs.size());
    {
        std::vector<std::function<void()>> jobs;
        for (size_t si = 0; si < n_sources; ++si) {
            for (size_t ci = 0; ci < ref_cfgs.size(); ++ci) {
                const size_t slot = si * ref_cfgs.size() + ci;
                jobs.push_back([&, si, ci, slot] {
                    const ManifestEntry& src = manifest.entries[si];
                    const std::string child_id = src.id + "." + ref_cfgs[ci].tag();
                    try {
                        if (auto prev = reusable(child_id)) {
                            if (stats) stats->skipped.fetch_add(1);
                            ref_slots[slot] = EncodeOutcome{*prev, prev->true_degradation};
                            return;
                        }
                        ref_slots[slot] = synthesize_reference(registry, ref_cfgs[ci], manifest,
                                                               src, options.seed, stats);
                    } catch (const std::exception& err) {
                        record_failure(child_id, err.what());
                    }
                });
            }
        }
        detail::run_jobs(jobs, options.jobs);
    }
    std::vector<ManifestEntry> references;
    for (auto& slot : ref_slots) {
        if (slot) references.push_back(slot->entry);
    }

    // Stage 2: transcodes of every surviving reference.
    std::vector<std::optional<EncodeOutcome>> dist_slots(references.size() * transcode_cfgs.size());
    {
        std::vector<std::function<void()>> jobs;
        for (size_t ri = 0; ri < references.size(); ++ri) {
            for (size_t ci = 0; ci < transcode_cfgs.size(); ++ci) {
                const size_t slot = ri * transcode_cfgs.size() + ci;
                jobs.push_back([&, ri, ci, slot] {
                    const ManifestEntry& ref = references[ri];
                    const std::string child_id = ref.id + "." + transcode_cfgs[ci].tag();
                    try {
                        if (auto prev = reusable(child_id)) {
                            if (stats) stats->skipped.fetch_add(1);
                            dist_slots[slot] = EncodeOutcome{*prev, prev->true_degradation};
                            return;
                        }
                        dist_slots[slot] = transcode(registry, transcode_cfgs[ci], manifest, ref,
                                                     options.seed, stats);
                    } catch (const std::exception& err) {
                        record_failure(child_id, err.what());
                    }
                });
            }
        }
        detail::run_jobs(jobs, options.jobs);
    }

    for (auto& e : references) manifest.entries.push_back(std::move(e));
    for (auto& slot : dist_slots) {
        if (slot) manifest.entries.push_back(std::move(slot->entry));
    }

    manifest.validate();
    save_manifest(manifest, manifest_path);
    if (!failures.empty()) {
        std::ostringstream log;
        for (const auto& f : failures) log << f << '\n';
        write_file(out_dir / "failures.log", log.str());
    }
    return manifest;
}

}  // namespace frvqa
