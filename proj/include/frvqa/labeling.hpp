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

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "frvqa/codec.hpp"
#include "frvqa/patch.hpp"
#include "frvqa/proxy.hpp"
#include "frvqa/util.hpp"
#include "frvqa/video.hpp"

namespace frvqa {

// Proxy scores of one pairing against its pristine source, and their
// difference: delta = proxy(S, R-patch) - proxy(S, D-patch). Larger delta
// means the transcode degraded more relative to its reference.
struct ProxyAnnotation {
    std::string pairing_id;
    double score_src_ref = 0.0;
    double score_src_dist = 0.0;
    double delta = 0.0;
};

inline ProxyAnnotation annotate_pairing(const PatchPairing& pairing, const ProxyScorer& scorer) {
    require(pairing.src_patch.has_value(),
            "pairing '" + pairing.id + "' carries no source patch to score against");
    ProxyAnnotation ann;
    ann.pairing_id = pairing.id;
    ann.score_src_ref = compute_proxy(*pairing.src_patch, pairing.ref_patch, scorer);
    ann.score_src_dist = compute_proxy(*pairing.src_patch, pairing.dist_patch, scorer);
    ann.delta = delta_quality(ann.score_src_ref, ann.score_src_dist);
    return ann;
}

// Single source (both pairings share the same distorted reference sequence)
// versus dual source.
enum class PairMode { SS, DS };

inline std::string pair_mode_name(PairMode m) { return m == PairMode::SS ? "SS" : "DS"; }

inline PairMode pair_mode_from_name(const std::string& s) {
    if (s == "SS") return PairMode::SS;
    if (s == "DS") return PairMode::DS;
    fail("unknown pairing mode '" + s + "'");
}

// Minimum |delta_1 - delta_2| for a trustworthy rank label, per pairing mode.
struct RankThresholds {
    double sigma_ss = 0.0;
    double sigma_ds = 6.0;

    void validate() const {
        require(sigma_ss >= 0.0 && sigma_ds >= 0.0, "rank thresholds must be non-negative");
    }

    double sigma_for(PairMode mode) const { return mode == PairMode::SS ? sigma_ss : sigma_ds; }
};

// Threshold-gated rank label: 1 when pairing 1 degraded more by over sigma,
// 0 when pairing 2 did, and no label when the difference is inside the gate.
inline std::optional<int> rank_label(double delta_1, double delta_2, double sigma) {
    require(sigma >= 0.0, "rank_label: sigma must be non-negative");
    const double diff = delta_1 - delta_2;
    if (diff > sigma) return 1;
    if (diff < -sigma) return 0;
    return std::nullopt;
}

// Two patch pairings plus the binary rank label. Source patches are used only
// while labels are computed and are never stored here.
struct TrainingInstance {
    std::string id;
    PatchPairing pairing_1;
    PatchPairing pairing_2;
    int rank = 0;  // r = 1: pairing_1 degraded more
    PairMode mode = PairMode::SS;
    double delta_1 = 0.0;
    double delta_2 = 0.0;

    void validate() const {
        require(!pairing_1.src_patch && !pairing_2.src_patch,
                "instance '" + id + "' must not retain source patches");
        require(rank == 0 || rank == 1, "instance '" + id + "' has a non-binary label");
        const bool same_ref = pairing_1.ref_patch.origin.sequence_id ==
                              pairing_2.ref_patch.origin.sequence_id;
        require(same_ref == (mode == PairMode::SS),
                "instance '" + id + "' mode contradicts its reference lineage");
    }
};

struct TrainingSetStats {
    size_t candidates = 0;
    size_t ss_candidates = 0;
    size_t labeled = 0;
    size_t excluded = 0;
    double candidate_ss_fraction = 0.0;
    double realized_ss_fraction = 0.0;
    std::string diagnostic;
};

struct TrainingSet {
    PatchGeometry geometry;
    int bit_depth = 8;
    std::vector<TrainingInstance> instances;
    TrainingSetStats stats;
};

struct LabelingOptions {
    PatchGeometry patch_geometry;
    int patches_per_sequence = 4;
    RankThresholds thresholds;
    double ss_fraction = 0.8;
    uint64_t seed = 1;

    void validate() const {
        require(patches_per_sequence >= 1, "patches_per_sequence must be positive");
        require(ss_fraction >= 0.0 && ss_fraction <= 1.0, "ss_fraction outside [0, 1]");
        thresholds.validate();
    }
};

namespace detail {

struct AnnotatedPairing {
    PatchPairing pairing;  // src stripped
    std::string ref_sequence_id;
    double delta = 0.0;
    double score_src_ref = 0.0;
    double score_src_dist = 0.0;
};

}  // namespace detail

// Draw candidate instance pairs targeting `ss_fraction` single-source pairs,
// score them with the proxy against pristine sources, gate through the sigma
// thresholds and emit the surviving labeled instances. Pure function of
// (manifest, options, scorer outputs); identical seeds give identical sets.
inline TrainingSet build_training_set(const CorpusManifest& manifest,
                                      const LabelingOptions& options, const ProxyScorer& scorer) {
    options.validate();
    manifest.validate();

    const auto transcoded = manifest.with_role(Role::transcoded);
    require(!transcoded.empty(), "manifest holds no transcoded sequences to label");

    // Sequence cache: each S and R is shared by many D children.
    std::map<std::string, VideoSequence> cache;
    auto load_entry = [&](const ManifestEntry& e) -> const VideoSequence& {
        auto it = cache.find(e.id);
        if (it != cache.end()) return it->second;
        VideoSequence seq = load_sequence(manifest.resolve(e), std::nullopt, e.role, e.id,
                                          e.parent_id);
        return cache.emplace(e.id, std::move(seq)).first->second;
    };

    std::vector<detail::AnnotatedPairing> pool;
    size_t pairing_counter = 0;
    for (const ManifestEntry* dist : transcoded) {
        const ManifestEntry* ref = manifest.find(dist->parent_id);
        require(ref != nullptr, "transcoded '" + dist->id + "' has no reference in the manifest");
        const ManifestEntry* src = manifest.find(ref->parent_id);
        if (src == nullptr) {
            fail("missing pristine source for reference '" + ref->id +
                 "'; sources are required for proxy labeling");
        }
        SequenceTriplet triplet;
        triplet.source = &load_entry(*src);
        triplet.reference = &load_entry(*ref);
        triplet.transcoded = &load_entry(*dist);
        auto pairings = sample_colocated_patches(triplet, options.patches_per_sequence,
                                                 mix_seed(options.seed, dist->id),
                                                 options.patch_geometry);
        for (auto& pairing : pairings) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "p%06zu", pairing_counter++);
            pairing.id = buf;
            const ProxyAnnotation ann = annotate_pairing(pairing, scorer);
            detail::AnnotatedPairing item;
            pairing.src_patch.reset();  // sources end here
            item.pairing = std::move(pairing);
            item.ref_sequence_id = ref->id;
            item.delta = ann.delta;
            item.score_src_ref = ann.score_src_ref;
            item.score_src_dist = ann.score_src_dist;
            pool.push_back(std::move(item));
        }
    }

    TrainingSet set;
    set.geometry = options.patch_geometry;
    set.bit_depth = pool.front().pairing.ref_patch.bit_depth;

    std::map<std::string, std::vector<size_t>> by_ref;
    for (size_t i = 0; i < pool.size(); ++i) by_ref[pool[i].ref_sequence_id].push_back(i);
    bool ss_possible = false;
    for (const auto& [_, members] : by_ref) ss_possible = ss_possible || members.size() >= 2;
    const bool ds_possible = by_ref.size() >= 2;

    Rng rng(mix_seed(options.seed, "pairing"));
    std::set<std::pair<size_t, size_t>> seen;
    const size_t target_candidates = pool.size();
    size_t instance_counter = 0;

    for (size_t k = 0; k < target_candidates; ++k) {
        bool want_ss = rng.bernoulli(options.ss_fraction);
        if (want_ss && !ss_possible) want_ss = false;
        if (!want_ss && !ds_possible) want_ss = true;
        if (want_ss && !ss_possible) break;  // degenerate corpus, nothing to draw

        size_t i = 0, j = 0;
        bool found = false;
        for (int attempt = 0; attempt < 10000 && !found; ++attempt) {
            i = rng.below(pool.size());
            j = rng.below(pool.size());
            if (i == j) continue;
            const bool same = pool[i].ref_sequence_id == pool[j].ref_sequence_id;
            if (same != want_ss) continue;
            auto key = std::minmax(i, j);
            if (seen.count({key.first, key.second}) && attempt < 100) continue;
            seen.insert({key.first, key.second});
            found = true;
        }
        if (!found) continue;

        set.stats.candidates++;
        if (want_ss) set.stats.ss_candidates++;
        const PairMode mode = want_ss ? PairMode::SS : PairMode::DS;
        const auto label =
            rank_label(pool[i].delta, pool[j].delta, options.thresholds.sigma_for(mode));
        if (!label) {
            set.stats.excluded++;
            continue;
        }
        TrainingInstance instance;
        char buf[32];
        std::snprintf(buf, sizeof buf, "i%06zu", instance_counter++);
        instance.id = buf;
        instance.pairing_1 = pool[i].pairing;
        instance.pairing_2 = pool[j].pairing;
        instance.rank = *label;
        instance.mode = mode;
        instance.delta_1 = pool[i].delta;
        instance.delta_2 = pool[j].delta;
        instance.validate();
        set.instances.push_back(std::move(instance));
    }

    set.stats.labeled = set.instances.size();
    if (set.stats.candidates > 0) {
        set.stats.candidate_ss_fraction =
            static_cast<double>(set.stats.ss_candidates) / set.stats.candidates;
    }
    if (!set.instances.empty()) {
        size_t ss = 0;
        for (const auto& inst : set.instances) ss += inst.mode == PairMode::SS ? 1 : 0;
        set.stats.realized_ss_fraction = static_cast<double>(ss) / set.instances.size();
    } else if (set.stats.candidates == 0) {
        set.stats.diagnostic = "no candidate pairs could be drawn from " +
                               std::to_string(pool.size()) + " pairing(s)";
    } else {
        set.stats.diagnostic = "all candidates excluded: every |delta_1 - delta_2| fell inside "
                               "the sigma gate";
    }
    return set;
}

// ---------------------------------------------------------------------------
// Dataset persistence: the patch store of video_io plus an instance index CSV
// (instance_id, pairing_1_id, pairing_2_id, mode, r, delta_1, delta_2).
// ---------------------------------------------------------------------------

inline void save_training_set(const std::filesystem::path& dir, const TrainingSet& set) {
    std::filesystem::create_directories(dir);
    PatchStoreWriter store(dir, set.geometry, set.bit_depth);
    std::set<std::string> written;
    auto add_pairing = [&](const PatchPairing& pairing) {
        if (!written.insert(pairing.id).second) return;
        store.add(pairing.id, "ref", pairing.ref_patch);
        store.add(pairing.id, "dist", pairing.dist_patch);
    };
    CsvTable index;
    index.header = {"instance_id", "pairing_1_id", "pairing_2_id", "mode", "r", "delta_1",
                    "delta_2"};
    for (const auto& inst : set.instances) {
        add_pairing(inst.pairing_1);
        add_pairing(inst.pairing_2);
        index.rows.push_back({inst.id, inst.pairing_1.id, inst.pairing_2.id,
                              pair_mode_name(inst.mode), std::to_string(inst.rank),
                              format_double(inst.delta_1), format_double(inst.delta_2)});
    }
    store.finish();
    write_csv(dir / "instances.csv", index);
}

inline TrainingSet load_training_set(const std::filesystem::path& dir) {
    PatchStoreReader store(dir);
    TrainingSet set;
    set.geometry = store.geometry();
    set.bit_depth = store.bit_depth();

    std::map<std::string, PatchPairing> pairings;
    for (const auto& entry : store.entries()) {
        PatchPairing& pairing = pairings[entry.pairing_id];
        pairing.id = entry.pairing_id;
        Patch patch = store.read(entry);
        if (entry.role == "ref") {
            pairing.ref_patch = std::move(patch);
        } else if (entry.role == "dist") {
            pairing.dist_patch = std::move(patch);
        } else {
            fail("unexpected patch role '" + entry.role + "' in training set");
        }
    }

    const CsvTable index = read_csv(dir / "instances.csv");
    const int c_id = index.column("instance_id");
    const int c_p1 = index.column("pairing_1_id");
    const int c_p2 = index.column("pairing_2_id");
    const int c_mode = index.column("mode");
    const int c_r = index.column("r");
    const int c_d1 = index.column("delta_1");
    const int c_d2 = index.column("delta_2");
    for (const auto& row : index.rows) {
        TrainingInstance inst;
        inst.id = row[c_id];
        auto p1 = pairings.find(row[c_p1]);
        auto p2 = pairings.find(row[c_p2]);
        require(p1 != pairings.end() && p2 != pairings.end(),
                "instance '" + inst.id + "' references patches missing from the store");
        inst.pairing_1 = p1->second;
        inst.pairing_2 = p2->second;
        inst.mode = pair_mode_from_name(row[c_mode]);
        inst.rank = static_cast<int>(parse_int(row[c_r], "r"));
        inst.delta_1 = parse_double(row[c_d1], "delta_1");
        inst.delta_2 = parse_double(row[c_d2], "delta_2");
        inst.validate();
        set.instances.push_back(std::move(inst));
    }
    set.stats.labeled = set.instances.size();
    return set;
}

}  // namespace frvqa
