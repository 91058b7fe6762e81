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
#include <limits>
#include <string>
#include <vector>

#include "frvqa/labeling.hpp"
#include "frvqa/svg.hpp"
#include "frvqa/util.hpp"

namespace frvqa {

// Whether the subjective column measures degradation directly (DMOS) or
// quality (MOS, inverted before use).
enum class SubjectivePolarity { dmos, mos };

inline SubjectivePolarity polarity_from_name(const std::string& s) {
    if (s == "dmos") return SubjectivePolarity::dmos;
    if (s == "mos") return SubjectivePolarity::mos;
    fail("unknown subjective polarity '" + s + "' (expected mos or dmos)");
}

// One (reference, distorted) pair with its subjective score and the
// video-level delta-quality value computed for the same pair.
struct SubjectiveEntry {
    std::string reference_id;
    std::string distorted_id;
    double subjective = 0.0;  // MOS or DMOS, see polarity
    double qhat = 0.0;
};

// How often the sign of a qhat difference agrees with the sign of the
// subjective degradation difference, binned by |qhat_i - qhat_j|.
struct AccuracyCurve {
    std::vector<double> bin_edges;  // ascending lower edges; last bin is open-ended
    std::vector<double> accuracy_per_bin;
    std::vector<long long> counts_per_bin;
    PairMode mode = PairMode::SS;

    size_t bins() const { return bin_edges.size(); }
};

// Width-2 bins from 0 to 30 plus an overflow bin.
inline std::vector<double> default_bin_edges() {
    std::vector<double> edges;
    for (double e = 0.0; e <= 30.0; e += 2.0) edges.push_back(e);
    return edges;
}

// Enumerate every unordered pair of entries matching the mode (SS: same
// reference sequence, DS: different) and score each as a ranking trial.
// A trial is correct when sign(qhat_i - qhat_j) matches the sign of the
// subjective degradation difference; subjective ties are dropped.
inline AccuracyCurve ranking_accuracy_curve(const std::vector<SubjectiveEntry>& entries,
                                            PairMode mode, const std::vector<double>& bin_edges,
                                            SubjectivePolarity polarity) {
    require(entries.size() >= 2, "ranking_accuracy_curve: need at least 2 entries");
    require(bin_edges.size() >= 1, "ranking_accuracy_curve: need at least one bin edge");
    for (size_t i = 1; i < bin_edges.size(); ++i) {
        require(bin_edges[i] > bin_edges[i - 1], "bin edges must be strictly ascending");
    }

    AccuracyCurve curve;
    curve.bin_edges = bin_edges;
    curve.mode = mode;
    curve.counts_per_bin.assign(bin_edges.size(), 0);
    std::vector<long long> correct(bin_edges.size(), 0);

    auto degradation = [&](const SubjectiveEntry& e) {
        return polarity == SubjectivePolarity::mos ? -e.subjective : e.subjective;
    };

    long long total = 0;
    for (size_t i = 0; i < entries.size(); ++i) {
        for (size_t j = i + 1; j < entries.size(); ++j) {
            const bool same_ref = entries[i].reference_id == entries[j].reference_id;
            if (same_ref != (mode == PairMode::SS)) continue;
            const double subj_diff = degradation(entries[i]) - degradation(entries[j]);
            if (subj_diff == 0.0) continue;  // subjective tie, dropped
            const double q_diff = entries[i].qhat - entries[j].qhat;
            const double magnitude = std::fabs(q_diff);
            if (magnitude < bin_edges.front()) continue;
            size_t bin = bin_edges.size() - 1;
            while (bin > 0 && magnitude < bin_edges[bin]) --bin;
            ++curve.counts_per_bin[bin];
            ++total;
            if (q_diff * subj_diff > 0.0) ++correct[bin];
        }
    }
    if (total == 0) {
        fail("ranking accuracy curve is empty: no " + pair_mode_name(mode) +
             " pairs fell into any bin");
    }
    curve.accuracy_per_bin.assign(bin_edges.size(), std::numeric_limits<double>::quiet_NaN());
    for (size_t b = 0; b < bin_edges.size(); ++b) {
        if (curve.counts_per_bin[b] > 0) {
            curve.accuracy_per_bin[b] =
                static_cast<double>(correct[b]) / static_cast<double>(curve.counts_per_bin[b]);
        }
    }
    return curve;
}

// Smallest bin lower edge such that every occupied bin at or above it reaches
// the target accuracy.
inline double select_threshold(const AccuracyCurve& curve, double target) {
    require(target > 0.5 && target <= 1.0, "select_threshold: target must lie in (0.5, 1]");
    require(!curve.bin_edges.empty(), "select_threshold: empty curve");
    bool any_occupied = false;
    for (long long c : curve.counts_per_bin) any_occupied = any_occupied || c > 0;
    require(any_occupied, "select_threshold: curve has no occupied bins");

    for (size_t start = 0; start < curve.bins(); ++start) {
        bool ok = true;
        for (size_t b = start; b < curve.bins(); ++b) {
            if (curve.counts_per_bin[b] == 0) continue;
            if (curve.accuracy_per_bin[b] < target) {
                ok = false;
                break;
            }
        }
        if (ok) return curve.bin_edges[start];
    }
    fail("no threshold attains the target ranking accuracy of " + format_double(target));
}

inline void save_accuracy_curve_csv(const std::filesystem::path& path,
                                    const AccuracyCurve& curve) {
    CsvTable table;
    table.header = {"bin_lower_edge", "accuracy", "count", "mode"};
    for (size_t b = 0; b < curve.bins(); ++b) {
        table.rows.push_back({format_double(curve.bin_edges[b]),
                              curve.counts_per_bin[b] > 0
                                  ? format_double(curve.accuracy_per_bin[b])
                                  : "",
                              std::to_string(curve.counts_per_bin[b]),
                              pair_mode_name(curve.mode)});
    }
    write_csv(path, table);
}

inline void save_accuracy_curve_plot(const std::filesystem::path& path,
                                     const AccuracyCurve& curve) {
    SvgPlot plot("ranking accuracy vs delta-quality difference (" + pair_mode_name(curve.mode) +
                     ")",
                 "|qhat difference| bin lower edge", "accuracy");
    std::vector<double> xs, ys;
    for (size_t b = 0; b < curve.bins(); ++b) {
        if (curve.counts_per_bin[b] == 0) continue;
        xs.push_back(curve.bin_edges[b]);
        ys.push_back(curve.accuracy_per_bin[b]);
    }
    plot.set_range(0.0, curve.bin_edges.back() * 1.05 + 1.0, 0.4, 1.0);
    plot.add_line(xs, ys);
    plot.add_points(xs, ys);
    plot.save(path);
}

// CSV loader for subjective databases: requires columns reference_id,
// distorted_id, qhat and score.
inline std::vector<SubjectiveEntry> load_subjective_entries(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path);
    const int c_ref = table.column("reference_id");
    const int c_dist = table.column("distorted_id");
    const int c_qhat = table.column("qhat");
    const int c_score = table.column("score");
    std::vector<SubjectiveEntry> entries;
    for (const auto& row : table.rows) {
        SubjectiveEntry e;
        e.reference_id = row[c_ref];
        e.distorted_id = row[c_dist];
        e.qhat = parse_double(row[c_qhat], "qhat");
        e.subjective = parse_double(row[c_score], "score");
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace frvqa
