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

#include "frvqa/aggregate.hpp"
#include "frvqa/nn.hpp"
#include "frvqa/patch.hpp"
#include "frvqa/video.hpp"

namespace frvqa {

struct ScoreResult {
    double sequence_score = 0.0;
    PatchScoreField field;
    int forwards = 0;  // number of patch-level model evaluations
};

// End-to-end scoring of a transcoded sequence against its unpristine
// reference: tile, run the patch model per tile, aggregate. The output
// measures degradation: larger means D drifted further from R.
inline ScoreResult score_sequence(const VideoSequence& reference, const VideoSequence& distorted,
                                  const PatchQualityModel& model, const AggregatorModel& aggregator,
                                  const PatchGeometry& geom, TileStride stride = {}) {
    const int sp = stride.pixels > 0 ? stride.pixels : geom.width;
    const int sf = stride.frames > 0 ? stride.frames : geom.frames;
    SequenceTriplet triplet{nullptr, &reference, &distorted};
    check_codimension(triplet);
    check_patch_fits(reference, geom);

    const auto ts = tile_positions(reference.frame_count, geom.frames, sf);
    const auto ys = tile_positions(reference.height, geom.height, sp);
    const auto xs = tile_positions(reference.width, geom.width, sp);

    ScoreResult result;
    result.field.t_windows = static_cast<int>(ts.size());
    result.field.rows = static_cast<int>(ys.size());
    result.field.cols = static_cast<int>(xs.size());
    result.field.stride_pixels = sp;
    result.field.stride_frames = sf;
    result.field.scores.reserve(ts.size() * ys.size() * xs.size());
    for (int t : ts) {
        for (int y : ys) {
            for (int x : xs) {
                const Patch ref_patch = extract_patch(reference, t, x, y, geom);
                const Patch dist_patch = extract_patch(distorted, t, x, y, geom);
                result.field.scores.push_back(model.forward(ref_patch, dist_patch));
                ++result.forwards;
            }
        }
    }
    result.field.validate();
    result.sequence_score = aggregate(result.field, aggregator);
    return result;
}

}  // namespace frvqa
