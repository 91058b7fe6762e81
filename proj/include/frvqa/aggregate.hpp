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
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "frvqa/stats.hpp"
#include "frvqa/trainer.hpp"
#include "frvqa/util.hpp"

namespace frvqa {

// Patch-level quality indices arranged by (temporal window, tile row, tile
// column), exactly one score per tile position.
struct PatchScoreField {
    int t_windows = 0;
    int rows = 0;
    int cols = 0;
    std::vector<double> scores;  // raster order: t outer, then row, then col
    int stride_pixels = 0;
    int stride_frames = 0;

    size_t size() const { return scores.size(); }
    bool empty() const { return scores.empty(); }

    double at(int t, int r, int c) const {
        return scores[(static_cast<size_t>(t) * rows + r) * cols + c];
    }

    void validate() const {
        require(static_cast<size_t>(t_windows) * rows * cols == scores.size(),
                "patch score field layout does not match its score count");
        for (double s : scores) require(std::isfinite(s), "patch score field holds a non-finite score");
    }
};

enum class AggregatorKind { mean, learned };

// Sequence-level pooling. "mean" is the parameter-free default used by all
// acceptance paths; "learned" is a small permutation-invariant head: a direct
// linear term on the tile mean plus ReLU hinge features pooled over tiles and
// read out linearly. At neutral initialization the hinge readout is zero and
// the linear gain is one, so the head reproduces the mean exactly; polarity
// and scale adapt through the linear term without a saddle, the hinges add
// curvature as their readout grows.
class AggregatorModel {
  public:
    static constexpr int kEmbedDim = 8;

    AggregatorModel() = default;

    static AggregatorModel mean_pool() {
        AggregatorModel m;
        m.kind_ = AggregatorKind::mean;
        return m;
    }

    static AggregatorModel learned() {
        AggregatorModel m;
        m.kind_ = AggregatorKind::learned;
        m.w_lin_ = 1.0;
        m.w1_.assign(kEmbedDim, 1.0);
        m.b1_.resize(kEmbedDim);
        for (int j = 0; j < kEmbedDim; ++j) {
            // Hinge ladder: alternating signs, staggered thresholds.
            m.w1_[j] = j % 2 == 0 ? 1.0 : -1.0;
            m.b1_[j] = -0.5 * static_cast<double>(j / 2);
        }
        m.w2_.assign(kEmbedDim, 0.0);
        m.b2_ = 0.0;
        return m;
    }

    AggregatorKind kind() const { return kind_; }
    int version() const { return version_; }

    double aggregate(const PatchScoreField& field) const {
        require(!field.empty(), "aggregate: empty patch score field");
        field.validate();
        double mean = 0.0;
        for (double s : field.scores) mean += s;
        mean /= static_cast<double>(field.size());
        if (kind_ == AggregatorKind::mean) return mean;

        double out = w_lin_ * mean + b2_;
        const double inv_n = 1.0 / static_cast<double>(field.size());
        for (int j = 0; j < kEmbedDim; ++j) {
            if (w2_[j] == 0.0) continue;
            double pooled = 0.0;
            for (double s : field.scores) pooled += std::max(0.0, w1_[j] * s + b1_[j]);
            out += w2_[j] * pooled * inv_n;
        }
        return out;
    }

    struct Grads {
        double w_lin = 0.0;
        std::vector<double> w1, b1, w2;
        double b2 = 0.0;

        Grads() : w1(kEmbedDim, 0.0), b1(kEmbedDim, 0.0), w2(kEmbedDim, 0.0) {}

        void reset() {
            w_lin = 0.0;
            std::fill(w1.begin(), w1.end(), 0.0);
            std::fill(b1.begin(), b1.end(), 0.0);
            std::fill(w2.begin(), w2.end(), 0.0);
            b2 = 0.0;
        }

        void scale(double factor) {
            w_lin *= factor;
            for (double& v : w1) v *= factor;
            for (double& v : b1) v *= factor;
            for (double& v : w2) v *= factor;
            b2 *= factor;
        }
    };

    // d(output)/d(params) for one field with upstream gradient `dout`.
    void accumulate_grads(const PatchScoreField& field, double dout, Grads& grads) const {
        const double inv_n = 1.0 / static_cast<double>(field.size());
        double mean = 0.0;
        for (double s : field.scores) mean += s;
        mean *= inv_n;
        grads.w_lin += dout * mean;
        grads.b2 += dout;
        for (int j = 0; j < kEmbedDim; ++j) {
            double pooled = 0.0, dpool_w1 = 0.0, dpool_b1 = 0.0;
            for (double s : field.scores) {
                const double pre = w1_[j] * s + b1_[j];
                if (pre > 0.0) {
                    pooled += pre;
                    dpool_w1 += s;
                    dpool_b1 += 1.0;
                }
            }
            grads.w2[j] += dout * pooled * inv_n;
            grads.w1[j] += dout * w2_[j] * dpool_w1 * inv_n;
            grads.b1[j] += dout * w2_[j] * dpool_b1 * inv_n;
        }
    }

    void apply_step(const Grads& grads, double lr) {
        w_lin_ -= lr * grads.w_lin;
        for (int j = 0; j < kEmbedDim; ++j) {
            w1_[j] -= lr * grads.w1[j];
            b1_[j] -= lr * grads.b1[j];
            w2_[j] -= lr * grads.w2[j];
        }
        b2_ -= lr * grads.b2;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["kind"] = kind_ == AggregatorKind::mean ? "mean" : "learned";
        j["version"] = version_;
        if (kind_ == AggregatorKind::learned) {
            j["w_lin"] = w_lin_;
            j["w1"] = w1_;
            j["b1"] = b1_;
            j["w2"] = w2_;
            j["b2"] = b2_;
        }
        return j;
    }

    static AggregatorModel from_json(const nlohmann::json& j) {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "mean") return mean_pool();
        AggregatorModel m = learned();
        m.w_lin_ = j.at("w_lin").get<double>();
        m.w1_ = j.at("w1").get<std::vector<double>>();
        m.b1_ = j.at("b1").get<std::vector<double>>();
        m.w2_ = j.at("w2").get<std::vector<double>>();
        m.b2_ = j.at("b2").get<double>();
        require(m.w1_.size() == kEmbedDim && m.b1_.size() == kEmbedDim &&
                    m.w2_.size() == kEmbedDim,
                "aggregator checkpoint has the wrong embedding width");
        return m;
    }

  private:
    AggregatorKind kind_ = AggregatorKind::mean;
    int version_ = 1;
    double w_lin_ = 1.0;
    std::vector<double> w1_, b1_, w2_;
    double b2_ = 0.0;
};

inline double aggregate(const PatchScoreField& field, const AggregatorModel& model) {
    return model.aggregate(field);
}

inline void save_aggregator(const std::filesystem::path& dir, const AggregatorModel& model) {
    std::filesystem::create_directories(dir);
    write_file(dir / "aggregator.json", model.to_json().dump(2) + "\n");
}

inline AggregatorModel load_aggregator(const std::filesystem::path& dir) {
    return AggregatorModel::from_json(nlohmann::json::parse(read_file(dir / "aggregator.json")));
}

struct AggregatorTrainConfig {
    int epochs = 200;
    double learning_rate = 0.05;
    double heldout_fraction = 0.2;
    uint64_t seed = 1;
};

struct AggregatorTrainOutcome {
    AggregatorModel model;
    double heldout_srocc = 0.0;
    std::vector<double> epoch_loss;
};

// Train the pooling head on sequence-level subjective scores with a
// differentiable pairwise ranking surrogate (softplus margin on every pair
// ordered by the subjective score). The patch model is upstream and frozen:
// only precomputed score fields enter here.
inline AggregatorTrainOutcome train_aggregator(const std::vector<PatchScoreField>& fields,
                                               const std::vector<double>& subjective,
                                               const AggregatorTrainConfig& cfg = {}) {
    require(fields.size() == subjective.size(), "train_aggregator: length mismatch");
    if (fields.size() < 10) {
        fail("train_aggregator: refusing to fit a pooling head on fewer than 10 sequences (got " +
             std::to_string(fields.size()) + ")");
    }
    for (const auto& f : fields) require(!f.empty(), "train_aggregator: empty score field");

    std::vector<size_t> train_idx, heldout_idx;
    for (size_t i = 0; i < fields.size(); ++i) {
        if (static_cast<double>(hash64("agg" + std::to_string(i)) % 10000) <
            cfg.heldout_fraction * 10000.0) {
            heldout_idx.push_back(i);
        } else {
            train_idx.push_back(i);
        }
    }
    if (train_idx.size() < 2) {
        train_idx.insert(train_idx.end(), heldout_idx.begin(), heldout_idx.end());
        heldout_idx.clear();
    }

    AggregatorTrainOutcome outcome;
    outcome.model = AggregatorModel::learned();
    AggregatorModel& model = outcome.model;

    AggregatorModel::Grads grads;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        grads.reset();
        std::vector<double> outputs(train_idx.size());
        for (size_t k = 0; k < train_idx.size(); ++k) {
            outputs[k] = model.aggregate(fields[train_idx[k]]);
        }
        double loss = 0.0;
        size_t pairs = 0;
        for (size_t a = 0; a < train_idx.size(); ++a) {
            for (size_t b = a + 1; b < train_idx.size(); ++b) {
                const double sd = subjective[train_idx[a]] - subjective[train_idx[b]];
                if (sd == 0.0) continue;
                const double sign = sd > 0.0 ? 1.0 : -1.0;
                const double margin = sign * (outputs[a] - outputs[b]);
                loss += stable_softplus(-margin);
                ++pairs;
                const double dmargin = -rank_probability(0.0, margin);  // -sigmoid(-margin)
                model.accumulate_grads(fields[train_idx[a]], dmargin * sign, grads);
                model.accumulate_grads(fields[train_idx[b]], -dmargin * sign, grads);
            }
        }
        if (pairs == 0) break;
        grads.scale(1.0 / static_cast<double>(pairs));
        model.apply_step(grads, cfg.learning_rate);
        outcome.epoch_loss.push_back(loss / static_cast<double>(pairs));
    }

    const auto& eval_idx = heldout_idx.empty() ? train_idx : heldout_idx;
    if (eval_idx.size() >= 3) {
        std::vector<double> pred, subj;
        for (size_t i : eval_idx) {
            pred.push_back(model.aggregate(fields[i]));
            subj.push_back(subjective[i]);
        }
        try {
            outcome.heldout_srocc = srocc(pred, subj);
        } catch (const Error&) {
            outcome.heldout_srocc = 0.0;  // degenerate constant outputs
        }
    }
    return outcome;
}

}  // namespace frvqa
