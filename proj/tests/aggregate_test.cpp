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

#include "frvqa/aggregate.hpp"

#include <algorithm>

#include "gtest/gtest.h"
#include "test_util.hpp"

namespace frvqa {
namespace {

using testing::TempDir;

PatchScoreField field_of(std::vector<double> scores, int rows = 0) {
    PatchScoreField f;
    f.t_windows = 1;
    f.rows = rows > 0 ? rows : 1;
    f.cols = static_cast<int>(scores.size()) / (rows > 0 ? rows : 1);
    f.scores = std::move(scores);
    return f;
}

TEST(Aggregate, MeanPoolBasics) {
    const auto mean = AggregatorModel::mean_pool();
    EXPECT_DOUBLE_EQ(aggregate(field_of({4.5, 4.5, 4.5, 4.5}), mean), 4.5);
    EXPECT_DOUBLE_EQ(aggregate(field_of({1, 2, 3, 6}), mean), 3.0);
    EXPECT_THROW(aggregate(PatchScoreField{}, mean), Error);
}

TEST(Aggregate, MeanIsPermutationInvariantAndBounded) {
    Rng rng(1);
    const auto mean = AggregatorModel::mean_pool();
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> scores(1 + rng.below(30));
        for (auto& s : scores) s = rng.uniform(-10.0, 10.0);
        const double direct = aggregate(field_of(scores), mean);
        auto shuffled = scores;
        rng.shuffle(shuffled);
        EXPECT_NEAR(aggregate(field_of(shuffled), mean), direct, 1e-12);
        EXPECT_GE(direct, *std::min_element(scores.begin(), scores.end()) - 1e-12);
        EXPECT_LE(direct, *std::max_element(scores.begin(), scores.end()) + 1e-12);
    }
}

TEST(Aggregate, MeanShiftsExactlyWithConstantOffsets) {
    Rng rng(2);
    const auto mean = AggregatorModel::mean_pool();
    std::vector<double> scores(12);
    for (auto& s : scores) s = rng.uniform(-5.0, 5.0);
    const double base = aggregate(field_of(scores), mean);
    auto shifted = scores;
    for (auto& s : shifted) s += 2.75;
    EXPECT_NEAR(aggregate(field_of(shifted), mean), base + 2.75, 1e-12);
}

TEST(Aggregate, LearnedHeadAtNeutralInitializationIsTheMean) {
    const auto learned = AggregatorModel::learned();
    EXPECT_NEAR(learned.aggregate(field_of({7.25, 7.25, 7.25})), 7.25, 1e-6);
    Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> scores(2 + rng.below(20));
        for (auto& s : scores) s = rng.uniform(-10.0, 10.0);
        const double want = aggregate(field_of(scores), AggregatorModel::mean_pool());
        EXPECT_NEAR(learned.aggregate(field_of(scores)), want, 1e-9);
    }
}

TEST(Aggregate, SaveLoadRoundTrip) {
    TempDir dir("frvqa_agg");
    const auto learned = AggregatorModel::learned();
    save_aggregator(dir.path / "a", learned);
    const auto loaded = load_aggregator(dir.path / "a");
    EXPECT_EQ(loaded.kind(), AggregatorKind::learned);
    EXPECT_NEAR(loaded.aggregate(field_of({1, 2, 3})), learned.aggregate(field_of({1, 2, 3})),
                1e-12);

    save_aggregator(dir.path / "m", AggregatorModel::mean_pool());
    EXPECT_EQ(load_aggregator(dir.path / "m").kind(), AggregatorKind::mean);
}

TEST(TrainAggregator, RefusesTinyDatasets) {
    std::vector<PatchScoreField> fields(5, field_of({1, 2, 3}));
    std::vector<double> subjective = {1, 2, 3, 4, 5};
    EXPECT_THROW(train_aggregator(fields, subjective), Error);
}

TEST(TrainAggregator, MatchesMeanPoolingOnSyntheticOracle) {
    // True sequence score is the mean of the patch scores.
    Rng rng(7);
    std::vector<PatchScoreField> fields;
    std::vector<double> subjective;
    for (int i = 0; i < 60; ++i) {
        std::vector<double> scores(9);
        for (auto& s : scores) s = rng.uniform(0.0, 12.0);
        fields.push_back(field_of(scores, 3));
        subjective.push_back(aggregate(fields.back(), AggregatorModel::mean_pool()));
    }
    AggregatorTrainConfig cfg;
    cfg.epochs = 120;
    const auto outcome = train_aggregator(fields, subjective, cfg);
    EXPECT_GE(outcome.heldout_srocc, 0.99);
}

TEST(TrainAggregator, RecoversInvertedPolarity) {
    // Ground truth is the negated mean: neutral pooling correlates at -1,
    // the trained head must flip its readout and correlate positively.
    Rng rng(9);
    std::vector<PatchScoreField> fields;
    std::vector<double> subjective;
    for (int i = 0; i < 60; ++i) {
        std::vector<double> scores(8);
        for (auto& s : scores) s = rng.uniform(0.0, 6.0);
        fields.push_back(field_of(scores, 2));
        subjective.push_back(-aggregate(fields.back(), AggregatorModel::mean_pool()));
    }
    AggregatorTrainConfig cfg;
    cfg.epochs = 300;
    cfg.learning_rate = 0.1;
    const auto outcome = train_aggregator(fields, subjective, cfg);
    std::vector<double> learned_scores;
    for (const auto& f : fields) learned_scores.push_back(outcome.model.aggregate(f));
    EXPECT_GE(srocc(learned_scores, subjective), 0.9);
    EXPECT_GE(outcome.heldout_srocc, 0.9);
    ASSERT_GE(outcome.epoch_loss.size(), 2u);
    EXPECT_LT(outcome.epoch_loss.back(), outcome.epoch_loss.front());
}

}  // namespace
}  // namespace frvqa
