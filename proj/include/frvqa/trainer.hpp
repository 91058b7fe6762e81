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
#include <cstring>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "frvqa/labeling.hpp"
#include "frvqa/nn.hpp"
#include "frvqa/util.hpp"

namespace frvqa {

// Probability that pairing 1 is ranked above pairing 2, sigmoid of the score
// difference. Stable for differences far beyond +-1e3.
inline double rank_probability(double q1, double q2) {
    require(std::isfinite(q1) && std::isfinite(q2), "rank_probability: non-finite input");
    const double d = q1 - q2;
    if (d >= 0.0) {
        return 1.0 / (1.0 + std::exp(-d));
    }
    const double e = std::exp(d);
    return e / (1.0 + e);
}

// Binary cross entropy on an explicit probability. Contract form; the trainer
// uses the fused logit version below.
inline double bce_loss(double p, int r) {
    require(p > 0.0 && p < 1.0, "bce_loss: p must lie strictly inside (0, 1)");
    require(r == 0 || r == 1, "bce_loss: label must be binary");
    return -(r * std::log(p) + (1 - r) * std::log(1.0 - p));
}

inline double stable_softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
}

// BCE evaluated from the score difference (logit), numerically stable.
inline double bce_loss_from_logit(double logit, int r) {
    require(r == 0 || r == 1, "bce_loss_from_logit: label must be binary");
    return r * stable_softplus(-logit) + (1 - r) * stable_softplus(logit);
}

// dL/dlogit = p - r.
inline double bce_grad_logit(double logit, int r) {
    return rank_probability(logit, 0.0) - static_cast<double>(r);
}

struct TrainingConfig {
    int epochs = 60;
    int batch_size = 4;
    double learning_rate = 1e-4;
    double lr_decay_factor = 0.1;
    int lr_decay_every = 20;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double l2 = 0.0;  // parameter-norm penalty, off by default
    double heldout_fraction = 0.1;
    uint64_t seed = 1;

    void validate() const {
        require(epochs >= 1 && batch_size >= 1 && lr_decay_every >= 1,
                "training config: counts must be positive");
        require(learning_rate > 0.0, "training config: learning rate must be positive");
        require(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0,
                "training config: decay factor must lie in (0, 1]");
        require(adam_beta1 > 0.0 && adam_beta1 < 1.0 && adam_beta2 > 0.0 && adam_beta2 < 1.0,
                "training config: Adam betas must lie in (0, 1)");
        require(l2 >= 0.0, "training config: l2 must be non-negative");
        require(heldout_fraction >= 0.0 && heldout_fraction < 1.0,
                "training config: held-out fraction outside [0, 1)");
    }

    // Step schedule: decay by lr_decay_factor every lr_decay_every epochs.
    double lr_for_epoch(int epoch /*1-based*/) const {
        const int steps = (epoch - 1) / lr_decay_every;
        return learning_rate * std::pow(lr_decay_factor, steps);
    }
};

class AdamOptimizer {
  public:
    AdamOptimizer(double beta1, double beta2, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(PatchQualityModel& model, double lr, double l2 = 0.0) {
        if (m_.empty()) {
            m_.assign(model.parameter_count(), 0.0);
            v_.assign(model.parameter_count(), 0.0);
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        size_t k = 0;
        model.visit_params([&](std::vector<float>& w, std::vector<float>& g) {
            for (size_t i = 0; i < w.size(); ++i, ++k) {
                const double grad = static_cast<double>(g[i]) + l2 * static_cast<double>(w[i]);
                m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * grad;
                v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grad * grad;
                const double mhat = m_[k] / bc1;
                const double vhat = v_[k] / bc2;
                w[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + eps_));
            }
        });
    }

  private:
    double beta1_, beta2_, eps_;
    int t_ = 0;
    std::vector<double> m_, v_;
};

// ---------------------------------------------------------------------------
// Checkpoints: a directory holding backbone.json + params.bin (+ the training
// log CSV at the run root). The aggregator reuses the same layout.
// ---------------------------------------------------------------------------

inline void save_checkpoint(const std::filesystem::path& dir, const PatchQualityModel& model) {
    std::filesystem::create_directories(dir);
    nlohmann::json j = model.config().to_json();
    j["version"] = model.version();
    j["kind"] = "pqanet";
    write_file(dir / "backbone.json", j.dump(2) + "\n");
    const auto flat = model.serialize();
    write_file(dir / "params.bin",
               std::string_view(reinterpret_cast<const char*>(flat.data()),
                                flat.size() * sizeof(float)));
}

inline PatchQualityModel load_checkpoint(const std::filesystem::path& dir) {
    const auto j = nlohmann::json::parse(read_file(dir / "backbone.json"));
    PatchQualityModel model = PatchQualityModel::create(BackboneConfig::from_json(j));
    const std::string blob = read_file(dir / "params.bin");
    require(blob.size() == model.parameter_count() * sizeof(float),
            "checkpoint parameter blob has the wrong size");
    std::vector<float> flat(model.parameter_count());
    std::memcpy(flat.data(), blob.data(), blob.size());
    model.deserialize(flat);
    return model;
}

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
    double heldout_rank_accuracy = 0.0;
    double lr = 0.0;
};

inline void save_training_log(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
    CsvTable table;
    table.header = {"epoch", "mean_loss", "heldout_rank_accuracy", "lr"};
    for (const auto& row : log) {
        table.rows.push_back({std::to_string(row.epoch), format_double(row.mean_loss),
                              format_double(row.heldout_rank_accuracy), format_double(row.lr)});
    }
    write_csv(path, table);
}

struct TrainOutcome {
    PatchQualityModel model;
    std::vector<EpochLog> log;
    size_t train_count = 0;
    size_t heldout_count = 0;
};

// Held-out split is a fixed function of the instance id, not of the seed, so
// the same instances stay held out across runs.
inline bool is_heldout_instance(const std::string& instance_id, double fraction) {
    return static_cast<double>(hash64(instance_id) % 10000) < fraction * 10000.0;
}

// Siamese ranking trainer: both pairings of an instance are scored by the
// same parameters within a step, the BCE of the sigmoid rank probability is
// minimized with Adam under the step-decay schedule.
inline TrainOutcome train(const std::vector<TrainingInstance>& dataset, const TrainingConfig& cfg,
                          const BackboneConfig& backbone,
                          const std::filesystem::path& checkpoint_dir = {},
                          std::ostream* progress = nullptr) {
    cfg.validate();
    require(!dataset.empty(), "train: dataset is empty");

    std::vector<size_t> train_idx, heldout_idx;
    for (size_t i = 0; i < dataset.size(); ++i) {
        if (is_heldout_instance(dataset[i].id, cfg.heldout_fraction)) {
            heldout_idx.push_back(i);
        } else {
            train_idx.push_back(i);
        }
    }
    if (train_idx.empty()) {
        // Degenerate split (tiny dataset): train on everything.
        train_idx = heldout_idx;
        heldout_idx.clear();
    }

    TrainOutcome outcome;
    outcome.model = PatchQualityModel::create(backbone);
    outcome.train_count = train_idx.size();
    outcome.heldout_count = heldout_idx.size();
    PatchQualityModel& model = outcome.model;
    AdamOptimizer adam(cfg.adam_beta1, cfg.adam_beta2);

    auto rank_accuracy = [&](const std::vector<size_t>& idx) {
        if (idx.empty()) return 0.0;
        size_t correct = 0;
        for (size_t i : idx) {
            const TrainingInstance& inst = dataset[i];
            const double q1 = model.forward(inst.pairing_1.ref_patch, inst.pairing_1.dist_patch);
            const double q2 = model.forward(inst.pairing_2.ref_patch, inst.pairing_2.dist_patch);
            if ((q1 > q2) == (inst.rank == 1)) ++correct;
        }
        return static_cast<double>(correct) / static_cast<double>(idx.size());
    };

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = cfg.lr_for_epoch(epoch);
        Rng rng(mix_seed(cfg.seed, "epoch" + std::to_string(epoch)));
        std::vector<size_t> order = train_idx;
        rng.shuffle(order);

        double loss_sum = 0.0;
        size_t seen = 0;
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const size_t end = std::min(order.size(), start + cfg.batch_size);
            const double inv_batch = 1.0 / static_cast<double>(end - start);
            model.zero_grads();
            for (size_t k = start; k < end; ++k) {
                const TrainingInstance& inst = dataset[order[k]];
                PatchQualityModel::ForwardCache cache1, cache2;
                const double q1 = model.forward_train(inst.pairing_1.ref_patch,
                                                      inst.pairing_1.dist_patch, cache1);
                const double q2 = model.forward_train(inst.pairing_2.ref_patch,
                                                      inst.pairing_2.dist_patch, cache2);
                const double logit = q1 - q2;
                loss_sum += bce_loss_from_logit(logit, inst.rank);
                ++seen;
                const double dlogit = bce_grad_logit(logit, inst.rank) * inv_batch;
                model.backward(cache1, dlogit);
                model.backward(cache2, -dlogit);
            }
            adam.step(model, lr, cfg.l2);
        }

        EpochLog row;
        row.epoch = epoch;
        row.mean_loss = loss_sum / static_cast<double>(seen);
        if (!std::isfinite(row.mean_loss)) {
            fail("training diverged: mean loss became non-finite at epoch " +
                 std::to_string(epoch));
        }
        row.heldout_rank_accuracy = rank_accuracy(heldout_idx.empty() ? train_idx : heldout_idx);
        row.lr = lr;
        outcome.log.push_back(row);
        if (progress) {
            *progress << "epoch " << epoch << "/" << cfg.epochs << " loss " << row.mean_loss
                      << " heldout_acc " << row.heldout_rank_accuracy << " lr " << lr << "\n";
        }
        if (!checkpoint_dir.empty()) {
            char name[32];
            std::snprintf(name, sizeof name, "epoch_%03d", epoch);
            save_checkpoint(checkpoint_dir / name, model);
            save_training_log(checkpoint_dir / "training_log.csv", outcome.log);
        }
    }
    if (!checkpoint_dir.empty()) {
        save_checkpoint(checkpoint_dir / "final", model);
        save_training_log(checkpoint_dir / "training_log.csv", outcome.log);
    }
    return outcome;
}

}  // namespace frvqa
