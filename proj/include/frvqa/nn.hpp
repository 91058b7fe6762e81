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
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "frvqa/patch.hpp"
#include "frvqa/util.hpp"

namespace frvqa {

// CHW feature map, float32.
struct FeatureMap {
    int ch = 0, h = 0, w = 0;
    std::vector<float> v;

    FeatureMap() = default;
    FeatureMap(int ch_, int h_, int w_) : ch(ch_), h(h_), w(w_), v(static_cast<size_t>(ch_) * h_ * w_, 0.0f) {}

    float at(int c, int y, int x) const { return v[(static_cast<size_t>(c) * h + y) * w + x]; }
    float& at(int c, int y, int x) { return v[(static_cast<size_t>(c) * h + y) * w + x]; }
};

struct Conv2d {
    int in_ch = 0, out_ch = 0, ksize = 3, stride = 1, pad = 0;
    std::vector<float> weight;  // [out][in][k][k]
    std::vector<float> bias;    // [out]
    std::vector<float> grad_weight;
    std::vector<float> grad_bias;

    void init(int in, int out, int k, int s, int p) {
        in_ch = in;
        out_ch = out;
        ksize = k;
        stride = s;
        pad = p;
        weight.assign(static_cast<size_t>(out) * in * k * k, 0.0f);
        bias.assign(out, 0.0f);
        grad_weight.assign(weight.size(), 0.0f);
        grad_bias.assign(bias.size(), 0.0f);
    }

    int out_extent(int extent) const { return (extent + 2 * pad - ksize) / stride + 1; }

    size_t widx(int o, int i, int ky, int kx) const {
        return ((static_cast<size_t>(o) * in_ch + i) * ksize + ky) * ksize + kx;
    }

    FeatureMap forward(const FeatureMap& x) const {
        FeatureMap y(out_ch, out_extent(x.h), out_extent(x.w));
        for (int o = 0; o < out_ch; ++o) {
            for (int oy = 0; oy < y.h; ++oy) {
                for (int ox = 0; ox < y.w; ++ox) {
                    float acc = bias[o];
                    const int iy0 = oy * stride - pad;
                    const int ix0 = ox * stride - pad;
                    for (int i = 0; i < in_ch; ++i) {
                        for (int ky = 0; ky < ksize; ++ky) {
                            const int iy = iy0 + ky;
                            if (iy < 0 || iy >= x.h) continue;
                            for (int kx = 0; kx < ksize; ++kx) {
                                const int ix = ix0 + kx;
                                if (ix < 0 || ix >= x.w) continue;
                                acc += weight[widx(o, i, ky, kx)] * x.at(i, iy, ix);
                            }
                        }
                    }
                    y.at(o, oy, ox) = acc;
                }
            }
        }
        return y;
    }

    // Accumulates parameter gradients and returns the input gradient.
    FeatureMap backward(const FeatureMap& x, const FeatureMap& dy) {
        FeatureMap dx(x.ch, x.h, x.w);
        for (int o = 0; o < out_ch; ++o) {
            for (int oy = 0; oy < dy.h; ++oy) {
                for (int ox = 0; ox < dy.w; ++ox) {
                    const float g = dy.at(o, oy, ox);
                    if (g == 0.0f) continue;
                    grad_bias[o] += g;
                    const int iy0 = oy * stride - pad;
                    const int ix0 = ox * stride - pad;
                    for (int i = 0; i < in_ch; ++i) {
                        for (int ky = 0; ky < ksize; ++ky) {
                            const int iy = iy0 + ky;
                            if (iy < 0 || iy >= x.h) continue;
                            for (int kx = 0; kx < ksize; ++kx) {
                                const int ix = ix0 + kx;
                                if (ix < 0 || ix >= x.w) continue;
                                grad_weight[widx(o, i, ky, kx)] += x.at(i, iy, ix) * g;
                                dx.at(i, iy, ix) += weight[widx(o, i, ky, kx)] * g;
                            }
                        }
                    }
                }
            }
        }
        return dx;
    }
};

inline void relu_inplace(FeatureMap& x) {
    for (float& v : x.v) v = v > 0.0f ? v : 0.0f;
}

// ---------------------------------------------------------------------------
// Patch quality backbone. Per frame, the absolute ref/dist difference is
// stacked with the dist content into a 2-channel plane and run through a
// strided conv/ReLU stack; features are average-pooled over space and frames
// and projected to a scalar quality index Q (larger = more degradation).
//
// At initialization the weights touching the content channel are zero and all
// biases are zero, so identical inputs produce Q = 0 exactly; training then
// grows content-dependent behaviour from the labels.
// ---------------------------------------------------------------------------

struct BackboneConfig {
    std::string preset = "tiny";
    std::vector<int> channels = {8, 16, 16};
    int kernel = 3;
    int stride = 2;
    uint64_t init_seed = 1;

    void validate() const {
        require(!channels.empty(), "backbone needs at least one conv layer");
        require(kernel >= 1 && stride >= 1, "backbone kernel and stride must be positive");
        for (int c : channels) require(c >= 1, "backbone channel widths must be positive");
    }

    nlohmann::json to_json() const {
        return {{"preset", preset}, {"channels", channels},      {"kernel", kernel},
                {"stride", stride}, {"init_seed", init_seed}};
    }

    static BackboneConfig from_json(const nlohmann::json& j) {
        BackboneConfig cfg;
        cfg.preset = j.value("preset", std::string("tiny"));
        cfg.channels = j.at("channels").get<std::vector<int>>();
        cfg.kernel = j.at("kernel").get<int>();
        cfg.stride = j.at("stride").get<int>();
        cfg.init_seed = j.value("init_seed", uint64_t{1});
        return cfg;
    }
};

class PatchQualityModel {
  public:
    PatchQualityModel() = default;

    static PatchQualityModel create(const BackboneConfig& cfg) {
        cfg.validate();
        PatchQualityModel model;
        model.cfg_ = cfg;
        Rng rng(cfg.init_seed);
        int in = 2;
        const int pad = cfg.kernel / 2;
        for (int c : cfg.channels) {
            Conv2d conv;
            conv.init(in, c, cfg.kernel, cfg.stride, pad);
            const double he = std::sqrt(2.0 / (in * cfg.kernel * cfg.kernel));
            for (float& w : conv.weight) w = static_cast<float>(rng.normal() * he);
            model.convs_.push_back(std::move(conv));
            in = c;
        }
        // Content-channel weights of the first layer start at zero; this is
        // what pins Q to 0 for identical inputs until training moves them.
        Conv2d& first = model.convs_.front();
        for (int o = 0; o < first.out_ch; ++o) {
            for (int ky = 0; ky < first.ksize; ++ky) {
                for (int kx = 0; kx < first.ksize; ++kx) {
                    first.weight[first.widx(o, 1, ky, kx)] = 0.0f;
                }
            }
        }
        const int feat = cfg.channels.back();
        model.head_w_.resize(feat);
        const double scale = 1.0 / std::sqrt(static_cast<double>(feat));
        for (float& w : model.head_w_) w = static_cast<float>(rng.normal() * scale);
        model.head_b_ = 0.0f;
        model.head_grad_w_.assign(feat, 0.0f);
        model.head_grad_b_ = 0.0f;
        return model;
    }

    const BackboneConfig& config() const { return cfg_; }
    int version() const { return version_; }

    struct ForwardCache {
        // Per frame: activations a0 (input) .. aL (post-ReLU of each layer).
        std::vector<std::vector<FeatureMap>> frames;
        std::vector<float> feat;  // pooled feature vector
    };

    // Quality index of a (reference, distorted) pair. Deterministic for fixed
    // parameters; finite for finite inputs.
    double forward(const Patch& ref, const Patch& dist) const { return run(ref, dist, nullptr); }

    double forward_train(const Patch& ref, const Patch& dist, ForwardCache& cache) const {
        return run(ref, dist, &cache);
    }

    // Accumulates gradients for dLoss/dQ = dq.
    void backward(const ForwardCache& cache, double dq) {
        const int frames = static_cast<int>(cache.frames.size());
        const int feat = static_cast<int>(head_w_.size());
        head_grad_b_ += static_cast<float>(dq);
        for (int c = 0; c < feat; ++c) {
            head_grad_w_[c] += static_cast<float>(dq) * cache.feat[c];
        }
        for (int t = 0; t < frames; ++t) {
            const auto& acts = cache.frames[t];
            const FeatureMap& last = acts.back();
            FeatureMap dlast(last.ch, last.h, last.w);
            const float pool_scale = 1.0f / static_cast<float>(frames) /
                                     static_cast<float>(last.h * last.w);
            for (int c = 0; c < last.ch; ++c) {
                const float dpool = static_cast<float>(dq) * head_w_[c] * pool_scale;
                for (int y = 0; y < last.h; ++y) {
                    for (int x = 0; x < last.w; ++x) {
                        dlast.at(c, y, x) = dpool;
                    }
                }
            }
            FeatureMap grad = std::move(dlast);
            for (int l = static_cast<int>(convs_.size()) - 1; l >= 0; --l) {
                const FeatureMap& post = acts[l + 1];
                for (size_t i = 0; i < grad.v.size(); ++i) {
                    if (post.v[i] <= 0.0f) grad.v[i] = 0.0f;  // ReLU mask
                }
                grad = convs_[l].backward(acts[l], grad);
            }
        }
    }

    void zero_grads() {
        for (auto& conv : convs_) {
            std::fill(conv.grad_weight.begin(), conv.grad_weight.end(), 0.0f);
            std::fill(conv.grad_bias.begin(), conv.grad_bias.end(), 0.0f);
        }
        std::fill(head_grad_w_.begin(), head_grad_w_.end(), 0.0f);
        head_grad_b_ = 0.0f;
    }

    void visit_params(const std::function<void(std::vector<float>&, std::vector<float>&)>& fn) {
        for (auto& conv : convs_) {
            fn(conv.weight, conv.grad_weight);
            fn(conv.bias, conv.grad_bias);
        }
        fn(head_w_, head_grad_w_);
        head_b_vec_ = {head_b_};
        head_grad_b_vec_ = {head_grad_b_};
        fn(head_b_vec_, head_grad_b_vec_);
        head_b_ = head_b_vec_[0];
        head_grad_b_ = head_grad_b_vec_[0];
    }

    size_t parameter_count() const {
        size_t n = 0;
        for (const auto& conv : convs_) n += conv.weight.size() + conv.bias.size();
        return n + head_w_.size() + 1;
    }

    std::vector<float> serialize() const {
        std::vector<float> out;
        out.reserve(parameter_count());
        for (const auto& conv : convs_) {
            out.insert(out.end(), conv.weight.begin(), conv.weight.end());
            out.insert(out.end(), conv.bias.begin(), conv.bias.end());
        }
        out.insert(out.end(), head_w_.begin(), head_w_.end());
        out.push_back(head_b_);
        return out;
    }

    void deserialize(const std::vector<float>& flat) {
        require(flat.size() == parameter_count(), "parameter blob size mismatch");
        size_t k = 0;
        for (auto& conv : convs_) {
            std::copy(flat.begin() + k, flat.begin() + k + conv.weight.size(), conv.weight.begin());
            k += conv.weight.size();
            std::copy(flat.begin() + k, flat.begin() + k + conv.bias.size(), conv.bias.begin());
            k += conv.bias.size();
        }
        std::copy(flat.begin() + k, flat.begin() + k + head_w_.size(), head_w_.begin());
        k += head_w_.size();
        head_b_ = flat[k];
    }

    uint64_t parameter_hash() const {
        const auto flat = serialize();
        return hash64(std::string_view(reinterpret_cast<const char*>(flat.data()),
                                       flat.size() * sizeof(float)));
    }

  private:
    double run(const Patch& ref, const Patch& dist, ForwardCache* cache) const {
        require(ref.geom == dist.geom, "forward: patch geometry mismatch");
        require(ref.bit_depth == dist.bit_depth, "forward: bit depth mismatch");
        const int frames = ref.geom.frames;
        const int h = ref.geom.height;
        const int w = ref.geom.width;
        const float inv_max = 1.0f / static_cast<float>(ref.max_value());

        const int feat_dim = static_cast<int>(head_w_.size());
        std::vector<float> feat(feat_dim, 0.0f);
        if (cache) {
            cache->frames.clear();
            cache->frames.resize(frames);
        }
        for (int t = 0; t < frames; ++t) {
            FeatureMap x(2, h, w);
            const auto rf = ref.frame(t);
            const auto df = dist.frame(t);
            for (int i = 0; i < h * w; ++i) {
                const float rv = static_cast<float>(rf[i]) * inv_max;
                const float dv = static_cast<float>(df[i]) * inv_max;
                x.v[i] = std::fabs(rv - dv);
                x.v[static_cast<size_t>(h) * w + i] = dv;
            }
            std::vector<FeatureMap>* acts = nullptr;
            if (cache) {
                acts = &cache->frames[t];
                acts->push_back(x);
            }
            FeatureMap z = std::move(x);
            for (const auto& conv : convs_) {
                z = conv.forward(z);
                relu_inplace(z);
                if (acts) acts->push_back(z);
            }
            const float inv_spatial = 1.0f / static_cast<float>(z.h * z.w);
            for (int c = 0; c < feat_dim; ++c) {
                float acc = 0.0f;
                const size_t base = static_cast<size_t>(c) * z.h * z.w;
                for (int i = 0; i < z.h * z.w; ++i) acc += z.v[base + i];
                feat[c] += acc * inv_spatial;
            }
        }
        const float inv_frames = 1.0f / static_cast<float>(frames);
        double q = head_b_;
        for (int c = 0; c < feat_dim; ++c) {
            feat[c] *= inv_frames;
            q += static_cast<double>(head_w_[c]) * feat[c];
        }
        if (cache) cache->feat = feat;
        return q;
    }

    BackboneConfig cfg_;
    int version_ = 1;
    std::vector<Conv2d> convs_;
    std::vector<float> head_w_;
    float head_b_ = 0.0f;
    std::vector<float> head_grad_w_;
    float head_grad_b_ = 0.0f;
    std::vector<float> head_b_vec_, head_grad_b_vec_;
};

}  // namespace frvqa
