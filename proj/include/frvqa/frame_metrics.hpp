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
#include <span>
#include <vector>

#include "frvqa/util.hpp"

namespace frvqa {

// PSNR of identical frames is unbounded; scores are reported on a declared
// [0, 100] scale, so identical content maps to the cap.
inline constexpr double kPsnrCap = 100.0;

inline double mse_frame(std::span<const uint16_t> a, std::span<const uint16_t> b) {
    require(a.size() == b.size(), "frame size mismatch");
    require(!a.empty(), "empty frame");
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

inline double psnr_from_mse(double mse, int max_value) {
    if (mse <= 0.0) return kPsnrCap;
    const double psnr = 10.0 * std::log10(static_cast<double>(max_value) * max_value / mse);
    return std::clamp(psnr, 0.0, kPsnrCap);
}

inline double psnr_frame(std::span<const uint16_t> a, std::span<const uint16_t> b, int max_value) {
    return psnr_from_mse(mse_frame(a, b), max_value);
}

// ---------------------------------------------------------------------------
// Single-scale SSIM on luma: 11x11 Gaussian window (sigma 1.5), valid region
// only, C1/C2 from the usual K1=0.01 / K2=0.03 constants.
// ---------------------------------------------------------------------------

namespace detail {

inline const std::vector<double>& ssim_kernel() {
    static const std::vector<double> kernel = [] {
        std::vector<double> k(11);
        double sum = 0.0;
        for (int i = 0; i < 11; ++i) {
            const double d = i - 5.0;
            k[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
            sum += k[i];
        }
        for (double& v : k) v /= sum;
        return k;
    }();
    return kernel;
}

// Separable horizontal-then-vertical pass, valid region output.
inline std::vector<double> gaussian_valid(const std::vector<double>& img, int w, int h, int& ow,
                                          int& oh) {
    const auto& k = ssim_kernel();
    const int r = 5;
    ow = w - 2 * r;
    oh = h - 2 * r;
    std::vector<double> horiz(static_cast<size_t>(ow) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < 11; ++i) acc += k[i] * img[static_cast<size_t>(y) * w + x + i];
            horiz[static_cast<size_t>(y) * ow + x] = acc;
        }
    }
    std::vector<double> out(static_cast<size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < 11; ++i) acc += k[i] * horiz[static_cast<size_t>(y + i) * ow + x];
            out[static_cast<size_t>(y) * ow + x] = acc;
        }
    }
    return out;
}

}  // namespace detail

inline double ssim_frame(std::span<const uint16_t> a, std::span<const uint16_t> b, int w, int h,
                         int max_value) {
    require(a.size() == b.size() && a.size() == static_cast<size_t>(w) * h, "frame size mismatch");
    require(w >= 11 && h >= 11, "frame too small for the 11x11 SSIM window");
    const double c1 = (0.01 * max_value) * (0.01 * max_value);
    const double c2 = (0.03 * max_value) * (0.03 * max_value);

    std::vector<double> fa(a.size()), fb(b.size()), faa(a.size()), fbb(b.size()), fab(a.size());
    for (size_t i = 0; i < a.size(); ++i) {
        fa[i] = a[i];
        fb[i] = b[i];
        faa[i] = fa[i] * fa[i];
        fbb[i] = fb[i] * fb[i];
        fab[i] = fa[i] * fb[i];
    }
    int ow = 0, oh = 0;
    const auto mu_a = detail::gaussian_valid(fa, w, h, ow, oh);
    const auto mu_b = detail::gaussian_valid(fb, w, h, ow, oh);
    const auto s_aa = detail::gaussian_valid(faa, w, h, ow, oh);
    const auto s_bb = detail::gaussian_valid(fbb, w, h, ow, oh);
    const auto s_ab = detail::gaussian_valid(fab, w, h, ow, oh);

    double acc = 0.0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i], mb = mu_b[i];
        const double va = s_aa[i] - ma * ma;
        const double vb = s_bb[i] - mb * mb;
        const double cov = s_ab[i] - ma * mb;
        acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return acc / static_cast<double>(mu_a.size());
}

}  // namespace frvqa
