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

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "frvqa/util.hpp"

namespace frvqa {

// Just enough SVG to render calibration curves and benchmark scatter plots
// without an imaging dependency.
class SvgPlot {
  public:
    SvgPlot(std::string title, std::string x_label, std::string y_label, int width = 640,
            int height = 480)
        : title_(std::move(title)),
          x_label_(std::move(x_label)),
          y_label_(std::move(y_label)),
          width_(width),
          height_(height) {}

    void set_range(double x_min, double x_max, double y_min, double y_max) {
        x_min_ = x_min;
        x_max_ = x_max;
        y_min_ = y_min;
        y_max_ = y_max;
        has_range_ = true;
    }

    void add_points(const std::vector<double>& xs, const std::vector<double>& ys,
                    const std::string& color = "#2266cc") {
        points_.push_back({xs, ys, color});
        grow_range(xs, ys);
    }

    void add_line(const std::vector<double>& xs, const std::vector<double>& ys,
                  const std::string& color = "#cc3322") {
        lines_.push_back({xs, ys, color});
        grow_range(xs, ys);
    }

    std::string render() const {
        const double ml = 60, mr = 20, mt = 40, mb = 50;
        const double pw = width_ - ml - mr;
        const double ph = height_ - mt - mb;
        double x0 = x_min_, x1 = x_max_, y0 = y_min_, y1 = y_max_;
        if (x1 <= x0) x1 = x0 + 1.0;
        if (y1 <= y0) y1 = y0 + 1.0;
        auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
        auto py = [&](double y) { return mt + ph - (y - y0) / (y1 - y0) * ph; };

        std::ostringstream ss;
        ss << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
           << height_ << "\">\n";
        ss << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        ss << "<text x=\"" << width_ / 2 << "\" y=\"24\" text-anchor=\"middle\" "
           << "font-family=\"sans-serif\" font-size=\"15\">" << title_ << "</text>\n";
        // axes
        ss << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
           << mt + ph << "\" stroke=\"black\"/>\n";
        ss << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
           << "\" stroke=\"black\"/>\n";
        for (int i = 0; i <= 5; ++i) {
            const double fx = x0 + (x1 - x0) * i / 5.0;
            const double fy = y0 + (y1 - y0) * i / 5.0;
            ss << "<text x=\"" << px(fx) << "\" y=\"" << mt + ph + 18
               << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
               << trim_number(fx) << "</text>\n";
            ss << "<text x=\"" << ml - 8 << "\" y=\"" << py(fy) + 4
               << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
               << trim_number(fy) << "</text>\n";
        }
        ss << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height_ - 10
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label_
           << "</text>\n";
        ss << "<text x=\"16\" y=\"" << mt + ph / 2
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           << "transform=\"rotate(-90 16," << mt + ph / 2 << ")\">" << y_label_ << "</text>\n";

        for (const auto& series : lines_) {
            ss << "<polyline fill=\"none\" stroke=\"" << series.color << "\" stroke-width=\"2\" "
               << "points=\"";
            for (size_t i = 0; i < series.xs.size(); ++i) {
                ss << px(series.xs[i]) << ',' << py(series.ys[i]) << ' ';
            }
            ss << "\"/>\n";
        }
        for (const auto& series : points_) {
            for (size_t i = 0; i < series.xs.size(); ++i) {
                ss << "<circle cx=\"" << px(series.xs[i]) << "\" cy=\"" << py(series.ys[i])
                   << "\" r=\"3\" fill=\"" << series.color << "\" fill-opacity=\"0.7\"/>\n";
            }
        }
        ss << "</svg>\n";
        return ss.str();
    }

    void save(const std::filesystem::path& path) const { write_file(path, render()); }

  private:
    struct Series {
        std::vector<double> xs, ys;
        std::string color;
    };

    static std::string trim_number(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        return buf;
    }

    void grow_range(const std::vector<double>& xs, const std::vector<double>& ys) {
        if (has_range_) return;
        for (double x : xs) {
            x_min_ = std::min(x_min_, x);
            x_max_ = std::max(x_max_, x);
        }
        for (double y : ys) {
            y_min_ = std::min(y_min_, y);
            y_max_ = std::max(y_max_, y);
        }
    }

    std::string title_, x_label_, y_label_;
    int width_, height_;
    double x_min_ = std::numeric_limits<double>::max();
    double x_max_ = std::numeric_limits<double>::lowest();
    double y_min_ = std::numeric_limits<double>::max();
    double y_max_ = std::numeric_limits<double>::lowest();
    bool has_range_ = false;
    std::vector<Series> points_;
    std::vector<Series> lines_;
};

}  // namespace frvqa
