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

#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "frvqa/calibration.hpp"
#include "frvqa/frame_metrics.hpp"
#include "frvqa/inference.hpp"
#include "frvqa/stats.hpp"
#include "frvqa/svg.hpp"
#include "frvqa/trainer.hpp"
#include "frvqa/util.hpp"
#include "frvqa/video.hpp"

namespace frvqa {

// One benchmark row: a transcoded sequence, its unpristine reference, and the
// subjective degradation score.
struct BenchmarkEntry {
    std::filesystem::path reference_path;
    std::filesystem::path distorted_path;
    double subjective = 0.0;
    SubjectivePolarity polarity = SubjectivePolarity::dmos;

    double degradation() const {
        return polarity == SubjectivePolarity::mos ? -subjective : subjective;
    }
};

inline std::vector<BenchmarkEntry> load_benchmark_csv(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path);
    const int c_ref = table.column("reference_path");
    const int c_dist = table.column("distorted_path");
    const int c_score = table.column("score");
    const int c_pol = table.column("polarity");
    std::vector<BenchmarkEntry> entries;
    for (const auto& row : table.rows) {
        BenchmarkEntry e;
        e.reference_path = row[c_ref];
        e.distorted_path = row[c_dist];
        e.subjective = parse_double(row[c_score], "score");
        e.polarity = polarity_from_name(row[c_pol]);
        entries.push_back(std::move(e));
    }
    return entries;
}

// What a metric gets to see for one entry: decoded sequences for in-process
// metrics, the underlying paths for plugin executables.
struct MetricInput {
    const std::filesystem::path& reference_path;
    const std::filesystem::path& distorted_path;
    const VideoSequence& reference;
    const VideoSequence& distorted;
};

class SequenceMetric {
  public:
    virtual ~SequenceMetric() = default;
    virtual std::string name() const = 0;
    virtual double score(const MetricInput& input) const = 0;
};

class PsnrMetric final : public SequenceMetric {
  public:
    explicit PsnrMetric(std::string name = "psnr") : name_(std::move(name)) {}
    std::string name() const override { return name_; }
    double score(const MetricInput& input) const override {
        require(input.reference.same_dimensions(input.distorted),
                "psnr: sequence dimensions differ");
        double acc = 0.0;
        for (int t = 0; t < input.reference.frame_count; ++t) {
            acc += psnr_frame(input.reference.luma_frame(t), input.distorted.luma_frame(t),
                              input.reference.max_value());
        }
        return acc / input.reference.frame_count;
    }

  private:
    std::string name_;
};

class SsimMetric final : public SequenceMetric {
  public:
    explicit SsimMetric(std::string name = "ssim") : name_(std::move(name)) {}
    std::string name() const override { return name_; }
    double score(const MetricInput& input) const override {
        require(input.reference.same_dimensions(input.distorted),
                "ssim: sequence dimensions differ");
        double acc = 0.0;
        for (int t = 0; t < input.reference.frame_count; ++t) {
            acc += ssim_frame(input.reference.luma_frame(t), input.distorted.luma_frame(t),
                              input.reference.width, input.reference.height,
                              input.reference.max_value());
        }
        return acc / input.reference.frame_count;
    }

  private:
    std::string name_;
};

// The trained two-stage model as a benchmark row.
class ModelMetric final : public SequenceMetric {
  public:
    ModelMetric(std::string name, PatchQualityModel model, AggregatorModel aggregator,
                PatchGeometry geom, TileStride stride = {})
        : name_(std::move(name)),
          model_(std::move(model)),
          aggregator_(std::move(aggregator)),
          geom_(geom),
          stride_(stride) {}

    std::string name() const override { return name_; }
    double score(const MetricInput& input) const override {
        return score_sequence(input.reference, input.distorted, model_, aggregator_, geom_,
                              stride_)
            .sequence_score;
    }

  private:
    std::string name_;
    PatchQualityModel model_;
    AggregatorModel aggregator_;
    PatchGeometry geom_;
    TileStride stride_;
};

// In-process metric from a closure; handy for oracle rows in tests.
class FunctionMetric final : public SequenceMetric {
  public:
    FunctionMetric(std::string name, std::function<double(const MetricInput&)> fn)
        : name_(std::move(name)), fn_(std::move(fn)) {}
    std::string name() const override { return name_; }
    double score(const MetricInput& input) const override { return fn_(input); }

  private:
    std::string name_;
    std::function<double(const MetricInput&)> fn_;
};

namespace detail {

inline double run_plugin(const std::string& command, const std::vector<std::string>& paths) {
    std::string cmd = command;
    for (const auto& p : paths) cmd += " '" + p + "'";
    const ProcessResult proc = run_process(cmd);
    if (!proc.ok()) {
        fail("metric plugin exited with status " + std::to_string(proc.exit_code) + ": " +
             trim(proc.err.substr(0, 400)));
    }
    const std::string text = trim(proc.out);
    if (text.empty()) fail("metric plugin printed nothing");
    return parse_double(split(text, '\n').back(), "plugin output");
}

}  // namespace detail

// Full-reference plugin: `command <reference> <distorted>`, prints one real.
class PluginFrMetric final : public SequenceMetric {
  public:
    PluginFrMetric(std::string name, std::string command)
        : name_(std::move(name)), command_(std::move(command)) {}
    std::string name() const override { return name_; }
    double score(const MetricInput& input) const override {
        return detail::run_plugin(command_,
                                  {input.reference_path.string(), input.distorted_path.string()});
    }

  private:
    std::string name_;
    std::string command_;
};

// No-reference metric adapted to the transcoding scenario: the plugin scores
// the reference and the transcode separately (`command <video>`), and the row
// reports nr(R) - nr(D), which is positive degradation for quality-valued NR
// metrics.
class PluginNrMetric final : public SequenceMetric {
  public:
    PluginNrMetric(std::string name, std::string command)
        : name_(std::move(name)), command_(std::move(command)) {}
    std::string name() const override { return name_; }
    double score(const MetricInput& input) const override {
        const double nr_ref = detail::run_plugin(command_, {input.reference_path.string()});
        const double nr_dist = detail::run_plugin(command_, {input.distorted_path.string()});
        return nr_ref - nr_dist;
    }

  private:
    std::string name_;
    std::string command_;
};

// NR-difference adaptation for in-process single-video scorers.
inline double nr_difference_adapter(const std::function<double(const VideoSequence&)>& nr_metric,
                                    const VideoSequence& reference,
                                    const VideoSequence& distorted) {
    return nr_metric(reference) - nr_metric(distorted);
}

// ---------------------------------------------------------------------------
// Benchmark runner
// ---------------------------------------------------------------------------

struct MetricReport {
    std::string name;
    std::vector<double> scores;
    double srocc = 0.0;
    double krcc = 0.0;
    std::array<double, 4> fitted_params{};
    std::vector<double> residuals;
    bool linear_fallback = false;
};

struct CorrelationReport {
    std::vector<MetricReport> metrics;
    std::vector<std::vector<int>> f_verdicts;  // pairwise, antisymmetric
    std::map<std::string, std::string> quarantined;
    std::vector<double> subjective_degradation;

    const MetricReport* find(const std::string& name) const {
        for (const auto& m : metrics) {
            if (m.name == name) return &m;
        }
        return nullptr;
    }

    int verdict(const std::string& a, const std::string& b) const {
        int ia = -1, ib = -1;
        for (size_t i = 0; i < metrics.size(); ++i) {
            if (metrics[i].name == a) ia = static_cast<int>(i);
            if (metrics[i].name == b) ib = static_cast<int>(i);
        }
        require(ia >= 0 && ib >= 0, "verdict: unknown metric name");
        return f_verdicts[ia][ib];
    }
};

struct BenchmarkOptions {
    double alpha = 0.05;
    std::filesystem::path out_dir;  // empty: no files written
    std::string baseline_metric;    // table verdict column; default: last metric
};

inline void write_benchmark_report(const CorrelationReport& report,
                                   const std::vector<BenchmarkEntry>& entries,
                                   const BenchmarkOptions& options);

// Score every metric on every entry, correlate against subjective
// degradation, fit the logistic, and run the pairwise residual F-test.
// A metric that throws on any entry is quarantined and excluded from the
// verdict matrix; the run continues for the others.
inline CorrelationReport run_benchmark(const std::vector<BenchmarkEntry>& entries,
                                       const std::vector<std::shared_ptr<SequenceMetric>>& metrics,
                                       const BenchmarkOptions& options = {}) {
    require(entries.size() >= 5, "run_benchmark: need at least 5 entries");
    require(!metrics.empty(), "run_benchmark: no metrics registered");

    // Decode once per distinct path; references are shared across entries.
    std::map<std::string, VideoSequence> cache;
    auto load = [&](const std::filesystem::path& p) -> const VideoSequence& {
        auto it = cache.find(p.string());
        if (it != cache.end()) return it->second;
        VideoSequence seq = load_sequence(p, std::nullopt, Role::source, p.stem().string());
        return cache.emplace(p.string(), std::move(seq)).first->second;
    };

    CorrelationReport report;
    for (const auto& e : entries) report.subjective_degradation.push_back(e.degradation());

    for (const auto& metric : metrics) {
        MetricReport mr;
        mr.name = metric->name();
        try {
            for (const auto& entry : entries) {
                MetricInput input{entry.reference_path, entry.distorted_path,
                                  load(entry.reference_path), load(entry.distorted_path)};
                const double s = metric->score(input);
                require(std::isfinite(s), "metric produced a non-finite score");
                mr.scores.push_back(s);
            }
            mr.srocc = srocc(mr.scores, report.subjective_degradation);
            mr.krcc = krcc(mr.scores, report.subjective_degradation);
            const LogisticFitResult fit = logistic_fit(mr.scores, report.subjective_degradation);
            mr.fitted_params = fit.params;
            mr.residuals = fit.residuals;
            mr.linear_fallback = fit.linear_fallback;
            report.metrics.push_back(std::move(mr));
        } catch (const Error& err) {
            report.quarantined[metric->name()] = err.what();
        }
    }

    const size_t n = report.metrics.size();
    report.f_verdicts.assign(n, std::vector<int>(n, 0));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            report.f_verdicts[i][j] =
                f_test(report.metrics[i].residuals, report.metrics[j].residuals, options.alpha);
        }
    }

    if (!options.out_dir.empty()) {
        write_benchmark_report(report, entries, options);
    }
    return report;
}

inline std::string render_benchmark_table(const CorrelationReport& report,
                                          const std::string& baseline_name) {
    int baseline = -1;
    for (size_t i = 0; i < report.metrics.size(); ++i) {
        if (report.metrics[i].name == baseline_name) baseline = static_cast<int>(i);
    }
    std::ostringstream ss;
    size_t name_width = 8;
    for (const auto& m : report.metrics) name_width = std::max(name_width, m.name.size());
    ss << std::left << std::setw(static_cast<int>(name_width) + 2) << "metric"
       << std::setw(16) << "SROCC (y)" << std::setw(16) << "KRCC (y)" << "\n";
    ss << std::string(name_width + 2 + 32, '-') << "\n";
    for (size_t i = 0; i < report.metrics.size(); ++i) {
        const auto& m = report.metrics[i];
        std::ostringstream srocc_cell, krcc_cell;
        srocc_cell << std::fixed << std::setprecision(4) << m.srocc;
        krcc_cell << std::fixed << std::setprecision(4) << m.krcc;
        if (baseline >= 0 && static_cast<int>(i) != baseline) {
            const int y = report.f_verdicts[i][baseline];
            srocc_cell << " (" << y << ")";
            krcc_cell << " (" << y << ")";
        }
        ss << std::left << std::setw(static_cast<int>(name_width) + 2) << m.name << std::setw(16)
           << srocc_cell.str() << std::setw(16) << krcc_cell.str() << "\n";
    }
    for (const auto& [name, why] : report.quarantined) {
        ss << name << ": quarantined (" << why << ")\n";
    }
    return ss.str();
}

inline void write_benchmark_report(const CorrelationReport& report,
                                   const std::vector<BenchmarkEntry>& entries,
                                   const BenchmarkOptions& options) {
    namespace fs = std::filesystem;
    fs::create_directories(options.out_dir);

    CsvTable summary;
    summary.header = {"metric", "srocc", "krcc", "fit_kind", "b1", "b2", "b3", "b4"};
    for (const auto& m : report.metrics) {
        summary.rows.push_back({m.name, format_double(m.srocc), format_double(m.krcc),
                                m.linear_fallback ? "linear" : "logistic",
                                format_double(m.fitted_params[0]),
                                format_double(m.fitted_params[1]),
                                format_double(m.fitted_params[2]),
                                format_double(m.fitted_params[3])});
    }
    write_csv(options.out_dir / "report.csv", summary);

    CsvTable verdicts;
    verdicts.header = {"metric"};
    for (const auto& m : report.metrics) verdicts.header.push_back(m.name);
    for (size_t i = 0; i < report.metrics.size(); ++i) {
        std::vector<std::string> row = {report.metrics[i].name};
        for (size_t j = 0; j < report.metrics.size(); ++j) {
            row.push_back(std::to_string(report.f_verdicts[i][j]));
        }
        verdicts.rows.push_back(std::move(row));
    }
    write_csv(options.out_dir / "f_verdicts.csv", verdicts);

    const std::string baseline =
        options.baseline_metric.empty() && !report.metrics.empty()
            ? report.metrics.back().name
            : options.baseline_metric;
    write_file(options.out_dir / "report.txt", render_benchmark_table(report, baseline));

    // Scatter with the fitted curve, one image per metric.
    for (const auto& m : report.metrics) {
        SvgPlot plot(m.name + " vs subjective degradation", m.name + " score",
                     "subjective degradation");
        plot.add_points(m.scores, report.subjective_degradation);
        std::vector<double> xs = m.scores;
        std::sort(xs.begin(), xs.end());
        std::vector<double> ys;
        for (double x : xs) {
            if (m.linear_fallback) {
                ys.push_back(m.fitted_params[0] * x + m.fitted_params[1]);
            } else {
                const double u = m.fitted_params[1] * (x - m.fitted_params[2]);
                const double inv = u >= 0.0 ? std::exp(-u) / (1.0 + std::exp(-u))
                                            : 1.0 / (1.0 + std::exp(u));
                ys.push_back(m.fitted_params[0] * (0.5 - inv) + m.fitted_params[3]);
            }
        }
        plot.add_line(xs, ys);
        plot.save(options.out_dir / ("scatter_" + m.name + ".svg"));
    }
    (void)entries;
}

// Build the metric registry from config sections named [metric.NAME].
// Types: psnr, ssim, model (checkpoint= + aggregator=mean|<dir>), plugin_fr
// and plugin_nr (command=). Rows come out in section-name order.
inline std::vector<std::shared_ptr<SequenceMetric>> metrics_from_config(const Config& cfg) {
    std::vector<std::shared_ptr<SequenceMetric>> metrics;
    for (const auto& section : cfg.section_names()) {
        if (!starts_with(section, "metric.")) continue;
        const std::string name = section.substr(7);
        const std::string type = cfg.get(section, "type");
        if (type == "psnr") {
            metrics.push_back(std::make_shared<PsnrMetric>(name));
        } else if (type == "ssim") {
            metrics.push_back(std::make_shared<SsimMetric>(name));
        } else if (type == "model") {
            const std::string ckpt = cfg.get(section, "checkpoint");
            require(!ckpt.empty(), "metric '" + name + "': model type needs checkpoint=");
            PatchQualityModel model = load_checkpoint(ckpt);
            const std::string agg = cfg.get(section, "aggregator", "mean");
            AggregatorModel aggregator =
                agg == "mean" ? AggregatorModel::mean_pool() : load_aggregator(agg);
            PatchGeometry geom;
            geom.width = static_cast<int>(cfg.get_int(section, "patch_width", 256));
            geom.height = static_cast<int>(cfg.get_int(section, "patch_height", 256));
            geom.frames = static_cast<int>(cfg.get_int(section, "patch_frames", 12));
            TileStride stride;
            stride.pixels = static_cast<int>(cfg.get_int(section, "stride_pixels", 0));
            stride.frames = static_cast<int>(cfg.get_int(section, "stride_frames", 0));
            metrics.push_back(std::make_shared<ModelMetric>(name, std::move(model),
                                                            std::move(aggregator), geom, stride));
        } else if (type == "plugin_fr" || type == "plugin_nr") {
            const std::string command = cfg.get(section, "command");
            require(!command.empty(), "metric '" + name + "': plugin type needs command=");
            if (type == "plugin_fr") {
                metrics.push_back(std::make_shared<PluginFrMetric>(name, command));
            } else {
                metrics.push_back(std::make_shared<PluginNrMetric>(name, command));
            }
        } else {
            fail("metric '" + name + "' has unknown type '" + type + "'");
        }
    }
    return metrics;
}

}  // namespace frvqa
