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

#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "frvqa/frvqa.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3 };

struct Logger {
    LogLevel level = LogLevel::info;

    void log(LogLevel l, const std::string& msg) const {
        if (l < level) return;
        static const char* names[] = {"debug", "info", "warn", "error"};
        std::cerr << "[" << names[static_cast<int>(l)] << "] " << msg << "\n";
    }
    void info(const std::string& msg) const { log(LogLevel::info, msg); }
    void warn(const std::string& msg) const { log(LogLevel::warn, msg); }
} logger;

struct GlobalOptions {
    std::string config_path;
    uint64_t seed = 1;
    int jobs = 1;
    std::string log_level = "info";
    bool deterministic = false;
    frvqa::Config config;

    void finalize() {
        if (!config_path.empty()) config = frvqa::Config::load(config_path);
        if (log_level == "debug") logger.level = LogLevel::debug;
        else if (log_level == "info") logger.level = LogLevel::info;
        else if (log_level == "warn") logger.level = LogLevel::warn;
        else if (log_level == "error") logger.level = LogLevel::error;
        else frvqa::fail("unknown log level '" + log_level + "'");
        if (deterministic) jobs = 1;
    }
};

// Every run leaves a machine-readable record of what was executed.
void write_run_manifest(const fs::path& out_dir, const std::string& command,
                        const GlobalOptions& global, const json& options,
                        const std::vector<std::string>& outputs) {
    fs::create_directories(out_dir);
    json j;
    j["command"] = command;
    j["config_hash"] = global.config.fingerprint();
    j["seed"] = global.seed;
    j["jobs"] = global.jobs;
    j["deterministic"] = global.deterministic;
    j["options"] = options;
    j["outputs"] = outputs;
    const auto now = std::chrono::system_clock::now();
    j["unix_time"] =
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    frvqa::write_file_atomic(out_dir / "run_manifest.json", j.dump(2) + "\n");
}

frvqa::PatchGeometry patch_geometry_from(const GlobalOptions& global, int w, int h, int t) {
    frvqa::PatchGeometry geom;
    geom.width = w > 0 ? w : static_cast<int>(global.config.get_int("patch", "width", 256));
    geom.height = h > 0 ? h : static_cast<int>(global.config.get_int("patch", "height", 256));
    geom.frames = t > 0 ? t : static_cast<int>(global.config.get_int("patch", "frames", 12));
    return geom;
}

std::vector<frvqa::CodecConfig> parse_codec_configs(const std::string& spec) {
    // comma-separated codec:qp[:preset] triples
    std::vector<frvqa::CodecConfig> cfgs;
    for (const auto& item : frvqa::split(spec, ',')) {
        const std::string trimmed = frvqa::trim(item);
        if (trimmed.empty()) continue;
        const auto parts = frvqa::split(trimmed, ':');
        frvqa::require(parts.size() >= 2, "codec config '" + trimmed + "' is not codec:qp[:preset]");
        frvqa::CodecConfig cfg;
        cfg.codec_name = parts[0];
        cfg.quality_param = static_cast<int>(frvqa::parse_int(parts[1], "quality_param"));
        if (parts.size() >= 3) cfg.preset = parts[2];
        cfgs.push_back(std::move(cfg));
    }
    frvqa::require(!cfgs.empty(), "no codec configs given");
    return cfgs;
}

frvqa::VideoSequence load_video_arg(const std::string& path, frvqa::Role role,
                                    const std::string& id, int width, int height, int bit_depth,
                                    const std::string& chroma, double fps) {
    std::optional<frvqa::VideoGeometry> geom;
    if (width > 0 || height > 0) {
        frvqa::VideoGeometry g;
        g.width = width;
        g.height = height;
        g.bit_depth = bit_depth;
        g.chroma = frvqa::chroma_from_name(chroma);
        g.frame_rate = fps;
        geom = g;
    }
    return frvqa::load_sequence(path, geom, role, id);
}

std::unique_ptr<frvqa::ProxyScorer> make_proxy(const GlobalOptions& global,
                                               const std::string& proxy_name) {
    if (proxy_name == "psnr") return std::make_unique<frvqa::PsnrProxyScorer>();
    if (proxy_name == "vmaf") {
        const std::string tmpl = global.config.get(
            "proxy", "vmaf_command",
            "vmaf --reference {reference} --distorted {distorted} --json --output {output}");
        return std::make_unique<frvqa::ExternalProxyScorer>(tmpl, "vmaf");
    }
    frvqa::fail("unknown proxy scorer '" + proxy_name + "' (expected psnr or vmaf)");
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_synth_corpus(const GlobalOptions& global, const std::string& sources_list,
                     const std::string& out_dir, const std::string& ref_spec,
                     const std::string& transcode_spec, bool synthetic, int n_sources, int width,
                     int height, int frames, int ref_noise, const std::string& grid_spec) {
    if (synthetic) {
        frvqa::SyntheticCorpusOptions opt;
        opt.n_sources = n_sources;
        opt.width = width;
        opt.height = height;
        opt.frames = frames;
        opt.reference_noise_level = ref_noise;
        opt.distortion_grid.clear();
        for (const auto& tok : frvqa::split(grid_spec, ',')) {
            opt.distortion_grid.push_back(static_cast<int>(frvqa::parse_int(frvqa::trim(tok),
                                                                            "noise level")));
        }
        opt.seed = global.seed;
        opt.jobs = global.jobs;
        const auto manifest = frvqa::make_synthetic_corpus(opt, out_dir);
        logger.info("synthetic corpus: " + std::to_string(manifest.entries.size()) +
                    " manifest entries under " + out_dir);
        write_run_manifest(out_dir, "synth-corpus", global,
                           {{"synthetic", true},
                            {"n_sources", n_sources},
                            {"grid", grid_spec},
                            {"ref_noise", ref_noise}},
                           {(fs::path(out_dir) / "manifest.jsonl").string(),
                            (fs::path(out_dir) / "ground_truth.csv").string()});
        return 0;
    }

    frvqa::require(!sources_list.empty(), "synth-corpus needs --sources (or --synthetic)");
    std::vector<fs::path> sources;
    for (const auto& line : frvqa::split(frvqa::read_file(sources_list), '\n')) {
        const std::string path = frvqa::trim(line);
        if (!path.empty() && path[0] != '#') sources.emplace_back(path);
    }
    frvqa::require(!sources.empty(), "source list is empty: " + sources_list);

    const std::string ref_conf = !ref_spec.empty()
                                     ? ref_spec
                                     : global.config.get("synth", "ref_configs",
                                                         "x264:30:medium,x264:37:medium,"
                                                         "x264:42:medium");
    const std::string tr_conf =
        !transcode_spec.empty()
            ? transcode_spec
            : global.config.get("synth", "transcode_configs",
                                "x264:28,x264:34,x264:40,x265:28,x265:34,x265:40,"
                                "vp9:32,vp9:42,vp9:52,av1:32,av1:42,av1:52");

    frvqa::CodecRegistry registry = frvqa::CodecRegistry::with_defaults();
    registry.apply_config(global.config);
    frvqa::BuildCorpusOptions build;
    build.jobs = global.jobs;
    build.seed = global.seed;
    const auto manifest = frvqa::build_corpus(sources, parse_codec_configs(ref_conf),
                                              parse_codec_configs(tr_conf), registry, out_dir,
                                              build);
    logger.info("corpus built: " + std::to_string(manifest.entries.size()) + " entries");
    write_run_manifest(out_dir, "synth-corpus", global,
                       {{"sources", sources_list}, {"ref_configs", ref_conf},
                        {"transcode_configs", tr_conf}},
                       {(fs::path(out_dir) / "manifest.jsonl").string()});
    return 0;
}

int cmd_label(const GlobalOptions& global, const std::string& manifest_path,
              const std::string& out_dir, double sigma_ss, double sigma_ds, double ss_fraction,
              int patches, const std::string& proxy_name, int pw, int ph, int pt) {
    const auto manifest = frvqa::load_manifest(manifest_path);
    frvqa::LabelingOptions opt;
    opt.patch_geometry = patch_geometry_from(global, pw, ph, pt);
    opt.patches_per_sequence = patches;
    opt.thresholds.sigma_ss = sigma_ss;
    opt.thresholds.sigma_ds = sigma_ds;
    opt.ss_fraction = ss_fraction;
    opt.seed = global.seed;
    const auto proxy = make_proxy(global, proxy_name);
    const frvqa::TrainingSet set = frvqa::build_training_set(manifest, opt, *proxy);
    if (set.instances.empty()) {
        std::cerr << "label: " << set.stats.diagnostic << "\n";
        return 1;
    }
    frvqa::save_training_set(out_dir, set);
    logger.info("labeled " + std::to_string(set.stats.labeled) + " instances (" +
                std::to_string(set.stats.excluded) + " excluded, candidate SS fraction " +
                frvqa::format_double(set.stats.candidate_ss_fraction) + ")");
    write_run_manifest(out_dir, "label", global,
                       {{"manifest", manifest_path},
                        {"sigma_ss", sigma_ss},
                        {"sigma_ds", sigma_ds},
                        {"ss_fraction", ss_fraction},
                        {"patches_per_sequence", patches},
                        {"proxy", proxy_name},
                        {"labeled", set.stats.labeled},
                        {"excluded", set.stats.excluded}},
                       {(fs::path(out_dir) / "instances.csv").string(),
                        (fs::path(out_dir) / "patch_index.csv").string(),
                        (fs::path(out_dir) / "patches.bin").string()});
    return 0;
}

int cmd_calibrate(const GlobalOptions& global, const std::string& entries_csv,
                  const std::string& mode_name, double target, const std::string& polarity_name,
                  const std::string& out_dir) {
    const auto entries = frvqa::load_subjective_entries(entries_csv);
    const frvqa::PairMode mode = frvqa::pair_mode_from_name(
        mode_name == "ss" ? "SS" : mode_name == "ds" ? "DS" : mode_name);
    const auto polarity = frvqa::polarity_from_name(polarity_name);
    const auto curve = frvqa::ranking_accuracy_curve(entries, mode, frvqa::default_bin_edges(),
                                                     polarity);
    const double sigma = frvqa::select_threshold(curve, target);
    std::cout << "sigma_" << (mode == frvqa::PairMode::SS ? "ss" : "ds") << " = " << sigma << "\n";
    fs::create_directories(out_dir);
    frvqa::save_accuracy_curve_csv(fs::path(out_dir) / "accuracy_curve.csv", curve);
    frvqa::save_accuracy_curve_plot(fs::path(out_dir) / "accuracy_curve.svg", curve);
    write_run_manifest(out_dir, "calibrate", global,
                       {{"entries", entries_csv},
                        {"mode", mode_name},
                        {"target", target},
                        {"polarity", polarity_name},
                        {"sigma", sigma}},
                       {(fs::path(out_dir) / "accuracy_curve.csv").string(),
                        (fs::path(out_dir) / "accuracy_curve.svg").string()});
    return 0;
}

int cmd_train_pqanet(const GlobalOptions& global, const std::string& dataset_dir,
                     const std::string& out_dir, int epochs, int batch_size, double lr,
                     double decay, int decay_every, double l2) {
    const frvqa::TrainingSet set = frvqa::load_training_set(dataset_dir);
    frvqa::require(!set.instances.empty(), "dataset is empty: " + dataset_dir);

    frvqa::TrainingConfig cfg;
    cfg.epochs = epochs > 0 ? epochs : static_cast<int>(global.config.get_int("train", "epochs", 60));
    cfg.batch_size =
        batch_size > 0 ? batch_size : static_cast<int>(global.config.get_int("train", "batch_size", 4));
    cfg.learning_rate = lr > 0 ? lr : global.config.get_double("train", "learning_rate", 1e-4);
    cfg.lr_decay_factor = decay > 0 ? decay : global.config.get_double("train", "lr_decay_factor", 0.1);
    cfg.lr_decay_every =
        decay_every > 0 ? decay_every
                        : static_cast<int>(global.config.get_int("train", "lr_decay_every", 20));
    cfg.l2 = l2 >= 0 ? l2 : global.config.get_double("train", "l2", 0.0);
    cfg.seed = global.seed;

    frvqa::BackboneConfig backbone;
    backbone.init_seed = global.seed;

    const auto outcome = frvqa::train(set.instances, cfg, backbone, out_dir, &std::cerr);
    logger.info("trained " + std::to_string(cfg.epochs) + " epochs; final heldout accuracy " +
                frvqa::format_double(outcome.log.back().heldout_rank_accuracy));
    write_run_manifest(out_dir, "train-pqanet", global,
                       {{"dataset", dataset_dir},
                        {"epochs", cfg.epochs},
                        {"batch_size", cfg.batch_size},
                        {"learning_rate", cfg.learning_rate},
                        {"lr_decay_factor", cfg.lr_decay_factor},
                        {"lr_decay_every", cfg.lr_decay_every}},
                       {(fs::path(out_dir) / "final").string(),
                        (fs::path(out_dir) / "training_log.csv").string()});
    return 0;
}

int cmd_train_stanet(const GlobalOptions& global, const std::string& db_csv,
                     const std::string& pqanet_dir, const std::string& out_dir, int pw, int ph,
                     int pt, int epochs) {
    const auto entries = frvqa::load_benchmark_csv(db_csv);
    const auto model = frvqa::load_checkpoint(pqanet_dir);
    const uint64_t params_before = model.parameter_hash();
    const auto geom = patch_geometry_from(global, pw, ph, pt);
    const auto mean_agg = frvqa::AggregatorModel::mean_pool();

    std::vector<frvqa::PatchScoreField> fields;
    std::vector<double> subjective;
    for (const auto& e : entries) {
        const auto ref = frvqa::load_sequence(e.reference_path, std::nullopt, frvqa::Role::source,
                                              e.reference_path.stem().string());
        const auto dist = frvqa::load_sequence(e.distorted_path, std::nullopt, frvqa::Role::source,
                                               e.distorted_path.stem().string());
        fields.push_back(frvqa::score_sequence(ref, dist, model, mean_agg, geom).field);
        subjective.push_back(e.degradation());
    }
    frvqa::AggregatorTrainConfig cfg;
    if (epochs > 0) cfg.epochs = epochs;
    cfg.seed = global.seed;
    const auto outcome = frvqa::train_aggregator(fields, subjective, cfg);
    frvqa::require(model.parameter_hash() == params_before,
                   "patch model parameters changed during aggregator training");
    frvqa::save_aggregator(out_dir, outcome.model);
    logger.info("aggregator trained; heldout SROCC " +
                frvqa::format_double(outcome.heldout_srocc));
    write_run_manifest(out_dir, "train-stanet", global,
                       {{"db", db_csv}, {"pqanet", pqanet_dir}, {"epochs", cfg.epochs},
                        {"heldout_srocc", outcome.heldout_srocc}},
                       {(fs::path(out_dir) / "aggregator.json").string()});
    return 0;
}

int cmd_score(const GlobalOptions& global, const std::string& ref_path,
              const std::string& dist_path, const std::string& pqanet_arg,
              const std::string& aggregator_arg, const std::string& json_out, int pw, int ph,
              int pt, int stride_px, int stride_frames, int width, int height, int bit_depth,
              const std::string& chroma, double fps) {
    // Standalone inputs carry no lineage metadata; load both as plain clips.
    const auto ref = load_video_arg(ref_path, frvqa::Role::source, "ref", width, height,
                                    bit_depth, chroma, fps);
    const auto dist = load_video_arg(dist_path, frvqa::Role::source, "dist", width, height,
                                     bit_depth, chroma, fps);
    frvqa::PatchQualityModel model;
    if (pqanet_arg == "neutral") {
        frvqa::BackboneConfig backbone;
        backbone.init_seed = global.seed;
        model = frvqa::PatchQualityModel::create(backbone);
    } else {
        model = frvqa::load_checkpoint(pqanet_arg);
    }
    const frvqa::AggregatorModel aggregator = aggregator_arg == "mean"
                                                  ? frvqa::AggregatorModel::mean_pool()
                                                  : frvqa::load_aggregator(aggregator_arg);
    const auto geom = patch_geometry_from(global, pw, ph, pt);
    frvqa::TileStride stride{stride_px, stride_frames};
    const auto result = frvqa::score_sequence(ref, dist, model, aggregator, geom, stride);

    json j;
    j["sequence_score"] = result.sequence_score;
    j["tile_grid"] = {{"temporal_windows", result.field.t_windows},
                      {"rows", result.field.rows},
                      {"cols", result.field.cols}};
    j["per_tile_scores"] = result.field.scores;
    const std::string text = j.dump(2) + "\n";
    if (json_out.empty() || json_out == "-") {
        std::cout << text;
    } else {
        frvqa::write_file(json_out, text);
        std::cout << "sequence_score " << result.sequence_score << "\n";
        const fs::path manifest_dir = fs::path(json_out).parent_path();
        write_run_manifest(manifest_dir.empty() ? "." : manifest_dir, "score", global,
                           {{"ref", ref_path},
                            {"dist", dist_path},
                            {"pqanet", pqanet_arg},
                            {"aggregator", aggregator_arg},
                            {"sequence_score", result.sequence_score}},
                           {json_out});
    }
    return 0;
}

int cmd_evaluate(const GlobalOptions& global, const std::string& db_csv,
                 const std::string& metrics_path, const std::string& out_dir,
                 const std::string& baseline) {
    const auto entries = frvqa::load_benchmark_csv(db_csv);
    frvqa::Config metrics_cfg = frvqa::Config::load(metrics_path);
    const auto metrics = frvqa::metrics_from_config(metrics_cfg);
    frvqa::BenchmarkOptions opt;
    opt.out_dir = out_dir;
    opt.baseline_metric = baseline;
    const auto report = frvqa::run_benchmark(entries, metrics, opt);
    std::cout << frvqa::render_benchmark_table(
        report, baseline.empty() && !report.metrics.empty() ? report.metrics.back().name
                                                            : baseline);
    std::vector<std::string> outputs = {(fs::path(out_dir) / "report.csv").string(),
                                        (fs::path(out_dir) / "f_verdicts.csv").string(),
                                        (fs::path(out_dir) / "report.txt").string()};
    write_run_manifest(out_dir, "evaluate", global,
                       {{"db", db_csv}, {"metrics", metrics_path}, {"baseline", baseline}},
                       outputs);
    return 0;
}

// Bundled synthetic end-to-end smoke run: corpus, labels, a short training,
// one scored pair, and a benchmark report, all hermetic.
int cmd_selftest(const GlobalOptions& global, const std::string& out_arg) {
    const fs::path out = out_arg.empty()
                             ? fs::temp_directory_path() /
                                   ("frvqa_selftest_" + std::to_string(::getpid()))
                             : fs::path(out_arg);
    fs::create_directories(out);
    logger.info("selftest working directory: " + out.string());

    frvqa::SyntheticCorpusOptions corpus_opt;
    corpus_opt.n_sources = 4;
    corpus_opt.width = 48;
    corpus_opt.height = 48;
    corpus_opt.frames = 6;
    corpus_opt.reference_noise_level = 2;
    corpus_opt.distortion_grid = {2, 8};
    corpus_opt.seed = global.seed;
    corpus_opt.jobs = global.jobs;
    const auto manifest = frvqa::make_synthetic_corpus(corpus_opt, out / "corpus");
    logger.info("selftest: corpus has " + std::to_string(manifest.entries.size()) + " entries");

    frvqa::LabelingOptions label_opt;
    label_opt.patch_geometry = {32, 32, 4};
    label_opt.patches_per_sequence = 6;
    label_opt.seed = global.seed;
    frvqa::PsnrProxyScorer proxy;
    const auto set = frvqa::build_training_set(manifest, label_opt, proxy);
    frvqa::require(!set.instances.empty(), "selftest: labeling produced no instances");
    frvqa::save_training_set(out / "dataset", set);
    logger.info("selftest: " + std::to_string(set.instances.size()) + " training instances");

    frvqa::TrainingConfig train_cfg;
    train_cfg.epochs = 2;
    train_cfg.batch_size = 4;
    train_cfg.learning_rate = 1e-3;
    train_cfg.seed = global.seed;
    frvqa::BackboneConfig backbone;
    backbone.init_seed = global.seed;
    const auto outcome = frvqa::train(set.instances, train_cfg, backbone, out / "ckpt");
    logger.info("selftest: trained 2 epochs, final loss " +
                frvqa::format_double(outcome.log.back().mean_loss));

    // Score the first transcoded sequence against its reference.
    const auto transcoded = manifest.with_role(frvqa::Role::transcoded);
    const auto* dist_entry = transcoded.front();
    const auto* ref_entry = manifest.find(dist_entry->parent_id);
    const auto ref = frvqa::load_sequence(manifest.resolve(*ref_entry), std::nullopt,
                                          frvqa::Role::reference, ref_entry->id,
                                          ref_entry->parent_id);
    const auto dist = frvqa::load_sequence(manifest.resolve(*dist_entry), std::nullopt,
                                           frvqa::Role::transcoded, dist_entry->id,
                                           ref_entry->id);
    const auto scored = frvqa::score_sequence(ref, dist, outcome.model,
                                              frvqa::AggregatorModel::mean_pool(),
                                              label_opt.patch_geometry);
    logger.info("selftest: scored '" + dist_entry->id + "' -> " +
                frvqa::format_double(scored.sequence_score));

    // Benchmark the trained model against the built-in metrics on the
    // synthetic ground truth.
    const auto truth = frvqa::load_ground_truth(out / "corpus" / "ground_truth.csv");
    std::vector<frvqa::BenchmarkEntry> entries;
    for (const auto* d : transcoded) {
        frvqa::BenchmarkEntry e;
        e.reference_path = manifest.resolve(*manifest.find(d->parent_id));
        e.distorted_path = manifest.resolve(*d);
        e.subjective = truth.at(d->id);
        e.polarity = frvqa::SubjectivePolarity::dmos;
        entries.push_back(std::move(e));
    }
    std::vector<std::shared_ptr<frvqa::SequenceMetric>> metrics;
    metrics.push_back(std::make_shared<frvqa::PsnrMetric>());
    metrics.push_back(std::make_shared<frvqa::SsimMetric>());
    metrics.push_back(std::make_shared<frvqa::ModelMetric>("ours", outcome.model,
                                                           frvqa::AggregatorModel::mean_pool(),
                                                           label_opt.patch_geometry));
    frvqa::BenchmarkOptions bench_opt;
    bench_opt.out_dir = out / "report";
    bench_opt.baseline_metric = "ours";
    const auto report = frvqa::run_benchmark(entries, metrics, bench_opt);
    std::cout << frvqa::render_benchmark_table(report, "ours");
    frvqa::require(report.quarantined.empty(), "selftest: a metric was quarantined");

    write_run_manifest(out, "selftest", global, {{"n_sources", corpus_opt.n_sources}},
                       {(out / "report" / "report.csv").string()});
    std::cout << "selftest OK\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Full-reference video quality assessment for transcoded content"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    GlobalOptions global;
    app.add_option("--config", global.config_path, "shared key-value configuration file");
    app.add_option("--seed", global.seed, "RNG seed for every stage");
    app.add_option("--jobs", global.jobs, "parallel job limit");
    app.add_option("--log-level", global.log_level, "debug|info|warn|error");
    app.add_flag("--deterministic", global.deterministic,
                 "single-threaded deterministic mode");

    // Global flags may appear after the subcommand name; let unmatched
    // options fall through to the parent parser.
    auto add_stage = [&app](const std::string& name, const std::string& what) {
        CLI::App* sub = app.add_subcommand(name, what);
        sub->fallthrough();
        return sub;
    };

    // synth-corpus
    auto* synth = add_stage("synth-corpus", "build the three-stage corpus");
    std::string sc_sources, sc_out = "corpus", sc_ref_cfgs, sc_tr_cfgs, sc_grid = "2,8";
    bool sc_synthetic = false;
    int sc_n = 4, sc_w = 48, sc_h = 48, sc_t = 6, sc_ref_noise = 3;
    synth->add_option("--sources", sc_sources, "file listing source video paths");
    synth->add_option("--out", sc_out, "corpus output directory")->required();
    synth->add_option("--ref-configs", sc_ref_cfgs, "codec:qp[:preset],... for references");
    synth->add_option("--transcode-configs", sc_tr_cfgs, "codec:qp[:preset],... for transcodes");
    synth->add_flag("--synthetic", sc_synthetic, "generate procedural sources + noise distortion");
    synth->add_option("--n-sources", sc_n, "synthetic: number of sources");
    synth->add_option("--width", sc_w, "synthetic: source width");
    synth->add_option("--height", sc_h, "synthetic: source height");
    synth->add_option("--frames", sc_t, "synthetic: source frame count");
    synth->add_option("--ref-noise", sc_ref_noise, "synthetic: reference noise sigma");
    synth->add_option("--grid", sc_grid, "synthetic: transcode noise sigmas, comma separated");

    // label
    auto* label = add_stage("label", "proxy-label a corpus into training instances");
    std::string lb_manifest, lb_out = "dataset", lb_proxy = "psnr";
    double lb_sigma_ss = 0.0, lb_sigma_ds = 6.0, lb_ss_fraction = 0.8;
    int lb_patches = 4, lb_pw = 0, lb_ph = 0, lb_pt = 0;
    label->add_option("--manifest", lb_manifest, "corpus manifest (JSON lines)")->required();
    label->add_option("--out", lb_out, "dataset output directory");
    label->add_option("--sigma-ss", lb_sigma_ss, "rank gate for single-source instances");
    label->add_option("--sigma-ds", lb_sigma_ds, "rank gate for dual-source instances");
    label->add_option("--ss-fraction", lb_ss_fraction, "target fraction of SS instances");
    label->add_option("--patches", lb_patches, "patches sampled per transcoded sequence");
    label->add_option("--proxy", lb_proxy, "proxy scorer: psnr|vmaf");
    label->add_option("--patch-width", lb_pw, "patch width (default from config or 256)");
    label->add_option("--patch-height", lb_ph, "patch height");
    label->add_option("--patch-frames", lb_pt, "patch frames");

    // calibrate
    auto* calibrate = add_stage("calibrate", "select sigma from subjective data");
    std::string cb_entries, cb_mode = "ss", cb_polarity = "dmos", cb_out = "calibration";
    double cb_target = 0.96;
    calibrate->add_option("--entries", cb_entries, "CSV with reference_id,distorted_id,qhat,score")
        ->required();
    calibrate->add_option("--mode", cb_mode, "ss|ds");
    calibrate->add_option("--target", cb_target, "target ranking accuracy");
    calibrate->add_option("--polarity", cb_polarity, "score column polarity: mos|dmos");
    calibrate->add_option("--out", cb_out, "output directory");

    // train-pqanet
    auto* train_pqa = add_stage("train-pqanet", "train the patch quality model");
    std::string tp_dataset, tp_out = "pqanet";
    int tp_epochs = 0, tp_batch = 0, tp_decay_every = 0;
    double tp_lr = 0.0, tp_decay = 0.0, tp_l2 = -1.0;
    train_pqa->add_option("--dataset", tp_dataset, "labeled dataset directory")->required();
    train_pqa->add_option("--out", tp_out, "checkpoint output directory");
    train_pqa->add_option("--epochs", tp_epochs, "training epochs (default 60)");
    train_pqa->add_option("--batch-size", tp_batch, "batch size (default 4)");
    train_pqa->add_option("--learning-rate", tp_lr, "initial learning rate (default 1e-4)");
    train_pqa->add_option("--lr-decay-factor", tp_decay, "decay factor (default 0.1)");
    train_pqa->add_option("--lr-decay-every", tp_decay_every, "decay period in epochs (default 20)");
    train_pqa->add_option("--l2", tp_l2, "L2 penalty strength (default 0)");

    // train-stanet
    auto* train_sta = add_stage("train-stanet", "train the pooling aggregator");
    std::string ts_db, ts_pqanet, ts_out = "stanet";
    int ts_pw = 0, ts_ph = 0, ts_pt = 0, ts_epochs = 0;
    train_sta->add_option("--db", ts_db, "benchmark CSV with subjective scores")->required();
    train_sta->add_option("--pqanet", ts_pqanet, "frozen patch model checkpoint")->required();
    train_sta->add_option("--out", ts_out, "aggregator output directory");
    train_sta->add_option("--patch-width", ts_pw, "patch width");
    train_sta->add_option("--patch-height", ts_ph, "patch height");
    train_sta->add_option("--patch-frames", ts_pt, "patch frames");
    train_sta->add_option("--epochs", ts_epochs, "training epochs");

    // score
    auto* score = add_stage("score", "score a transcoded video against its reference");
    std::string s_ref, s_dist, s_pqanet = "neutral", s_agg = "mean", s_json;
    int s_pw = 0, s_ph = 0, s_pt = 0, s_stride = 0, s_stride_t = 0;
    int s_width = 0, s_height = 0, s_bit_depth = 8;
    std::string s_chroma = "420";
    double s_fps = 30.0;
    score->add_option("--ref", s_ref, "reference video")->required();
    score->add_option("--dist", s_dist, "transcoded video")->required();
    score->add_option("--pqanet", s_pqanet, "checkpoint directory, or 'neutral'");
    score->add_option("--aggregator", s_agg, "aggregator directory, or 'mean'");
    score->add_option("--json-out", s_json, "write the result JSON here ('-' for stdout)");
    score->add_option("--patch-width", s_pw, "patch width");
    score->add_option("--patch-height", s_ph, "patch height");
    score->add_option("--patch-frames", s_pt, "patch frames");
    score->add_option("--stride", s_stride, "tile stride in pixels (default: patch size)");
    score->add_option("--stride-frames", s_stride_t, "tile stride in frames");
    score->add_option("--width", s_width, "raw input width");
    score->add_option("--height", s_height, "raw input height");
    score->add_option("--bit-depth", s_bit_depth, "raw input bit depth (8 or 10)");
    score->add_option("--chroma", s_chroma, "raw input chroma format: 400|420|444");
    score->add_option("--fps", s_fps, "raw input frame rate");

    // evaluate
    auto* evaluate = add_stage("evaluate", "benchmark metrics against subjective data");
    std::string ev_db, ev_metrics, ev_out = "evaluation", ev_baseline;
    evaluate->add_option("--db", ev_db, "benchmark CSV")->required();
    evaluate->add_option("--metrics", ev_metrics, "metric registry config")->required();
    evaluate->add_option("--out", ev_out, "report output directory");
    evaluate->add_option("--vs", ev_baseline, "baseline metric for the verdict column");

    // selftest
    auto* selftest = add_stage("selftest", "run the bundled synthetic pipeline");
    std::string st_out;
    selftest->add_option("--out", st_out, "working directory (default: temp)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        global.finalize();
        if (synth->parsed()) {
            return cmd_synth_corpus(global, sc_sources, sc_out, sc_ref_cfgs, sc_tr_cfgs,
                                    sc_synthetic, sc_n, sc_w, sc_h, sc_t, sc_ref_noise, sc_grid);
        }
        if (label->parsed()) {
            return cmd_label(global, lb_manifest, lb_out, lb_sigma_ss, lb_sigma_ds, lb_ss_fraction,
                             lb_patches, lb_proxy, lb_pw, lb_ph, lb_pt);
        }
        if (calibrate->parsed()) {
            return cmd_calibrate(global, cb_entries, cb_mode, cb_target, cb_polarity, cb_out);
        }
        if (train_pqa->parsed()) {
            return cmd_train_pqanet(global, tp_dataset, tp_out, tp_epochs, tp_batch, tp_lr,
                                    tp_decay, tp_decay_every, tp_l2);
        }
        if (train_sta->parsed()) {
            return cmd_train_stanet(global, ts_db, ts_pqanet, ts_out, ts_pw, ts_ph, ts_pt,
                                    ts_epochs);
        }
        if (score->parsed()) {
            return cmd_score(global, s_ref, s_dist, s_pqanet, s_agg, s_json, s_pw, s_ph, s_pt,
                             s_stride, s_stride_t, s_width, s_height, s_bit_depth, s_chroma,
                             s_fps);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(global, ev_db, ev_metrics, ev_out, ev_baseline);
        }
        if (selftest->parsed()) {
            return cmd_selftest(global, st_out);
        }
        std::cerr << app.help();
        return 2;
    } catch (const frvqa::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
