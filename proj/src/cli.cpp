#include "dynimg/cli.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dynimg/classifier.hpp"
#include "dynimg/gestalt.hpp"
#include "dynimg/image_io.hpp"
#include "dynimg/manifest.hpp"
#include "dynimg/pipeline.hpp"
#include "dynimg/rng.hpp"
#include "dynimg/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dynimg {
namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Config files are applied before flag parsing, so explicit flags win.
std::string prescan_config(int argc, const char* const* argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) return argv[i + 1];
        if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
    }
    return {};
}

SynthConfig synth_config_from_json(const std::string& text, SynthConfig base) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError("malformed config JSON: " + std::string(e.what()));
    }
    if (!doc.is_object()) throw DataError("config must be a JSON object");
    static const std::vector<std::string> known = {
        "num_classes", "videos_per_class", "height",     "width", "frames",
        "noise_min",   "noise_max",        "distractor", "seed"};
    for (const auto& [key, value] : doc.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw DataError("synth config: unknown key: " + key);
    }
    try {
        if (doc.contains("num_classes")) base.num_classes = doc.at("num_classes").get<int>();
        if (doc.contains("videos_per_class"))
            base.videos_per_class = doc.at("videos_per_class").get<int>();
        if (doc.contains("height")) base.height = doc.at("height").get<int>();
        if (doc.contains("width")) base.width = doc.at("width").get<int>();
        if (doc.contains("frames")) base.frames = doc.at("frames").get<int>();
        if (doc.contains("noise_min")) base.noise_min = doc.at("noise_min").get<int>();
        if (doc.contains("noise_max")) base.noise_max = doc.at("noise_max").get<int>();
        if (doc.contains("distractor")) base.distractor = doc.at("distractor").get<bool>();
        if (doc.contains("seed")) base.seed = doc.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw DataError("bad synth config value: " + std::string(e.what()));
    }
    return base;
}

std::string synth_config_json(const SynthConfig& cfg) {
    const json doc = {{"num_classes", cfg.num_classes},
                      {"videos_per_class", cfg.videos_per_class},
                      {"height", cfg.height},
                      {"width", cfg.width},
                      {"frames", cfg.frames},
                      {"noise_min", cfg.noise_min},
                      {"noise_max", cfg.noise_max},
                      {"distractor", cfg.distractor},
                      {"seed", cfg.seed}};
    return doc.dump(2);
}

void log_config(const std::string& json_text) {
    std::cerr << "resolved config:\n" << json_text << "\n";
}

// Shared pooling/pruning/training flags for the pipeline-family subcommands.
void add_pipeline_options(CLI::App* cmd, PipelineConfig& cfg, bool& exact, bool& time_averaged) {
    cmd->add_option("--config", "JSON config file with pipeline settings")->expected(1);
    cmd->add_flag("--exact", exact, "solve the ranking objective instead of closed-form pooling");
    cmd->add_flag("--time-averaged", time_averaged,
                  "pool running time averages instead of raw frames");
    cmd->add_option("--lambda", cfg.lambda, "ranking regularization weight");
    cmd->add_option("--max-iters", cfg.solver.max_iters, "solver iteration cap");
    cmd->add_option("--step0", cfg.solver.step0, "solver initial step size");
    cmd->add_option("--step-decay", cfg.solver.step_decay, "solver step decay rate");
    cmd->add_option("--tol", cfg.solver.tol, "solver convergence tolerance");
    cmd->add_option("--tau-b", cfg.tau_b, "binarization threshold");
    cmd->add_option("--delta", cfg.delta, "number of candidate thresholds in the sweep");
    cmd->add_option("--epsilon", cfg.epsilon, "meaningfulness bound on the NFA");
    cmd->add_option("--embed-h", cfg.embed_h, "embedding height");
    cmd->add_option("--embed-w", cfg.embed_w, "embedding width");
    cmd->add_flag("--mask-rgb-with-depth", cfg.mask_rgb_with_depth,
                  "apply the depth kept-component mask to the RGB image");
    cmd->add_flag("--rgb-only", cfg.rgb_only, "ablation: classify from the RGB embedding alone");
    cmd->add_option("--split", cfg.split, "training fraction of the stratified split");
    cmd->add_option("--seed", cfg.seed, "pipeline seed");
    cmd->add_option("--lr", cfg.train.learning_rate, "classifier learning rate");
    cmd->add_option("--epochs", cfg.train.epochs, "classifier training epochs");
    cmd->add_option("--batch-size", cfg.train.batch_size, "classifier batch size");
    cmd->add_option("--l2", cfg.train.l2, "classifier weight decay");
}

void finalize_pooling_flags(PipelineConfig& cfg, bool exact, bool time_averaged) {
    if (exact) cfg.method = PoolingMethod::EXACT;
    if (time_averaged) cfg.input = PoolingInput::TIME_AVERAGED;
}

fs::path resolve_manifest_path(const std::string& manifest, const std::string& msr_dir) {
    if (!manifest.empty() && !msr_dir.empty())
        throw DataError("pass either --manifest or --msr-dir, not both");
    if (!msr_dir.empty()) return fs::path(msr_dir) / "manifest.json";
    if (manifest.empty()) throw DataError("a manifest is required (--manifest or --msr-dir)");
    return manifest;
}

std::vector<VideoFeature> collect_features(const DatasetManifest& manifest,
                                           const PipelineConfig& cfg, const fs::path& work_dir) {
    const fs::path dimg_dir = work_dir.empty() ? fs::path() : work_dir / "dimg";
    std::vector<VideoFeature> features;
    features.reserve(manifest.entries.size());
    for (const ManifestEntry& entry : manifest.entries)
        features.push_back(extract_feature(entry, cfg, dimg_dir));
    return features;
}

std::vector<std::string> sorted_labels(const DatasetManifest& manifest) {
    std::set<std::string> labels;
    for (const ManifestEntry& e : manifest.entries) labels.insert(e.label);
    return {labels.begin(), labels.end()};
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"RGB-D activity recognition via rank-pooled dynamic images"};
    app.require_subcommand(1);

    // --config is handled before CLI parsing so explicit flags override it.
    PipelineConfig pcfg;
    SynthConfig scfg;
    try {
        const std::string config_path = prescan_config(argc, argv);
        if (!config_path.empty()) {
            const std::string text = slurp(config_path);
            const bool is_synth = argc > 1 && std::string(argv[1]) == "synth";
            if (is_synth)
                scfg = synth_config_from_json(text, scfg);
            else
                pcfg = pipeline_config_from_json(text, pcfg);
        }
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    bool exact = false, time_averaged = false;

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic RGB-D dataset");
    std::string synth_out;
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    synth_cmd->add_option("--config", "JSON config file with synth settings")->expected(1);
    synth_cmd->add_option("--classes", scfg.num_classes, "number of classes");
    synth_cmd->add_option("--videos-per-class", scfg.videos_per_class, "videos per class");
    synth_cmd->add_option("--height", scfg.height, "frame height");
    synth_cmd->add_option("--width", scfg.width, "frame width");
    synth_cmd->add_option("--frames", scfg.frames, "frames per video");
    synth_cmd->add_option("--noise-min", scfg.noise_min, "minimum noise blobs per video");
    synth_cmd->add_option("--noise-max", scfg.noise_max, "maximum noise blobs per video");
    bool no_distractor = false;
    synth_cmd->add_flag("--no-distractor", no_distractor, "omit the secondary mover");
    synth_cmd->add_option("--seed", scfg.seed, "generator seed");

    // extract
    auto* extract_cmd = app.add_subcommand("extract", "pool one video into dynamic images");
    std::string rgb_dir, depth_dir, extract_out, extract_id = "video";
    extract_cmd->add_option("--rgb-dir", rgb_dir, "RGB frame directory")->required();
    extract_cmd->add_option("--depth-dir", depth_dir, "depth frame directory")->required();
    extract_cmd->add_option("--out", extract_out, "output directory")->required();
    extract_cmd->add_option("--id", extract_id, "output file stem");
    add_pipeline_options(extract_cmd, pcfg, exact, time_averaged);

    // prune
    auto* prune_cmd = app.add_subcommand("prune", "prune weak components from a dynamic image");
    std::string prune_in, prune_out, prune_report, prune_preview;
    prune_cmd->add_option("--in", prune_in, "input .dimg file")->required();
    prune_cmd->add_option("--out", prune_out, "output .dimg file")->required();
    prune_cmd->add_option("--report", prune_report, "sweep report JSON path");
    prune_cmd->add_option("--preview", prune_preview, "pruned preview PNG path");
    add_pipeline_options(prune_cmd, pcfg, exact, time_averaged);

    // pipeline
    auto* pipeline_cmd = app.add_subcommand("pipeline", "full train/test run from a manifest");
    std::string pipeline_manifest, pipeline_out, pipeline_msr;
    pipeline_cmd->add_option("--manifest", pipeline_manifest, "dataset manifest JSON");
    pipeline_cmd->add_option("--msr-dir", pipeline_msr,
                             "directory of pre-extracted frames with a manifest.json");
    pipeline_cmd->add_option("--out", pipeline_out, "output directory")->required();
    add_pipeline_options(pipeline_cmd, pcfg, exact, time_averaged);

    // train
    auto* train_cmd = app.add_subcommand("train", "train a classifier on a whole manifest");
    std::string train_manifest, train_out, train_work, train_msr;
    train_cmd->add_option("--manifest", train_manifest, "dataset manifest JSON");
    train_cmd->add_option("--msr-dir", train_msr,
                          "directory of pre-extracted frames with a manifest.json");
    train_cmd->add_option("--out", train_out, "model JSON path")->required();
    train_cmd->add_option("--work", train_work, "directory for persisted dynamic images");
    add_pipeline_options(train_cmd, pcfg, exact, time_averaged);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained model on a manifest");
    std::string eval_manifest, eval_model, eval_out, eval_work, eval_msr;
    eval_cmd->add_option("--manifest", eval_manifest, "dataset manifest JSON");
    eval_cmd->add_option("--msr-dir", eval_msr,
                         "directory of pre-extracted frames with a manifest.json");
    eval_cmd->add_option("--model", eval_model, "model JSON path")->required();
    eval_cmd->add_option("--out", eval_out, "report JSON path")->required();
    eval_cmd->add_option("--work", eval_work, "directory for persisted dynamic images");
    add_pipeline_options(eval_cmd, pcfg, exact, time_averaged);

    // report
    auto* report_cmd = app.add_subcommand("report", "print a report as a text table");
    std::string report_in;
    report_cmd->add_option("--in", report_in, "report JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        finalize_pooling_flags(pcfg, exact, time_averaged);

        if (synth_cmd->parsed()) {
            if (no_distractor) scfg.distractor = false;
            log_config(synth_config_json(scfg));
            const DatasetManifest manifest = synth_generate(scfg, synth_out);
            std::cout << (fs::path(synth_out) / "manifest.json").string() << "\n";
            std::cout << manifest.entries.size() << " videos written\n";
        } else if (extract_cmd->parsed()) {
            log_config(pipeline_config_json(pcfg));
            ManifestEntry entry;
            entry.video_id = extract_id;
            entry.label = "";
            entry.rgb_dir = rgb_dir;
            entry.depth_dir = depth_dir;
            run_extract(entry, pcfg, extract_out);
            std::cout << "wrote " << extract_id << "_{rgb,depth}.dimg and previews to "
                      << extract_out << "\n";
        } else if (prune_cmd->parsed()) {
            log_config(pipeline_config_json(pcfg));
            const DynamicImage raw = read_dimg(prune_in);
            const DynamicImage normalized = normalize_image(raw);
            const PruneResult result =
                prune_full(normalized, pcfg.tau_b, pcfg.delta, pcfg.epsilon);
            write_dimg(prune_out, result.image);
            if (!prune_report.empty()) write_sweep_report(prune_report, result);
            if (!prune_preview.empty()) write_preview_png(prune_preview, result.image);
            std::cout << "kept " << result.kept_labels().size() << " of "
                      << result.components.components.size() << " components\n";
        } else if (pipeline_cmd->parsed()) {
            log_config(pipeline_config_json(pcfg));
            const fs::path manifest_path = resolve_manifest_path(pipeline_manifest, pipeline_msr);
            const DatasetManifest manifest = load_manifest(manifest_path);
            const EvalReport report = run_pipeline(manifest, pcfg, pipeline_out);
            std::cout << report_table(report);
        } else if (train_cmd->parsed()) {
            log_config(pipeline_config_json(pcfg));
            const fs::path manifest_path = resolve_manifest_path(train_manifest, train_msr);
            const DatasetManifest manifest = load_manifest(manifest_path);
            const std::vector<std::string> labels = sorted_labels(manifest);
            std::map<std::string, int> index;
            for (std::size_t i = 0; i < labels.size(); ++i)
                index[labels[i]] = static_cast<int>(i);
            const std::vector<VideoFeature> features =
                collect_features(manifest, pcfg, train_work);
            std::vector<Sample> samples;
            samples.reserve(features.size());
            for (const VideoFeature& f : features)
                samples.push_back({f.fused, index.at(f.label)});
            TrainConfig train_cfg = pcfg.train;
            train_cfg.seed = Rng::mix(pcfg.seed, pcfg.train.seed);
            const TrainResult trained = train(samples, train_cfg);
            save_model(train_out, trained.params, train_cfg);
            std::cout << "model written to " << train_out << "\n";
        } else if (eval_cmd->parsed()) {
            log_config(pipeline_config_json(pcfg));
            const fs::path manifest_path = resolve_manifest_path(eval_manifest, eval_msr);
            const DatasetManifest manifest = load_manifest(manifest_path);
            const auto [params, train_cfg] = load_model(eval_model);
            const std::vector<std::string> labels = sorted_labels(manifest);
            if (static_cast<int>(labels.size()) != params.num_classes)
                throw DataError("manifest label set does not match the model's class count");
            std::map<std::string, int> index;
            for (std::size_t i = 0; i < labels.size(); ++i)
                index[labels[i]] = static_cast<int>(i);

            const std::vector<VideoFeature> features = collect_features(manifest, pcfg, eval_work);
            const int K = params.num_classes;
            EvalReport report;
            report.confusion.assign(K, std::vector<int>(K, 0));
            int correct = 0;
            for (const VideoFeature& f : features) {
                const int truth = index.at(f.label);
                const int pred = predict(params, f.fused);
                report.confusion[truth][pred] += 1;
                if (pred == truth) ++correct;
            }
            report.accuracy =
                features.empty() ? 0.0 : static_cast<double>(correct) / features.size();
            for (int k = 0; k < K; ++k) {
                ClassStats stats;
                stats.label = labels[k];
                int row = 0, col = 0;
                for (int j = 0; j < K; ++j) {
                    row += report.confusion[k][j];
                    col += report.confusion[j][k];
                }
                stats.recall = row > 0 ? static_cast<double>(report.confusion[k][k]) / row : 0.0;
                stats.precision = col > 0 ? static_cast<double>(report.confusion[k][k]) / col : 0.0;
                report.per_class.push_back(std::move(stats));
            }
            report.config_json = pipeline_config_json(pcfg);
            std::ofstream out(eval_out, std::ios::trunc);
            if (!out) throw DataError("cannot write report: " + eval_out);
            out << report_json(report) << "\n";
            std::cout << report_table(report);
        } else if (report_cmd->parsed()) {
            const std::string text = slurp(report_in);
            const EvalReport report = report_from_json(text);
            std::cout << report_table(report);
        }
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace dynimg
