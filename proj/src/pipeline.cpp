#include "dynimg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dynimg/image_io.hpp"
#include "dynimg/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dynimg {
namespace {

const char* method_name(PoolingMethod m) { return m == PoolingMethod::APPROX ? "approx" : "exact"; }
const char* input_name(PoolingInput i) {
    return i == PoolingInput::RAW_FRAMES ? "raw_frames" : "time_averaged";
}

PoolingMethod method_from_name(const std::string& name) {
    if (name == "approx") return PoolingMethod::APPROX;
    if (name == "exact") return PoolingMethod::EXACT;
    throw DataError("config: unknown pooling method: " + name);
}

PoolingInput input_from_name(const std::string& name) {
    if (name == "raw_frames") return PoolingInput::RAW_FRAMES;
    if (name == "time_averaged") return PoolingInput::TIME_AVERAGED;
    throw DataError("config: unknown pooling input: " + name);
}

void validate_config(const PipelineConfig& cfg) {
    if (!(cfg.split > 0.0 && cfg.split < 1.0)) throw DataError("config: split must lie in (0,1)");
    if (!(cfg.lambda > 0.0)) throw DataError("config: lambda must be positive");
    if (!(cfg.tau_b >= 0.0 && cfg.tau_b <= 1.0)) throw DataError("config: tau_b must lie in [0,1]");
    if (cfg.delta < 2) throw DataError("config: delta must be at least 2");
    if (cfg.embed_h < 1 || cfg.embed_w < 1) throw DataError("config: embed dims must be positive");
}

template <typename T>
void read_key(const json& doc, const char* key, T& out) {
    if (doc.contains(key)) out = doc.at(key).get<T>();
}

}  // namespace

std::string pipeline_config_json(const PipelineConfig& cfg) {
    json doc = {{"method", method_name(cfg.method)},
                {"input", input_name(cfg.input)},
                {"lambda", cfg.lambda},
                {"solver",
                 {{"max_iters", cfg.solver.max_iters},
                  {"step0", cfg.solver.step0},
                  {"step_decay", cfg.solver.step_decay},
                  {"tol", cfg.solver.tol}}},
                {"tau_b", cfg.tau_b},
                {"delta", cfg.delta},
                {"epsilon", cfg.epsilon},
                {"embed_h", cfg.embed_h},
                {"embed_w", cfg.embed_w},
                {"mask_rgb_with_depth", cfg.mask_rgb_with_depth},
                {"rgb_only", cfg.rgb_only},
                {"split", cfg.split},
                {"seed", cfg.seed},
                {"train",
                 {{"learning_rate", cfg.train.learning_rate},
                  {"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"seed", cfg.train.seed},
                  {"l2", cfg.train.l2}}}};
    return doc.dump(2);
}

PipelineConfig pipeline_config_from_json(const std::string& text, PipelineConfig base) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError("malformed config JSON: " + std::string(e.what()));
    }
    if (!doc.is_object()) throw DataError("config must be a JSON object");

    static const std::set<std::string> known = {
        "method", "input",  "lambda",  "solver",  "tau_b",
        "delta",  "epsilon", "embed_h", "embed_w", "mask_rgb_with_depth",
        "rgb_only", "split", "seed",   "train"};
    for (const auto& [key, value] : doc.items())
        if (!known.count(key)) throw DataError("config: unknown key: " + key);

    try {
        if (doc.contains("method")) base.method = method_from_name(doc.at("method"));
        if (doc.contains("input")) base.input = input_from_name(doc.at("input"));
        read_key(doc, "lambda", base.lambda);
        if (doc.contains("solver")) {
            const json& s = doc.at("solver");
            read_key(s, "max_iters", base.solver.max_iters);
            read_key(s, "step0", base.solver.step0);
            read_key(s, "step_decay", base.solver.step_decay);
            read_key(s, "tol", base.solver.tol);
        }
        read_key(doc, "tau_b", base.tau_b);
        read_key(doc, "delta", base.delta);
        read_key(doc, "epsilon", base.epsilon);
        read_key(doc, "embed_h", base.embed_h);
        read_key(doc, "embed_w", base.embed_w);
        read_key(doc, "mask_rgb_with_depth", base.mask_rgb_with_depth);
        read_key(doc, "rgb_only", base.rgb_only);
        read_key(doc, "split", base.split);
        read_key(doc, "seed", base.seed);
        if (doc.contains("train")) {
            const json& t = doc.at("train");
            read_key(t, "learning_rate", base.train.learning_rate);
            read_key(t, "epochs", base.train.epochs);
            read_key(t, "batch_size", base.train.batch_size);
            read_key(t, "seed", base.train.seed);
            read_key(t, "l2", base.train.l2);
        }
    } catch (const json::exception& e) {
        throw DataError("bad config value: " + std::string(e.what()));
    }
    validate_config(base);
    return base;
}

std::string report_json(const EvalReport& report) {
    json per_class = json::array();
    for (const ClassStats& s : report.per_class)
        per_class.push_back(
            {{"label", s.label}, {"precision", s.precision}, {"recall", s.recall}});
    json doc = {{"accuracy", report.accuracy},
                {"per_class", per_class},
                {"confusion", report.confusion},
                {"config", json::parse(report.config_json)}};
    return doc.dump(2);
}

EvalReport report_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError("malformed report JSON: " + std::string(e.what()));
    }
    EvalReport report;
    try {
        report.accuracy = doc.at("accuracy").get<double>();
        for (const json& item : doc.at("per_class")) {
            ClassStats s;
            s.label = item.at("label").get<std::string>();
            s.precision = item.at("precision").get<double>();
            s.recall = item.at("recall").get<double>();
            report.per_class.push_back(std::move(s));
        }
        report.confusion = doc.at("confusion").get<std::vector<std::vector<int>>>();
        report.config_json = doc.at("config").dump(2);
    } catch (const json::exception& e) {
        throw DataError("bad report file: " + std::string(e.what()));
    }
    return report;
}

std::string report_table(const EvalReport& report) {
    std::size_t width = 9;
    for (const ClassStats& s : report.per_class) width = std::max(width, s.label.size() + 2);

    std::ostringstream out;
    out << "Confusion matrix (rows = true class, columns = predicted)\n";
    out << std::left << std::setw(static_cast<int>(width)) << "";
    for (const ClassStats& s : report.per_class)
        out << std::setw(static_cast<int>(width)) << s.label;
    out << "\n";
    for (std::size_t r = 0; r < report.confusion.size(); ++r) {
        out << std::setw(static_cast<int>(width)) << report.per_class[r].label;
        for (int v : report.confusion[r]) out << std::setw(static_cast<int>(width)) << v;
        out << "\n";
    }
    out << "\n";
    out << "accuracy: " << std::fixed << std::setprecision(4) << report.accuracy << "\n\n";
    out << std::setw(static_cast<int>(width)) << "class" << std::setw(12) << "precision"
        << std::setw(12) << "recall" << "\n";
    for (const ClassStats& s : report.per_class) {
        out << std::setw(static_cast<int>(width)) << s.label << std::setw(12) << s.precision
            << std::setw(12) << s.recall << "\n";
    }
    return out.str();
}

ExtractResult run_extract(const ManifestEntry& entry, const PipelineConfig& cfg,
                          const fs::path& out_dir) {
    validate_config(cfg);
    const FrameSequence rgb = load_sequence(entry.rgb_dir, Modality::RGB);
    const FrameSequence depth = load_sequence(entry.depth_dir, Modality::DEPTH);
    if (rgb.frame_count() != depth.frame_count())
        throw DataError("modality length mismatch for video " + entry.video_id);

    ExtractResult result;
    if (cfg.method == PoolingMethod::APPROX) {
        result.rgb_raw = pool_sequence_approx(rgb, cfg.input);
        result.depth_raw = pool_sequence_approx(depth, cfg.input);
    } else {
        result.rgb_raw = pool_sequence_exact(rgb, cfg.input, cfg.lambda, cfg.solver);
        result.depth_raw = pool_sequence_exact(depth, cfg.input, cfg.lambda, cfg.solver);
    }
    result.rgb_norm = normalize_image(result.rgb_raw);
    result.depth_norm = normalize_image(result.depth_raw);

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_dimg(out_dir / (entry.video_id + "_rgb.dimg"), result.rgb_raw);
        write_dimg(out_dir / (entry.video_id + "_depth.dimg"), result.depth_raw);
        write_preview_png(out_dir / (entry.video_id + "_rgb.png"), result.rgb_norm);
        write_preview_png(out_dir / (entry.video_id + "_depth.png"), result.depth_norm);
    }
    return result;
}

VideoFeature extract_feature(const ManifestEntry& entry, const PipelineConfig& cfg,
                             const fs::path& dimg_dir) {
    const ExtractResult ex = run_extract(entry, cfg, dimg_dir);
    const PruneResult depth_res = prune_full(ex.depth_norm, cfg.tau_b, cfg.delta, cfg.epsilon);

    DynamicImage rgb_pruned;
    if (cfg.mask_rgb_with_depth) {
        if (depth_res.components.components.empty()) {
            rgb_pruned = ex.rgb_norm;  // no depth evidence, leave RGB untouched
        } else {
            if (ex.rgb_norm.height != depth_res.components.height ||
                ex.rgb_norm.width != depth_res.components.width)
                throw DataError("mask_rgb_with_depth needs equal RGB and depth frame sizes");
            const BinaryMask kept = depth_res.kept_mask();
            rgb_pruned = ex.rgb_norm;
            for (int y = 0; y < rgb_pruned.height; ++y)
                for (int x = 0; x < rgb_pruned.width; ++x)
                    if (!kept.at(y, x))
                        for (int c = 0; c < rgb_pruned.channels; ++c) rgb_pruned.at(y, x, c) = 0.0;
        }
    } else {
        rgb_pruned = prune(ex.rgb_norm, cfg.tau_b, cfg.delta, cfg.epsilon);
    }

    const Embedding rgb_emb = embed(rgb_pruned, cfg.embed_h, cfg.embed_w);
    const Embedding depth_emb = embed(depth_res.image, cfg.embed_h, cfg.embed_w);

    VideoFeature feature;
    feature.video_id = entry.video_id;
    feature.label = entry.label;
    feature.fused = cfg.rgb_only ? rgb_emb.values : fuse(rgb_emb, depth_emb);
    return feature;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const DatasetManifest& manifest, double split, std::uint64_t seed) {
    if (!(split > 0.0 && split < 1.0)) throw DataError("split must lie in (0,1)");
    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i)
        by_label[manifest.entries[i].label].push_back(i);

    std::vector<std::size_t> train_idx, test_idx;
    std::uint64_t class_tag = 0;
    for (auto& [label, indices] : by_label) {
        if (indices.size() < 2)
            throw DataError("class with < 2 videos: " + label);
        Rng rng = Rng(seed).fork(0x53504c49u + class_tag++);
        rng.shuffle(indices);
        const std::size_t count = indices.size();
        const std::size_t want =
            static_cast<std::size_t>(std::lround(split * static_cast<double>(count)));
        const std::size_t n_train = std::clamp<std::size_t>(want, 1, count - 1);
        for (std::size_t i = 0; i < count; ++i)
            (i < n_train ? train_idx : test_idx).push_back(indices[i]);
    }
    return {std::move(train_idx), std::move(test_idx)};
}

EvalReport run_pipeline(const DatasetManifest& manifest, const PipelineConfig& cfg,
                        const fs::path& work_dir) {
    validate_config(cfg);
    if (manifest.entries.empty()) throw DataError("run_pipeline: empty manifest");

    std::vector<std::string> class_names;
    {
        std::set<std::string> labels;
        for (const ManifestEntry& e : manifest.entries) labels.insert(e.label);
        class_names.assign(labels.begin(), labels.end());
    }
    std::map<std::string, int> class_index;
    for (std::size_t i = 0; i < class_names.size(); ++i)
        class_index[class_names[i]] = static_cast<int>(i);
    const int K = static_cast<int>(class_names.size());

    const auto [train_idx, test_idx] = stratified_split(manifest, cfg.split, cfg.seed);

    const fs::path dimg_dir = work_dir.empty() ? fs::path() : work_dir / "dimg";
    std::vector<VideoFeature> features(manifest.entries.size());
    for (std::size_t i = 0; i < manifest.entries.size(); ++i)
        features[i] = extract_feature(manifest.entries[i], cfg, dimg_dir);

    std::vector<Sample> train_set;
    train_set.reserve(train_idx.size());
    for (std::size_t i : train_idx)
        train_set.push_back({features[i].fused, class_index.at(features[i].label)});

    TrainConfig train_cfg = cfg.train;
    train_cfg.seed = Rng::mix(cfg.seed, cfg.train.seed);  // one pipeline seed drives the run
    const TrainResult trained = train(train_set, train_cfg);

    EvalReport report;
    report.confusion.assign(K, std::vector<int>(K, 0));
    int correct = 0;
    for (std::size_t i : test_idx) {
        const int truth = class_index.at(features[i].label);
        const int pred = predict(trained.params, features[i].fused);
        report.confusion[truth][pred] += 1;
        if (pred == truth) ++correct;
    }
    report.accuracy = test_idx.empty() ? 0.0 : static_cast<double>(correct) / test_idx.size();

    for (int k = 0; k < K; ++k) {
        ClassStats stats;
        stats.label = class_names[k];
        int row_sum = 0, col_sum = 0;
        for (int j = 0; j < K; ++j) {
            row_sum += report.confusion[k][j];
            col_sum += report.confusion[j][k];
        }
        stats.recall = row_sum > 0 ? static_cast<double>(report.confusion[k][k]) / row_sum : 0.0;
        stats.precision =
            col_sum > 0 ? static_cast<double>(report.confusion[k][k]) / col_sum : 0.0;
        report.per_class.push_back(std::move(stats));
    }
    report.config_json = pipeline_config_json(cfg);

    if (!work_dir.empty()) {
        fs::create_directories(work_dir);
        std::ofstream(work_dir / "report.json") << report_json(report) << "\n";
        std::ofstream(work_dir / "confusion.txt") << report_table(report);
        save_model(work_dir / "model.json", trained.params, train_cfg);
    }
    return report;
}

}  // namespace dynimg
