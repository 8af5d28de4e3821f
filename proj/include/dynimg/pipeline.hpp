#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dynimg/classifier.hpp"
#include "dynimg/gestalt.hpp"
#include "dynimg/manifest.hpp"
#include "dynimg/rank_pooling.hpp"

namespace dynimg {

enum class PoolingMethod { APPROX, EXACT };

struct PipelineConfig {
    PoolingMethod method = PoolingMethod::APPROX;
    PoolingInput input = PoolingInput::RAW_FRAMES;
    double lambda = 1.0;
    SolverConfig solver;
    double tau_b = 0.05;
    int delta = 100;
    double epsilon = 1.0;
    int embed_h = 32;
    int embed_w = 32;
    bool mask_rgb_with_depth = false;  // reuse the depth kept-mask on the RGB image
    bool rgb_only = false;             // ablation: drop the depth embedding
    double split = 0.7;
    std::uint64_t seed = 0;
    TrainConfig train;
};

// JSON round-trip for configs; unknown keys are rejected.
std::string pipeline_config_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const std::string& text, PipelineConfig base = {});

struct ClassStats {
    std::string label;
    double precision = 0.0;
    double recall = 0.0;
};

struct EvalReport {
    double accuracy = 0.0;
    std::vector<ClassStats> per_class;              // defines class order
    std::vector<std::vector<int>> confusion;        // rows = true, cols = predicted
    std::string config_json;                        // resolved config echo
};

std::string report_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);
// Confusion matrix as an aligned text table, plus accuracy and per-class rows.
std::string report_table(const EvalReport& report);

struct ExtractResult {
    DynamicImage rgb_raw;
    DynamicImage depth_raw;
    DynamicImage rgb_norm;
    DynamicImage depth_norm;
};

// Pools both modalities of one video. When out_dir is nonempty, persists
// <id>_rgb.dimg/.png and <id>_depth.dimg/.png (raw .dimg, normalized preview).
ExtractResult run_extract(const ManifestEntry& entry, const PipelineConfig& cfg,
                          const std::filesystem::path& out_dir = {});

// Per-video fused feature after extract + prune + embed.
struct VideoFeature {
    std::string video_id;
    std::string label;
    std::vector<double> fused;
};

VideoFeature extract_feature(const ManifestEntry& entry, const PipelineConfig& cfg,
                             const std::filesystem::path& dimg_dir = {});

// Full run: seeded stratified 70/30 split per class, train on the train
// split, evaluate on the test split. Writes report.json, confusion.txt,
// model.json, and per-video .dimg files under work_dir (if nonempty).
EvalReport run_pipeline(const DatasetManifest& manifest, const PipelineConfig& cfg,
                        const std::filesystem::path& work_dir = {});

// Deterministic per-class split: round(split * count) training videos,
// clamped so both sides stay nonempty. Returns train/test manifest indices.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const DatasetManifest& manifest, double split, std::uint64_t seed);

}  // namespace dynimg
