#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>

#include "dynimg/frame.hpp"
#include "dynimg/manifest.hpp"
#include "dynimg/rng.hpp"

namespace dynimg {

// Deterministic motion patterns for synthetic videos. One pattern per class;
// STATIC (index 7) is a debug pattern whose frames are all identical.
enum class MotionPattern {
    SWEEP_RIGHT,
    SWEEP_LEFT,
    SWEEP_DOWN,
    DIAGONAL,
    OSCILLATE,
    APPROACH,  // fixed position, depth intensity ramps up
    RECEDE,    // fixed position, depth intensity ramps down
    STATIC,
};

constexpr int kPatternCount = 8;

MotionPattern pattern_for_class(int class_index);
std::string pattern_name(MotionPattern pattern);

struct SynthConfig {
    int num_classes = 7;
    int videos_per_class = 4;
    int height = 32;
    int width = 32;
    int frames = 12;
    int noise_min = 3;  // noise blobs per video
    int noise_max = 6;
    bool distractor = true;  // add a small secondary mover
    std::uint64_t seed = 0;
};

// One synthetic RGB-D video: a bright rectangle following the pattern, dim
// jittering noise blobs, and optionally a small counter-moving distractor.
// Depth encodes mover proximity as intensity. Pixel values are quantized to
// the 8-bit (RGB) and 16-bit (depth) grids so disk round-trips are exact.
std::pair<FrameSequence, FrameSequence> synth_video(MotionPattern pattern, const SynthConfig& cfg,
                                                    Rng& rng);

// Writes frames and manifest.json under out_dir; fully reproducible from
// cfg.seed. Returns the manifest. APPROACH vs RECEDE share identical RGB
// behavior and differ only in depth, so depth is discriminative for them.
DatasetManifest synth_generate(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace dynimg
