#include "dynimg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dynimg/error.hpp"
#include "dynimg/image_io.hpp"

namespace fs = std::filesystem;

namespace dynimg {
namespace {

void check_config(const SynthConfig& cfg) {
    if (cfg.num_classes < 1 || cfg.num_classes > kPatternCount)
        throw DataError("synth: num_classes must be in [1," + std::to_string(kPatternCount) + "]");
    if (cfg.videos_per_class < 1 || cfg.height < 8 || cfg.width < 8 || cfg.frames < 1)
        throw DataError("synth: invalid dimensions");
    if (cfg.noise_min < 0 || cfg.noise_max < cfg.noise_min)
        throw DataError("synth: invalid noise blob range");
}

void draw_rect(Frame& f, int y0, int x0, int h, int w, const double* color) {
    const int y1 = std::min(f.height, y0 + h);
    const int x1 = std::min(f.width, x0 + w);
    for (int y = std::max(0, y0); y < y1; ++y)
        for (int x = std::max(0, x0); x < x1; ++x)
            for (int c = 0; c < f.channels; ++c) f.at(y, x, c) = color[c];
}

void quantize_frame(Frame& f, double levels) {
    for (double& v : f.data) v = std::round(std::clamp(v, 0.0, 1.0) * levels) / levels;
}

struct MoverState {
    int x = 0;
    int y = 0;
    double depth = 0.75;  // proximity encoded as intensity
};

// Mover position and depth at frame t (0-based) of T frames.
MoverState mover_at(MotionPattern pattern, int t, int T, int span_x, int span_y, int x0, int y0,
                    double depth_base) {
    MoverState s;
    s.x = x0;
    s.y = y0;
    s.depth = depth_base;
    const double u = T > 1 ? static_cast<double>(t) / (T - 1) : 0.0;
    switch (pattern) {
        case MotionPattern::SWEEP_RIGHT:
            s.x = x0 + static_cast<int>(std::lround(u * span_x));
            break;
        case MotionPattern::SWEEP_LEFT:
            s.x = x0 + span_x - static_cast<int>(std::lround(u * span_x));
            break;
        case MotionPattern::SWEEP_DOWN:
            s.y = y0 + static_cast<int>(std::lround(u * span_y));
            break;
        case MotionPattern::DIAGONAL:
            s.x = x0 + static_cast<int>(std::lround(u * span_x));
            s.y = y0 + static_cast<int>(std::lround(u * span_y));
            break;
        case MotionPattern::OSCILLATE: {
            // asymmetric out-and-back: forward two thirds, back one third
            const double turn = 2.0 / 3.0;
            const double phase = u < turn ? u / turn : 1.0 - 0.5 * (u - turn) / (1.0 - turn);
            s.x = x0 + static_cast<int>(std::lround(phase * span_x));
            break;
        }
        case MotionPattern::APPROACH:
            s.depth = 0.30 + 0.65 * u;
            break;
        case MotionPattern::RECEDE:
            s.depth = 0.95 - 0.65 * u;
            break;
        case MotionPattern::STATIC:
            break;
    }
    return s;
}

struct Blob {
    int x = 0;
    int y = 0;
    int size = 1;
    double rgb = 0.2;
    double depth = 0.15;
};

}  // namespace

MotionPattern pattern_for_class(int class_index) {
    if (class_index < 0 || class_index >= kPatternCount)
        throw DataError("pattern_for_class: index out of range");
    return static_cast<MotionPattern>(class_index);
}

std::string pattern_name(MotionPattern pattern) {
    switch (pattern) {
        case MotionPattern::SWEEP_RIGHT: return "sweep_right";
        case MotionPattern::SWEEP_LEFT: return "sweep_left";
        case MotionPattern::SWEEP_DOWN: return "sweep_down";
        case MotionPattern::DIAGONAL: return "diagonal";
        case MotionPattern::OSCILLATE: return "oscillate";
        case MotionPattern::APPROACH: return "approach";
        case MotionPattern::RECEDE: return "recede";
        case MotionPattern::STATIC: return "static";
    }
    throw DataError("pattern_name: unknown pattern");
}

std::pair<FrameSequence, FrameSequence> synth_video(MotionPattern pattern, const SynthConfig& cfg,
                                                    Rng& rng) {
    check_config(cfg);
    const int H = cfg.height, W = cfg.width, T = cfg.frames;

    // per-video geometry
    const int mover_h = std::max(4, H / 4) + rng.uniform_int(-1, 1);
    const int mover_w = std::max(4, W / 4) + rng.uniform_int(-1, 1);
    const int span_x = std::max(1, W - mover_w - 2);
    const int span_y = std::max(1, H - mover_h - 2);
    int x0 = 1, y0 = 1;
    const bool moves_x = pattern == MotionPattern::SWEEP_RIGHT ||
                         pattern == MotionPattern::SWEEP_LEFT ||
                         pattern == MotionPattern::OSCILLATE || pattern == MotionPattern::DIAGONAL;
    const bool moves_y =
        pattern == MotionPattern::SWEEP_DOWN || pattern == MotionPattern::DIAGONAL;
    if (!moves_y) y0 = std::clamp((H - mover_h) / 2 + rng.uniform_int(-2, 2), 0, H - mover_h);
    if (!moves_x) x0 = std::clamp((W - mover_w) / 2 + rng.uniform_int(-2, 2), 0, W - mover_w);

    double mover_rgb[3];
    for (int c = 0; c < 3; ++c) mover_rgb[c] = 0.92 - 0.04 * c + rng.uniform(-0.04, 0.04);
    const double mover_depth_base = 0.75 + rng.uniform(-0.05, 0.05);

    const double bg_rgb[3] = {0.08, 0.08, 0.08};
    const double bg_depth[1] = {0.10};

    const int blob_count = rng.uniform_int(cfg.noise_min, cfg.noise_max);
    std::vector<Blob> blobs(blob_count);
    for (Blob& b : blobs) {
        b.size = rng.uniform_int(1, 2);
        b.x = rng.uniform_int(0, W - b.size);
        b.y = rng.uniform_int(0, H - b.size);
        b.rgb = rng.uniform(0.16, 0.30);
        b.depth = rng.uniform(0.13, 0.22);
    }

    const bool distractor = cfg.distractor;
    const int distractor_size = 3;
    const bool distractor_right = rng.uniform_int(0, 1) == 1;
    const int distractor_y = rng.uniform_int(0, std::max(0, H - distractor_size));
    const int distractor_span = std::max(1, W - distractor_size - 1);

    FrameSequence rgb_seq, depth_seq;
    rgb_seq.modality = Modality::RGB;
    depth_seq.modality = Modality::DEPTH;

    for (int t = 0; t < T; ++t) {
        Frame rgb = make_frame(H, W, 3);
        Frame depth = make_frame(H, W, 1);
        draw_rect(rgb, 0, 0, H, W, bg_rgb);
        draw_rect(depth, 0, 0, H, W, bg_depth);

        const int frame_for_motion = pattern == MotionPattern::STATIC ? 0 : t;
        for (Blob& b : blobs) {
            if (pattern != MotionPattern::STATIC && t > 0) {
                b.x = std::clamp(b.x + rng.uniform_int(-1, 1), 0, W - b.size);
                b.y = std::clamp(b.y + rng.uniform_int(-1, 1), 0, H - b.size);
            }
            const double blob_rgb[3] = {b.rgb, b.rgb, b.rgb};
            const double blob_depth[1] = {b.depth};
            draw_rect(rgb, b.y, b.x, b.size, b.size, blob_rgb);
            draw_rect(depth, b.y, b.x, b.size, b.size, blob_depth);
        }

        if (distractor) {
            const double u =
                T > 1 ? static_cast<double>(frame_for_motion) / (T - 1) : 0.0;
            const int dx = static_cast<int>(std::lround((distractor_right ? u : 1.0 - u) *
                                                        distractor_span));
            const double d_rgb[3] = {0.45, 0.45, 0.45};
            const double d_depth[1] = {0.35};
            draw_rect(rgb, distractor_y, dx, distractor_size, distractor_size, d_rgb);
            draw_rect(depth, distractor_y, dx, distractor_size, distractor_size, d_depth);
        }

        const MoverState m = mover_at(pattern, frame_for_motion, T, span_x, span_y, x0, y0,
                                      mover_depth_base);
        draw_rect(rgb, m.y, m.x, mover_h, mover_w, mover_rgb);
        const double m_depth[1] = {m.depth};
        draw_rect(depth, m.y, m.x, mover_h, mover_w, m_depth);

        quantize_frame(rgb, 255.0);
        quantize_frame(depth, 65535.0);
        rgb_seq.frames.push_back(std::move(rgb));
        depth_seq.frames.push_back(std::move(depth));
    }
    return {std::move(rgb_seq), std::move(depth_seq)};
}

DatasetManifest synth_generate(const SynthConfig& cfg, const fs::path& out_dir) {
    check_config(cfg);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir))
        throw DataError("synth: cannot create output directory: " + out_dir.string());

    DatasetManifest manifest;
    char suffix[16];
    for (int cls = 0; cls < cfg.num_classes; ++cls) {
        const MotionPattern pattern = pattern_for_class(cls);
        const std::string name = pattern_name(pattern);
        for (int v = 0; v < cfg.videos_per_class; ++v) {
            Rng rng = Rng(cfg.seed).fork(static_cast<std::uint64_t>(cls) * 1000003u + v);
            auto [rgb, depth] = synth_video(pattern, cfg, rng);

            std::snprintf(suffix, sizeof(suffix), "_%03d", v);
            ManifestEntry entry;
            entry.video_id = name + suffix;
            entry.label = name;
            entry.rgb_dir = out_dir / entry.video_id / "rgb";
            entry.depth_dir = out_dir / entry.video_id / "depth";
            save_sequence(entry.rgb_dir, rgb);
            save_sequence(entry.depth_dir, depth);
            manifest.entries.push_back(std::move(entry));
        }
    }
    save_manifest(out_dir / "manifest.json", manifest);
    return manifest;
}

}  // namespace dynimg
