#pragma once

#include <cstddef>
#include <vector>

#include "dynimg/error.hpp"

namespace dynimg {

enum class Modality { RGB, DEPTH };

// RGB sequences carry 3 channels, depth sequences exactly 1.
inline int channel_count(Modality m) { return m == Modality::RGB ? 3 : 1; }

inline const char* modality_name(Modality m) { return m == Modality::RGB ? "rgb" : "depth"; }

// One video frame. Pixel values are normalized to [0,1] at load time
// (8-bit / 255, 16-bit / 65535) and stored row-major, channel-interleaved.
struct Frame {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    double at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::size_t value_count() const { return data.size(); }
};

inline Frame make_frame(int height, int width, int channels, double fill = 0.0) {
    if (height < 1 || width < 1 || channels < 1)
        throw DataError("make_frame: dimensions must be positive");
    Frame f;
    f.height = height;
    f.width = width;
    f.channels = channels;
    f.data.assign(static_cast<std::size_t>(height) * width * channels, fill);
    return f;
}

void validate_frame(const Frame& f);

// Ordered frames of one video, one modality. All frames share one shape.
struct FrameSequence {
    Modality modality = Modality::RGB;
    std::vector<Frame> frames;

    int frame_count() const { return static_cast<int>(frames.size()); }
    int height() const { return frames.empty() ? 0 : frames.front().height; }
    int width() const { return frames.empty() ? 0 : frames.front().width; }
    int channels() const { return frames.empty() ? 0 : frames.front().channels; }
};

void validate_sequence(const FrameSequence& seq);

}  // namespace dynimg
