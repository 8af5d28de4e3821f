#include "dynimg/frame.hpp"

#include <cmath>
#include <string>

namespace dynimg {

void validate_frame(const Frame& f) {
    if (f.height < 1 || f.width < 1 || f.channels < 1)
        throw DataError("frame: dimensions must be positive");
    const std::size_t expected = static_cast<std::size_t>(f.height) * f.width * f.channels;
    if (f.data.size() != expected)
        throw DataError("frame: data length " + std::to_string(f.data.size()) +
                        " does not match height*width*channels " + std::to_string(expected));
    for (double v : f.data) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw DataError("frame: values must lie in [0,1]");
    }
}

void validate_sequence(const FrameSequence& seq) {
    if (seq.frames.empty()) throw DataError("sequence: needs at least one frame");
    const Frame& first = seq.frames.front();
    if (first.channels != channel_count(seq.modality))
        throw DataError("sequence: channel count does not match modality");
    for (const Frame& f : seq.frames) {
        validate_frame(f);
        if (f.height != first.height || f.width != first.width || f.channels != first.channels)
            throw DataError("sequence: inconsistent dimensions");
    }
}

}  // namespace dynimg
