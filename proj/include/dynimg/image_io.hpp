#pragma once

#include <filesystem>
#include <vector>

#include "dynimg/frame.hpp"

namespace dynimg {

// Frame files on disk: 8-bit 3-channel PNG for RGB, 16-bit grayscale PNG or
// PGM (P5, maxval 65535) for depth. Filenames follow frame_%06d.<ext>.

// Reads one frame file, validating format against the modality.
Frame read_frame_file(const std::filesystem::path& path, Modality modality);

void write_rgb8_png(const std::filesystem::path& path, const Frame& frame);
void write_gray16_png(const std::filesystem::path& path, const Frame& frame);
void write_gray16_pgm(const std::filesystem::path& path, const Frame& frame);

// Frame files in `dir` matching frame_%06d.png/.pgm, sorted by index.
std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir);

// Loads a whole directory as one sequence. Frames are sorted ascending by
// filename index; dimensions must be uniform; values land in [0,1].
FrameSequence load_sequence(const std::filesystem::path& dir, Modality modality);

// Writes frame_%06d.png (RGB) or frame_%06d.pgm (depth) starting at index 0.
void save_sequence(const std::filesystem::path& dir, const FrameSequence& seq);

}  // namespace dynimg
