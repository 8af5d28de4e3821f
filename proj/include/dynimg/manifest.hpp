#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace dynimg {

struct ManifestEntry {
    std::string video_id;
    std::string label;
    std::filesystem::path rgb_dir;
    std::filesystem::path depth_dir;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
};

// Parses a JSON manifest: an array of {video_id, label, rgb_dir, depth_dir}.
// Relative directories are resolved against the manifest's parent directory.
// Validates eagerly: unique ids, nonempty frame directories, and equal RGB
// and depth frame counts per entry.
DatasetManifest load_manifest(const std::filesystem::path& path);

// Writes entries with directories relative to the manifest location when possible.
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

}  // namespace dynimg
