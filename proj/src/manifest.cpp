#include "dynimg/manifest.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "dynimg/error.hpp"
#include "dynimg/image_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dynimg {

DatasetManifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("malformed manifest JSON: " + std::string(e.what()));
    }
    if (!doc.is_array()) throw DataError("manifest must be a JSON array");

    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    DatasetManifest manifest;
    std::set<std::string> ids;
    for (const json& item : doc) {
        if (!item.is_object()) throw DataError("manifest entries must be objects");
        for (const char* key : {"video_id", "label", "rgb_dir", "depth_dir"})
            if (!item.contains(key))
                throw DataError(std::string("manifest entry missing key: ") + key);
        ManifestEntry entry;
        entry.video_id = item.at("video_id").get<std::string>();
        entry.label = item.at("label").get<std::string>();
        fs::path rgb = item.at("rgb_dir").get<std::string>();
        fs::path depth = item.at("depth_dir").get<std::string>();
        entry.rgb_dir = rgb.is_absolute() ? rgb : base / rgb;
        entry.depth_dir = depth.is_absolute() ? depth : base / depth;

        if (!ids.insert(entry.video_id).second)
            throw DataError("duplicate id in manifest: " + entry.video_id);
        const std::size_t rgb_count = list_frame_files(entry.rgb_dir).size();
        const std::size_t depth_count = list_frame_files(entry.depth_dir).size();
        if (rgb_count == 0 || depth_count == 0)
            throw DataError("empty frame directory for video: " + entry.video_id);
        if (rgb_count != depth_count)
            throw DataError("modality length mismatch for video " + entry.video_id + ": rgb " +
                            std::to_string(rgb_count) + " vs depth " +
                            std::to_string(depth_count));
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

void save_manifest(const fs::path& path, const DatasetManifest& manifest) {
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    json doc = json::array();
    for (const ManifestEntry& entry : manifest.entries) {
        const fs::path rgb = entry.rgb_dir.lexically_proximate(base);
        const fs::path depth = entry.depth_dir.lexically_proximate(base);
        doc.push_back({{"video_id", entry.video_id},
                       {"label", entry.label},
                       {"rgb_dir", rgb.generic_string()},
                       {"depth_dir", depth.generic_string()}});
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write manifest: " + path.string());
    out << doc.dump(2) << "\n";
}

}  // namespace dynimg
