#include "dynimg/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <string>

namespace fs = std::filesystem;

namespace dynimg {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
    FilePtr fp(std::fopen(path.string().c_str(), mode));
    if (!fp) throw DataError("cannot open file: " + path.string());
    return fp;
}

int quantize8(double v) {
    return std::clamp(static_cast<int>(std::lround(v * 255.0)), 0, 255);
}

int quantize16(double v) {
    return std::clamp(static_cast<int>(std::lround(v * 65535.0)), 0, 65535);
}

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    }
};

Frame read_png(const fs::path& path, Modality modality) {
    FilePtr fp = open_file(path, "rb");
    PngReader r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!r.png) throw DataError("libpng init failed");
    r.info = png_create_info_struct(r.png);
    if (!r.info) throw DataError("libpng init failed");
    if (setjmp(png_jmpbuf(r.png))) throw DataError("malformed PNG: " + path.string());

    png_init_io(r.png, fp.get());
    png_read_info(r.png, r.info);

    const int width = static_cast<int>(png_get_image_width(r.png, r.info));
    const int height = static_cast<int>(png_get_image_height(r.png, r.info));
    const int bit_depth = png_get_bit_depth(r.png, r.info);
    const int color_type = png_get_color_type(r.png, r.info);

    if (modality == Modality::RGB) {
        if (color_type != PNG_COLOR_TYPE_RGB || bit_depth != 8)
            throw DataError("expected 8-bit 3-channel RGB PNG: " + path.string());
    } else {
        if (color_type != PNG_COLOR_TYPE_GRAY || bit_depth != 16)
            throw DataError("expected 16-bit grayscale PNG: " + path.string());
    }

    const int channels = channel_count(modality);
    const std::size_t row_bytes = png_get_rowbytes(r.png, r.info);
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(height) * row_bytes);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = raw.data() + static_cast<std::size_t>(y) * row_bytes;
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);

    Frame frame = make_frame(height, width, channels);
    if (modality == Modality::RGB) {
        for (int y = 0; y < height; ++y) {
            const std::uint8_t* row = rows[y];
            for (int x = 0; x < width; ++x)
                for (int c = 0; c < 3; ++c) frame.at(y, x, c) = row[3 * x + c] / 255.0;
        }
    } else {
        // 16-bit PNG samples are big-endian on the wire
        for (int y = 0; y < height; ++y) {
            const std::uint8_t* row = rows[y];
            for (int x = 0; x < width; ++x) {
                const unsigned v = (static_cast<unsigned>(row[2 * x]) << 8) | row[2 * x + 1];
                frame.at(y, x, 0) = v / 65535.0;
            }
        }
    }
    return frame;
}

void skip_pgm_whitespace(std::istream& in) {
    for (;;) {
        const int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            in.get();
        } else {
            return;
        }
    }
}

Frame read_pgm16(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::string magic(2, '\0');
    in.read(magic.data(), 2);
    if (magic != "P5") throw DataError("expected binary PGM (P5): " + path.string());
    long width = 0, height = 0, maxval = 0;
    skip_pgm_whitespace(in);
    in >> width;
    skip_pgm_whitespace(in);
    in >> height;
    skip_pgm_whitespace(in);
    in >> maxval;
    if (!in || width < 1 || height < 1) throw DataError("malformed PGM header: " + path.string());
    if (maxval != 65535) throw DataError("expected 16-bit PGM (maxval 65535): " + path.string());
    in.get();  // single whitespace after maxval
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(width) * height * 2);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw DataError("truncated PGM data: " + path.string());

    Frame frame = make_frame(static_cast<int>(height), static_cast<int>(width), 1);
    for (std::size_t i = 0; i < frame.data.size(); ++i) {
        const unsigned v = (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
        frame.data[i] = v / 65535.0;
    }
    return frame;
}

// frame_%06d.png / .pgm -> index, or -1 when the name does not match.
int parse_frame_index(const std::string& name) {
    const std::string prefix = "frame_";
    if (name.size() != prefix.size() + 6 + 4) return -1;
    if (name.compare(0, prefix.size(), prefix) != 0) return -1;
    const std::string ext = name.substr(prefix.size() + 6);
    if (ext != ".png" && ext != ".pgm") return -1;
    int index = 0;
    for (std::size_t i = prefix.size(); i < prefix.size() + 6; ++i) {
        const char c = name[i];
        if (c < '0' || c > '9') return -1;
        index = index * 10 + (c - '0');
    }
    return index;
}

}  // namespace

Frame read_frame_file(const fs::path& path, Modality modality) {
    const std::string ext = path.extension().string();
    if (ext == ".pgm") {
        if (modality != Modality::DEPTH)
            throw DataError("PGM frames are depth-only: " + path.string());
        return read_pgm16(path);
    }
    if (ext == ".png") return read_png(path, modality);
    throw DataError("unsupported frame file type: " + path.string());
}

void write_rgb8_png(const fs::path& path, const Frame& frame) {
    validate_frame(frame);
    if (frame.channels != 3) throw DataError("write_rgb8_png: frame must have 3 channels");
    FilePtr fp = open_file(path, "wb");
    PngWriter w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!w.png) throw DataError("libpng init failed");
    w.info = png_create_info_struct(w.png);
    if (!w.info) throw DataError("libpng init failed");
    if (setjmp(png_jmpbuf(w.png))) throw DataError("PNG write failed: " + path.string());

    png_init_io(w.png, fp.get());
    png_set_IHDR(w.png, w.info, frame.width, frame.height, 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);

    std::vector<std::uint8_t> row(static_cast<std::size_t>(frame.width) * 3);
    for (int y = 0; y < frame.height; ++y) {
        for (int x = 0; x < frame.width; ++x)
            for (int c = 0; c < 3; ++c)
                row[3 * x + c] = static_cast<std::uint8_t>(quantize8(frame.at(y, x, c)));
        png_write_row(w.png, row.data());
    }
    png_write_end(w.png, nullptr);
}

void write_gray16_png(const fs::path& path, const Frame& frame) {
    validate_frame(frame);
    if (frame.channels != 1) throw DataError("write_gray16_png: frame must have 1 channel");
    FilePtr fp = open_file(path, "wb");
    PngWriter w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!w.png) throw DataError("libpng init failed");
    w.info = png_create_info_struct(w.png);
    if (!w.info) throw DataError("libpng init failed");
    if (setjmp(png_jmpbuf(w.png))) throw DataError("PNG write failed: " + path.string());

    png_init_io(w.png, fp.get());
    png_set_IHDR(w.png, w.info, frame.width, frame.height, 16, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);

    std::vector<std::uint8_t> row(static_cast<std::size_t>(frame.width) * 2);
    for (int y = 0; y < frame.height; ++y) {
        for (int x = 0; x < frame.width; ++x) {
            const int v = quantize16(frame.at(y, x, 0));
            row[2 * x] = static_cast<std::uint8_t>(v >> 8);
            row[2 * x + 1] = static_cast<std::uint8_t>(v & 0xff);
        }
        png_write_row(w.png, row.data());
    }
    png_write_end(w.png, nullptr);
}

void write_gray16_pgm(const fs::path& path, const Frame& frame) {
    validate_frame(frame);
    if (frame.channels != 1) throw DataError("write_gray16_pgm: frame must have 1 channel");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open file: " + path.string());
    out << "P5\n" << frame.width << " " << frame.height << "\n65535\n";
    std::vector<std::uint8_t> raw(frame.data.size() * 2);
    for (std::size_t i = 0; i < frame.data.size(); ++i) {
        const int v = quantize16(frame.data[i]);
        raw[2 * i] = static_cast<std::uint8_t>(v >> 8);
        raw[2 * i + 1] = static_cast<std::uint8_t>(v & 0xff);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw DataError("PGM write failed: " + path.string());
}

std::vector<fs::path> list_frame_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("missing directory: " + dir.string());
    std::map<int, fs::path> by_index;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const int index = parse_frame_index(entry.path().filename().string());
        if (index < 0) continue;
        auto [it, inserted] = by_index.emplace(index, entry.path());
        if (!inserted)
            throw DataError("duplicate frame index " + std::to_string(index) + " in " +
                            dir.string());
    }
    std::vector<fs::path> files;
    files.reserve(by_index.size());
    for (auto& [index, path] : by_index) files.push_back(std::move(path));
    return files;
}

FrameSequence load_sequence(const fs::path& dir, Modality modality) {
    const std::vector<fs::path> files = list_frame_files(dir);
    if (files.empty()) throw DataError("zero frames in directory: " + dir.string());
    FrameSequence seq;
    seq.modality = modality;
    seq.frames.reserve(files.size());
    for (const fs::path& file : files) {
        Frame frame = read_frame_file(file, modality);
        if (!seq.frames.empty()) {
            const Frame& first = seq.frames.front();
            if (frame.height != first.height || frame.width != first.width)
                throw DataError("inconsistent dimensions in " + dir.string());
        }
        seq.frames.push_back(std::move(frame));
    }
    return seq;
}

void save_sequence(const fs::path& dir, const FrameSequence& seq) {
    validate_sequence(seq);
    fs::create_directories(dir);
    char name[32];
    for (int i = 0; i < seq.frame_count(); ++i) {
        if (seq.modality == Modality::RGB) {
            std::snprintf(name, sizeof(name), "frame_%06d.png", i);
            write_rgb8_png(dir / name, seq.frames[i]);
        } else {
            std::snprintf(name, sizeof(name), "frame_%06d.pgm", i);
            write_gray16_pgm(dir / name, seq.frames[i]);
        }
    }
}

}  // namespace dynimg
