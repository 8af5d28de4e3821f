#include "dynimg/rank_pooling.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "dynimg/image_io.hpp"

namespace fs = std::filesystem;

namespace dynimg {
namespace {

static_assert(std::endian::native == std::endian::little,
              "dimg serialization assumes a little-endian host");

void check_same_length(const std::vector<FeatureVector>& vectors) {
    if (vectors.empty()) return;
    const std::size_t dim = vectors.front().size();
    for (const FeatureVector& v : vectors)
        if (v.size() != dim) throw DataError("feature vectors must share one length");
}

double squared_norm(const FeatureVector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

}  // namespace

PoolingProblem make_problem(const std::vector<FeatureVector>& features, PoolingInput mode,
                            double lambda) {
    if (features.empty()) throw DataError("pooling problem needs at least one frame");
    if (!(lambda > 0.0)) throw DataError("lambda must be positive");
    check_same_length(features);
    PoolingProblem problem;
    problem.vectors = mode == PoolingInput::TIME_AVERAGED ? running_average(features) : features;
    problem.lambda = lambda;
    problem.mode = mode;
    return problem;
}

FeatureVector stack_features(const Frame& frame) {
    validate_frame(frame);
    return frame.data;  // already row-major, channel-interleaved
}

std::vector<FeatureVector> running_average(const std::vector<FeatureVector>& features) {
    if (features.empty()) throw DataError("running_average: empty input");
    check_same_length(features);
    const std::size_t dim = features.front().size();
    std::vector<FeatureVector> averages(features.size());
    FeatureVector sum(dim, 0.0);
    for (std::size_t t = 0; t < features.size(); ++t) {
        for (std::size_t i = 0; i < dim; ++i) sum[i] += features[t][i];
        averages[t].resize(dim);
        const double inv = 1.0 / static_cast<double>(t + 1);
        for (std::size_t i = 0; i < dim; ++i) averages[t][i] = sum[i] * inv;
    }
    return averages;
}

double score(const FeatureVector& d, const FeatureVector& v) {
    if (d.size() != v.size()) throw DataError("score: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) s += d[i] * v[i];
    return s;
}

double objective(const FeatureVector& d, const PoolingProblem& problem) {
    const std::size_t T = problem.frame_count();
    if (T < 2) throw DataError("objective: need at least two frames");
    if (d.size() != problem.vectors.front().size())
        throw DataError("objective: dimension mismatch");

    std::vector<double> scores(T);
    for (std::size_t t = 0; t < T; ++t) scores[t] = score(d, problem.vectors[t]);

    double hinge_sum = 0.0;
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t p = t + 1; p < T; ++p)
            hinge_sum += std::max(0.0, 1.0 - scores[p] + scores[t]);

    const double pair_norm = 2.0 / (static_cast<double>(T) * static_cast<double>(T - 1));
    return 0.5 * problem.lambda * squared_norm(d) + pair_norm * hinge_sum;
}

FeatureVector objective_subgradient(const FeatureVector& d, const PoolingProblem& problem) {
    const std::size_t T = problem.frame_count();
    if (T < 2) throw DataError("subgradient: need at least two frames");
    const std::size_t dim = problem.vectors.front().size();
    if (d.size() != dim) throw DataError("subgradient: dimension mismatch");

    std::vector<double> scores(T);
    for (std::size_t t = 0; t < T; ++t) scores[t] = score(d, problem.vectors[t]);

    // Active hinge terms contribute v_t - v_p; collect per-frame weights first.
    std::vector<double> weight(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t p = t + 1; p < T; ++p) {
            if (1.0 - scores[p] + scores[t] > 0.0) {
                weight[t] += 1.0;
                weight[p] -= 1.0;
            }
        }
    }
    const double pair_norm = 2.0 / (static_cast<double>(T) * static_cast<double>(T - 1));
    FeatureVector grad(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        double g = 0.0;
        for (std::size_t t = 0; t < T; ++t) g += weight[t] * problem.vectors[t][i];
        grad[i] = problem.lambda * d[i] + pair_norm * g;
    }
    return grad;
}

FeatureVector solve_exact(const PoolingProblem& problem, const SolverConfig& cfg) {
    if (problem.frame_count() < 2) throw DataError("solve_exact: need at least two frames");
    if (cfg.max_iters < 1 || !(cfg.step0 > 0.0) || cfg.step_decay < 0.0 || cfg.tol < 0.0)
        throw DataError("solve_exact: invalid solver config");

    const std::size_t dim = problem.vectors.front().size();
    FeatureVector d(dim, 0.0);
    FeatureVector best = d;
    double best_obj = objective(d, problem);  // = 1 at d = 0
    double prev_obj = best_obj;

    for (int k = 0; k < cfg.max_iters; ++k) {
        const FeatureVector grad = objective_subgradient(d, problem);
        const double step = cfg.step0 / (1.0 + static_cast<double>(k) * cfg.step_decay);
        for (std::size_t i = 0; i < dim; ++i) d[i] -= step * grad[i];

        const double obj = objective(d, problem);
        if (!std::isfinite(obj))
            throw DataError("solve_exact: objective diverged (step0 too large)");
        if (obj < best_obj) {
            best_obj = obj;
            best = d;
        }
        // Converged once a sweep makes no more than tol of forward progress.
        const double decrease = prev_obj - obj;
        prev_obj = obj;
        if (decrease >= 0.0 && decrease < cfg.tol) break;
    }
    return best;
}

std::vector<double> approx_coefficients(std::size_t frame_count, PoolingInput mode) {
    if (frame_count == 0) throw DataError("approx_coefficients: empty input");
    const double T = static_cast<double>(frame_count);
    std::vector<double> alpha(frame_count);
    if (mode == PoolingInput::RAW_FRAMES) {
        for (std::size_t t = 1; t <= frame_count; ++t)
            alpha[t - 1] = 2.0 * static_cast<double>(t) - T - 1.0;
    } else {
        // harmonic numbers H_0..H_T
        std::vector<double> harmonic(frame_count + 1, 0.0);
        for (std::size_t k = 1; k <= frame_count; ++k)
            harmonic[k] = harmonic[k - 1] + 1.0 / static_cast<double>(k);
        for (std::size_t t = 1; t <= frame_count; ++t)
            alpha[t - 1] = 2.0 * (T - static_cast<double>(t) + 1.0) -
                           (T + 1.0) * (harmonic[frame_count] - harmonic[t - 1]);
    }
    return alpha;
}

FeatureVector approx_pool(const std::vector<FeatureVector>& features, PoolingInput mode) {
    if (features.empty()) throw DataError("approx_pool: empty input");
    check_same_length(features);
    const std::vector<double> alpha = approx_coefficients(features.size(), mode);
    const std::size_t dim = features.front().size();
    FeatureVector pooled(dim, 0.0);
    for (std::size_t t = 0; t < features.size(); ++t)
        for (std::size_t i = 0; i < dim; ++i) pooled[i] += alpha[t] * features[t][i];
    return pooled;
}

DynamicImage to_dynamic_image(const FeatureVector& d, int height, int width, int channels,
                              Modality modality) {
    if (height < 1 || width < 1 || channels < 1)
        throw DataError("to_dynamic_image: dimensions must be positive");
    const std::size_t expected = static_cast<std::size_t>(height) * width * channels;
    if (d.size() != expected) throw DataError("to_dynamic_image: vector length mismatch");
    for (double v : d)
        if (!std::isfinite(v)) throw DataError("to_dynamic_image: non-finite value");

    DynamicImage img;
    img.height = height;
    img.width = width;
    img.channels = channels;
    img.modality = modality;
    img.values = d;
    const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
    img.value_min = *lo;
    img.value_max = *hi;
    return img;
}

DynamicImage normalize_image(const DynamicImage& img) {
    DynamicImage out = img;
    const auto [lo, hi] = std::minmax_element(img.values.begin(), img.values.end());
    const double min = *lo, max = *hi;
    out.value_min = min;
    out.value_max = max;
    if (max > min) {
        const double inv = 1.0 / (max - min);
        for (double& v : out.values) v = (v - min) * inv;
    } else {
        std::fill(out.values.begin(), out.values.end(), 0.0);
    }
    return out;
}

namespace {

std::vector<FeatureVector> sequence_features(const FrameSequence& seq) {
    validate_sequence(seq);
    std::vector<FeatureVector> features;
    features.reserve(seq.frames.size());
    for (const Frame& frame : seq.frames) features.push_back(stack_features(frame));
    return features;
}

}  // namespace

DynamicImage pool_sequence_approx(const FrameSequence& seq, PoolingInput input) {
    const FeatureVector d = approx_pool(sequence_features(seq), input);
    return to_dynamic_image(d, seq.height(), seq.width(), seq.channels(), seq.modality);
}

DynamicImage pool_sequence_exact(const FrameSequence& seq, PoolingInput input, double lambda,
                                 const SolverConfig& cfg) {
    const PoolingProblem problem = make_problem(sequence_features(seq), input, lambda);
    const FeatureVector d = solve_exact(problem, cfg);
    return to_dynamic_image(d, seq.height(), seq.width(), seq.channels(), seq.modality);
}

namespace {

template <typename T>
void write_raw(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    return value;
}

}  // namespace

void write_dimg(const fs::path& path, const DynamicImage& img) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write dimg: " + path.string());
    out.write("DIMG", 4);
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(img.height));
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(img.width));
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(img.channels));
    write_raw<std::uint32_t>(out, img.modality == Modality::RGB ? 0u : 1u);
    for (double v : img.values) write_raw<float>(out, static_cast<float>(v));
    write_raw<double>(out, img.value_min);
    write_raw<double>(out, img.value_max);
    if (!out) throw DataError("dimg write failed: " + path.string());
}

DynamicImage read_dimg(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dimg: " + path.string());
    char magic[4] = {};
    in.read(magic, 4);
    if (std::memcmp(magic, "DIMG", 4) != 0) throw DataError("bad dimg magic: " + path.string());
    DynamicImage img;
    img.height = static_cast<int>(read_raw<std::uint32_t>(in));
    img.width = static_cast<int>(read_raw<std::uint32_t>(in));
    img.channels = static_cast<int>(read_raw<std::uint32_t>(in));
    const std::uint32_t modality = read_raw<std::uint32_t>(in);
    if (modality > 1) throw DataError("bad dimg modality: " + path.string());
    img.modality = modality == 0 ? Modality::RGB : Modality::DEPTH;
    if (img.height < 1 || img.width < 1 || img.channels < 1 || !in)
        throw DataError("bad dimg header: " + path.string());
    const std::size_t count = static_cast<std::size_t>(img.height) * img.width * img.channels;
    img.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) img.values[i] = read_raw<float>(in);
    img.value_min = read_raw<double>(in);
    img.value_max = read_raw<double>(in);
    if (!in) throw DataError("truncated dimg: " + path.string());
    return img;
}

void write_preview_png(const fs::path& path, const DynamicImage& normalized) {
    Frame frame = make_frame(normalized.height, normalized.width,
                             normalized.modality == Modality::RGB ? 3 : 1);
    for (std::size_t i = 0; i < frame.data.size(); ++i)
        frame.data[i] = std::clamp(normalized.values[i], 0.0, 1.0);
    if (normalized.modality == Modality::RGB) {
        write_rgb8_png(path, frame);
    } else {
        // 8-bit preview: quantize the single channel through the RGB writer grid
        Frame rgb = make_frame(frame.height, frame.width, 3);
        for (int y = 0; y < frame.height; ++y)
            for (int x = 0; x < frame.width; ++x)
                for (int c = 0; c < 3; ++c) rgb.at(y, x, c) = frame.at(y, x, 0);
        write_rgb8_png(path, rgb);
    }
}

}  // namespace dynimg
