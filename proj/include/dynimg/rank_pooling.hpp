#pragma once

#include <filesystem>
#include <vector>

#include "dynimg/frame.hpp"

namespace dynimg {

using FeatureVector = std::vector<double>;

// Whether the ranking objective scores raw per-frame features or their
// running time averages.
enum class PoolingInput { RAW_FRAMES, TIME_AVERAGED };

// Pairwise ranking problem: order the per-time vectors by their scores.
struct PoolingProblem {
    std::vector<FeatureVector> vectors;
    double lambda = 1.0;
    PoolingInput mode = PoolingInput::RAW_FRAMES;

    std::size_t frame_count() const { return vectors.size(); }
};

PoolingProblem make_problem(const std::vector<FeatureVector>& features, PoolingInput mode,
                            double lambda);

struct SolverConfig {
    int max_iters = 500;
    double step0 = 0.1;
    double step_decay = 0.01;
    double tol = 1e-8;
};

// The pooled descriptor reshaped back to image geometry. `values` holds the
// raw (pre-normalization) components; value_min/value_max record their range.
struct DynamicImage {
    int height = 0;
    int width = 0;
    int channels = 0;
    Modality modality = Modality::RGB;
    std::vector<double> values;
    double value_min = 0.0;
    double value_max = 0.0;

    double at(int y, int x, int c) const {
        return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double& at(int y, int x, int c) {
        return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

// Flattens a frame to the feature vector: row-major, channel-interleaved.
FeatureVector stack_features(const Frame& frame);

// Prefix means: out[t] = mean of inputs 1..t (1-based, t = 1..T).
std::vector<FeatureVector> running_average(const std::vector<FeatureVector>& features);

// Ranking score of one time step: inner product <d, v>.
double score(const FeatureVector& d, const FeatureVector& v);

// Regularized pairwise hinge objective
//   E(d) = lambda/2 ||d||^2 + 2/(T(T-1)) * sum_{p>t} max{0, 1 - S(p|d) + S(t|d)}.
// E(0) = 1 for every problem with T >= 2.
double objective(const FeatureVector& d, const PoolingProblem& problem);

// Full-batch subgradient of E at d (exposed for diagnostics).
FeatureVector objective_subgradient(const FeatureVector& d, const PoolingProblem& problem);

// Deterministic full-batch subgradient descent with decaying step
// eta_k = step0 / (1 + k * step_decay), starting from d = 0. Stops at
// max_iters or once a sweep's objective decrease falls inside [0, tol).
// Returns the best-objective iterate seen.
FeatureVector solve_exact(const PoolingProblem& problem, const SolverConfig& cfg);

// Closed-form pooling coefficients, 1-based time index t = 1..T.
//   RAW_FRAMES:    alpha_t = 2t - T - 1
//   TIME_AVERAGED: alpha_t = 2(T - t + 1) - (T + 1)(H_T - H_{t-1})
// Either set is parallel to the negated hinge subgradient of the objective
// at d = 0 under its input interpretation.
std::vector<double> approx_coefficients(std::size_t frame_count, PoolingInput mode);

// sum_t alpha_t * features[t]; features are raw per-frame vectors.
FeatureVector approx_pool(const std::vector<FeatureVector>& features, PoolingInput mode);

// Inverse of stack_features; records the value range.
DynamicImage to_dynamic_image(const FeatureVector& d, int height, int width, int channels,
                              Modality modality);

// Joint min-max rescale to [0,1] across all channels; a constant image maps
// to all zeros. The input's range is recorded on the output.
DynamicImage normalize_image(const DynamicImage& img);

// Convenience composition: stack all frames, pool, reshape. Raw output.
DynamicImage pool_sequence_approx(const FrameSequence& seq, PoolingInput input);
DynamicImage pool_sequence_exact(const FrameSequence& seq, PoolingInput input, double lambda,
                                 const SolverConfig& cfg);

// .dimg container: "DIMG" magic, u32 height/width/channels/modality
// (0 = RGB, 1 = DEPTH), f32 values row-major channel-interleaved, then the
// recorded min and max as f64. All little-endian.
void write_dimg(const std::filesystem::path& path, const DynamicImage& img);
DynamicImage read_dimg(const std::filesystem::path& path);

// 8-bit PNG preview of a normalized image (color for RGB, gray for depth).
void write_preview_png(const std::filesystem::path& path, const DynamicImage& normalized);

}  // namespace dynimg
