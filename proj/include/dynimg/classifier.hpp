#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "dynimg/rank_pooling.hpp"

namespace dynimg {

// Fixed-length descriptor of one processed dynamic image: bilinear resample
// to embed_h x embed_w, flatten, L2-normalize (all-zero stays all-zero).
struct Embedding {
    std::vector<double> values;
    Modality source = Modality::RGB;
};

// Bilinear resample with half-pixel centers and edge clamping.
std::vector<double> resample_bilinear(const std::vector<double>& src, int height, int width,
                                      int channels, int out_h, int out_w);

Embedding embed(const DynamicImage& normalized, int embed_h, int embed_w);

// Concatenation, RGB first.
std::vector<double> fuse(const Embedding& rgb, const Embedding& depth);

// Softmax classification head.
struct FcParams {
    int num_classes = 0;
    int input_dim = 0;
    std::vector<double> weights;  // num_classes x input_dim, row-major
    std::vector<double> bias;     // num_classes
};

struct TrainConfig {
    double learning_rate = 0.5;
    int epochs = 200;
    int batch_size = 16;
    std::uint64_t seed = 0;
    double l2 = 0.0;
};

struct Sample {
    std::vector<double> x;
    int label = 0;
};

// softmax(Wx + b), computed with max subtraction. Strictly positive, sums to 1.
std::vector<double> forward(const FcParams& params, const std::vector<double>& x);

struct Gradients {
    std::vector<double> weights;
    std::vector<double> bias;
};

// Mean cross-entropy over the batch plus (l2/2)||W||^2, with analytic gradients.
std::pair<double, Gradients> loss_and_grad(const FcParams& params, const std::vector<Sample>& batch,
                                           double l2);

struct TrainResult {
    FcParams params;
    std::vector<double> epoch_loss;  // full-dataset loss after each epoch
};

// Minibatch SGD, deterministic given cfg.seed: seeded Gaussian init
// (std 0.01, zero bias) and seeded epoch shuffling. Requires every class
// 0..max_label to be present.
TrainResult train(const std::vector<Sample>& dataset, const TrainConfig& cfg);

// argmax of forward; ties break to the lowest class index.
int predict(const FcParams& params, const std::vector<double>& x);

// Model file: JSON with num_classes, fused_dim, row-major weights, bias, and
// the train config used.
void save_model(const std::filesystem::path& path, const FcParams& params, const TrainConfig& cfg);
std::pair<FcParams, TrainConfig> load_model(const std::filesystem::path& path);

}  // namespace dynimg
