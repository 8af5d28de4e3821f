#include "dynimg/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

#include "dynimg/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dynimg {

std::vector<double> resample_bilinear(const std::vector<double>& src, int height, int width,
                                      int channels, int out_h, int out_w) {
    if (height < 1 || width < 1 || channels < 1 || out_h < 1 || out_w < 1)
        throw DataError("resample_bilinear: dimensions must be positive");
    if (src.size() != static_cast<std::size_t>(height) * width * channels)
        throw DataError("resample_bilinear: source length mismatch");

    const double scale_y = static_cast<double>(height) / out_h;
    const double scale_x = static_cast<double>(width) / out_w;
    auto at = [&](int y, int x, int c) {
        return src[(static_cast<std::size_t>(y) * width + x) * channels + c];
    };

    std::vector<double> dst(static_cast<std::size_t>(out_h) * out_w * channels);
    std::size_t o = 0;
    for (int oy = 0; oy < out_h; ++oy) {
        // half-pixel centers, clamped at the borders
        const double sy = (oy + 0.5) * scale_y - 0.5;
        const int y0 = static_cast<int>(std::floor(sy));
        const double fy = sy - y0;
        const int y0c = std::clamp(y0, 0, height - 1);
        const int y1c = std::clamp(y0 + 1, 0, height - 1);
        for (int ox = 0; ox < out_w; ++ox) {
            const double sx = (ox + 0.5) * scale_x - 0.5;
            const int x0 = static_cast<int>(std::floor(sx));
            const double fx = sx - x0;
            const int x0c = std::clamp(x0, 0, width - 1);
            const int x1c = std::clamp(x0 + 1, 0, width - 1);
            for (int c = 0; c < channels; ++c) {
                const double top = (1.0 - fx) * at(y0c, x0c, c) + fx * at(y0c, x1c, c);
                const double bot = (1.0 - fx) * at(y1c, x0c, c) + fx * at(y1c, x1c, c);
                dst[o++] = (1.0 - fy) * top + fy * bot;
            }
        }
    }
    return dst;
}

Embedding embed(const DynamicImage& normalized, int embed_h, int embed_w) {
    Embedding emb;
    emb.source = normalized.modality;
    emb.values = resample_bilinear(normalized.values, normalized.height, normalized.width,
                                   normalized.channels, embed_h, embed_w);
    double norm_sq = 0.0;
    for (double v : emb.values) norm_sq += v * v;
    if (norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (double& v : emb.values) v *= inv;
    }
    return emb;
}

std::vector<double> fuse(const Embedding& rgb, const Embedding& depth) {
    std::vector<double> fused;
    fused.reserve(rgb.values.size() + depth.values.size());
    fused.insert(fused.end(), rgb.values.begin(), rgb.values.end());
    fused.insert(fused.end(), depth.values.begin(), depth.values.end());
    return fused;
}

namespace {

void check_params(const FcParams& params) {
    if (params.num_classes < 1 || params.input_dim < 1)
        throw DataError("classifier params: dimensions must be positive");
    if (params.weights.size() !=
            static_cast<std::size_t>(params.num_classes) * params.input_dim ||
        params.bias.size() != static_cast<std::size_t>(params.num_classes))
        throw DataError("classifier params: shape mismatch");
}

std::vector<double> logits(const FcParams& params, const std::vector<double>& x) {
    if (x.size() != static_cast<std::size_t>(params.input_dim))
        throw DataError("classifier: input dimension mismatch");
    std::vector<double> z(params.num_classes);
    for (int k = 0; k < params.num_classes; ++k) {
        const double* row = params.weights.data() + static_cast<std::size_t>(k) * params.input_dim;
        double s = params.bias[k];
        for (int i = 0; i < params.input_dim; ++i) s += row[i] * x[i];
        z[k] = s;
    }
    return z;
}

}  // namespace

std::vector<double> forward(const FcParams& params, const std::vector<double>& x) {
    check_params(params);
    std::vector<double> z = logits(params, x);
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : z) v /= sum;
    return z;
}

std::pair<double, Gradients> loss_and_grad(const FcParams& params, const std::vector<Sample>& batch,
                                           double l2) {
    check_params(params);
    if (batch.empty()) throw DataError("loss_and_grad: empty batch");
    if (l2 < 0.0) throw DataError("loss_and_grad: l2 must be nonnegative");

    const int K = params.num_classes;
    const int D = params.input_dim;
    Gradients grads;
    grads.weights.assign(params.weights.size(), 0.0);
    grads.bias.assign(params.bias.size(), 0.0);

    double loss = 0.0;
    for (const Sample& sample : batch) {
        if (sample.label < 0 || sample.label >= K)
            throw DataError("loss_and_grad: label out of range");
        std::vector<double> z = logits(params, sample.x);
        const double zmax = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - zmax);
        const double log_sum = std::log(sum);
        loss += -(z[sample.label] - zmax - log_sum);

        for (int k = 0; k < K; ++k) {
            double delta = std::exp(z[k] - zmax - log_sum);
            if (k == sample.label) delta -= 1.0;
            grads.bias[k] += delta;
            double* grow = grads.weights.data() + static_cast<std::size_t>(k) * D;
            for (int i = 0; i < D; ++i) grow[i] += delta * sample.x[i];
        }
    }

    const double inv_b = 1.0 / batch.size();
    loss *= inv_b;
    for (double& g : grads.weights) g *= inv_b;
    for (double& g : grads.bias) g *= inv_b;

    double w_norm_sq = 0.0;
    for (std::size_t i = 0; i < params.weights.size(); ++i) {
        w_norm_sq += params.weights[i] * params.weights[i];
        grads.weights[i] += l2 * params.weights[i];
    }
    loss += 0.5 * l2 * w_norm_sq;
    return {loss, std::move(grads)};
}

TrainResult train(const std::vector<Sample>& dataset, const TrainConfig& cfg) {
    if (dataset.empty()) throw DataError("train: empty dataset");
    if (!(cfg.learning_rate >= 0.0) || cfg.epochs < 0 || cfg.batch_size < 1 || cfg.l2 < 0.0)
        throw DataError("train: invalid config");

    const int D = static_cast<int>(dataset.front().x.size());
    int K = 0;
    for (const Sample& s : dataset) {
        if (static_cast<int>(s.x.size()) != D) throw DataError("train: input dimension mismatch");
        if (s.label < 0) throw DataError("train: negative label");
        K = std::max(K, s.label + 1);
    }
    std::vector<int> per_class(K, 0);
    for (const Sample& s : dataset) per_class[s.label] += 1;
    for (int k = 0; k < K; ++k)
        if (per_class[k] == 0)
            throw DataError("train: class " + std::to_string(k) + " absent from training set");

    Rng rng(cfg.seed);
    FcParams params;
    params.num_classes = K;
    params.input_dim = D;
    params.weights.resize(static_cast<std::size_t>(K) * D);
    params.bias.assign(K, 0.0);
    for (double& w : params.weights) w = rng.normal(0.0, 0.01);

    TrainResult result;
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<Sample> batch;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) batch.push_back(dataset[order[i]]);
            const auto [loss, grads] = loss_and_grad(params, batch, cfg.l2);
            (void)loss;
            for (std::size_t i = 0; i < params.weights.size(); ++i)
                params.weights[i] -= cfg.learning_rate * grads.weights[i];
            for (std::size_t i = 0; i < params.bias.size(); ++i)
                params.bias[i] -= cfg.learning_rate * grads.bias[i];
        }
        result.epoch_loss.push_back(loss_and_grad(params, dataset, cfg.l2).first);
    }
    result.params = std::move(params);
    return result;
}

int predict(const FcParams& params, const std::vector<double>& x) {
    const std::vector<double> probs = forward(params, x);
    int best = 0;
    for (int k = 1; k < static_cast<int>(probs.size()); ++k)
        if (probs[k] > probs[best]) best = k;
    return best;
}

void save_model(const fs::path& path, const FcParams& params, const TrainConfig& cfg) {
    check_params(params);
    json doc = {{"num_classes", params.num_classes},
                {"fused_dim", params.input_dim},
                {"weights", params.weights},
                {"bias", params.bias},
                {"train_config",
                 {{"learning_rate", cfg.learning_rate},
                  {"epochs", cfg.epochs},
                  {"batch_size", cfg.batch_size},
                  {"seed", cfg.seed},
                  {"l2", cfg.l2}}}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write model: " + path.string());
    out << doc.dump(2) << "\n";
}

std::pair<FcParams, TrainConfig> load_model(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model: " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("malformed model JSON: " + std::string(e.what()));
    }
    FcParams params;
    TrainConfig cfg;
    try {
        params.num_classes = doc.at("num_classes").get<int>();
        params.input_dim = doc.at("fused_dim").get<int>();
        params.weights = doc.at("weights").get<std::vector<double>>();
        params.bias = doc.at("bias").get<std::vector<double>>();
        const json& tc = doc.at("train_config");
        cfg.learning_rate = tc.at("learning_rate").get<double>();
        cfg.epochs = tc.at("epochs").get<int>();
        cfg.batch_size = tc.at("batch_size").get<int>();
        cfg.seed = tc.at("seed").get<std::uint64_t>();
        cfg.l2 = tc.at("l2").get<double>();
    } catch (const json::exception& e) {
        throw DataError("bad model file: " + std::string(e.what()));
    }
    check_params(params);
    return {std::move(params), cfg};
}

}  // namespace dynimg
