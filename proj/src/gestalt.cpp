#include "dynimg/gestalt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace dynimg {

std::size_t BinaryMask::popcount() const {
    std::size_t n = 0;
    for (std::uint8_t b : bits) n += b != 0;
    return n;
}

double pixel_magnitude(const DynamicImage& img, int y, int x) {
    double sum = 0.0;
    for (int c = 0; c < img.channels; ++c) sum += img.at(y, x, c);
    return sum / img.channels;
}

BinaryMask binarize(const DynamicImage& img, double tau_b) {
    if (!(tau_b >= 0.0 && tau_b <= 1.0)) throw DataError("binarize: tau_b must lie in [0,1]");
    for (double v : img.values)
        if (!(v >= 0.0 && v <= 1.0)) throw DataError("binarize: image must be normalized to [0,1]");
    BinaryMask mask;
    mask.height = img.height;
    mask.width = img.width;
    mask.bits.assign(static_cast<std::size_t>(img.height) * img.width, 0);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            mask.bits[static_cast<std::size_t>(y) * img.width + x] =
                pixel_magnitude(img, y, x) > tau_b ? 1 : 0;
    return mask;
}

namespace {

// Union-find over provisional labels.
int find_root(std::vector<int>& parent, int i) {
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

void unite(std::vector<int>& parent, int a, int b) {
    a = find_root(parent, a);
    b = find_root(parent, b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
}

}  // namespace

ComponentMap label_components(const BinaryMask& mask, const DynamicImage& img) {
    if (mask.height != img.height || mask.width != img.width)
        throw DataError("label_components: dimension mismatch");

    const int h = mask.height, w = mask.width;
    ComponentMap cmap;
    cmap.height = h;
    cmap.width = w;
    cmap.labels.assign(static_cast<std::size_t>(h) * w, 0);

    // Two-pass 8-connectivity labeling. First pass assigns provisional
    // labels from the already-visited neighbors (W, NW, N, NE).
    std::vector<int> provisional(static_cast<std::size_t>(h) * w, 0);
    std::vector<int> parent(1, 0);
    auto idx = [w](int y, int x) { return static_cast<std::size_t>(y) * w + x; };

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.bits[idx(y, x)]) continue;
            int neighbors[4];
            int count = 0;
            if (x > 0 && provisional[idx(y, x - 1)]) neighbors[count++] = provisional[idx(y, x - 1)];
            if (y > 0) {
                if (x > 0 && provisional[idx(y - 1, x - 1)])
                    neighbors[count++] = provisional[idx(y - 1, x - 1)];
                if (provisional[idx(y - 1, x)]) neighbors[count++] = provisional[idx(y - 1, x)];
                if (x + 1 < w && provisional[idx(y - 1, x + 1)])
                    neighbors[count++] = provisional[idx(y - 1, x + 1)];
            }
            if (count == 0) {
                const int fresh = static_cast<int>(parent.size());
                parent.push_back(fresh);
                provisional[idx(y, x)] = fresh;
            } else {
                int lowest = neighbors[0];
                for (int i = 1; i < count; ++i) lowest = std::min(lowest, neighbors[i]);
                provisional[idx(y, x)] = lowest;
                for (int i = 0; i < count; ++i) unite(parent, lowest, neighbors[i]);
            }
        }
    }

    // Second pass: canonical labels in raster order of first appearance.
    std::vector<int> canonical(parent.size(), 0);
    int next_label = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int prov = provisional[idx(y, x)];
            if (!prov) continue;
            const int root = find_root(parent, prov);
            if (!canonical[root]) canonical[root] = ++next_label;
            cmap.labels[idx(y, x)] = canonical[root];
        }
    }

    cmap.components.resize(next_label);
    std::vector<double> intensity_sum(next_label, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int label = cmap.labels[idx(y, x)];
            if (!label) continue;
            Component& comp = cmap.components[label - 1];
            comp.label = label;
            comp.area += 1;
            intensity_sum[label - 1] += pixel_magnitude(img, y, x);
        }
    }
    for (int i = 0; i < next_label; ++i) {
        Component& comp = cmap.components[i];
        comp.mean_intensity = intensity_sum[i] / comp.area;
        comp.areal_intensity = comp.area * comp.mean_intensity;
        comp.norm_ai = 0.0;
    }
    return cmap;
}

std::vector<Component> normalize_ai(const std::vector<Component>& components) {
    if (components.empty()) throw DataError("normalize_ai: empty component list");
    double max_ai = 0.0;
    for (const Component& c : components) max_ai = std::max(max_ai, c.areal_intensity);
    std::vector<Component> out = components;
    for (Component& c : out) c.norm_ai = max_ai > 0.0 ? c.areal_intensity / max_ai : 1.0;
    return out;
}

double binomial_tail(int N, int n, double p) {
    if (N < 0 || n < 0 || n > N) throw DataError("binomial_tail: need 0 <= n <= N");
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("binomial_tail: p must lie in [0,1]");
    if (n == 0) return 1.0;
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;

    if (N <= 60) {
        // Binomial coefficients are exact in uint64 up to N = 60. Summing
        // the tail descending from i = N keeps the result monotone in n:
        // the sum for n reuses the partial sums of n + 1 bit for bit.
        std::uint64_t coef = 1;  // C(N, N)
        double sum = 0.0;
        for (int i = N; i >= n; --i) {
            sum += static_cast<double>(coef) * std::pow(p, i) * std::pow(1.0 - p, N - i);
            if (i > 0) coef = coef * static_cast<std::uint64_t>(i) / (N - i + 1);
        }
        return std::clamp(sum, 0.0, 1.0);
    }

    // Log-space terms with a log-sum-exp reduction.
    const double log_p = std::log(p);
    const double log_q = std::log1p(-p);
    const double lg_n1 = std::lgamma(static_cast<double>(N) + 1.0);
    auto log_term = [&](int i) {
        return lg_n1 - std::lgamma(static_cast<double>(i) + 1.0) -
               std::lgamma(static_cast<double>(N - i) + 1.0) + i * log_p + (N - i) * log_q;
    };
    double max_log = -std::numeric_limits<double>::infinity();
    for (int i = n; i <= N; ++i) max_log = std::max(max_log, log_term(i));
    if (!std::isfinite(max_log)) return 0.0;
    double sum = 0.0;
    for (int i = N; i >= n; --i) sum += std::exp(log_term(i) - max_log);
    return std::clamp(std::exp(max_log) * sum, 0.0, 1.0);
}

NfaSweep sweep_thresholds(const std::vector<Component>& components, int delta, double epsilon) {
    if (components.empty()) throw DataError("sweep_thresholds: empty component list");
    if (delta < 2) throw DataError("sweep_thresholds: delta must be at least 2");

    const int N = static_cast<int>(components.size());
    NfaSweep sweep;
    sweep.delta = delta;
    sweep.epsilon = epsilon;
    sweep.candidates.reserve(delta);

    for (int k = 0; k < delta; ++k) {
        NfaCandidate cand;
        cand.gamma_star = static_cast<double>(k) / (delta - 1);
        cand.num_above = static_cast<int>(
            std::count_if(components.begin(), components.end(),
                          [&](const Component& c) { return c.norm_ai >= cand.gamma_star; }));
        cand.prior = 1.0 - cand.gamma_star;
        cand.tail = cand.num_above == 0 ? 1.0 : binomial_tail(N, cand.num_above, cand.prior);
        cand.nfa = delta * cand.tail;
        sweep.candidates.push_back(cand);
    }

    // Most meaningful candidate; ties go to the smaller threshold, which
    // keeps more components.
    const NfaCandidate* best = nullptr;
    for (const NfaCandidate& cand : sweep.candidates) {
        if (cand.nfa >= epsilon) continue;
        if (!best || cand.nfa < best->nfa) best = &cand;
    }
    if (best) sweep.selected = best->gamma_star;
    return sweep;
}

DynamicImage apply_mask(const DynamicImage& img, const ComponentMap& cmap, const NfaSweep& sweep) {
    if (cmap.height != img.height || cmap.width != img.width)
        throw DataError("apply_mask: dimension mismatch");
    DynamicImage out = img;
    if (!sweep.selected) return out;

    const double gamma = *sweep.selected;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const int label = cmap.label_at(y, x);
            if (!label) continue;
            if (cmap.components[label - 1].norm_ai < gamma)
                for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = 0.0;
        }
    }
    return out;
}

std::vector<int> PruneResult::kept_labels() const {
    std::vector<int> labels;
    for (const Component& c : components.components) {
        if (!sweep.selected || c.norm_ai >= *sweep.selected) labels.push_back(c.label);
    }
    return labels;
}

BinaryMask PruneResult::kept_mask() const {
    BinaryMask mask;
    mask.height = components.height;
    mask.width = components.width;
    mask.bits.assign(static_cast<std::size_t>(mask.height) * mask.width, 0);
    std::vector<std::uint8_t> keep(components.components.size() + 1, 0);
    for (const Component& c : components.components)
        keep[c.label] = !sweep.selected || c.norm_ai >= *sweep.selected;
    for (std::size_t i = 0; i < components.labels.size(); ++i)
        mask.bits[i] = keep[components.labels[i]];
    return mask;
}

PruneResult prune_full(const DynamicImage& normalized, double tau_b, int delta, double epsilon) {
    PruneResult result;
    const BinaryMask mask = binarize(normalized, tau_b);
    result.components = label_components(mask, normalized);
    if (result.components.components.empty()) {
        result.image = normalized;  // nothing to prune
        result.sweep.delta = delta;
        result.sweep.epsilon = epsilon;
        return result;
    }
    result.components.components = normalize_ai(result.components.components);
    result.sweep = sweep_thresholds(result.components.components, delta, epsilon);
    result.image = apply_mask(normalized, result.components, result.sweep);
    return result;
}

DynamicImage prune(const DynamicImage& normalized, double tau_b, int delta, double epsilon) {
    return prune_full(normalized, tau_b, delta, epsilon).image;
}

std::string sweep_report_json(const PruneResult& result) {
    json candidates = json::array();
    for (const NfaCandidate& cand : result.sweep.candidates) {
        candidates.push_back({{"gamma_star", cand.gamma_star},
                              {"n", cand.num_above},
                              {"p", cand.prior},
                              {"P", cand.tail},
                              {"NFA", cand.nfa}});
    }
    json doc = {{"N", result.components.components.size()},
                {"delta", result.sweep.delta},
                {"epsilon", result.sweep.epsilon},
                {"candidates", candidates},
                {"selected", result.sweep.selected ? json(*result.sweep.selected) : json(nullptr)},
                {"kept_labels", result.kept_labels()}};
    return doc.dump(2);
}

void write_sweep_report(const fs::path& path, const PruneResult& result) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write sweep report: " + path.string());
    out << sweep_report_json(result) << "\n";
}

}  // namespace dynimg
