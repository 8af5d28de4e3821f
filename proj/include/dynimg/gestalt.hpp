#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dynimg/rank_pooling.hpp"

namespace dynimg {

struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> bits;

    bool at(int y, int x) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    std::size_t popcount() const;
};

// One connected component of the binarized image. areal_intensity = area *
// mean_intensity; norm_ai is that value divided by the image maximum.
struct Component {
    int label = 0;
    int area = 0;
    double mean_intensity = 0.0;
    double areal_intensity = 0.0;
    double norm_ai = 0.0;
};

struct ComponentMap {
    int height = 0;
    int width = 0;
    std::vector<int> labels;  // 0 = background
    std::vector<Component> components;

    int label_at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }
    std::size_t count() const { return components.size(); }
};

struct NfaCandidate {
    double gamma_star = 0.0;  // threshold on normalized areal intensity
    int num_above = 0;        // components with norm_ai >= gamma_star
    double prior = 0.0;       // p = 1 - gamma_star
    double tail = 1.0;        // binomial tail P
    double nfa = 0.0;         // delta * P
};

struct NfaSweep {
    std::vector<NfaCandidate> candidates;
    int delta = 0;
    double epsilon = 1.0;
    std::optional<double> selected;  // gamma_star with minimal NFA < epsilon
};

// Per-pixel magnitude: mean over channels.
double pixel_magnitude(const DynamicImage& img, int y, int x);

// Foreground = pixels whose magnitude exceeds tau_b. Expects a normalized
// image (values in [0,1]) and tau_b in [0,1].
BinaryMask binarize(const DynamicImage& img, double tau_b);

// 8-connectivity labeling; labels are assigned in raster order of each
// component's first pixel, starting at 1. Component stats come from the
// magnitudes of `img`.
ComponentMap label_components(const BinaryMask& mask, const DynamicImage& img);

// norm_ai = areal_intensity / max(areal_intensity); all-equal inputs map to 1.
std::vector<Component> normalize_ai(const std::vector<Component>& components);

// Upper tail P(X >= n) for X ~ Binomial(N, p). Exact coefficients for
// N <= 60, log-space summation beyond; stable through N ~ 1e4.
double binomial_tail(int N, int n, double p);

// Tries delta thresholds on the uniform grid {k/(delta-1)}. For each
// candidate: n = #{norm_ai >= gamma*}, p = 1 - gamma*, P = binomial_tail
// (P = 1 when n = 0), NFA = delta * P. Selects the candidate with NFA <
// epsilon minimizing NFA, ties to the smaller gamma* (keeps more).
NfaSweep sweep_thresholds(const std::vector<Component>& components, int delta, double epsilon);

// Zeroes pixels of components below the selected threshold (norm_ai <
// gamma*). Components at or above it, and the background, pass through
// bit-exactly. Without a selected threshold the image is returned unchanged.
DynamicImage apply_mask(const DynamicImage& img, const ComponentMap& cmap, const NfaSweep& sweep);

struct PruneResult {
    DynamicImage image;
    ComponentMap components;  // norm_ai filled in
    NfaSweep sweep;

    std::vector<int> kept_labels() const;
    // Pixels of kept components; empty components -> all false.
    BinaryMask kept_mask() const;
};

// binarize -> label_components -> normalize_ai -> sweep_thresholds ->
// apply_mask. An image with no foreground components is returned unchanged.
PruneResult prune_full(const DynamicImage& normalized, double tau_b, int delta, double epsilon);
DynamicImage prune(const DynamicImage& normalized, double tau_b, int delta, double epsilon);

// JSON sweep report: N, delta, epsilon, per-candidate {gamma_star, n, p, P,
// NFA}, selected (or null), kept component labels.
std::string sweep_report_json(const PruneResult& result);
void write_sweep_report(const std::filesystem::path& path, const PruneResult& result);

}  // namespace dynimg
