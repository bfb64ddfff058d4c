#include "uagg/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace uagg {

namespace {

void require_same_shape(const UncertaintyMap& map, const SegmentationMask& mask) {
    if (map.rows() != mask.rows() || map.cols() != mask.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "uncertainty map and mask differ in shape");
    }
}

// ceil(fraction * n) with a guard against fractions like 0.1 * 10 = 1.0000000000000002.
std::size_t ceil_count(double fraction, std::size_t n) {
    const double raw = fraction * static_cast<double>(n);
    const double rounded = std::round(raw);
    const double k = std::abs(raw - rounded) < 1e-9 ? rounded : std::ceil(raw);
    return std::clamp<std::size_t>(static_cast<std::size_t>(k), 1, n);
}

}  // namespace

double top_k_mean(std::span<const double> values, std::size_t k) {
    if (k == 0 || k > values.size()) {
        throw Error(ErrorCode::InvalidParam, "top-k count out of range");
    }
    std::vector<double> sorted(values.begin(), values.end());
    // sorted summation keeps the result monotone in every input value
    std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end(),
                      std::greater<>());
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += sorted[i];
    return sum / static_cast<double>(k);
}

double avg(const UncertaintyMap& map) {
    double sum = 0.0;
    for (double v : map.values()) sum += v;
    return sum / static_cast<double>(map.size());
}

double plm(const UncertaintyMap& map, std::size_t patch) {
    if (patch == 0) throw Error(ErrorCode::InvalidParam, "patch size must be positive");
    if (patch > std::min(map.rows(), map.cols())) {
        throw Error(ErrorCode::PatchTooLarge, "patch " + std::to_string(patch) + " exceeds map shape " +
                                                  std::to_string(map.rows()) + "x" +
                                                  std::to_string(map.cols()));
    }
    const std::size_t rows = map.rows();
    const std::size_t cols = map.cols();
    // Plain running sums in a fixed order (no summed-area subtraction), so an elementwise
    // larger map can never produce a smaller floating-point patch sum.
    const std::size_t out_rows = rows - patch + 1;
    std::vector<double> column_sums(out_rows * cols, 0.0);
    for (std::size_t r = 0; r < out_rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            double sum = 0.0;
            for (std::size_t k = 0; k < patch; ++k) sum += map(r + k, c);
            column_sums[r * cols + c] = sum;
        }
    }
    const double area = static_cast<double>(patch * patch);
    double best = 0.0;
    for (std::size_t r = 0; r < out_rows; ++r) {
        for (std::size_t c = 0; c + patch <= cols; ++c) {
            double sum = 0.0;
            for (std::size_t k = 0; k < patch; ++k) sum += column_sums[r * cols + c + k];
            best = std::max(best, sum / area);
        }
    }
    return std::clamp(best, 0.0, 1.0);
}

double ata(const UncertaintyMap& map, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw Error(ErrorCode::InvalidThreshold, "ATA threshold must lie in (0, 1)");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (double v : map.values()) {
        if (v > threshold) {
            sum += v;
            ++count;
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double aqa(const UncertaintyMap& map, double quantile) {
    if (!(quantile > 0.0 && quantile < 1.0)) {
        throw Error(ErrorCode::InvalidQuantile, "AQA quantile must lie in (0, 1)");
    }
    return top_k_mean(map.values(), ceil_count(1.0 - quantile, map.size()));
}

ClassAverages class_averages(const UncertaintyMap& map, const SegmentationMask& mask) {
    require_same_shape(map, mask);
    ClassAverages out;
    out.excluded_background = mask.background();
    std::map<std::int64_t, double> sums;
    const auto values = map.values();
    const auto labels = mask.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (labels[i] == mask.background()) continue;
        sums[labels[i]] += values[i];
        ++out.per_class[labels[i]].area;
    }
    if (out.per_class.empty()) {
        throw Error(ErrorCode::NoForeground, "mask contains only background");
    }
    for (auto& [label, stat] : out.per_class) {
        stat.alpha = std::clamp(sums[label] / static_cast<double>(stat.area), 0.0, 1.0);
    }
    return out;
}

double wca(const ClassAverages& classes, const std::map<std::int64_t, double>& weights) {
    double total_weight = 0.0;
    double score = 0.0;
    for (const auto& [label, stat] : classes.per_class) {
        const auto it = weights.find(label);
        if (it == weights.end() || it->second < 0.0) {
            throw Error(ErrorCode::InvalidParam, "missing or negative weight for class " + std::to_string(label));
        }
        total_weight += it->second;
        score += it->second * stat.alpha;
    }
    if (std::abs(total_weight - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvalidParam, "class weights must sum to 1");
    }
    return score;
}

double bca(const UncertaintyMap& map, const SegmentationMask& mask) {
    const ClassAverages classes = class_averages(map, mask);
    std::map<std::int64_t, double> weights;
    const double w = 1.0 / static_cast<double>(classes.per_class.size());
    for (const auto& entry : classes.per_class) weights[entry.first] = w;
    return wca(classes, weights);
}

double ica(const UncertaintyMap& map, const SegmentationMask& mask) {
    const ClassAverages classes = class_averages(map, mask);
    std::size_t total_area = 0;
    for (const auto& entry : classes.per_class) total_area += entry.second.area;
    double score = 0.0;
    for (const auto& [label, stat] : classes.per_class) {
        score += static_cast<double>(stat.area) / static_cast<double>(total_area) * stat.alpha;
    }
    return std::clamp(score, 0.0, 1.0);
}

double qfr(const UncertaintyMap& map, const SegmentationMask& mask) {
    require_same_shape(map, mask);
    const std::size_t foreground = mask.foreground_count();
    if (foreground == 0) throw Error(ErrorCode::NoForeground, "mask contains only background");
    // q_FG * N is exactly the foreground count
    return top_k_mean(map.values(), foreground);
}

}  // namespace uagg
