#pragma once

#include <cstdint>
#include <map>

#include "uagg/core.hpp"

namespace uagg {

/// Mean uncertainty and pixel area of one predicted class.
struct ClassStat {
    double alpha = 0.0;
    std::size_t area = 0;
};

/// Per-class statistics of all non-background classes present in a mask.
struct ClassAverages {
    std::map<std::int64_t, ClassStat> per_class;
    std::int64_t excluded_background = 0;
};

// Pixelwise strategies.
double avg(const UncertaintyMap& map);

/// Maximum over all fully contained patch x patch windows (stride 1) of the window mean.
double plm(const UncertaintyMap& map, std::size_t patch);

/// Mean of the values strictly above threshold; 0 when no value qualifies.
double ata(const UncertaintyMap& map, double threshold);

/// Mean of the ceil((1 - q) * N) largest values.
double aqa(const UncertaintyMap& map, double quantile);

// Prediction-based strategies. All throw ShapeMismatch for mismatched inputs and
// NoForeground when the mask contains background only.
ClassAverages class_averages(const UncertaintyMap& map, const SegmentationMask& mask);

/// Weighted class average; weights keyed by class id, must cover every present class and sum to 1.
double wca(const ClassAverages& classes, const std::map<std::int64_t, double>& weights);

double bca(const UncertaintyMap& map, const SegmentationMask& mask);
double ica(const UncertaintyMap& map, const SegmentationMask& mask);

/// Mean of the top ceil(q_FG * N) values of the whole map, q_FG being the foreground fraction.
double qfr(const UncertaintyMap& map, const SegmentationMask& mask);

/// Mean of the k largest values; k in [1, N].
double top_k_mean(std::span<const double> values, std::size_t k);

}  // namespace uagg
