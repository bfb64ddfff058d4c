#pragma once

#include <string_view>
#include <utility>

#include "uagg/core.hpp"

namespace uagg {

enum class SpatialMeasure { Moran, EdgeDensity, Entropy };

std::string_view to_string(SpatialMeasure measure);

/// How the 3x3 window sees pixels outside the map.
enum class Padding {
    Replicate,  ///< nearest border pixel (default)
    Ones,       ///< constant 1
};

struct SpatialParams {
    double tau = 0.2;        ///< gradient threshold of the edge density score, in (0, 1)
    int bins = 4;            ///< histogram bins of the local entropy, >= 2
    Padding padding = Padding::Replicate;
};

/// Local spatial measure per pixel, each in [0, 1].
struct WeightMap {
    Grid<double> weights;
    SpatialMeasure measure = SpatialMeasure::Moran;
    SpatialParams params;
};

/// Computes the 3x3 sliding-window measure for every pixel. Throws InvalidParam.
WeightMap spatial_weight_map(const UncertaintyMap& map, SpatialMeasure measure,
                             const SpatialParams& params = {});

/// Splits map into (map * W, map * (1 - W)).
std::pair<UncertaintyMap, UncertaintyMap> spatial_decompose(const UncertaintyMap& map,
                                                            const WeightMap& weights);

struct MassRatio {
    double value = 0.0;
    bool zero_mass = false;  ///< map had no uncertainty mass; value is 0 by convention
};

MassRatio smr_checked(const UncertaintyMap& map, const WeightMap& weights);

/// Spatial mass ratio sum(u * w) / sum(u); 0 for a zero map.
double smr(const UncertaintyMap& map, const WeightMap& weights);

double mor(const UncertaintyMap& map, const SpatialParams& params = {});
double eds(const UncertaintyMap& map, const SpatialParams& params = {});
double ent(const UncertaintyMap& map, const SpatialParams& params = {});

// Window-level measures, exposed for testing. `window` holds 9 values in row-major order.
double window_moran(std::span<const double, 9> window);
double window_entropy(std::span<const double, 9> window, int bins);

}  // namespace uagg
