#include "uagg/spatial.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace uagg {

namespace {

// Queen adjacency inside a 3x3 window, each unordered pair once.
constexpr auto kQueenPairs = [] {
    std::array<std::pair<int, int>, 20> pairs{};
    std::size_t n = 0;
    for (int a = 0; a < 9; ++a) {
        for (int b = a + 1; b < 9; ++b) {
            const int dr = b / 3 - a / 3;
            const int dc = b % 3 - a % 3;
            if (dr >= -1 && dr <= 1 && dc >= -1 && dc <= 1) pairs[n++] = {a, b};
        }
    }
    return pairs;
}();

// S0: every unordered pair counts twice in the symmetric weight matrix.
constexpr double kWeightSum = 2.0 * static_cast<double>(kQueenPairs.size());

class PaddedView {
public:
    PaddedView(const UncertaintyMap& map, Padding padding) : map_(map), padding_(padding) {}

    double operator()(long r, long c) const {
        const long rows = static_cast<long>(map_.rows());
        const long cols = static_cast<long>(map_.cols());
        if (r >= 0 && r < rows && c >= 0 && c < cols) {
            return map_(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        }
        if (padding_ == Padding::Ones) return 1.0;
        return map_(static_cast<std::size_t>(std::clamp(r, 0L, rows - 1)),
                    static_cast<std::size_t>(std::clamp(c, 0L, cols - 1)));
    }

    std::array<double, 9> window(long r, long c) const {
        std::array<double, 9> w{};
        for (int k = 0; k < 9; ++k) w[static_cast<std::size_t>(k)] = (*this)(r + k / 3 - 1, c + k % 3 - 1);
        return w;
    }

private:
    const UncertaintyMap& map_;
    Padding padding_;
};

// Sobel magnitude scaled so that a unit step edge has magnitude 1.
double sobel_magnitude(const PaddedView& view, long r, long c) {
    const double gx = (view(r - 1, c + 1) + 2.0 * view(r, c + 1) + view(r + 1, c + 1)) -
                      (view(r - 1, c - 1) + 2.0 * view(r, c - 1) + view(r + 1, c - 1));
    const double gy = (view(r + 1, c - 1) + 2.0 * view(r + 1, c) + view(r + 1, c + 1)) -
                      (view(r - 1, c - 1) + 2.0 * view(r - 1, c) + view(r - 1, c + 1));
    return std::hypot(gx, gy) / 4.0;
}

void validate(const SpatialParams& params) {
    if (!(params.tau > 0.0 && params.tau < 1.0)) {
        throw Error(ErrorCode::InvalidParam, "edge density threshold tau must lie in (0, 1)");
    }
    if (params.bins < 2) {
        throw Error(ErrorCode::InvalidParam, "entropy needs at least 2 bins");
    }
}

void require_same_shape(const UncertaintyMap& map, const WeightMap& weights) {
    if (!weights.weights.same_shape(map.rows(), map.cols())) {
        throw Error(ErrorCode::ShapeMismatch, "weight map and uncertainty map differ in shape");
    }
}

}  // namespace

std::string_view to_string(SpatialMeasure measure) {
    switch (measure) {
        case SpatialMeasure::Moran: return "moran";
        case SpatialMeasure::EdgeDensity: return "eds";
        case SpatialMeasure::Entropy: return "entropy";
    }
    return "unknown";
}

double window_moran(std::span<const double, 9> window) {
    double mean = 0.0;
    for (double v : window) mean += v;
    mean /= 9.0;
    std::array<double, 9> z{};
    double variance = 0.0;
    for (std::size_t k = 0; k < 9; ++k) {
        z[k] = window[k] - mean;
        variance += z[k] * z[k];
    }
    if (variance <= 1e-24) return 1.0;  // flat neighbourhood counts as fully clustered
    double cross = 0.0;
    for (const auto& [a, b] : kQueenPairs) {
        cross += 2.0 * z[static_cast<std::size_t>(a)] * z[static_cast<std::size_t>(b)];
    }
    const double moran = (9.0 / kWeightSum) * cross / variance;
    return std::clamp(moran, 0.0, 1.0);
}

double window_entropy(std::span<const double, 9> window, int bins) {
    std::vector<int> counts(static_cast<std::size_t>(bins), 0);
    for (double v : window) {
        // half-open bins [l, r); the last bin also holds 1.0
        const int bin = std::min(static_cast<int>(std::floor(v * bins)), bins - 1);
        ++counts[static_cast<std::size_t>(std::max(bin, 0))];
    }
    double h = 0.0;
    for (int count : counts) {
        if (count == 0) continue;
        const double p = count / 9.0;
        h -= p * std::log(p);
    }
    return std::clamp(h / std::log(static_cast<double>(bins)), 0.0, 1.0);
}

WeightMap spatial_weight_map(const UncertaintyMap& map, SpatialMeasure measure,
                             const SpatialParams& params) {
    validate(params);
    const PaddedView view(map, params.padding);
    const long rows = static_cast<long>(map.rows());
    const long cols = static_cast<long>(map.cols());
    Grid<double> weights(map.rows(), map.cols(), 0.0);

    switch (measure) {
        case SpatialMeasure::Moran:
            for (long r = 0; r < rows; ++r) {
                for (long c = 0; c < cols; ++c) {
                    const auto w = view.window(r, c);
                    weights(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = window_moran(w);
                }
            }
            break;
        case SpatialMeasure::Entropy:
            for (long r = 0; r < rows; ++r) {
                for (long c = 0; c < cols; ++c) {
                    const auto w = view.window(r, c);
                    weights(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) =
                        window_entropy(w, params.bins);
                }
            }
            break;
        case SpatialMeasure::EdgeDensity: {
            // edge flags on the padded frame [-1, rows] x [-1, cols]
            const long frame_cols = cols + 2;
            std::vector<unsigned char> edge(static_cast<std::size_t>((rows + 2) * frame_cols), 0);
            for (long r = -1; r <= rows; ++r) {
                for (long c = -1; c <= cols; ++c) {
                    edge[static_cast<std::size_t>((r + 1) * frame_cols + (c + 1))] =
                        sobel_magnitude(view, r, c) > params.tau ? 1 : 0;
                }
            }
            for (long r = 0; r < rows; ++r) {
                for (long c = 0; c < cols; ++c) {
                    int count = 0;
                    for (long dr = -1; dr <= 1; ++dr) {
                        for (long dc = -1; dc <= 1; ++dc) {
                            count += edge[static_cast<std::size_t>((r + dr + 1) * frame_cols + (c + dc + 1))];
                        }
                    }
                    weights(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = count / 9.0;
                }
            }
            break;
        }
    }
    return WeightMap{std::move(weights), measure, params};
}

std::pair<UncertaintyMap, UncertaintyMap> spatial_decompose(const UncertaintyMap& map,
                                                            const WeightMap& weights) {
    require_same_shape(map, weights);
    std::vector<double> high(map.size());
    std::vector<double> low(map.size());
    const auto u = map.values();
    const auto w = weights.weights.values();
    for (std::size_t i = 0; i < u.size(); ++i) {
        high[i] = u[i] * w[i];
        low[i] = u[i] - high[i];
    }
    return {UncertaintyMap(Grid<double>(map.rows(), map.cols(), std::move(high))),
            UncertaintyMap(Grid<double>(map.rows(), map.cols(), std::move(low)))};
}

MassRatio smr_checked(const UncertaintyMap& map, const WeightMap& weights) {
    require_same_shape(map, weights);
    const auto u = map.values();
    const auto w = weights.weights.values();
    double mass = 0.0;
    double weighted = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        mass += u[i];
        weighted += u[i] * w[i];
    }
    if (mass <= 0.0) return MassRatio{0.0, true};
    return MassRatio{std::clamp(weighted / mass, 0.0, 1.0), false};
}

double smr(const UncertaintyMap& map, const WeightMap& weights) { return smr_checked(map, weights).value; }

double mor(const UncertaintyMap& map, const SpatialParams& params) {
    return smr(map, spatial_weight_map(map, SpatialMeasure::Moran, params));
}

double eds(const UncertaintyMap& map, const SpatialParams& params) {
    return smr(map, spatial_weight_map(map, SpatialMeasure::EdgeDensity, params));
}

double ent(const UncertaintyMap& map, const SpatialParams& params) {
    return smr(map, spatial_weight_map(map, SpatialMeasure::Entropy, params));
}

}  // namespace uagg
