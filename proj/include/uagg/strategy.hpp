#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "uagg/core.hpp"
#include "uagg/spatial.hpp"

namespace uagg {

enum class StrategyKind { Avg, Plm, Ata, Aqa, Bca, Ica, Qfr, Mor, Eds, Ent };

/// One aggregation strategy with its parameter, identified by a canonical string such as
/// "avg", "plm:20", "ata:0.5", "aqa:0.75", "bca", "ica", "qfr", "mor", "eds", "eds:0.4", "ent:8".
struct Strategy {
    StrategyKind kind = StrategyKind::Avg;
    double param = 0.0;  ///< patch, threshold, quantile, tau or bin count, depending on kind

    std::string id() const;
    bool needs_mask() const noexcept;
    bool is_spatial() const noexcept;

    /// Throws MaskRequired if a prediction-based strategy gets no mask.
    double evaluate(const UncertaintyMap& map, const SegmentationMask* mask = nullptr,
                    Padding padding = Padding::Replicate) const;

    friend bool operator==(const Strategy&, const Strategy&) = default;
};

/// Parses and range-checks one identifier. Throws UnknownStrategy or InvalidParam.
Strategy parse_strategy(std::string_view text);

/// Comma-separated list; identifiers must be unique after canonicalization.
std::vector<Strategy> parse_strategy_list(std::string_view text);

std::string canonical_id(std::string_view text);

/// avg, plm:10/20/50, ata:0.3/0.5/0.7, aqa:0.6/0.75/0.9, bca, ica, qfr
const std::vector<std::string>& intensity_strategy_ids();
/// mor, eds, ent
const std::vector<std::string>& spatial_strategy_ids();
/// intensity followed by spatial, 16 identifiers
const std::vector<std::string>& all_strategy_ids();

/// Evaluates each strategy on one map.
FeatureVector compute_features(const std::vector<Strategy>& strategies, const UncertaintyMap& map,
                               const SegmentationMask* mask = nullptr,
                               Padding padding = Padding::Replicate);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

}  // namespace uagg
