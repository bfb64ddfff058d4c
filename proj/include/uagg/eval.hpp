#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uagg/core.hpp"

namespace uagg {

/// Rank-based AUROC with half credit for ties; label 1 = OoD (positive).
/// Throws LengthMismatch or SingleClass.
double auroc(std::span<const double> scores, std::span<const int> labels);

enum class DiceMode { Micro, Macro };

/// Foreground Dice between a prediction and a reference mask. Two masks without any foreground
/// agree perfectly and score 1.
double dice(const SegmentationMask& pred, const SegmentationMask& gt, DiceMode mode);

struct RiskCoveragePoint {
    double coverage = 0.0;
    double selective_risk = 0.0;
};

/// Points ordered by ascending threshold, i.e. strictly decreasing coverage starting at 1.
struct RiskCoverageCurve {
    std::vector<RiskCoveragePoint> points;
    std::vector<double> thresholds;
};

/// Selective risk and coverage at every distinct confidence value. Throws LengthMismatch or Empty.
RiskCoverageCurve risk_coverage(std::span<const double> risks, std::span<const double> confidences);

/// Trapezoidal area over consecutive curve points.
double aurc(const RiskCoverageCurve& curve);

/// AURC of the given confidences minus AURC of the risk-oracle ordering.
double eaurc(std::span<const double> risks, std::span<const double> confidences);

struct EvalRecord {
    std::string sample_id;
    FeatureVector scores;
    std::optional<int> ood_label;
    std::optional<double> risk;
};

enum class Metric { Auroc, Eaurc };

std::string to_string(Metric metric);
Metric parse_metric(const std::string& text);

enum class Direction { HigherBetter, LowerBetter };

Direction direction_of(Metric metric);

struct BootstrapResult {
    double mean = 0.0;
    double std = 0.0;  ///< population standard deviation of the samples
    std::vector<double> samples;
};

/// Metric of one strategy's scores over B resamples with replacement. Confidences for E-AURC are
/// the negated scores. Resample b draws from stream b of the seed, so the same seed yields the same
/// resample indices for every strategy.
BootstrapResult bootstrap_metric(const std::vector<EvalRecord>& records, const std::string& strategy,
                                 Metric metric, int resamples, std::uint64_t seed);

/// Metric on the full record set without resampling.
double evaluate_metric(const std::vector<EvalRecord>& records, const std::string& strategy, Metric metric);

/// One-sided Wilcoxon signed-rank p-value for H1: median difference > 0.
/// Zero differences are discarded. Exact null distribution for n <= 25, otherwise the normal
/// approximation with tie correction and continuity correction.
/// Throws AllZeroDifferences when nothing is left.
double wilcoxon_one_sided(std::span<const double> differences);
double wilcoxon_one_sided(std::span<const double> a, std::span<const double> b);

/// Average ranks (1 = best, ties averaged) within each table, averaged across tables.
/// Throws StrategySetMismatch when tables disagree on their strategy set.
std::map<std::string, double> mean_rank(const std::vector<std::map<std::string, double>>& tables,
                                        Direction direction);

struct SignificanceMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<double>> p_values;  ///< [a][b]: evidence that a outperforms b
};

/// Pairwise one-sided tests over paired bootstrap samples. Comparisons without any non-zero
/// difference (e.g. the diagonal) are reported as 1.
SignificanceMatrix significance_matrix(const std::vector<std::string>& names,
                                       const std::vector<std::vector<double>>& samples, Direction direction);

}  // namespace uagg
