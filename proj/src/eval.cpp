#include "uagg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "uagg/rng.hpp"

namespace uagg {

namespace {

// Average 1-based ranks of values in ascending order.
std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

void require_same_length(std::size_t a, std::size_t b) {
    if (a != b) throw Error(ErrorCode::LengthMismatch, std::to_string(a) + " vs " + std::to_string(b) + " entries");
}

std::vector<double> column_of(const std::vector<EvalRecord>& records, const std::string& strategy) {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.scores.at(strategy));
    return out;
}

double metric_on(const std::vector<EvalRecord>& records, std::span<const std::size_t> idx,
                 const std::vector<double>& scores, Metric metric) {
    if (metric == Metric::Auroc) {
        std::vector<double> s;
        std::vector<int> l;
        for (std::size_t i : idx) {
            s.push_back(scores[i]);
            l.push_back(*records[i].ood_label);
        }
        return auroc(s, l);
    }
    std::vector<double> risks;
    std::vector<double> conf;
    for (std::size_t i : idx) {
        risks.push_back(*records[i].risk);
        conf.push_back(-scores[i]);
    }
    return eaurc(risks, conf);
}

void check_prerequisites(const std::vector<EvalRecord>& records, Metric metric) {
    if (records.empty()) throw Error(ErrorCode::Empty, "no records to evaluate");
    for (const auto& r : records) {
        if (metric == Metric::Auroc && !r.ood_label) {
            throw Error(ErrorCode::MissingColumn, "record " + r.sample_id + " has no ood_label");
        }
        if (metric == Metric::Eaurc && !r.risk) {
            throw Error(ErrorCode::MissingColumn, "record " + r.sample_id + " has no risk");
        }
    }
}

bool both_classes(const std::vector<EvalRecord>& records, std::span<const std::size_t> idx) {
    bool pos = false;
    bool neg = false;
    for (std::size_t i : idx) {
        (*records[i].ood_label == 1 ? pos : neg) = true;
        if (pos && neg) return true;
    }
    return false;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
    require_same_length(scores.size(), labels.size());
    std::size_t positives = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw Error(ErrorCode::InvalidParam, "labels must be 0 or 1");
        positives += static_cast<std::size_t>(l);
    }
    const std::size_t negatives = labels.size() - positives;
    if (positives == 0 || negatives == 0) throw Error(ErrorCode::SingleClass, "AUROC needs both classes");
    const std::vector<double> ranks = average_ranks(scores);
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        if (labels[i] == 1) rank_sum += ranks[i];
    }
    const double np = static_cast<double>(positives);
    const double u = rank_sum - np * (np + 1.0) / 2.0;
    return u / (np * static_cast<double>(negatives));
}

double dice(const SegmentationMask& pred, const SegmentationMask& gt, DiceMode mode) {
    if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "prediction and reference masks differ in shape");
    }
    const std::int64_t bg = gt.background();
    const auto p = pred.values();
    const auto g = gt.values();
    if (mode == DiceMode::Micro) {
        std::size_t inter = 0, np = 0, ng = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            np += p[i] != bg;
            ng += g[i] != bg;
            inter += (p[i] != bg && p[i] == g[i]);
        }
        if (np + ng == 0) return 1.0;
        return 2.0 * static_cast<double>(inter) / static_cast<double>(np + ng);
    }
    std::map<std::int64_t, std::array<std::size_t, 3>> counts;  // inter, |pred|, |gt|
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] != bg) ++counts[p[i]][1];
        if (g[i] != bg) ++counts[g[i]][2];
        if (p[i] != bg && p[i] == g[i]) ++counts[p[i]][0];
    }
    if (counts.empty()) return 1.0;
    double sum = 0.0;
    for (const auto& [label, c] : counts) {
        sum += 2.0 * static_cast<double>(c[0]) / static_cast<double>(c[1] + c[2]);
    }
    return sum / static_cast<double>(counts.size());
}

RiskCoverageCurve risk_coverage(std::span<const double> risks, std::span<const double> confidences) {
    require_same_length(risks.size(), confidences.size());
    if (risks.empty()) throw Error(ErrorCode::Empty, "risk-coverage curve needs at least one sample");
    const std::size_t n = risks.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return confidences[a] < confidences[b]; });
    // retained_risk[i]: total risk of samples order[i..n)
    std::vector<double> retained_risk(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) retained_risk[i] = retained_risk[i + 1] + risks[order[i]];

    // Ascending thresholds; at each distinct value every sample with g >= rho is retained.
    RiskCoverageCurve curve;
    std::size_t start = 0;
    while (start < n) {
        const double rho = confidences[order[start]];
        const std::size_t retained = n - start;
        curve.thresholds.push_back(rho);
        curve.points.push_back({static_cast<double>(retained) / static_cast<double>(n),
                                retained_risk[start] / static_cast<double>(retained)});
        while (start < n && confidences[order[start]] == rho) ++start;
    }
    return curve;
}

double aurc(const RiskCoverageCurve& curve) {
    double area = 0.0;
    for (std::size_t r = 1; r < curve.points.size(); ++r) {
        const auto& prev = curve.points[r - 1];
        const auto& cur = curve.points[r];
        area += (prev.coverage - cur.coverage) * (prev.selective_risk + cur.selective_risk) / 2.0;
    }
    return area;
}

double eaurc(std::span<const double> risks, std::span<const double> confidences) {
    const double observed = aurc(risk_coverage(risks, confidences));
    // Oracle: ascending risk, equal risks ordered by the supplied confidence. Oracle ties exist only
    // where both risk and confidence tie, so a perfectly ordered scorer reproduces the oracle curve.
    const std::size_t n = risks.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const auto before = [&](std::size_t a, std::size_t b) {
        if (risks[a] != risks[b]) return risks[a] < risks[b];
        return confidences[a] > confidences[b];
    };
    std::stable_sort(order.begin(), order.end(), before);
    std::vector<double> oracle(n);
    double level = 0.0;
    for (std::size_t pos = 0; pos < n; ++pos) {
        if (pos > 0 && before(order[pos - 1], order[pos])) level -= 1.0;
        oracle[order[pos]] = level;
    }
    return observed - aurc(risk_coverage(risks, oracle));
}

std::string to_string(Metric metric) { return metric == Metric::Auroc ? "auroc" : "eaurc"; }

Metric parse_metric(const std::string& text) {
    if (text == "auroc") return Metric::Auroc;
    if (text == "eaurc") return Metric::Eaurc;
    throw Error(ErrorCode::InvalidParam, "unknown metric '" + text + "'");
}

Direction direction_of(Metric metric) {
    return metric == Metric::Auroc ? Direction::HigherBetter : Direction::LowerBetter;
}

double evaluate_metric(const std::vector<EvalRecord>& records, const std::string& strategy, Metric metric) {
    check_prerequisites(records, metric);
    const std::vector<double> scores = column_of(records, strategy);
    std::vector<std::size_t> idx(records.size());
    std::iota(idx.begin(), idx.end(), 0);
    return metric_on(records, idx, scores, metric);
}

BootstrapResult bootstrap_metric(const std::vector<EvalRecord>& records, const std::string& strategy,
                                 Metric metric, int resamples, std::uint64_t seed) {
    if (resamples < 1) throw Error(ErrorCode::InvalidParam, "need at least one bootstrap resample");
    check_prerequisites(records, metric);
    std::vector<std::size_t> all(records.size());
    std::iota(all.begin(), all.end(), 0);
    if (metric == Metric::Auroc && !both_classes(records, all)) {
        throw Error(ErrorCode::SingleClass, "AUROC needs both classes");
    }
    const std::vector<double> scores = column_of(records, strategy);
    const std::size_t n = records.size();
    const CounterRng root(seed);
    constexpr int kMaxAttempts = 100;

    BootstrapResult out;
    out.samples.reserve(static_cast<std::size_t>(resamples));
    std::vector<std::size_t> idx(n);
    for (int b = 0; b < resamples; ++b) {
        CounterRng rng = root.split(static_cast<std::uint64_t>(b));
        int attempt = 0;
        for (;; ++attempt) {
            for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n));
            if (metric != Metric::Auroc || both_classes(records, idx)) break;
            if (attempt + 1 >= kMaxAttempts) {
                throw Error(ErrorCode::SingleClass, "could not draw a two-class resample in 100 attempts");
            }
        }
        out.samples.push_back(metric_on(records, idx, scores, metric));
    }
    const double b = static_cast<double>(resamples);
    out.mean = std::accumulate(out.samples.begin(), out.samples.end(), 0.0) / b;
    double ss = 0.0;
    for (double v : out.samples) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / b);
    return out;
}

double wilcoxon_one_sided(std::span<const double> differences) {
    std::vector<double> nonzero;
    for (double d : differences) {
        if (d != 0.0) nonzero.push_back(d);
    }
    if (nonzero.empty()) throw Error(ErrorCode::AllZeroDifferences, "all paired differences are zero");
    const std::size_t n = nonzero.size();
    std::vector<double> magnitude(n);
    for (std::size_t i = 0; i < n; ++i) magnitude[i] = std::abs(nonzero[i]);
    const std::vector<double> ranks = average_ranks(magnitude);

    if (n <= 25) {
        // Doubled average ranks are integers; count sign assignments by doubled rank sum.
        std::vector<long> doubled(n);
        long observed = 0;
        long total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            doubled[i] = std::lround(2.0 * ranks[i]);
            total += doubled[i];
            if (nonzero[i] > 0.0) observed += doubled[i];
        }
        std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
        ways[0] = 1.0;
        long reach = 0;
        for (long r : doubled) {
            for (long s = reach; s >= 0; --s) ways[static_cast<std::size_t>(s + r)] += ways[static_cast<std::size_t>(s)];
            reach += r;
        }
        double tail = 0.0;
        for (long s = observed; s <= total; ++s) tail += ways[static_cast<std::size_t>(s)];
        return tail / std::ldexp(1.0, static_cast<int>(n));
    }

    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (nonzero[i] > 0.0) w_plus += ranks[i];
    }
    const double nn = static_cast<double>(n);
    double tie_term = 0.0;
    std::vector<double> sorted = magnitude;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double z = (w_plus - mean - 0.5) / std::sqrt(var);
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

double wilcoxon_one_sided(std::span<const double> a, std::span<const double> b) {
    require_same_length(a.size(), b.size());
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    return wilcoxon_one_sided(diff);
}

std::map<std::string, double> mean_rank(const std::vector<std::map<std::string, double>>& tables,
                                        Direction direction) {
    if (tables.empty()) throw Error(ErrorCode::Empty, "no tables to rank");
    std::map<std::string, double> out;
    for (const auto& [name, value] : tables.front()) out[name] = 0.0;
    for (const auto& table : tables) {
        if (table.size() != out.size()) throw Error(ErrorCode::StrategySetMismatch, "tables list different strategies");
        std::vector<std::string> names;
        std::vector<double> keyed;
        for (const auto& [name, value] : table) {
            if (!out.count(name)) throw Error(ErrorCode::StrategySetMismatch, "strategy " + name + " missing elsewhere");
            names.push_back(name);
            keyed.push_back(direction == Direction::HigherBetter ? -value : value);
        }
        const std::vector<double> ranks = average_ranks(keyed);
        for (std::size_t i = 0; i < names.size(); ++i) out[names[i]] += ranks[i];
    }
    for (auto& entry : out) entry.second /= static_cast<double>(tables.size());
    return out;
}

SignificanceMatrix significance_matrix(const std::vector<std::string>& names,
                                       const std::vector<std::vector<double>>& samples, Direction direction) {
    require_same_length(names.size(), samples.size());
    SignificanceMatrix m;
    m.names = names;
    const std::size_t s = names.size();
    m.p_values.assign(s, std::vector<double>(s, 1.0));
    for (std::size_t a = 0; a < s; ++a) {
        for (std::size_t b = 0; b < s; ++b) {
            require_same_length(samples[a].size(), samples[b].size());
            std::vector<double> diff(samples[a].size());
            for (std::size_t i = 0; i < diff.size(); ++i) {
                diff[i] = direction == Direction::HigherBetter ? samples[a][i] - samples[b][i]
                                                               : samples[b][i] - samples[a][i];
            }
            try {
                m.p_values[a][b] = wilcoxon_one_sided(diff);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::AllZeroDifferences) throw;
                m.p_values[a][b] = 1.0;
            }
        }
    }
    return m;
}

}  // namespace uagg
