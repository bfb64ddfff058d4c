#include "uagg/strategy.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "uagg/intensity.hpp"

namespace uagg {

namespace {

constexpr double kDefaultTau = 0.2;
constexpr int kDefaultBins = 4;

struct NameEntry {
    std::string_view name;
    StrategyKind kind;
};

constexpr NameEntry kNames[] = {
    {"avg", StrategyKind::Avg}, {"plm", StrategyKind::Plm}, {"ata", StrategyKind::Ata},
    {"aqa", StrategyKind::Aqa}, {"bca", StrategyKind::Bca}, {"ica", StrategyKind::Ica},
    {"qfr", StrategyKind::Qfr}, {"mor", StrategyKind::Mor}, {"eds", StrategyKind::Eds},
    {"ent", StrategyKind::Ent},
};

std::string_view name_of(StrategyKind kind) {
    for (const auto& entry : kNames) {
        if (entry.kind == kind) return entry.name;
    }
    return "?";
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

double parse_param(std::string_view text, std::string_view whole) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
        throw Error(ErrorCode::InvalidParam, "cannot parse parameter of '" + std::string(whole) + "'");
    }
    return value;
}

bool is_integer(double v) { return std::floor(v) == v; }

}  // namespace

std::string format_number(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

std::string Strategy::id() const {
    const std::string name(name_of(kind));
    switch (kind) {
        case StrategyKind::Plm:
        case StrategyKind::Ata:
        case StrategyKind::Aqa:
            return name + ":" + format_number(param);
        case StrategyKind::Eds:
            return param == kDefaultTau ? name : name + ":" + format_number(param);
        case StrategyKind::Ent:
            return param == kDefaultBins ? name : name + ":" + format_number(param);
        default:
            return name;
    }
}

bool Strategy::needs_mask() const noexcept {
    return kind == StrategyKind::Bca || kind == StrategyKind::Ica || kind == StrategyKind::Qfr;
}

bool Strategy::is_spatial() const noexcept {
    return kind == StrategyKind::Mor || kind == StrategyKind::Eds || kind == StrategyKind::Ent;
}

double Strategy::evaluate(const UncertaintyMap& map, const SegmentationMask* mask, Padding padding) const {
    if (needs_mask() && mask == nullptr) {
        throw Error(ErrorCode::MaskRequired, id() + " needs a segmentation mask");
    }
    SpatialParams spatial;
    spatial.padding = padding;
    switch (kind) {
        case StrategyKind::Avg: return avg(map);
        case StrategyKind::Plm: return plm(map, static_cast<std::size_t>(param));
        case StrategyKind::Ata: return ata(map, param);
        case StrategyKind::Aqa: return aqa(map, param);
        case StrategyKind::Bca: return bca(map, *mask);
        case StrategyKind::Ica: return ica(map, *mask);
        case StrategyKind::Qfr: return qfr(map, *mask);
        case StrategyKind::Mor: return mor(map, spatial);
        case StrategyKind::Eds: spatial.tau = param; return eds(map, spatial);
        case StrategyKind::Ent: spatial.bins = static_cast<int>(param); return ent(map, spatial);
    }
    throw Error(ErrorCode::UnknownStrategy, "unhandled strategy kind");
}

Strategy parse_strategy(std::string_view text) {
    const std::string_view whole = trim(text);
    const auto colon = whole.find(':');
    const std::string_view name = whole.substr(0, colon);
    const bool has_param = colon != std::string_view::npos;
    const std::string_view param_text = has_param ? whole.substr(colon + 1) : std::string_view{};

    Strategy s;
    bool found = false;
    for (const auto& entry : kNames) {
        if (entry.name == name) {
            s.kind = entry.kind;
            found = true;
        }
    }
    if (!found) throw Error(ErrorCode::UnknownStrategy, "unknown strategy '" + std::string(whole) + "'");

    auto reject = [&](const char* why) {
        throw Error(ErrorCode::InvalidParam, "'" + std::string(whole) + "': " + why);
    };
    switch (s.kind) {
        case StrategyKind::Plm:
            if (!has_param) reject("patch size required, e.g. plm:20");
            s.param = parse_param(param_text, whole);
            if (s.param < 1 || !is_integer(s.param)) reject("patch size must be a positive integer");
            break;
        case StrategyKind::Ata:
            if (!has_param) reject("threshold required, e.g. ata:0.5");
            s.param = parse_param(param_text, whole);
            if (!(s.param > 0.0 && s.param < 1.0)) reject("threshold must lie in (0, 1)");
            break;
        case StrategyKind::Aqa:
            if (!has_param) reject("quantile required, e.g. aqa:0.75");
            s.param = parse_param(param_text, whole);
            if (!(s.param > 0.0 && s.param < 1.0)) reject("quantile must lie in (0, 1)");
            break;
        case StrategyKind::Eds:
            s.param = has_param ? parse_param(param_text, whole) : kDefaultTau;
            if (!(s.param > 0.0 && s.param < 1.0)) reject("tau must lie in (0, 1)");
            break;
        case StrategyKind::Ent:
            s.param = has_param ? parse_param(param_text, whole) : kDefaultBins;
            if (s.param < 2 || !is_integer(s.param) || s.param > 1024) reject("bins must be an integer >= 2");
            break;
        default:
            if (has_param) reject("takes no parameter");
            break;
    }
    return s;
}

std::vector<Strategy> parse_strategy_list(std::string_view text) {
    std::vector<Strategy> out;
    std::set<std::string> seen;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        if (!trim(item).empty()) {
            Strategy s = parse_strategy(item);
            if (!seen.insert(s.id()).second) {
                throw Error(ErrorCode::InvalidParam, "strategy " + s.id() + " listed twice");
            }
            out.push_back(s);
        }
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw Error(ErrorCode::EmptyFeatureSet, "no strategies given");
    return out;
}

std::string canonical_id(std::string_view text) { return parse_strategy(text).id(); }

const std::vector<std::string>& intensity_strategy_ids() {
    static const std::vector<std::string> ids = {"avg",     "plm:10",  "plm:20", "plm:50", "ata:0.3",
                                                 "ata:0.5", "ata:0.7", "aqa:0.6", "aqa:0.75", "aqa:0.9",
                                                 "bca",     "ica",     "qfr"};
    return ids;
}

const std::vector<std::string>& spatial_strategy_ids() {
    static const std::vector<std::string> ids = {"mor", "eds", "ent"};
    return ids;
}

const std::vector<std::string>& all_strategy_ids() {
    static const std::vector<std::string> ids = [] {
        std::vector<std::string> v = intensity_strategy_ids();
        v.insert(v.end(), spatial_strategy_ids().begin(), spatial_strategy_ids().end());
        return v;
    }();
    return ids;
}

FeatureVector compute_features(const std::vector<Strategy>& strategies, const UncertaintyMap& map,
                               const SegmentationMask* mask, Padding padding) {
    std::vector<std::string> names;
    std::vector<double> values;
    names.reserve(strategies.size());
    values.reserve(strategies.size());
    for (const auto& s : strategies) {
        names.push_back(s.id());
        values.push_back(s.evaluate(map, mask, padding));
    }
    return FeatureVector(std::move(names), std::move(values));
}

}  // namespace uagg
