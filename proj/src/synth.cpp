#include "uagg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "uagg/intensity.hpp"
#include "uagg/rng.hpp"

namespace uagg {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::InvalidSpec, what);
}

bool unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

void validate(const SynthSpec& s) {
    require(s.rows >= 1 && s.cols >= 1, "map shape must be at least 1x1");
    require(unit(s.level) && unit(s.mean) && unit(s.high) && unit(s.low), "levels must lie in [0, 1]");
    require(std::isfinite(s.amplitude) && s.amplitude >= 0.0, "noise amplitude must be >= 0");
    require(std::isfinite(s.radius) && s.radius > 0.0, "radius must be positive");
    require(std::isfinite(s.thickness) && s.thickness > 0.0, "ring thickness must be positive");
    require(s.period >= 1, "checkerboard period must be >= 1");
    require(std::isfinite(s.texture) && s.texture >= 0.0, "texture must be >= 0");
    require(std::isfinite(s.center_row) && std::isfinite(s.center_col), "centre must be finite");
}

double centre_or_default(double c, std::size_t extent) {
    return c < 0.0 ? (static_cast<double>(extent) - 1.0) / 2.0 : c;
}

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

SynthSpec jittered(SynthSpec base, const Jitter& jitter, CounterRng& rng) {
    base.radius = std::max(1.0, base.radius + rng.uniform(-jitter.radius, jitter.radius));
    base.center_row = centre_or_default(base.center_row, base.rows) + rng.uniform(-jitter.center, jitter.center);
    base.center_col = centre_or_default(base.center_col, base.cols) + rng.uniform(-jitter.center, jitter.center);
    const double shift = rng.uniform(-jitter.level, jitter.level);
    base.level = clip01(base.level + shift);
    base.mean = clip01(base.mean + shift);
    base.high = clip01(base.high + shift);
    base.seed = rng();
    return base;
}

std::string make_id(const char* prefix, std::size_t population, std::size_t index) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s%02zu_%05zu", prefix, population, index);
    return buf;
}

double draw_risk(const RiskModel& model, double intensity, CounterRng rng) {
    return clip01(model.base + model.beta * intensity + model.noise * rng.normal());
}

UncertaintyMap scaled(const UncertaintyMap& map, double factor) {
    Grid<double> g = map.grid();
    for (double& v : g.values()) v = clip01(v * factor);
    return UncertaintyMap(std::move(g));
}

}  // namespace

std::string to_string(Pattern pattern) {
    switch (pattern) {
        case Pattern::Constant: return "constant";
        case Pattern::Noise: return "noise";
        case Pattern::Blob: return "blob";
        case Pattern::Ring: return "ring";
        case Pattern::Checkerboard: return "checkerboard";
    }
    return "constant";
}

Pattern parse_pattern(const std::string& text) {
    for (Pattern p : {Pattern::Constant, Pattern::Noise, Pattern::Blob, Pattern::Ring, Pattern::Checkerboard}) {
        if (to_string(p) == text) return p;
    }
    throw Error(ErrorCode::InvalidSpec, "unknown pattern '" + text + "'");
}

UncertaintyMap generate(const SynthSpec& spec) {
    validate(spec);
    Grid<double> g(spec.rows, spec.cols, 0.0);
    CounterRng rng(spec.seed);
    const double cr = centre_or_default(spec.center_row, spec.rows);
    const double cc = centre_or_default(spec.center_col, spec.cols);
    for (std::size_t r = 0; r < spec.rows; ++r) {
        for (std::size_t c = 0; c < spec.cols; ++c) {
            const double dist = std::hypot(static_cast<double>(r) - cr, static_cast<double>(c) - cc);
            double v = 0.0;
            switch (spec.pattern) {
                case Pattern::Constant: v = spec.level; break;
                case Pattern::Noise: v = spec.mean + rng.uniform(-spec.amplitude, spec.amplitude); break;
                case Pattern::Blob: v = dist <= spec.radius ? spec.high : spec.low; break;
                case Pattern::Ring:
                    v = std::abs(dist - spec.radius) <= spec.thickness / 2.0 ? spec.high : spec.low;
                    break;
                case Pattern::Checkerboard:
                    v = ((r / spec.period) + (c / spec.period)) % 2 == 0 ? spec.high : spec.low;
                    break;
            }
            g(r, c) = clip01(v);
        }
    }
    if (spec.texture > 0.0) {
        CounterRng tex = rng.split(1);
        for (double& v : g.values()) v = clip01(v + tex.uniform(-spec.texture, spec.texture));
    }
    return UncertaintyMap(std::move(g));
}

SegmentationMask generate_mask(const SynthSpec& spec) {
    validate(spec);
    Grid<std::int64_t> labels(spec.rows, spec.cols, 0);
    const double cr = centre_or_default(spec.center_row, spec.rows);
    const double cc = centre_or_default(spec.center_col, spec.cols);
    for (std::size_t r = 0; r < spec.rows; ++r) {
        for (std::size_t c = 0; c < spec.cols; ++c) {
            const double dist = std::hypot(static_cast<double>(r) - cr, static_cast<double>(c) - cc);
            if (dist < spec.radius - 1.0) {
                labels(r, c) = 1;
            } else if (dist <= spec.radius + 1.0) {
                labels(r, c) = 2;
            }
        }
    }
    // the nearest pixel to the centre is always foreground, even for sub-pixel objects
    const auto r0 = static_cast<std::size_t>(std::clamp(std::lround(cr), 0L, static_cast<long>(spec.rows) - 1));
    const auto c0 = static_cast<std::size_t>(std::clamp(std::lround(cc), 0L, static_cast<long>(spec.cols) - 1));
    if (labels(r0, c0) == 0) labels(r0, c0) = 1;
    return SegmentationMask(std::move(labels));
}

std::vector<BenchmarkSample> gen_benchmark(const BenchmarkSpec& spec) {
    require(spec.n_iid >= 1 && spec.n_ood >= 1, "n_iid and n_ood must both be at least 1");
    validate(spec.iid);
    validate(spec.ood);
    for (double s : spec.ladder) require(std::isfinite(s) && s >= 0.0, "ladder intensities must be >= 0");
    const CounterRng root(spec.seed);
    std::vector<BenchmarkSample> out;

    auto make_sample = [&](const SynthSpec& base, const Jitter& jitter, std::size_t population, std::size_t index,
                           CounterRng stream) {
        const SynthSpec s = jittered(base, jitter, stream);
        BenchmarkSample sample{"", generate(s), std::nullopt, 0, 0.0, 0.0, population, index};
        if (spec.masks) sample.mask = generate_mask(s);
        return sample;
    };

    if (spec.ladder.empty()) {
        for (std::size_t i = 0; i < spec.n_iid; ++i) {
            auto sample = make_sample(spec.iid, spec.iid_jitter, 0, i, root.split(0).split(i));
            sample.sample_id = make_id("iid", 0, i);
            sample.risk = draw_risk(spec.risk, 0.0, root.split(10).split(i));
            out.push_back(std::move(sample));
        }
        const std::size_t first_ood = out.size();
        for (std::size_t i = 0; i < spec.n_ood; ++i) {
            auto sample = make_sample(spec.ood, spec.ood_jitter, 1, i, root.split(1).split(i));
            sample.sample_id = make_id("ood", 1, i);
            sample.ood_label = 1;
            sample.intensity = 1.0;
            sample.risk = draw_risk(spec.risk, 1.0, root.split(11).split(i));
            out.push_back(std::move(sample));
        }
        if (spec.match_mean) {
            double iid_mean = 0.0;
            double ood_mean = 0.0;
            for (std::size_t k = 0; k < first_ood; ++k) iid_mean += avg(out[k].map);
            for (std::size_t k = first_ood; k < out.size(); ++k) ood_mean += avg(out[k].map);
            iid_mean /= static_cast<double>(first_ood);
            ood_mean /= static_cast<double>(out.size() - first_ood);
            require(ood_mean > 0.0, "cannot match means: OoD population has zero uncertainty");
            const double factor = iid_mean / ood_mean;
            for (std::size_t k = first_ood; k < out.size(); ++k) out[k].map = scaled(out[k].map, factor);
        }
        return out;
    }

    for (std::size_t step = 0; step < spec.ladder.size(); ++step) {
        const double s = spec.ladder[step];
        for (std::size_t i = 0; i < spec.n_iid; ++i) {
            auto sample = make_sample(spec.iid, spec.iid_jitter, step, i, root.split(0).split(i));
            CounterRng field = root.split(1000).split(i);
            Grid<double> g = sample.map.grid();
            for (double& v : g.values()) {
                v = clip01(v + s * (spec.perturbation.offset + spec.perturbation.noise * field.uniform()));
            }
            sample.map = UncertaintyMap(std::move(g));
            sample.sample_id = make_id("step", step, i);
            sample.intensity = s;
            sample.ood_label = s > 0.0 ? 1 : 0;
            sample.risk = draw_risk(spec.risk, s, root.split(2000 + step).split(i));
            out.push_back(std::move(sample));
        }
    }
    return out;
}

namespace {

void read_synth(const nlohmann::json& j, SynthSpec& s) {
    if (j.contains("pattern")) s.pattern = parse_pattern(j.at("pattern").get<std::string>());
    if (j.contains("rows")) s.rows = j.at("rows").get<std::size_t>();
    if (j.contains("cols")) s.cols = j.at("cols").get<std::size_t>();
    if (j.contains("size")) s.rows = s.cols = j.at("size").get<std::size_t>();
    if (j.contains("level")) s.level = j.at("level").get<double>();
    if (j.contains("mean")) s.mean = j.at("mean").get<double>();
    if (j.contains("amplitude")) s.amplitude = j.at("amplitude").get<double>();
    if (j.contains("center_row")) s.center_row = j.at("center_row").get<double>();
    if (j.contains("center_col")) s.center_col = j.at("center_col").get<double>();
    if (j.contains("radius")) s.radius = j.at("radius").get<double>();
    if (j.contains("thickness")) s.thickness = j.at("thickness").get<double>();
    if (j.contains("high")) s.high = j.at("high").get<double>();
    if (j.contains("low")) s.low = j.at("low").get<double>();
    if (j.contains("period")) s.period = j.at("period").get<std::size_t>();
    if (j.contains("texture")) s.texture = j.at("texture").get<double>();
}

void read_jitter(const nlohmann::json& j, Jitter& jitter) {
    if (j.contains("radius")) jitter.radius = j.at("radius").get<double>();
    if (j.contains("center")) jitter.center = j.at("center").get<double>();
    if (j.contains("level")) jitter.level = j.at("level").get<double>();
}

}  // namespace

BenchmarkSpec benchmark_spec_from_json(const std::string& text) {
    BenchmarkSpec spec;
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.contains("n_iid")) spec.n_iid = j.at("n_iid").get<std::size_t>();
        if (j.contains("n_ood")) spec.n_ood = j.at("n_ood").get<std::size_t>();
        if (j.contains("iid")) read_synth(j.at("iid"), spec.iid);
        if (j.contains("ood")) read_synth(j.at("ood"), spec.ood);
        if (j.contains("iid_jitter")) read_jitter(j.at("iid_jitter"), spec.iid_jitter);
        if (j.contains("ood_jitter")) read_jitter(j.at("ood_jitter"), spec.ood_jitter);
        if (j.contains("match_mean")) spec.match_mean = j.at("match_mean").get<bool>();
        if (j.contains("ladder")) spec.ladder = j.at("ladder").get<std::vector<double>>();
        if (j.contains("perturbation")) {
            const auto& p = j.at("perturbation");
            if (p.contains("offset")) spec.perturbation.offset = p.at("offset").get<double>();
            if (p.contains("noise")) spec.perturbation.noise = p.at("noise").get<double>();
        }
        if (j.contains("risk")) {
            const auto& r = j.at("risk");
            if (r.contains("base")) spec.risk.base = r.at("base").get<double>();
            if (r.contains("beta")) spec.risk.beta = r.at("beta").get<double>();
            if (r.contains("noise")) spec.risk.noise = r.at("noise").get<double>();
        }
        if (j.contains("masks")) spec.masks = j.at("masks").get<bool>();
        if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidSpec, std::string("benchmark JSON: ") + e.what());
    }
    return spec;
}

}  // namespace uagg
