#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uagg/core.hpp"

namespace uagg {

enum class Pattern { Constant, Noise, Blob, Ring, Checkerboard };

std::string to_string(Pattern pattern);
Pattern parse_pattern(const std::string& text);

/// Parameters of one synthetic uncertainty map. Only the fields of the chosen pattern are used,
/// except `texture`, which adds uniform noise in [-texture, texture] to any pattern.
struct SynthSpec {
    Pattern pattern = Pattern::Constant;
    std::size_t rows = 64;
    std::size_t cols = 64;
    double level = 0.5;              ///< constant
    double mean = 0.5;               ///< noise centre
    double amplitude = 0.1;          ///< noise half-width
    double center_row = -1.0;        ///< blob/ring centre; negative means map centre
    double center_col = -1.0;
    double radius = 8.0;             ///< blob radius, ring mid-radius, mask object radius
    double thickness = 2.0;          ///< ring width
    double high = 0.9;               ///< value inside blob/ring, first checkerboard tile
    double low = 0.0;                ///< value elsewhere, second checkerboard tile
    std::size_t period = 4;          ///< checkerboard tile size
    double texture = 0.0;
    std::uint64_t seed = 0;
};

/// Deterministic map; values are clipped to [0, 1]. Throws InvalidSpec.
UncertaintyMap generate(const SynthSpec& spec);

/// Object mask matching a spec's geometry: class 1 for the disk interior (distance < radius - 1),
/// class 2 for the boundary band up to radius + 1, background 0 elsewhere.
SegmentationMask generate_mask(const SynthSpec& spec);

/// Per-sample uniform jitter half-widths.
struct Jitter {
    double radius = 0.0;
    double center = 0.0;
    double level = 0.0;  ///< shifts level, mean and high together
};

/// risk = clip(base + beta * intensity + noise * N(0, 1), 0, 1)
struct RiskModel {
    double base = 0.1;
    double beta = 0.5;
    double noise = 0.05;
};

/// Ladder perturbation: u -> clip(u + s * (offset + noise * xi)), xi ~ U[0, 1) fixed per pixel
/// and sample, so every map grows elementwise with the intensity s.
struct Perturbation {
    double offset = 0.05;
    double noise = 0.2;
};

struct BenchmarkSpec {
    std::size_t n_iid = 50;
    std::size_t n_ood = 50;
    SynthSpec iid;
    SynthSpec ood;
    Jitter iid_jitter;
    Jitter ood_jitter;
    bool match_mean = false;  ///< rescale OoD maps so both populations share the mean AVG
    std::vector<double> ladder;  ///< non-empty switches to ladder mode
    Perturbation perturbation;
    RiskModel risk;
    bool masks = true;
    std::uint64_t seed = 0;
};

struct BenchmarkSample {
    std::string sample_id;
    UncertaintyMap map;
    std::optional<SegmentationMask> mask;
    int ood_label = 0;
    double risk = 0.0;
    double intensity = 0.0;
    std::size_t population = 0;  ///< 0 = iD, 1 = OoD, or ladder step index
    std::size_t index = 0;       ///< sample index within its population
};

/// Binary mode: n_iid iD maps (label 0, intensity 0) then n_ood OoD maps (label 1, intensity 1).
/// Ladder mode: one population of n_iid perturbed iD maps per ladder intensity, labelled 1 when
/// the intensity is positive; sample i of every step shares the same base map.
/// Throws InvalidSpec.
std::vector<BenchmarkSample> gen_benchmark(const BenchmarkSpec& spec);

/// Reads a benchmark description from JSON; unspecified fields keep their defaults.
BenchmarkSpec benchmark_spec_from_json(const std::string& text);

}  // namespace uagg
