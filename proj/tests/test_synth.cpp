#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "uagg/intensity.hpp"
#include "uagg/spatial.hpp"
#include "uagg/synth.hpp"

using namespace uagg;

namespace {
double population_mean(const std::vector<BenchmarkSample>& s, std::size_t population) {
    double sum = 0.0;
    int n = 0;
    for (const auto& x : s) {
        if (x.population != population) continue;
        sum += avg(x.map);
        ++n;
    }
    return sum / n;
}

BenchmarkSpec noise_vs_blob() {
    BenchmarkSpec spec;
    spec.iid.pattern = Pattern::Noise;
    spec.iid.mean = 0.09;
    spec.iid.amplitude = 0.09;
    spec.iid_jitter.level = 0.02;
    spec.ood.pattern = Pattern::Blob;
    spec.ood.radius = 11.4;
    spec.ood_jitter.radius = 1.5;
    spec.ood_jitter.center = 8;
    spec.seed = 42;
    return spec;
}
}  // namespace

TEST_CASE("constant pattern") {
    SynthSpec s;
    s.pattern = Pattern::Constant;
    s.level = 0.3;
    s.rows = s.cols = 8;
    const auto m = generate(s);
    CHECK(avg(m) == doctest::Approx(0.3));
    CHECK(eds(m) == 0.0);
    CHECK(ent(m) == 0.0);
}

TEST_CASE("blob covering ten percent matches a constant mean") {
    SynthSpec blob;
    blob.pattern = Pattern::Blob;
    blob.rows = blob.cols = 64;
    blob.high = 0.9;
    blob.low = 0.0;
    // radius whose pixel disk is closest to 10% of the map
    double best_radius = 11.0, best_gap = 1.0;
    for (double r = 11.0; r <= 12.0; r += 0.01) {
        blob.radius = r;
        const double gap = std::abs(avg(generate(blob)) / 0.9 - 0.1);
        if (gap < best_gap) {
            best_gap = gap;
            best_radius = r;
        }
    }
    blob.radius = best_radius;
    const auto b = generate(blob);
    CHECK(std::abs(avg(b) - 0.09) < 1e-3);
    SynthSpec noise;
    noise.pattern = Pattern::Noise;
    noise.mean = 0.09;
    noise.amplitude = 0.09;
    noise.seed = 1;
    CHECK(mor(b) > mor(generate(noise)) + 0.5);
}

TEST_CASE("patterns have the documented shapes") {
    SynthSpec ring;
    ring.pattern = Pattern::Ring;
    ring.rows = ring.cols = 33;
    ring.radius = 10;
    ring.thickness = 2;
    const auto r = generate(ring);
    CHECK(r(16, 16) == ring.low);
    CHECK(r(16, 26) == ring.high);
    CHECK(r(0, 0) == ring.low);

    SynthSpec cb;
    cb.pattern = Pattern::Checkerboard;
    cb.rows = cb.cols = 8;
    cb.period = 2;
    const auto c = generate(cb);
    CHECK(c(0, 0) == cb.high);
    CHECK(c(0, 2) == cb.low);
    CHECK(c(2, 2) == cb.high);

    SynthSpec noise;
    noise.pattern = Pattern::Noise;
    noise.mean = 0.95;
    noise.amplitude = 0.2;
    for (double v : generate(noise).values()) {
        CHECK(v >= 0.75);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("generation is deterministic") {
    SynthSpec s;
    s.pattern = Pattern::Noise;
    s.seed = 77;
    s.texture = 0.05;
    CHECK(generate(s) == generate(s));
    auto t = s;
    t.seed = 78;
    CHECK_FALSE(generate(s) == generate(t));
}

TEST_CASE("mask geometry") {
    SynthSpec s;
    s.pattern = Pattern::Blob;
    s.rows = s.cols = 21;
    s.radius = 5;
    const auto m = generate_mask(s);
    CHECK(m(10, 10) == 1);
    CHECK(m(10, 15) == 2);
    CHECK(m(0, 0) == 0);
}

TEST_CASE("matched-mean benchmark") {
    auto spec = noise_vs_blob();
    spec.match_mean = true;
    const auto samples = gen_benchmark(spec);
    REQUIRE(samples.size() == 100);
    CHECK(samples.front().sample_id == "iid00_00000");
    CHECK(samples.back().sample_id == "ood01_00049");
    CHECK(samples.front().ood_label == 0);
    CHECK(samples.back().ood_label == 1);
    CHECK(std::abs(population_mean(samples, 0) - population_mean(samples, 1)) < 0.01);
    for (const auto& s : samples) REQUIRE(s.mask.has_value());
}

TEST_CASE("benchmark determinism") {
    const auto a = gen_benchmark(noise_vs_blob());
    const auto b = gen_benchmark(noise_vs_blob());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].map == b[i].map);
        CHECK(a[i].risk == b[i].risk);
    }
}

TEST_CASE("ladder mode") {
    BenchmarkSpec spec;
    spec.n_iid = 20;
    spec.iid.pattern = Pattern::Blob;
    spec.iid.high = 0.6;
    spec.iid.low = 0.05;
    spec.iid_jitter.radius = 2;
    spec.ladder = {0.0, 0.25, 0.5, 0.75, 1.0};
    spec.seed = 5;
    const auto samples = gen_benchmark(spec);
    REQUIRE(samples.size() == 100);
    double previous = -1.0;
    for (std::size_t step = 0; step < 5; ++step) {
        const double m = population_mean(samples, step);
        CHECK(m > previous);
        previous = m;
    }
    // the same base map grows elementwise along the ladder
    for (std::size_t step = 1; step < 5; ++step) {
        const auto& lo = samples[(step - 1) * 20 + 3].map;
        const auto& hi = samples[step * 20 + 3].map;
        for (std::size_t i = 0; i < lo.size(); ++i) CHECK(hi.values()[i] >= lo.values()[i]);
    }
    CHECK(samples[0].ood_label == 0);
    CHECK(samples[20].ood_label == 1);
    CHECK(samples[20].sample_id == "step01_00000");
}

TEST_CASE("invalid benchmark specs") {
    auto spec = noise_vs_blob();
    spec.n_ood = 0;
    CHECK_THROWS_AS(gen_benchmark(spec), Error);
    spec = noise_vs_blob();
    spec.n_iid = 0;
    CHECK_THROWS_AS(gen_benchmark(spec), Error);
    SynthSpec s;
    s.rows = 0;
    CHECK_THROWS_AS(generate(s), Error);
    CHECK_THROWS_AS(parse_pattern("spiral"), Error);
}

TEST_CASE("benchmark spec from JSON") {
    const auto spec = benchmark_spec_from_json(R"({"n_iid": 7, "n_ood": 3, "seed": 9, "match_mean": true,
        "iid": {"pattern": "noise", "mean": 0.2}, "ood": {"pattern": "ring", "radius": 6},
        "ladder": [0, 0.5]})");
    CHECK(spec.n_iid == 7);
    CHECK(spec.n_ood == 3);
    CHECK(spec.seed == 9);
    CHECK(spec.match_mean);
    CHECK(spec.iid.pattern == Pattern::Noise);
    CHECK(spec.iid.mean == 0.2);
    CHECK(spec.ood.pattern == Pattern::Ring);
    CHECK(spec.ood.radius == 6);
    CHECK(spec.ladder.size() == 2);
    CHECK_THROWS_AS(benchmark_spec_from_json("[1,2"), Error);
}
