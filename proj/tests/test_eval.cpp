#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "oracles.hpp"
#include "uagg/eval.hpp"

using namespace uagg;

namespace {
EvalRecord record(const std::string& id, double score, std::optional<int> label, std::optional<double> risk) {
    return EvalRecord{id, FeatureVector({"s"}, {score}), label, risk};
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Empty;
}
}  // namespace

TEST_CASE("AUROC examples") {
    CHECK(auroc(std::vector<double>{0.1, 0.2, 0.3, 0.4}, std::vector<int>{0, 0, 1, 1}) == 1.0);
    CHECK(auroc(std::vector<double>{0.3, 0.3, 0.3, 0.3}, std::vector<int>{0, 1, 0, 1}) == 0.5);
    CHECK(auroc(std::vector<double>{0.1, 0.1, 0.2, 0.3}, std::vector<int>{0, 1, 0, 1}) == 0.625);
    CHECK(code_of([] { auroc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}); }) == ErrorCode::SingleClass);
    CHECK(code_of([] { auroc(std::vector<double>{0.1}, std::vector<int>{1, 0}); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("AUROC equals the pairwise oracle") {
    CounterRng rng(100);
    for (int t = 0; t < 2000; ++t) {
        const std::size_t n = 2 + rng.below(49);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng.below(t % 2 ? 5 : 1000)) / 10.0;  // half the cases are tie-heavy
            y[i] = static_cast<int>(rng.below(2));
        }
        y[0] = 0;
        y[1] = 1;
        REQUIRE(auroc(s, y) == doctest::Approx(oracle::auroc_pairs(s, y)).epsilon(1e-12));
    }
}

TEST_CASE("Dice") {
    const auto a = oracle::mask_of(1, 4, {1, 1, 2, 0});
    const auto p = oracle::mask_of(1, 4, {1, 0, 2, 2});
    CHECK(dice(a, a, DiceMode::Micro) == 1.0);
    CHECK(dice(a, a, DiceMode::Macro) == 1.0);
    CHECK(dice(p, a, DiceMode::Micro) == doctest::Approx(2.0 / 3.0));
    CHECK(dice(p, a, DiceMode::Macro) == doctest::Approx(2.0 / 3.0));
    const auto left = oracle::mask_of(1, 4, {1, 1, 0, 0});
    const auto right = oracle::mask_of(1, 4, {0, 0, 1, 1});
    CHECK(dice(left, right, DiceMode::Micro) == 0.0);
    CHECK(dice(left, right, DiceMode::Macro) == 0.0);
    const auto empty = oracle::mask_of(1, 4, {0, 0, 0, 0});
    CHECK(dice(empty, empty, DiceMode::Micro) == 1.0);
    CHECK(dice(empty, empty, DiceMode::Macro) == 1.0);
}

TEST_CASE("risk-coverage curve") {
    const std::vector<double> risks{0.0, 0.2, 0.4}, conf{3, 2, 1};
    const auto curve = risk_coverage(risks, conf);
    REQUIRE(curve.points.size() == 3);
    CHECK(curve.points[0].coverage == 1.0);
    CHECK(curve.points[0].selective_risk == doctest::Approx(0.2));
    CHECK(curve.points[1].coverage == doctest::Approx(2.0 / 3.0));
    CHECK(curve.points[1].selective_risk == doctest::Approx(0.1));
    CHECK(curve.points[2].coverage == doctest::Approx(1.0 / 3.0));
    CHECK(curve.points[2].selective_risk == doctest::Approx(0.0));
    CHECK(std::abs(aurc(curve) - 0.2 / 3.0) < 1e-9);
    CHECK(std::abs(aurc(curve) - 0.06667) < 1e-5);

    const auto flat = risk_coverage(risks, std::vector<double>{1, 1, 1});
    REQUIRE(flat.points.size() == 1);
    CHECK(flat.points[0].coverage == 1.0);
    CHECK(flat.points[0].selective_risk == doctest::Approx(0.2));
    CHECK(aurc(flat) == 0.0);

    const auto zero = risk_coverage(std::vector<double>{0, 0, 0, 0}, std::vector<double>{4, 1, 3, 2});
    for (const auto& p : zero.points) CHECK(p.selective_risk == 0.0);
    CHECK(aurc(zero) == 0.0);
}

TEST_CASE("E-AURC") {
    const std::vector<double> risks{0.0, 0.2, 0.4};
    CHECK(eaurc(risks, std::vector<double>{3, 2, 1}) == doctest::Approx(0.0));
    const double worst = oracle::aurc_bruteforce(risks, {0.0, 0.2, 0.4});
    const double best = oracle::aurc_bruteforce(risks, {3, 2, 1});
    CHECK(eaurc(risks, risks) == doctest::Approx(worst - best));
    CHECK(eaurc(std::vector<double>{0.3, 0.3, 0.3}, std::vector<double>{1, 5, 2}) == doctest::Approx(0.0));
}

TEST_CASE("E-AURC is zero for a perfect ordering with duplicated samples") {
    // duplicates tie in both risk and confidence, as in a bootstrap resample
    const std::vector<double> risks{0.0, 0.0, 0.1, 0.4, 0.4, 0.4, 0.9};
    const std::vector<double> conf{1.0, 1.0, 0.8, 0.5, 0.5, 0.5, 0.1};
    CHECK(eaurc(risks, conf) == doctest::Approx(0.0).epsilon(1e-15));
    const std::vector<double> worse{1.0, 1.0, 0.8, 0.5, 0.5, 0.5, 0.9};
    CHECK(eaurc(risks, worse) > 0.0);
}

TEST_CASE("AURC and E-AURC match brute force on tie-free confidences") {
    CounterRng rng(7);
    for (int t = 0; t < 500; ++t) {
        const std::size_t n = 1 + rng.below(40);
        std::vector<double> risk(n), conf(n), oracle_conf(n);
        for (std::size_t i = 0; i < n; ++i) {
            risk[i] = static_cast<double>(rng.below(6)) / 5.0;
            conf[i] = rng.uniform();
            oracle_conf[i] = -risk[i] - 1e-6 * static_cast<double>(i);
        }
        const double direct = aurc(risk_coverage(risk, conf));
        REQUIRE(direct == doctest::Approx(oracle::aurc_bruteforce(risk, conf)).epsilon(1e-12));
        const double e = eaurc(risk, conf);
        CHECK(e >= -1e-12);
        CHECK(e == doctest::Approx(direct - oracle::aurc_bruteforce(risk, oracle_conf)).epsilon(1e-10));
    }
}

TEST_CASE("bootstrap") {
    std::vector<EvalRecord> recs;
    CounterRng rng(2);
    for (int i = 0; i < 100; ++i) {
        recs.push_back(record("s" + std::to_string(i), rng.uniform() + (i % 2) * 0.3, i % 2, rng.uniform()));
    }
    const auto a = bootstrap_metric(recs, "s", Metric::Auroc, 500, 11);
    CHECK(a.samples.size() == 500);
    const auto b = bootstrap_metric(recs, "s", Metric::Auroc, 500, 11);
    CHECK(a.samples == b.samples);
    double mean = 0.0;
    for (double v : a.samples) mean += v / 500.0;
    CHECK(a.mean == doctest::Approx(mean));
    double var = 0.0;
    for (double v : a.samples) var += (v - mean) * (v - mean) / 500.0;
    CHECK(a.std == doctest::Approx(std::sqrt(var)));
    CHECK(a.mean == doctest::Approx(evaluate_metric(recs, "s", Metric::Auroc)).epsilon(0.05));

    std::vector<EvalRecord> ties;
    for (int i = 0; i < 40; ++i) ties.push_back(record("t" + std::to_string(i), 0.5, i % 2, 0.1));
    const auto flat = bootstrap_metric(ties, "s", Metric::Auroc, 200, 3);
    for (double v : flat.samples) CHECK(v == 0.5);
    CHECK(flat.std == 0.0);

    const auto fd = bootstrap_metric(recs, "s", Metric::Eaurc, 50, 1);
    CHECK(fd.samples.size() == 50);
    std::vector<EvalRecord> no_label{record("x", 0.1, std::nullopt, 0.1), record("y", 0.2, std::nullopt, 0.3)};
    CHECK(code_of([&] { bootstrap_metric(no_label, "s", Metric::Auroc, 5, 1); }) == ErrorCode::MissingColumn);
}

TEST_CASE("bootstrap resamples are shared across strategies") {
    std::vector<EvalRecord> recs;
    CounterRng rng(4);
    for (int i = 0; i < 30; ++i) {
        const double s = rng.uniform();
        recs.push_back(EvalRecord{"r" + std::to_string(i), FeatureVector({"a", "b"}, {s, s}), i % 2, 0.0});
    }
    CHECK(bootstrap_metric(recs, "a", Metric::Auroc, 100, 5).samples ==
          bootstrap_metric(recs, "b", Metric::Auroc, 100, 5).samples);
}

TEST_CASE("Wilcoxon examples") {
    CHECK(wilcoxon_one_sided(std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5}) == 0.03125);
    CHECK(wilcoxon_one_sided(std::vector<double>{0.7}) == 0.5);
    const std::vector<double> a{0.1, 0.2, 0.3};
    CHECK(code_of([&] { wilcoxon_one_sided(a, a); }) == ErrorCode::AllZeroDifferences);
}

TEST_CASE("exact Wilcoxon matches enumeration") {
    CounterRng rng(12);
    for (int t = 0; t < 400; ++t) {
        const std::size_t n = 1 + rng.below(12);
        std::vector<double> d(n);
        for (auto& x : d) x = (static_cast<double>(rng.below(9)) - 4.0) / 4.0;  // ties and zeros
        if (std::all_of(d.begin(), d.end(), [](double x) { return x == 0.0; })) d[0] = 0.5;
        REQUIRE(wilcoxon_one_sided(d) == doctest::Approx(oracle::wilcoxon_enumerate(d)).epsilon(1e-12));
    }
}

TEST_CASE("Wilcoxon normal branch") {
    std::vector<double> d(30);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = 0.01 * static_cast<double>(i + 1);
    CHECK(wilcoxon_one_sided(d) < 1e-5);
    // symmetric differences sit near 0.5
    std::vector<double> s;
    for (int i = 1; i <= 20; ++i) {
        s.push_back(i);
        s.push_back(-i);
    }
    CHECK(wilcoxon_one_sided(s) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("mean rank") {
    CHECK(mean_rank({{{"a", 0.9}, {"b", 0.7}, {"c", 0.8}}}, Direction::HigherBetter) ==
          std::map<std::string, double>{{"a", 1.0}, {"b", 3.0}, {"c", 2.0}});
    CHECK(mean_rank({{{"a", 0.9}, {"b", 0.8}}, {{"a", 0.8}, {"b", 0.9}}}, Direction::HigherBetter) ==
          std::map<std::string, double>{{"a", 1.5}, {"b", 1.5}});
    CHECK(mean_rank({{{"A", 0.9}, {"B", 0.8}, {"C", 0.8}}}, Direction::HigherBetter) ==
          std::map<std::string, double>{{"A", 1.0}, {"B", 2.5}, {"C", 2.5}});
    CHECK(mean_rank({{{"a", 0.1}, {"b", 0.2}}}, Direction::LowerBetter).at("a") == 1.0);
    CHECK(code_of([] { mean_rank({{{"a", 0.1}}, {{"b", 0.2}}}, Direction::HigherBetter); }) ==
          ErrorCode::StrategySetMismatch);
}

TEST_CASE("significance matrix") {
    CounterRng rng(13);
    std::vector<double> a(30), b(30);
    for (int i = 0; i < 30; ++i) {
        b[i] = rng.uniform(0.5, 0.7);
        a[i] = b[i] + rng.uniform(0.01, 0.1);
    }
    const auto m = significance_matrix({"A", "B"}, {a, b}, Direction::HigherBetter);
    CHECK(m.p_values[0][0] == 1.0);
    CHECK(m.p_values[0][1] < 1e-5);
    CHECK(m.p_values[1][0] > 0.99);
    const auto lower = significance_matrix({"A", "B"}, {a, b}, Direction::LowerBetter);
    CHECK(lower.p_values[1][0] < 1e-5);

    // A discrete null puts mass on the observed statistic, so both directions can exceed 0.5
    // only when W+ sits exactly at the centre n(n+1)/4.
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 5 + rng.below(40);
        std::vector<double> x(n), y(n), d(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.uniform();
            y[i] = rng.uniform();
            d[i] = x[i] - y[i];
        }
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(d[a]) < std::abs(d[b]); });
        double w_plus = 0.0;
        for (std::size_t k = 0; k < n; ++k) w_plus += d[order[k]] > 0 ? static_cast<double>(k + 1) : 0.0;
        const double centre = static_cast<double>(n * (n + 1)) / 4.0;
        const auto r = significance_matrix({"x", "y"}, {x, y}, Direction::HigherBetter);
        const double lo = std::min(r.p_values[0][1], r.p_values[1][0]);
        if (w_plus != centre) {
            CHECK(lo <= 0.5);
        } else {
            CHECK(r.p_values[0][1] == doctest::Approx(r.p_values[1][0]));
        }
    }
}

TEST_CASE("metric names") {
    CHECK(parse_metric("auroc") == Metric::Auroc);
    CHECK(parse_metric("eaurc") == Metric::Eaurc);
    CHECK(to_string(Metric::Eaurc) == "eaurc");
    CHECK(direction_of(Metric::Eaurc) == Direction::LowerBetter);
    CHECK_THROWS_AS(parse_metric("dice"), Error);
}
