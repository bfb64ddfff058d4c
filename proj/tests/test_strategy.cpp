#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "uagg/intensity.hpp"
#include "uagg/strategy.hpp"

using namespace uagg;

namespace {
ErrorCode code_of(std::string_view text) {
    try {
        parse_strategy_list(text);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Empty;
}
}  // namespace

TEST_CASE("canonical identifiers") {
    CHECK(canonical_id("avg") == "avg");
    CHECK(canonical_id("plm:20") == "plm:20");
    CHECK(canonical_id("ata:0.50") == "ata:0.5");
    CHECK(canonical_id("aqa:.75") == "aqa:0.75");
    CHECK(canonical_id("eds:0.2") == "eds");
    CHECK(canonical_id("eds:0.4") == "eds:0.4");
    CHECK(canonical_id("ent:4") == "ent");
    CHECK(canonical_id("ent:8") == "ent:8");
}

TEST_CASE("parse errors") {
    CHECK(code_of("foo") == ErrorCode::UnknownStrategy);
    CHECK(code_of("plm") == ErrorCode::InvalidParam);
    CHECK(code_of("plm:0") == ErrorCode::InvalidParam);
    CHECK(code_of("plm:2.5") == ErrorCode::InvalidParam);
    CHECK(code_of("ata:1") == ErrorCode::InvalidParam);
    CHECK(code_of("aqa:0") == ErrorCode::InvalidParam);
    CHECK(code_of("avg:3") == ErrorCode::InvalidParam);
    CHECK(code_of("ent:1") == ErrorCode::InvalidParam);
    CHECK(code_of("avg,avg") == ErrorCode::InvalidParam);
    CHECK(code_of("eds,eds:0.2") == ErrorCode::InvalidParam);
}

TEST_CASE("default catalog") {
    CHECK(intensity_strategy_ids().size() == 13);
    CHECK(spatial_strategy_ids() == std::vector<std::string>{"mor", "eds", "ent"});
    CHECK(all_strategy_ids().size() == 16);
    for (const auto& id : all_strategy_ids()) CHECK(canonical_id(id) == id);
}

TEST_CASE("mask requirements") {
    const auto list = parse_strategy_list("avg,bca,ica,qfr,mor");
    CHECK_FALSE(list[0].needs_mask());
    CHECK(list[1].needs_mask());
    CHECK(list[3].needs_mask());
    CHECK(list[4].is_spatial());
    const auto m = oracle::map_of(2, 2, {0.1, 0.2, 0.3, 0.4});
    try {
        list[1].evaluate(m);
        FAIL("expected MaskRequired");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MaskRequired);
    }
}

TEST_CASE("compute_features matches direct calls") {
    CounterRng rng(4);
    const auto m = oracle::random_map(rng, 10, 10);
    const auto mask = oracle::mask_of(10, 10, std::vector<std::int64_t>(100, 1));
    const auto strategies = parse_strategy_list("avg,plm:3,ata:0.5,aqa:0.9,bca,qfr,mor");
    const auto f = compute_features(strategies, m, &mask);
    CHECK(f.names().size() == 7);
    CHECK(f.at("avg") == avg(m));
    CHECK(f.at("plm:3") == plm(m, 3));
    CHECK(f.at("ata:0.5") == ata(m, 0.5));
    CHECK(f.at("aqa:0.9") == aqa(m, 0.9));
    CHECK(f.at("bca") == bca(m, mask));
    CHECK(f.at("qfr") == qfr(m, mask));
    CHECK(f.at("mor") == mor(m));
}

TEST_CASE("format_number round trips") {
    CounterRng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.uniform();
        CHECK(std::stod(format_number(v)) == v);
    }
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(20) == "20");
}
