#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <fstream>

#include "oracles.hpp"
#include "uagg/io.hpp"
#include "uagg/strategy.hpp"

using namespace uagg;
namespace fs = std::filesystem;

namespace {
// Hand-built NPY file: magic, version, little-endian header length, header text, payload.
std::vector<std::uint8_t> npy_bytes(const std::string& header_dict, std::size_t payload_bytes, int major = 1) {
    std::vector<std::uint8_t> out{0x93, 'N', 'U', 'M', 'P', 'Y', static_cast<std::uint8_t>(major), 0};
    const std::size_t prefix = major == 1 ? 10 : 12;
    std::string header = header_dict;
    while ((prefix + header.size() + 1) % 64 != 0) header += ' ';
    header += '\n';
    const std::size_t len = header.size();
    out.push_back(static_cast<std::uint8_t>(len & 0xFF));
    out.push_back(static_cast<std::uint8_t>(len >> 8));
    if (major != 1) {
        out.push_back(0);
        out.push_back(0);
    }
    out.insert(out.end(), header.begin(), header.end());
    out.resize(out.size() + payload_bytes, 0);
    return out;
}

ErrorCode parse_code(const std::vector<std::uint8_t>& bytes) {
    try {
        parse_npy(bytes);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Empty;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}
}  // namespace

TEST_CASE("NPY round trip is bit-identical") {
    CounterRng rng(1);
    const auto m = oracle::random_map(rng, 17, 5);
    const auto bytes = encode_npy(m.grid());
    const auto arr = parse_npy(bytes);
    CHECK(arr.rows == 17);
    CHECK(arr.cols == 5);
    CHECK(arr.dtype == NpyDtype::Float64);
    CHECK(std::memcmp(arr.real.data(), m.values().data(), 85 * sizeof(double)) == 0);

    Grid<std::int64_t> labels(3, 4, std::vector<std::int64_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, -11});
    const auto ib = encode_npy(labels);
    const auto ia = parse_npy(ib);
    CHECK(ia.dtype == NpyDtype::Int64);
    CHECK(ia.integer == std::vector<std::int64_t>(labels.values().begin(), labels.values().end()));
    CHECK(encode_npy(Grid<std::int64_t>(3, 4, ia.integer)) == ib);
}

TEST_CASE("NPY writer layout") {
    const auto bytes = encode_npy(Grid<double>(2, 2, 0.25));
    const std::size_t header_len = bytes[8] | (bytes[9] << 8);
    CHECK((10 + header_len) % 64 == 0);
    CHECK(bytes[10 + header_len - 1] == '\n');
    CHECK(bytes.size() - 10 - header_len == 32);
    const std::string header(bytes.begin() + 10, bytes.begin() + 10 + static_cast<long>(header_len));
    CHECK(header.find("'descr': '<f8'") != std::string::npos);
    CHECK(header.find("'fortran_order': False") != std::string::npos);
    CHECK(header.find("'shape': (2, 2)") != std::string::npos);
    CHECK(bytes[6] == 1);
}

TEST_CASE("NPY reader accepts every supported dtype and version 2") {
    CHECK(parse_npy(npy_bytes("{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3), }", 24)).rows == 2);
    CHECK(parse_npy(npy_bytes("{'descr': '<i4', 'fortran_order': False, 'shape': (1, 2), }", 8)).is_integer());
    CHECK(parse_npy(npy_bytes("{'descr': '<i8', 'fortran_order': False, 'shape': (1, 2), }", 16)).is_integer());
    CHECK(parse_npy(npy_bytes("{'descr': '|u1', 'fortran_order': False, 'shape': (3, 1), }", 3)).cols == 1);
    CHECK(parse_npy(npy_bytes("{\"shape\": (2,2), \"descr\": \"<f8\", \"fortran_order\": False}", 32, 2)).rows == 2);
    auto f4 = npy_bytes("{'descr': '<f4', 'fortran_order': False, 'shape': (1, 1), }", 4);
    const float v = 0.375F;
    std::memcpy(f4.data() + f4.size() - 4, &v, 4);
    CHECK(parse_npy(f4).real[0] == 0.375);
}

TEST_CASE("NPY reader errors") {
    const std::string ok = "{'descr': '<f8', 'fortran_order': False, 'shape': (2, 2), }";
    CHECK(parse_code(npy_bytes("{'descr': '<f8', 'fortran_order': True, 'shape': (2, 2), }", 32)) ==
          ErrorCode::FortranOrderUnsupported);
    CHECK(parse_code(npy_bytes("{'descr': '>f8', 'fortran_order': False, 'shape': (2, 2), }", 32)) ==
          ErrorCode::UnsupportedDtype);
    CHECK(parse_code(npy_bytes("{'descr': '<c16', 'fortran_order': False, 'shape': (2, 2), }", 64)) ==
          ErrorCode::UnsupportedDtype);
    CHECK(parse_code(npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (4,), }", 32)) ==
          ErrorCode::NonTwoDimensional);
    CHECK(parse_code(npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (2, 2, 1), }", 32)) ==
          ErrorCode::NonTwoDimensional);
    CHECK(parse_code(npy_bytes(ok, 31)) == ErrorCode::TruncatedPayload);
    CHECK(parse_code(npy_bytes(ok, 33)) == ErrorCode::TruncatedPayload);
    auto bad = npy_bytes(ok, 32);
    bad[1] = 'X';
    CHECK(parse_code(bad) == ErrorCode::BadMagic);
    CHECK(parse_code({}) == ErrorCode::BadMagic);
    CHECK(parse_code(npy_bytes("{'descr': '<f8', 'shape': (2, 2), }", 32)) == ErrorCode::MalformedHeader);
    CHECK(parse_code(npy_bytes("{'descr': __import__('os'), 'fortran_order': False, 'shape': (2, 2), }", 32)) ==
          ErrorCode::MalformedHeader);
}

TEST_CASE("NPY fuzz corpus never crashes") {
    const auto base = encode_npy(Grid<double>(3, 3, 0.5));
    const std::size_t header_end = 10 + (base[8] | (base[9] << 8));
    CounterRng rng(2024);
    int rejected = 0;
    for (int t = 0; t < 20000; ++t) {
        auto mutated = base;
        const int kind = static_cast<int>(rng.below(4));
        if (kind == 0) {
            for (int k = 0; k < 1 + static_cast<int>(rng.below(4)); ++k)
                mutated[rng.below(header_end)] = static_cast<std::uint8_t>(rng.below(256));
        } else if (kind == 1) {
            mutated.resize(rng.below(mutated.size()));
        } else if (kind == 2) {
            const std::size_t at = 10 + rng.below(header_end - 10);
            mutated.insert(mutated.begin() + static_cast<long>(at), static_cast<std::uint8_t>("{}(),:' \"0123FTx"[rng.below(16)]));
        } else {
            mutated[8] = static_cast<std::uint8_t>(rng.below(256));
            mutated[9] = static_cast<std::uint8_t>(rng.below(256));
        }
        try {
            const auto arr = parse_npy(mutated);
            // anything accepted must still describe a consistent array
            REQUIRE(arr.rows * arr.cols == (arr.is_integer() ? arr.integer.size() : arr.real.size()));
        } catch (const Error&) {
            ++rejected;
        }
    }
    CHECK(rejected > 10000);
}

TEST_CASE("map and mask files") {
    const auto dir = oracle::scratch_dir("io_maps");
    CounterRng rng(3);
    const auto m = oracle::random_map(rng, 6, 4);
    write_npy(dir / "m.npy", m.grid());
    CHECK(read_map(dir / "m.npy") == m);
    Grid<std::int64_t> labels(6, 4, std::int64_t{2});
    write_npy(dir / "k.npy", labels);
    CHECK(read_mask(dir / "k.npy").grid() == labels);
    write_npy(dir / "bad.npy", Grid<double>(1, 1, 1.5));
    CHECK_THROWS_AS(read_map(dir / "bad.npy"), Error);
    write_npy(dir / "frac.npy", Grid<double>(1, 1, 0.5));
    CHECK_THROWS_AS(read_mask(dir / "frac.npy"), Error);
    try {
        read_map(dir / "missing.npy");
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::FileNotFound);
    }
    fs::remove_all(dir);
}

TEST_CASE("manifest loading") {
    const auto dir = oracle::scratch_dir("io_manifest");
    fs::create_directories(dir / "maps");
    for (const char* id : {"a", "b", "c"}) write_npy(dir / "maps" / (std::string(id) + ".npy"), Grid<double>(2, 2, 0.1));
    write_file(dir / "m.csv", "sample_id,path,ood_label\na,maps/a.npy,0\nb,maps/b.npy,1\nc,maps/c.npy,0\n");
    const auto man = read_manifest(dir / "m.csv");
    REQUIRE(man.rows.size() == 3);
    CHECK(man.rows[1].ood_label == 1);
    CHECK_FALSE(man.rows[0].mask_path.has_value());
    CHECK_FALSE(man.rows[0].risk.has_value());
    CHECK(man.rows[0].map_path == dir / "maps/a.npy");

    auto code = [&](const std::string& text) {
        write_file(dir / "x.csv", text);
        try {
            read_manifest(dir / "x.csv");
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::Empty;
    };
    CHECK(code("sample_id,map_path\na,maps/a.npy\na,maps/b.npy\n") == ErrorCode::DuplicateId);
    CHECK(code("sample_id\na\n") == ErrorCode::MissingColumn);
    CHECK(code("sample_id,map_path,ood_label\na,maps/a.npy,2\n") == ErrorCode::ParseError);
    CHECK(code("sample_id,map_path,risk\na,maps/a.npy,abc\n") == ErrorCode::ParseError);
    CHECK(code("sample_id,map_path\na,maps/zzz.npy\n") == ErrorCode::FileNotFound);
    CHECK(code("sample_id,map_path\na,maps/a.npy,extra\n") == ErrorCode::ParseError);

    Manifest out = man;
    write_manifest(dir / "again.csv", out);
    const auto back = read_manifest(dir / "again.csv");
    CHECK(back.rows.size() == 3);
    CHECK(back.rows[2].sample_id == "c");
    fs::remove_all(dir);
}

TEST_CASE("score table round trip keeps 17 significant digits") {
    const auto dir = oracle::scratch_dir("io_scores");
    CounterRng rng(4);
    ScoreTable t;
    t.strategies = {"avg", "plm:20", "mor"};
    for (int i = 0; i < 20; ++i) {
        t.sample_ids.push_back("s" + std::to_string(i));
        t.values.push_back({rng.uniform(), rng.uniform() * 1e-9, i == 3 ? std::nullopt : std::optional(rng.uniform())});
    }
    write_scores(dir / "s.csv", t);
    const auto back = read_scores(dir / "s.csv");
    CHECK(back.strategies == t.strategies);
    CHECK(back.sample_ids == t.sample_ids);
    CHECK(back.values == t.values);
    CHECK(read_text(dir / "s.csv").rfind("sample_id,avg,plm:20,mor\n", 0) == 0);

    CHECK_THROWS_AS(to_feature_table(back, {"mor", "avg"}), Error);  // empty cell in row 3
    CHECK_THROWS_AS(to_feature_table(back, {"avg", "eds"}), Error);
    const auto ok = to_feature_table(back, {"avg"});
    CHECK(ok.values.rows() == 20);
    CHECK(ok.values(5, 0) == *t.values[5][0]);
    fs::remove_all(dir);
}

TEST_CASE("model file round trip is byte-identical") {
    const auto dir = oracle::scratch_dir("io_model");
    GmmModel m;
    m.mixture.weights = {0.3, 0.7};
    m.mixture.means = {Eigen::VectorXd::Constant(2, 0.1), Eigen::VectorXd::Constant(2, -1.0 / 3.0)};
    m.mixture.covariances = {Eigen::MatrixXd::Identity(2, 2), 2.0 / 7.0 * Eigen::MatrixXd::Identity(2, 2)};
    m.feat_mean = Eigen::VectorXd::Constant(2, 0.123456789012345678);
    m.feat_std = Eigen::VectorXd::Constant(2, 1.0);
    m.feature_spec = FeatureSetSpec::custom({"avg", "mor"});
    save_model(dir / "a.json", m);
    save_model(dir / "b.json", load_model(dir / "a.json"));
    CHECK(read_text(dir / "a.json") == read_text(dir / "b.json"));
    const auto back = load_model(dir / "a.json");
    CHECK(back.feat_mean(0) == m.feat_mean(0));
    CHECK(back.mixture.covariances[1](1, 1) == m.mixture.covariances[1](1, 1));
    fs::remove_all(dir);
}

TEST_CASE("CSV parsing") {
    const auto t = parse_csv("a,b\r\n1,2\n\n3,4\n");
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    CHECK(t.rows.size() == 2);
    CHECK(t.require("b") == 1);
    CHECK_FALSE(t.find("c").has_value());
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(parse_double("0.10000000000000001", 1, "x") == 0.1);
    CHECK_THROWS_AS(parse_double("1.5x", 1, "x"), Error);
    CHECK_THROWS_AS(parse_csv(""), Error);
}
