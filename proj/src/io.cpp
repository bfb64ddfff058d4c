#include "uagg/io.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace uagg {

namespace {

constexpr std::uint8_t kMagic[] = {0x93, 'N', 'U', 'M', 'P', 'Y'};

// Restricted parser for the header dict literal, e.g.
// {'descr': '<f8', 'fortran_order': False, 'shape': (3, 4), }
class HeaderParser {
public:
    explicit HeaderParser(std::string_view text) : text_(text) {}

    void parse(std::string& descr, bool& fortran, std::vector<std::size_t>& shape) {
        bool have_descr = false, have_fortran = false, have_shape = false;
        expect('{');
        skip_space();
        while (peek() != '}') {
            const std::string key = string_literal();
            expect(':');
            if (key == "descr") {
                descr = string_literal();
                have_descr = true;
            } else if (key == "fortran_order") {
                fortran = boolean();
                have_fortran = true;
            } else if (key == "shape") {
                shape = tuple();
                have_shape = true;
            } else {
                fail("unexpected key '" + key + "'");
            }
            skip_space();
            if (peek() == ',') {
                ++pos_;
                skip_space();
            } else if (peek() != '}') {
                fail("expected ',' or '}'");
            }
        }
        ++pos_;
        skip_space();
        if (pos_ != text_.size()) fail("trailing characters after header");
        if (!have_descr || !have_fortran || !have_shape) fail("header lacks descr, fortran_order or shape");
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw Error(ErrorCode::MalformedHeader, why + " at offset " + std::to_string(pos_));
    }
    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
    void skip_space() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\n' || text_[pos_] == '\t')) ++pos_;
    }
    void expect(char c) {
        skip_space();
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }
    std::string string_literal() {
        skip_space();
        const char quote = peek();
        if (quote != '\'' && quote != '"') fail("expected string literal");
        const auto end = text_.find(quote, pos_ + 1);
        if (end == std::string_view::npos) fail("unterminated string");
        std::string out(text_.substr(pos_ + 1, end - pos_ - 1));
        pos_ = end + 1;
        return out;
    }
    bool boolean() {
        skip_space();
        if (text_.substr(pos_, 4) == "True") {
            pos_ += 4;
            return true;
        }
        if (text_.substr(pos_, 5) == "False") {
            pos_ += 5;
            return false;
        }
        fail("expected True or False");
    }
    std::vector<std::size_t> tuple() {
        expect('(');
        std::vector<std::size_t> dims;
        skip_space();
        while (peek() != ')') {
            std::size_t value = 0;
            const char* first = text_.data() + pos_;
            const char* last = text_.data() + text_.size();
            const auto [ptr, ec] = std::from_chars(first, last, value);
            if (ec != std::errc() || ptr == first) fail("expected non-negative integer in shape");
            pos_ += static_cast<std::size_t>(ptr - first);
            dims.push_back(value);
            skip_space();
            if (peek() == ',') {
                ++pos_;
                skip_space();
            } else if (peek() != ')') {
                fail("expected ',' or ')' in shape");
            }
            if (dims.size() > 32) fail("shape has too many dimensions");
        }
        ++pos_;
        return dims;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

std::uint64_t load_le(const std::uint8_t* p, std::size_t n) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

void store_le(std::vector<std::uint8_t>& out, std::uint64_t v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::vector<std::uint8_t> encode_header(std::string_view descr, std::size_t rows, std::size_t cols) {
    std::string header = "{'descr': '" + std::string(descr) + "', 'fortran_order': False, 'shape': (" +
                         std::to_string(rows) + ", " + std::to_string(cols) + "), }";
    const std::size_t preamble = sizeof(kMagic) + 2 + 2;
    std::size_t total = preamble + header.size() + 1;
    header.append((64 - total % 64) % 64, ' ');
    header.push_back('\n');
    if (header.size() > 0xFFFF) throw Error(ErrorCode::MalformedHeader, "header too long for NPY 1.0");
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    out.push_back(1);
    out.push_back(0);
    store_le(out, header.size(), 2);
    out.insert(out.end(), header.begin(), header.end());
    return out;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(std::filesystem::exists(path) ? ErrorCode::IoFailure : ErrorCode::FileNotFound,
                    "cannot open " + path.string());
    }
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

std::string trimmed(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && s[i] == ' ') ++i;
    return s.substr(i);
}

}  // namespace

std::string_view descr_of(NpyDtype dtype) {
    switch (dtype) {
        case NpyDtype::Float32: return "<f4";
        case NpyDtype::Float64: return "<f8";
        case NpyDtype::Int32: return "<i4";
        case NpyDtype::Int64: return "<i8";
        case NpyDtype::UInt8: return "|u1";
    }
    return "?";
}

std::size_t item_size(NpyDtype dtype) {
    switch (dtype) {
        case NpyDtype::Float32: return 4;
        case NpyDtype::Float64: return 8;
        case NpyDtype::Int32: return 4;
        case NpyDtype::Int64: return 8;
        case NpyDtype::UInt8: return 1;
    }
    return 0;
}

NpyArray parse_npy(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 10 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
        throw Error(ErrorCode::BadMagic, "not an NPY file");
    }
    const std::uint8_t major = bytes[6];
    std::size_t header_len = 0;
    std::size_t offset = 0;
    if (major == 1) {
        header_len = load_le(bytes.data() + 8, 2);
        offset = 10;
    } else if (major == 2) {
        if (bytes.size() < 12) throw Error(ErrorCode::MalformedHeader, "file ends inside the preamble");
        header_len = load_le(bytes.data() + 8, 4);
        offset = 12;
    } else {
        throw Error(ErrorCode::MalformedHeader, "unsupported NPY version " + std::to_string(major));
    }
    if (header_len > bytes.size() - offset) throw Error(ErrorCode::MalformedHeader, "header runs past end of file");
    const std::string_view header(reinterpret_cast<const char*>(bytes.data() + offset), header_len);

    std::string descr;
    bool fortran = false;
    std::vector<std::size_t> shape;
    HeaderParser(header).parse(descr, fortran, shape);

    NpyArray out;
    bool known = false;
    for (NpyDtype d : {NpyDtype::Float32, NpyDtype::Float64, NpyDtype::Int32, NpyDtype::Int64, NpyDtype::UInt8}) {
        if (descr == descr_of(d) || (d == NpyDtype::UInt8 && descr == "<u1")) {
            out.dtype = d;
            known = true;
        }
    }
    if (!known) throw Error(ErrorCode::UnsupportedDtype, "dtype '" + descr + "'");
    if (fortran) throw Error(ErrorCode::FortranOrderUnsupported, "fortran_order arrays are not supported");
    if (shape.size() != 2) {
        throw Error(ErrorCode::NonTwoDimensional, "expected a 2D array, got " + std::to_string(shape.size()) + "D");
    }
    out.rows = shape[0];
    out.cols = shape[1];
    const std::size_t isz = item_size(out.dtype);
    const std::size_t payload = bytes.size() - offset - header_len;
    if (out.rows != 0 && out.cols > std::numeric_limits<std::size_t>::max() / out.rows / isz) {
        throw Error(ErrorCode::TruncatedPayload, "shape overflows");
    }
    const std::size_t count = out.rows * out.cols;
    if (payload != count * isz) {
        throw Error(ErrorCode::TruncatedPayload, "payload has " + std::to_string(payload) + " bytes, expected " +
                                                     std::to_string(count * isz));
    }
    const std::uint8_t* data = bytes.data() + offset + header_len;
    if (out.is_integer()) {
        out.integer.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            const std::uint64_t raw = load_le(data + i * isz, isz);
            switch (out.dtype) {
                case NpyDtype::Int32: out.integer[i] = static_cast<std::int32_t>(static_cast<std::uint32_t>(raw)); break;
                case NpyDtype::Int64: out.integer[i] = static_cast<std::int64_t>(raw); break;
                default: out.integer[i] = static_cast<std::int64_t>(raw); break;
            }
        }
    } else {
        out.real.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            const std::uint64_t raw = load_le(data + i * isz, isz);
            out.real[i] = out.dtype == NpyDtype::Float64
                              ? std::bit_cast<double>(raw)
                              : static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(raw)));
        }
    }
    return out;
}

std::vector<std::uint8_t> encode_npy(const Grid<double>& grid) {
    std::vector<std::uint8_t> out = encode_header("<f8", grid.rows(), grid.cols());
    out.reserve(out.size() + grid.size() * 8);
    for (double v : grid.values()) store_le(out, std::bit_cast<std::uint64_t>(v), 8);
    return out;
}

std::vector<std::uint8_t> encode_npy(const Grid<std::int64_t>& grid) {
    std::vector<std::uint8_t> out = encode_header("<i8", grid.rows(), grid.cols());
    out.reserve(out.size() + grid.size() * 8);
    for (std::int64_t v : grid.values()) store_le(out, static_cast<std::uint64_t>(v), 8);
    return out;
}

NpyArray read_npy(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    try {
        return parse_npy(bytes);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void write_npy(const std::filesystem::path& path, const Grid<double>& grid) { write_bytes(path, encode_npy(grid)); }

void write_npy(const std::filesystem::path& path, const Grid<std::int64_t>& grid) {
    write_bytes(path, encode_npy(grid));
}

UncertaintyMap read_map(const std::filesystem::path& path) {
    const NpyArray a = read_npy(path);
    std::vector<double> values = a.real;
    if (a.is_integer()) values.assign(a.integer.begin(), a.integer.end());
    try {
        return UncertaintyMap(Grid<double>(a.rows, a.cols, std::move(values)));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

SegmentationMask read_mask(const std::filesystem::path& path) {
    const NpyArray a = read_npy(path);
    std::vector<std::int64_t> labels = a.integer;
    if (!a.is_integer()) {
        labels.reserve(a.real.size());
        for (double v : a.real) {
            if (!std::isfinite(v) || std::floor(v) != v) {
                throw Error(ErrorCode::UnsupportedDtype, path.string() + ": mask holds non-integral values");
            }
            labels.push_back(static_cast<std::int64_t>(v));
        }
    }
    try {
        return SegmentationMask(Grid<std::int64_t>(a.rows, a.cols, std::move(labels)));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

std::optional<std::size_t> CsvTable::find(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return std::nullopt;
}

std::size_t CsvTable::require(const std::string& name) const {
    if (const auto idx = find(name)) return *idx;
    throw Error(ErrorCode::MissingColumn, "column '" + name + "' missing");
}

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        line = trimmed(line);
        if (line.empty()) continue;
        auto cells = split_line(line);
        for (auto& c : cells) c = trimmed(c);
        if (!have_header) {
            table.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                                   std::to_string(table.header.size()) + " cells, found " +
                                                   std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    if (!have_header) throw Error(ErrorCode::ParseError, "CSV has no header row");
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
    try {
        return parse_csv(read_text(path));
    } catch (const Error& e) {
        if (is_io_error(e.code())) throw;
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::string text;
    auto append_row = [&text](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text.push_back(',');
            text += cells[i];
        }
        text.push_back('\n');
    };
    append_row(table.header);
    for (const auto& row : table.rows) append_row(row);
    write_text(path, text);
}

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

double parse_double(const std::string& text, std::size_t row, const std::string& column) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (text.empty() || ec != std::errc() || ptr != last) {
        throw Error(ErrorCode::ParseError,
                    "row " + std::to_string(row) + ", column " + column + ": cannot parse '" + text + "'");
    }
    return value;
}

Manifest read_manifest(const std::filesystem::path& path) {
    const CsvTable csv = read_csv(path);
    const std::size_t id_col = csv.require("sample_id");
    std::optional<std::size_t> map_col = csv.find("map_path");
    if (!map_col) map_col = csv.find("path");
    if (!map_col) throw Error(ErrorCode::MissingColumn, path.string() + ": column 'map_path' missing");
    const auto mask_col = csv.find("mask_path");
    const auto label_col = csv.find("ood_label");
    const auto risk_col = csv.find("risk");
    const std::filesystem::path base = path.parent_path();

    Manifest manifest;
    std::set<std::string> ids;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& cells = csv.rows[r];
        const std::size_t row_no = r + 1;
        ManifestRow row;
        row.sample_id = cells[id_col];
        if (row.sample_id.empty()) throw Error(ErrorCode::ParseError, "row " + std::to_string(row_no) + ": empty sample_id");
        if (!ids.insert(row.sample_id).second) {
            throw Error(ErrorCode::DuplicateId, "sample_id '" + row.sample_id + "' appears twice");
        }
        auto resolve = [&](const std::string& p) {
            std::filesystem::path full = std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : base / p;
            if (!std::filesystem::exists(full)) {
                throw Error(ErrorCode::FileNotFound, "sample " + row.sample_id + ": " + full.string() + " not found");
            }
            return full;
        };
        row.map_path = resolve(cells[*map_col]);
        if (mask_col && !cells[*mask_col].empty()) row.mask_path = resolve(cells[*mask_col]);
        if (label_col && !cells[*label_col].empty()) {
            const std::string& t = cells[*label_col];
            if (t != "0" && t != "1") {
                throw Error(ErrorCode::ParseError, "row " + std::to_string(row_no) + ", column ood_label: '" + t + "'");
            }
            row.ood_label = t == "1" ? 1 : 0;
        }
        if (risk_col && !cells[*risk_col].empty()) {
            row.risk = parse_double(cells[*risk_col], row_no, "risk");
            if (!(*row.risk >= 0.0 && *row.risk <= 1.0)) {
                throw Error(ErrorCode::ParseError, "row " + std::to_string(row_no) + ": risk outside [0, 1]");
            }
        }
        manifest.rows.push_back(std::move(row));
    }
    return manifest;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
    CsvTable csv;
    csv.header = {"sample_id", "map_path", "mask_path", "ood_label", "risk"};
    for (const auto& row : manifest.rows) {
        csv.rows.push_back({row.sample_id, row.map_path.generic_string(),
                            row.mask_path ? row.mask_path->generic_string() : "",
                            row.ood_label ? std::to_string(*row.ood_label) : "",
                            row.risk ? format_double(*row.risk) : ""});
    }
    write_csv(path, csv);
}

void write_scores(const std::filesystem::path& path, const ScoreTable& table) {
    CsvTable csv;
    csv.header.push_back("sample_id");
    csv.header.insert(csv.header.end(), table.strategies.begin(), table.strategies.end());
    for (std::size_t i = 0; i < table.sample_ids.size(); ++i) {
        std::vector<std::string> row{table.sample_ids[i]};
        for (const auto& v : table.values[i]) row.push_back(v ? format_double(*v) : "");
        csv.rows.push_back(std::move(row));
    }
    write_csv(path, csv);
}

ScoreTable read_scores(const std::filesystem::path& path) {
    const CsvTable csv = read_csv(path);
    const std::size_t id_col = csv.require("sample_id");
    ScoreTable table;
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < csv.header.size(); ++c) {
        if (c == id_col) continue;
        table.strategies.push_back(csv.header[c]);
        cols.push_back(c);
    }
    std::set<std::string> ids;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& cells = csv.rows[r];
        if (!ids.insert(cells[id_col]).second) {
            throw Error(ErrorCode::DuplicateId, "sample_id '" + cells[id_col] + "' appears twice");
        }
        table.sample_ids.push_back(cells[id_col]);
        std::vector<std::optional<double>> values;
        for (std::size_t c : cols) {
            if (cells[c].empty()) {
                values.emplace_back();
            } else {
                values.emplace_back(parse_double(cells[c], r + 1, csv.header[c]));
            }
        }
        table.values.push_back(std::move(values));
    }
    return table;
}

FeatureTable to_feature_table(const ScoreTable& table, const std::vector<std::string>& strategies) {
    std::vector<std::size_t> cols;
    for (const auto& s : strategies) {
        const auto it = std::find(table.strategies.begin(), table.strategies.end(), s);
        if (it == table.strategies.end()) throw Error(ErrorCode::MissingColumn, "feature column '" + s + "' missing");
        cols.push_back(static_cast<std::size_t>(it - table.strategies.begin()));
    }
    FeatureTable out;
    out.names = strategies;
    out.values.resize(static_cast<Eigen::Index>(table.sample_ids.size()), static_cast<Eigen::Index>(strategies.size()));
    for (std::size_t r = 0; r < table.sample_ids.size(); ++r) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const auto& v = table.values[r][cols[j]];
            if (!v) {
                throw Error(ErrorCode::ParseError,
                            "sample " + table.sample_ids[r] + ": empty value for " + strategies[j]);
            }
            out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = *v;
        }
    }
    return out;
}

void save_model(const std::filesystem::path& path, const GmmModel& model) { write_text(path, model_to_json(model)); }

GmmModel load_model(const std::filesystem::path& path) {
    try {
        return model_from_json(read_text(path));
    } catch (const Error& e) {
        if (is_io_error(e.code())) throw;
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

std::string read_text(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace uagg
