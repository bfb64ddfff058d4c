#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uagg/core.hpp"
#include "uagg/meta_gmm.hpp"

namespace uagg {

// ---------------------------------------------------------------------------
// NPY (format versions 1.0 and 2.0, C order, 2D only)

enum class NpyDtype { Float32, Float64, Int32, Int64, UInt8 };

std::string_view descr_of(NpyDtype dtype);
std::size_t item_size(NpyDtype dtype);

struct NpyArray {
    std::size_t rows = 0;
    std::size_t cols = 0;
    NpyDtype dtype = NpyDtype::Float64;
    std::vector<double> real;          ///< filled for float dtypes
    std::vector<std::int64_t> integer; ///< filled for integer dtypes

    bool is_integer() const noexcept { return dtype != NpyDtype::Float32 && dtype != NpyDtype::Float64; }
};

/// Parses an in-memory NPY file. Throws BadMagic, MalformedHeader, UnsupportedDtype,
/// FortranOrderUnsupported, NonTwoDimensional or TruncatedPayload.
NpyArray parse_npy(std::span<const std::uint8_t> bytes);

/// Version 1.0 encoding; '<f8' for real grids, '<i8' for integer grids.
std::vector<std::uint8_t> encode_npy(const Grid<double>& grid);
std::vector<std::uint8_t> encode_npy(const Grid<std::int64_t>& grid);

NpyArray read_npy(const std::filesystem::path& path);
void write_npy(const std::filesystem::path& path, const Grid<double>& grid);
void write_npy(const std::filesystem::path& path, const Grid<std::int64_t>& grid);

/// Loads and validates an uncertainty map (any supported dtype, converted to double).
UncertaintyMap read_map(const std::filesystem::path& path);
/// Loads a label mask; float arrays must hold integral values.
SegmentationMask read_mask(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column, or nullopt.
    std::optional<std::size_t> find(const std::string& name) const;
    /// Index of a header column; throws MissingColumn.
    std::size_t require(const std::string& name) const;
};

/// Comma-separated, header row first, no quoting. Throws ParseError on ragged rows.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// 17 significant digits.
std::string format_double(double value);
/// Throws ParseError naming the row and column.
double parse_double(const std::string& text, std::size_t row, const std::string& column);

struct ManifestRow {
    std::string sample_id;
    std::filesystem::path map_path;
    std::optional<std::filesystem::path> mask_path;
    std::optional<int> ood_label;
    std::optional<double> risk;
};

struct Manifest {
    std::vector<ManifestRow> rows;
};

/// Columns: sample_id, map_path (or path), and optional mask_path, ood_label, risk.
/// Relative paths are resolved against the manifest's directory. Throws MissingColumn,
/// DuplicateId, ParseError, or FileNotFound for referenced files that do not exist.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// sample_id followed by one column per strategy; missing values are empty cells.
struct ScoreTable {
    std::vector<std::string> strategies;
    std::vector<std::string> sample_ids;
    std::vector<std::vector<std::optional<double>>> values;  ///< [sample][strategy]
};

void write_scores(const std::filesystem::path& path, const ScoreTable& table);
ScoreTable read_scores(const std::filesystem::path& path);

/// Rows of the given strategies as a dense feature table. Throws MissingColumn or
/// ParseError when a requested cell is empty.
FeatureTable to_feature_table(const ScoreTable& table, const std::vector<std::string>& strategies);

// ---------------------------------------------------------------------------
// Model files

void save_model(const std::filesystem::path& path, const GmmModel& model);
GmmModel load_model(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace uagg
