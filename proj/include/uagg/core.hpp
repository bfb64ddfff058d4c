#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uagg/error.hpp"

namespace uagg {

/// Dense row-major 2D grid.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Grid(std::size_t rows, std::size_t cols, std::vector<T> values)
        : rows_(rows), cols_(cols), data_(std::move(values)) {
        if (data_.size() != rows_ * cols_) {
            throw Error(ErrorCode::ShapeMismatch, "value count does not match grid shape");
        }
    }

    /// Builds a grid from nested rows; throws EmptyGrid or ShapeMismatch for ragged input.
    static Grid from_rows(const std::vector<std::vector<T>>& rows) {
        if (rows.empty() || rows.front().empty()) {
            throw Error(ErrorCode::EmptyGrid, "grid has no cells");
        }
        const std::size_t width = rows.front().size();
        std::vector<T> flat;
        flat.reserve(rows.size() * width);
        for (const auto& row : rows) {
            if (row.size() != width) {
                throw Error(ErrorCode::ShapeMismatch, "grid rows have different lengths");
            }
            flat.insert(flat.end(), row.begin(), row.end());
        }
        return Grid(rows.size(), width, std::move(flat));
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const T> values() const noexcept { return data_; }
    std::span<T> values() noexcept { return data_; }

    bool same_shape(std::size_t rows, std::size_t cols) const noexcept {
        return rows_ == rows && cols_ == cols;
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

/// Pixelwise uncertainty scores; every value is finite and in [0, 1].
class UncertaintyMap {
public:
    /// Validates and wraps a grid. Throws EmptyGrid, NonFinite or OutOfRange.
    explicit UncertaintyMap(Grid<double> grid);

    std::size_t rows() const noexcept { return grid_.rows(); }
    std::size_t cols() const noexcept { return grid_.cols(); }
    std::size_t size() const noexcept { return grid_.size(); }
    double operator()(std::size_t r, std::size_t c) const { return grid_(r, c); }
    std::span<const double> values() const noexcept { return grid_.values(); }
    const Grid<double>& grid() const noexcept { return grid_; }

    friend bool operator==(const UncertaintyMap&, const UncertaintyMap&) = default;

private:
    Grid<double> grid_;
};

UncertaintyMap validate_map(Grid<double> raw);
UncertaintyMap validate_map(const std::vector<std::vector<double>>& raw);

/// Predicted (or reference) semantic labels. Labels are non-negative.
class SegmentationMask {
public:
    explicit SegmentationMask(Grid<std::int64_t> labels, std::int64_t background = 0);

    std::size_t rows() const noexcept { return labels_.rows(); }
    std::size_t cols() const noexcept { return labels_.cols(); }
    std::size_t size() const noexcept { return labels_.size(); }
    std::int64_t operator()(std::size_t r, std::size_t c) const { return labels_(r, c); }
    std::span<const std::int64_t> values() const noexcept { return labels_.values(); }
    std::int64_t background() const noexcept { return background_; }
    const Grid<std::int64_t>& grid() const noexcept { return labels_; }

    bool is_foreground(std::size_t index) const { return labels_.values()[index] != background_; }
    std::size_t foreground_count() const;

private:
    Grid<std::int64_t> labels_;
    std::int64_t background_;
};

/// Class probabilities from L stochastic forward passes, shape (L, K, rows, cols).
class ProbabilityStack {
public:
    static constexpr double kRowTolerance = 1e-6;

    /// Throws InvalidStack if a probability row does not sum to 1 within kRowTolerance,
    /// or any entry lies outside [0, 1].
    ProbabilityStack(std::size_t samples, std::size_t classes, std::size_t rows, std::size_t cols,
                     std::vector<double> probs);

    std::size_t samples() const noexcept { return samples_; }
    std::size_t classes() const noexcept { return classes_; }
    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double operator()(std::size_t sample, std::size_t cls, std::size_t pixel) const {
        return probs_[(sample * classes_ + cls) * rows_ * cols_ + pixel];
    }

private:
    std::size_t samples_;
    std::size_t classes_;
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> probs_;
};

/// Normalized predictive entropy of the sample-mean class probabilities.
UncertaintyMap entropy_uncertainty(const ProbabilityStack& stack);

/// Named aggregated scores of one map.
class FeatureVector {
public:
    FeatureVector(std::vector<std::string> names, std::vector<double> values);

    std::size_t size() const noexcept { return values_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::vector<double>& values() const noexcept { return values_; }

    /// Value for a strategy identifier; throws FeatureMismatch when absent.
    double at(const std::string& name) const;

private:
    std::vector<std::string> names_;
    std::vector<double> values_;
};

}  // namespace uagg
