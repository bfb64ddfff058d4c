#include "uagg/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace uagg {

UncertaintyMap::UncertaintyMap(Grid<double> grid) : grid_(std::move(grid)) {
    if (grid_.empty()) {
        throw Error(ErrorCode::EmptyGrid, "uncertainty map has no pixels");
    }
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        const double v = grid_.values()[i];
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::NonFinite, "pixel " + std::to_string(i) + " is not finite");
        }
        if (v < 0.0 || v > 1.0) {
            throw Error(ErrorCode::OutOfRange,
                        "pixel " + std::to_string(i) + " = " + std::to_string(v) + " outside [0, 1]");
        }
    }
}

UncertaintyMap validate_map(Grid<double> raw) { return UncertaintyMap(std::move(raw)); }

UncertaintyMap validate_map(const std::vector<std::vector<double>>& raw) {
    return UncertaintyMap(Grid<double>::from_rows(raw));
}

SegmentationMask::SegmentationMask(Grid<std::int64_t> labels, std::int64_t background)
    : labels_(std::move(labels)), background_(background) {
    if (labels_.empty()) {
        throw Error(ErrorCode::EmptyGrid, "segmentation mask has no pixels");
    }
    for (std::int64_t label : labels_.values()) {
        if (label < 0) {
            throw Error(ErrorCode::OutOfRange, "negative class label " + std::to_string(label));
        }
    }
}

std::size_t SegmentationMask::foreground_count() const {
    std::size_t count = 0;
    for (std::int64_t label : labels_.values()) {
        if (label != background_) ++count;
    }
    return count;
}

ProbabilityStack::ProbabilityStack(std::size_t samples, std::size_t classes, std::size_t rows,
                                   std::size_t cols, std::vector<double> probs)
    : samples_(samples), classes_(classes), rows_(rows), cols_(cols), probs_(std::move(probs)) {
    if (samples_ < 1 || classes_ < 2) {
        throw Error(ErrorCode::InvalidStack, "need at least one sample and two classes");
    }
    if (rows_ == 0 || cols_ == 0) {
        throw Error(ErrorCode::EmptyGrid, "probability stack has no pixels");
    }
    if (probs_.size() != samples_ * classes_ * rows_ * cols_) {
        throw Error(ErrorCode::InvalidStack, "value count does not match (L, K, rows, cols)");
    }
    const std::size_t pixels = rows_ * cols_;
    for (std::size_t l = 0; l < samples_; ++l) {
        for (std::size_t i = 0; i < pixels; ++i) {
            double sum = 0.0;
            for (std::size_t c = 0; c < classes_; ++c) {
                const double p = (*this)(l, c, i);
                if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
                    throw Error(ErrorCode::InvalidStack, "probability outside [0, 1]");
                }
                sum += p;
            }
            if (std::abs(sum - 1.0) > kRowTolerance) {
                throw Error(ErrorCode::InvalidStack, "probabilities of sample " + std::to_string(l) +
                                                         ", pixel " + std::to_string(i) +
                                                         " sum to " + std::to_string(sum));
            }
        }
    }
}

UncertaintyMap entropy_uncertainty(const ProbabilityStack& stack) {
    const std::size_t pixels = stack.rows() * stack.cols();
    const std::size_t classes = stack.classes();
    const double log_k = std::log(static_cast<double>(classes));
    std::vector<double> out(pixels);
    std::vector<double> mean(classes);
    for (std::size_t i = 0; i < pixels; ++i) {
        double total = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            double acc = 0.0;
            for (std::size_t l = 0; l < stack.samples(); ++l) acc += stack(l, c, i);
            mean[c] = acc / static_cast<double>(stack.samples());
            total += mean[c];
        }
        double h = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            const double p = mean[c] / total;  // renormalize rows that pass tolerance
            if (p > 0.0) h -= p * std::log(p);
        }
        out[i] = std::clamp(h / log_k, 0.0, 1.0);
    }
    return UncertaintyMap(Grid<double>(stack.rows(), stack.cols(), std::move(out)));
}

FeatureVector::FeatureVector(std::vector<std::string> names, std::vector<double> values)
    : names_(std::move(names)), values_(std::move(values)) {
    if (names_.empty() || names_.size() != values_.size()) {
        throw Error(ErrorCode::FeatureMismatch, "feature names and values must be non-empty and equal length");
    }
    std::set<std::string> seen;
    for (const auto& name : names_) {
        if (!seen.insert(name).second) {
            throw Error(ErrorCode::FeatureMismatch, "duplicate feature name " + name);
        }
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "feature value is not finite");
    }
}

double FeatureVector::at(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return values_[i];
    }
    throw Error(ErrorCode::FeatureMismatch, "feature " + name + " not present");
}

}  // namespace uagg
