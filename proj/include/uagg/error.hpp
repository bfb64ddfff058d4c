#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace uagg {

enum class ErrorCode {
    // validation of maps, masks, stacks
    EmptyGrid,
    OutOfRange,
    NonFinite,
    InvalidStack,
    ShapeMismatch,
    NoForeground,
    MaskRequired,
    // parameters
    PatchTooLarge,
    InvalidThreshold,
    InvalidQuantile,
    InvalidParam,
    InvalidEpsilon,
    InvalidSpec,
    UnknownStrategy,
    // statistics
    TooFewSamples,
    SingularCovariance,
    FeatureMismatch,
    EmptyFeatureSet,
    SingleClass,
    LengthMismatch,
    Empty,
    AllZeroDifferences,
    StrategySetMismatch,
    // files
    BadMagic,
    UnsupportedDtype,
    FortranOrderUnsupported,
    NonTwoDimensional,
    TruncatedPayload,
    MalformedHeader,
    MissingColumn,
    DuplicateId,
    ParseError,
    FileNotFound,
    IoFailure,
};

std::string_view to_string(ErrorCode code);

/// True for errors caused by the filesystem rather than by the data itself.
bool is_io_error(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace uagg
