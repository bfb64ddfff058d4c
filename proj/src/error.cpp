#include "uagg/error.hpp"

namespace uagg {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyGrid: return "EmptyGrid";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::InvalidStack: return "InvalidStack";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::NoForeground: return "NoForeground";
        case ErrorCode::MaskRequired: return "MaskRequired";
        case ErrorCode::PatchTooLarge: return "PatchTooLarge";
        case ErrorCode::InvalidThreshold: return "InvalidThreshold";
        case ErrorCode::InvalidQuantile: return "InvalidQuantile";
        case ErrorCode::InvalidParam: return "InvalidParam";
        case ErrorCode::InvalidEpsilon: return "InvalidEpsilon";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::UnknownStrategy: return "UnknownStrategy";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::SingularCovariance: return "SingularCovariance";
        case ErrorCode::FeatureMismatch: return "FeatureMismatch";
        case ErrorCode::EmptyFeatureSet: return "EmptyFeatureSet";
        case ErrorCode::SingleClass: return "SingleClass";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::Empty: return "Empty";
        case ErrorCode::AllZeroDifferences: return "AllZeroDifferences";
        case ErrorCode::StrategySetMismatch: return "StrategySetMismatch";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
        case ErrorCode::FortranOrderUnsupported: return "FortranOrderUnsupported";
        case ErrorCode::NonTwoDimensional: return "NonTwoDimensional";
        case ErrorCode::TruncatedPayload: return "TruncatedPayload";
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::FileNotFound: return "FileNotFound";
        case ErrorCode::IoFailure: return "IoFailure";
    }
    return "Unknown";
}

bool is_io_error(ErrorCode code) {
    return code == ErrorCode::FileNotFound || code == ErrorCode::IoFailure;
}

}  // namespace uagg
