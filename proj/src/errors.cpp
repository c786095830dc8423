#include "monotrack/errors.hpp"

namespace monotrack {

const char* to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::Unsolvable: return "Unsolvable";
    case ErrorCode::IllConditionedPencil: return "IllConditionedPencil";
    case ErrorCode::FrequencyIsZero: return "FrequencyIsZero";
    case ErrorCode::SaturationFailure: return "SaturationFailure";
    case ErrorCode::RankDeficientAfterRetries: return "RankDeficientAfterRetries";
    case ErrorCode::UnstableLambda: return "UnstableLambda";
    case ErrorCode::LambdaAtZero: return "LambdaAtZero";
    case ErrorCode::DegenerateDirection: return "DegenerateDirection";
    case ErrorCode::NotSolvable: return "NotSolvable";
    case ErrorCode::UnstableResult: return "UnstableResult";
    case ErrorCode::UnstableClosedLoop: return "UnstableClosedLoop";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::AssumptionViolated: return "AssumptionViolated";
    case ErrorCode::TooManyOutputs: return "TooManyOutputs";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
{
}

}  // namespace monotrack
