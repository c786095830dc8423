#pragma once

#include <stdexcept>
#include <string>

namespace monotrack {

enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    Unsolvable,
    IllConditionedPencil,
    FrequencyIsZero,
    SaturationFailure,
    RankDeficientAfterRetries,
    UnstableLambda,
    LambdaAtZero,
    DegenerateDirection,
    NotSolvable,
    UnstableResult,
    UnstableClosedLoop,
    InsufficientData,
    GenerationFailed,
    AssumptionViolated,
    TooManyOutputs,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace monotrack
