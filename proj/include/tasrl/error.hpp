#pragma once

#include <stdexcept>
#include <string>

namespace tasrl {

enum class ErrorCode {
    InvalidInput,
    DimensionMismatch,
    CycleDetected,
    DisconnectedBus,
    DuplicateLine,
    ProblemTooLarge,
    InfeasibleState,
    SafetyViolation,
    DegenerateReference,
    SingularX,
    NonFiniteLoss,
    CorruptCheckpoint,
    InvariantViolation,
    InvalidAlpha,
    Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// C layer can forward it without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace tasrl
