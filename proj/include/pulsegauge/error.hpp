#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pulsegauge {

enum class ErrorCode {
    InvalidRequest,
    InvalidInput,
    SourceUnavailable,
    ParseError,
    LexiconMissing,
    BackendUnavailable,
    ModelLoadError,
    MalformedResponse,
    InvalidScore,
    EmptyValidation,
    EmptyWindow,
    InsufficientData,
    LengthMismatch,
    EmptyInput,
    QueueFull,
    UnknownEntity,
    UnknownJob,
};

std::string_view code_name(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above so the
// CLI and the HTTP layer can map it to a stable wire identifier.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace pulsegauge
