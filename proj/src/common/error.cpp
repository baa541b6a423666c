#include "pulsegauge/error.hpp"

namespace pulsegauge {

std::string_view code_name(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidRequest: return "InvalidRequest";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::SourceUnavailable: return "SourceUnavailable";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::LexiconMissing: return "LexiconMissing";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::ModelLoadError: return "ModelLoadError";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::InvalidScore: return "InvalidScore";
    case ErrorCode::EmptyValidation: return "EmptyValidation";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::QueueFull: return "QueueFull";
    case ErrorCode::UnknownEntity: return "UnknownEntity";
    case ErrorCode::UnknownJob: return "UnknownJob";
    }
    return "Unknown";
}

} // namespace pulsegauge
