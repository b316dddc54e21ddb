#include "ptfa/error.hpp"

namespace ptfa {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::SessionClosed: return "SessionClosed";
        case ErrorCode::EmptyText: return "EmptyText";
        case ErrorCode::TextTooLong: return "TextTooLong";
        case ErrorCode::HatMismatch: return "HatMismatch";
        case ErrorCode::ClockRegression: return "ClockRegression";
        case ErrorCode::PreconditionViolated: return "PreconditionViolated";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::ProviderError: return "ProviderError";
        case ErrorCode::CredentialMissing: return "CredentialMissing";
        case ErrorCode::ContextOverflow: return "ContextOverflow";
        case ErrorCode::InvalidTopic: return "InvalidTopic";
        case ErrorCode::InvalidModel: return "InvalidModel";
        case ErrorCode::InvalidGroupSize: return "InvalidGroupSize";
        case ErrorCode::UnknownSession: return "UnknownSession";
        case ErrorCode::TokenInvalid: return "TokenInvalid";
        case ErrorCode::TokenReused: return "TokenReused";
        case ErrorCode::SessionFull: return "SessionFull";
        case ErrorCode::NotJoined: return "NotJoined";
        case ErrorCode::NotLive: return "NotLive";
        case ErrorCode::SessionNotClosed: return "SessionNotClosed";
        case ErrorCode::DuplicateResponse: return "DuplicateResponse";
        case ErrorCode::OutOfRangeAnswer: return "OutOfRangeAnswer";
        case ErrorCode::BadEnvelope: return "BadEnvelope";
        case ErrorCode::StorageUnavailable: return "StorageUnavailable";
        case ErrorCode::Conflict: return "Conflict";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::BadConfig: return "BadConfig";
        case ErrorCode::BadScript: return "BadScript";
    }
    return "Unknown";
}

}  // namespace ptfa
