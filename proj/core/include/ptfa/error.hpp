#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ptfa {

enum class ErrorCode {
    // transcript
    SessionClosed,
    EmptyText,
    TextTooLong,
    HatMismatch,
    ClockRegression,
    PreconditionViolated,
    // gateway
    Timeout,
    ProviderError,
    CredentialMissing,
    ContextOverflow,
    // service
    InvalidTopic,
    InvalidModel,
    InvalidGroupSize,
    UnknownSession,
    TokenInvalid,
    TokenReused,
    SessionFull,
    NotJoined,
    NotLive,
    SessionNotClosed,
    DuplicateResponse,
    OutOfRangeAnswer,
    BadEnvelope,
    // storage / data
    StorageUnavailable,
    Conflict,
    SchemaViolation,
    BadConfig,
    BadScript,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every domain failure is raised as an Error carrying a stable code; the
/// code string is what goes over the wire in error envelopes.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Provider failure with the HTTP status attached.
class ProviderFailure : public Error {
public:
    ProviderFailure(int status, std::string body_excerpt)
        : Error(ErrorCode::ProviderError,
                "provider returned HTTP " + std::to_string(status) + ": " + body_excerpt),
          status_(status),
          body_(std::move(body_excerpt)) {}

    int status() const noexcept { return status_; }
    const std::string& body_excerpt() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

}  // namespace ptfa
