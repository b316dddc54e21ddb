#pragma once

#include <array>
#include <string>
#include <string_view>
#include <variant>

#include "ptfa/error.hpp"
#include "ptfa/model.hpp"

// Envelope codec for the live channel. One compact JSON object per text frame.
namespace ptfa::protocol {

struct JoinRequest {
    std::string session_id;
    std::string token;
};

struct PostRequest {
    std::string text;
};

struct SurveyRequest {
    std::array<int, 3> answers{};  // experience, facilitator, consensus
};

using ClientEnvelope = std::variant<JoinRequest, PostRequest, SurveyRequest>;

/// BadEnvelope for malformed JSON, unknown types or missing fields.
ClientEnvelope parse_client(std::string_view frame);

/// "post" for participant messages, "facilitator", "phase" or "session_end"
/// for the rest.
std::string encode_post(const Post& post);

std::string encode_joined(std::string_view participant_id, std::string_view session_id,
                          const Topic& topic, Millis duration_ms, std::string_view state,
                          std::int64_t last_seq);

std::string encode_error(ErrorCode code, std::string_view message);
std::string encode_survey_ack();

}  // namespace ptfa::protocol
