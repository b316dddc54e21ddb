#include "ptfa/protocol.hpp"

#include <nlohmann/json.hpp>

namespace ptfa::protocol {
namespace {

using ojson = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::BadEnvelope, what); }

std::string require_string(const nlohmann::json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_string()) bad(std::string("'") + key + "' must be a string");
    return it->get<std::string>();
}

}  // namespace

ClientEnvelope parse_client(std::string_view frame) {
    const auto j = nlohmann::json::parse(frame, nullptr, false);
    if (j.is_discarded() || !j.is_object()) bad("frame is not a JSON object");
    const std::string type = require_string(j, "type");
    if (type == "join") return JoinRequest{require_string(j, "session_id"), require_string(j, "token")};
    if (type == "post") return PostRequest{require_string(j, "text")};
    if (type == "survey") {
        const auto it = j.find("answers");
        if (it == j.end() || !it->is_array() || it->size() != 3) bad("'answers' must hold three integers");
        SurveyRequest s;
        for (std::size_t i = 0; i < 3; ++i) {
            if (!(*it)[i].is_number_integer()) bad("'answers' must hold three integers");
            s.answers[i] = (*it)[i].get<int>();
        }
        return s;
    }
    bad("unknown envelope type '" + type + "'");
}

std::string encode_post(const Post& post) {
    ojson j;
    switch (post.kind) {
        case PostKind::PhaseChange:
            j["type"] = "phase";
            j["phase"] = to_string(post.phase);
            j["ts_ms"] = post.ts_ms;
            j["seq"] = post.seq;
            return j.dump();
        case PostKind::SessionEnd:
            j["type"] = "session_end";
            j["ts_ms"] = post.ts_ms;
            j["seq"] = post.seq;
            return j.dump();
        case PostKind::Message: break;
    }
    if (post.author.kind() == AuthorKind::Participant) {
        j["type"] = "post";
        j["seq"] = post.seq;
        j["ts_ms"] = post.ts_ms;
        j["author"] = post.author.id();
        j["text"] = post.text;
        return j.dump();
    }
    // Facilitator (and the odd SYSTEM message) share the facilitator shape.
    j["type"] = "facilitator";
    j["seq"] = post.seq;
    j["ts_ms"] = post.ts_ms;
    j["hat"] = post.hat ? ojson(std::string(to_string(*post.hat))) : ojson(nullptr);
    j["text"] = post.text;
    return j.dump();
}

std::string encode_joined(std::string_view participant_id, std::string_view session_id,
                          const Topic& topic, Millis duration_ms, std::string_view state,
                          std::int64_t last_seq) {
    ojson j;
    j["type"] = "joined";
    j["participant_id"] = participant_id;
    j["topic"] = topic.prompt_text;
    j["duration_ms"] = duration_ms;
    j["session_id"] = session_id;
    j["state"] = state;
    j["last_seq"] = last_seq;
    return j.dump();
}

std::string encode_error(ErrorCode code, std::string_view message) {
    ojson j;
    j["type"] = "error";
    j["code"] = to_string(code);
    j["message"] = message;
    return j.dump();
}

std::string encode_survey_ack() { return R"({"type":"survey_ack"})"; }

}  // namespace ptfa::protocol
