#include <algorithm>

#include <nlohmann/json.hpp>

#include "ptfa/error.hpp"
#include "ptfa/storage.hpp"

namespace ptfa {
namespace {

using ojson = nlohmann::ordered_json;

[[noreturn]] void violation(const std::string& what) {
    throw Error(ErrorCode::SchemaViolation, what);
}

const nlohmann::json& field(const nlohmann::json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) violation(std::string("missing field '") + key + "'");
    return *it;
}

std::string string_field(const nlohmann::json& obj, const char* key) {
    const auto& v = field(obj, key);
    if (!v.is_string()) violation(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::int64_t int_field(const nlohmann::json& obj, const char* key) {
    const auto& v = field(obj, key);
    if (!v.is_number_integer()) violation(std::string("field '") + key + "' must be an integer");
    return v.get<std::int64_t>();
}

}  // namespace

std::string encode_record(const Post& post, const SessionInfo& info) {
    ojson j;
    j["session_id"] = post.session_id;
    j["seq"] = post.seq;
    j["ts_ms"] = post.ts_ms;
    j["kind"] = to_string(post.kind);
    j["author_id"] = post.author.id();
    j["hat"] = post.hat ? ojson(std::string(to_string(*post.hat))) : ojson(nullptr);
    j["phase"] = to_string(post.phase);
    j["model"] = to_string(info.model);
    j["topic_id"] = info.topic_id;
    j["text"] = post.text;
    return j.dump();
}

DecodedRecord decode_record(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        violation(std::string("not valid JSON: ") + e.what());
    }
    if (!j.is_object()) violation("record must be a JSON object");

    DecodedRecord r{};
    r.post.session_id = string_field(j, "session_id");
    r.post.seq = int_field(j, "seq");
    if (r.post.seq < 1) violation("seq must be positive");
    r.post.ts_ms = int_field(j, "ts_ms");
    if (r.post.ts_ms < 0) violation("ts_ms must not be negative");

    const auto kind = parse_post_kind(string_field(j, "kind"));
    if (!kind) violation("unknown kind");
    r.post.kind = *kind;

    const std::string author = string_field(j, "author_id");
    if (author.empty()) violation("author_id must not be empty");
    r.post.author = Author::from_id(author);

    const auto phase = parse_phase(string_field(j, "phase"));
    if (!phase) violation("unknown phase");
    r.post.phase = *phase;

    const auto model = parse_model(string_field(j, "model"));
    if (!model) violation("model must be \"0\" or \"1\"");
    r.model = *model;

    r.topic_id = static_cast<int>(int_field(j, "topic_id"));
    if (r.topic_id != 0 && r.topic_id != 1) violation("topic_id must be 0 or 1");

    r.post.text = string_field(j, "text");
    if (r.post.text.empty()) violation("text must not be empty");

    const auto& hat = field(j, "hat");
    if (hat.is_null()) {
        r.post.hat.reset();
    } else if (hat.is_string()) {
        r.post.hat = parse_hat(hat.get<std::string>());
        if (!r.post.hat) violation("unknown hat");
    } else {
        violation("hat must be a string or null");
    }

    const bool hat_expected =
        r.post.author.kind() == AuthorKind::Facilitator && r.model == FacilitationModel::Model1;
    if (r.post.hat.has_value() != hat_expected) {
        violation("hat must be set exactly for hat-facilitator records");
    }
    if (r.post.kind != PostKind::Message && r.post.author.kind() != AuthorKind::System) {
        violation("lifecycle records must be authored by SYSTEM");
    }
    return r;
}

std::string render_dataset(const std::vector<Post>& log, const SessionInfo& info) {
    std::vector<const Post*> sorted;
    sorted.reserve(log.size());
    for (const auto& p : log) sorted.push_back(&p);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Post* a, const Post* b) { return a->seq < b->seq; });
    std::string out;
    for (const Post* p : sorted) {
        out += encode_record(*p, info);
        out += '\n';
    }
    return out;
}

std::vector<DecodedRecord> parse_dataset(std::string_view jsonl) {
    std::vector<DecodedRecord> records;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < jsonl.size()) {
        const std::size_t nl = jsonl.find('\n', pos);
        const std::string_view line =
            jsonl.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? jsonl.size() : nl + 1;
        ++line_no;
        if (line.empty() || line == "\r") continue;
        try {
            records.push_back(decode_record(line));
        } catch (const Error& e) {
            throw Error(ErrorCode::SchemaViolation, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

std::string encode_survey(const SurveyResponse& r) {
    ojson j;
    j["session_id"] = r.session_id;
    j["participant_id"] = r.participant_id;
    j["q_experience"] = r.q_experience.value();
    j["q_facilitator"] = r.q_facilitator.value();
    j["q_consensus"] = r.q_consensus.value();
    j["q_experience_label"] = anchor_label(SurveyQuestion::Experience, r.q_experience);
    j["q_facilitator_label"] = anchor_label(SurveyQuestion::Facilitator, r.q_facilitator);
    j["q_consensus_label"] = anchor_label(SurveyQuestion::Consensus, r.q_consensus);
    return j.dump();
}

SurveyResponse decode_survey(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        violation(std::string("not valid JSON: ") + e.what());
    }
    if (!j.is_object()) violation("survey record must be a JSON object");
    return SurveyResponse{
        string_field(j, "session_id"),
        string_field(j, "participant_id"),
        Likert7(static_cast<int>(int_field(j, "q_experience"))),
        Likert7(static_cast<int>(int_field(j, "q_facilitator"))),
        Likert7(static_cast<int>(int_field(j, "q_consensus"))),
    };
}

}  // namespace ptfa
