#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ptfa/session.hpp"

namespace ptfa {

/// One line of a dataset export.
std::string encode_record(const Post& post, const SessionInfo& info);

struct DecodedRecord {
    Post post;
    FacilitationModel model;
    int topic_id;
};

/// Parses one record line; SchemaViolation on any mismatch, including the
/// hat-nullability rule.
DecodedRecord decode_record(std::string_view line);

/// Records sorted by seq, one JSON object per line, LF terminated.
std::string render_dataset(const std::vector<Post>& log, const SessionInfo& info);

/// SchemaViolation messages carry "line N".
std::vector<DecodedRecord> parse_dataset(std::string_view jsonl);

std::string encode_survey(const SurveyResponse& response);
SurveyResponse decode_survey(std::string_view line);

/// Session metadata as kept in the index.
struct StoredSession {
    SessionInfo info;
    std::vector<std::string> token_hashes;  // seat order
    std::map<std::string, std::string> joined;  // token hash -> participant id
    std::optional<Millis> started_at;
};

/// Append-only on-disk store: an index of sessions plus one log per session
/// and one survey file per session. Every append is flushed and fsync'd
/// before it returns.
///
///   <root>/index.jsonl
///   <root>/logs/session_<id>.jsonl
///   <root>/surveys/survey_<id>.jsonl
class SessionStore {
public:
    explicit SessionStore(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }

    void record_session(const SessionInfo& info, const std::vector<std::string>& token_hashes);
    void record_join(const std::string& session_id, const std::string& token_hash,
                     const std::string& participant_id);
    void record_start(const std::string& session_id, Millis started_at_abs);

    /// Durable append; Conflict when (session, seq) is not the next seq.
    void persist(const Post& post);
    void persist_survey(const SurveyResponse& response);

    /// Everything in the index, in creation order, with logs replayed.
    struct Recovered {
        StoredSession meta;
        std::vector<Post> records;
        std::vector<SurveyResponse> surveys;
    };
    std::vector<Recovered> recover();

    /// Dataset of a closed session. UnknownSession / SessionNotClosed.
    std::string export_dataset(const std::string& session_id);
    std::string export_surveys(const std::string& session_id);

    /// Writes session_<id>.jsonl into `dir`, returns its path.
    std::filesystem::path write_export(const std::string& session_id,
                                       const std::filesystem::path& dir);

    std::filesystem::path log_path(const std::string& session_id) const;
    std::filesystem::path survey_path(const std::string& session_id) const;

private:
    void append_line(const std::filesystem::path& file, const std::string& line);
    std::vector<Post> read_log(const std::string& session_id, const SessionInfo& info);

    std::filesystem::path root_;
    std::mutex mutex_;
    std::map<std::string, SessionInfo> sessions_;
    std::map<std::string, std::int64_t> last_seq_;
    std::map<std::string, bool> closed_;
};

/// Hex SHA-256 of a join token; tokens themselves are never written.
std::string hash_token(std::string_view token);

/// `bytes` random bytes as lowercase hex.
std::string random_hex(std::size_t bytes);

}  // namespace ptfa
