#include "ptfa/storage.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <openssl/rand.h>
#include <spdlog/spdlog.h>

#include "ptfa/error.hpp"

namespace ptfa {
namespace fs = std::filesystem;
namespace {

[[noreturn]] void unavailable(const fs::path& file, const std::string& what) {
    throw Error(ErrorCode::StorageUnavailable, file.string() + ": " + what);
}

void check_id(const std::string& id) {
    static const std::regex safe(R"([A-Za-z0-9_-]{1,64})");
    if (!std::regex_match(id, safe)) {
        throw Error(ErrorCode::PreconditionViolated, "session id '" + id + "' is not file-safe");
    }
}

/// Reads complete lines. A trailing fragment without a newline is a torn
/// write from a crash and is cut off the file.
std::vector<std::string> read_lines(const fs::path& file) {
    std::vector<std::string> lines;
    std::ifstream in(file, std::ios::binary);
    if (!in) return lines;
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string data = buf.str();
    std::size_t pos = 0;
    while (pos < data.size()) {
        const std::size_t nl = data.find('\n', pos);
        if (nl == std::string::npos) {
            spdlog::warn("{}: dropping torn trailing line", file.string());
            in.close();
            fs::resize_file(file, pos);
            break;
        }
        if (nl > pos) lines.push_back(data.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

}  // namespace

std::string hash_token(std::string_view token) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(token.data(), token.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string random_hex(std::size_t bytes) {
    std::vector<unsigned char> raw(bytes);
    if (RAND_bytes(raw.data(), static_cast<int>(raw.size())) != 1) {
        throw std::runtime_error("RAND_bytes failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes * 2);
    for (unsigned char b : raw) {
        out += hex[b >> 4];
        out += hex[b & 0xF];
    }
    return out;
}

SessionStore::SessionStore(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_ / "logs", ec);
    if (!ec) fs::create_directories(root_ / "surveys", ec);
    if (ec) unavailable(root_, ec.message());
}

fs::path SessionStore::log_path(const std::string& session_id) const {
    return root_ / "logs" / ("session_" + session_id + ".jsonl");
}

fs::path SessionStore::survey_path(const std::string& session_id) const {
    return root_ / "surveys" / ("survey_" + session_id + ".jsonl");
}

void SessionStore::append_line(const fs::path& file, const std::string& line) {
    const int fd = ::open(file.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) unavailable(file, std::strerror(errno));
    std::string data = line;
    data += '\n';
    const char* p = data.data();
    std::size_t left = data.size();
    while (left > 0) {
        const ssize_t n = ::write(fd, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            const std::string err = std::strerror(errno);
            ::close(fd);
            unavailable(file, err);
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
        const std::string err = std::strerror(errno);
        ::close(fd);
        unavailable(file, err);
    }
    ::close(fd);
}

void SessionStore::record_session(const SessionInfo& info, const std::vector<std::string>& token_hashes) {
    check_id(info.session_id);
    nlohmann::ordered_json j;
    j["event"] = "create";
    j["session_id"] = info.session_id;
    j["topic_id"] = info.topic_id;
    j["model"] = to_string(info.model);
    j["group_size"] = info.group_size;
    j["duration_ms"] = info.duration_ms;
    j["token_hashes"] = token_hashes;
    std::lock_guard lock(mutex_);
    if (sessions_.contains(info.session_id)) {
        throw Error(ErrorCode::Conflict, "session " + info.session_id + " already exists");
    }
    append_line(root_ / "index.jsonl", j.dump());
    sessions_[info.session_id] = info;
    last_seq_[info.session_id] = 0;
    closed_[info.session_id] = false;
}

void SessionStore::record_join(const std::string& session_id, const std::string& token_hash,
                               const std::string& participant_id) {
    nlohmann::ordered_json j;
    j["event"] = "join";
    j["session_id"] = session_id;
    j["token_hash"] = token_hash;
    j["participant_id"] = participant_id;
    std::lock_guard lock(mutex_);
    append_line(root_ / "index.jsonl", j.dump());
}

void SessionStore::record_start(const std::string& session_id, Millis started_at_abs) {
    nlohmann::ordered_json j;
    j["event"] = "start";
    j["session_id"] = session_id;
    j["started_at_ms"] = started_at_abs;
    std::lock_guard lock(mutex_);
    append_line(root_ / "index.jsonl", j.dump());
}

void SessionStore::persist(const Post& post) {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(post.session_id);
    if (it == sessions_.end()) {
        throw Error(ErrorCode::UnknownSession, "unknown session " + post.session_id);
    }
    auto& last = last_seq_[post.session_id];
    if (post.seq != last + 1) {
        throw Error(ErrorCode::Conflict, "session " + post.session_id + " already has seq " +
                                             std::to_string(last) + ", rejected seq " +
                                             std::to_string(post.seq));
    }
    append_line(log_path(post.session_id), encode_record(post, it->second));
    last = post.seq;
    if (post.kind == PostKind::SessionEnd) closed_[post.session_id] = true;
}

void SessionStore::persist_survey(const SurveyResponse& response) {
    std::lock_guard lock(mutex_);
    if (!sessions_.contains(response.session_id)) {
        throw Error(ErrorCode::UnknownSession, "unknown session " + response.session_id);
    }
    for (const auto& line : read_lines(survey_path(response.session_id))) {
        if (decode_survey(line).participant_id == response.participant_id) {
            throw Error(ErrorCode::DuplicateResponse,
                        response.participant_id + " already answered the survey");
        }
    }
    append_line(survey_path(response.session_id), encode_survey(response));
}

std::vector<Post> SessionStore::read_log(const std::string& session_id, const SessionInfo& info) {
    std::vector<Post> records;
    std::size_t line_no = 0;
    for (const auto& line : read_lines(log_path(session_id))) {
        ++line_no;
        try {
            auto rec = decode_record(line);
            if (rec.post.session_id != session_id || rec.model != info.model ||
                rec.topic_id != info.topic_id) {
                throw Error(ErrorCode::SchemaViolation, "record belongs to another session");
            }
            records.push_back(std::move(rec.post));
        } catch (const Error& e) {
            throw Error(ErrorCode::SchemaViolation, log_path(session_id).string() + " line " +
                                                        std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

std::vector<SessionStore::Recovered> SessionStore::recover() {
    std::lock_guard lock(mutex_);
    std::vector<Recovered> out;
    std::map<std::string, std::size_t> pos;
    for (const auto& line : read_lines(root_ / "index.jsonl")) {
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw Error(ErrorCode::SchemaViolation, "corrupt index line: " + line);
        }
        const std::string event = j.value("event", "");
        const std::string id = j.value("session_id", "");
        if (event == "create") {
            Recovered r;
            r.meta.info.session_id = id;
            r.meta.info.topic_id = j.at("topic_id").get<int>();
            r.meta.info.model = parse_model(j.at("model").get<std::string>()).value();
            r.meta.info.group_size = j.at("group_size").get<int>();
            r.meta.info.duration_ms = j.at("duration_ms").get<Millis>();
            r.meta.token_hashes = j.at("token_hashes").get<std::vector<std::string>>();
            pos[id] = out.size();
            out.push_back(std::move(r));
            continue;
        }
        const auto it = pos.find(id);
        if (it == pos.end()) continue;
        auto& meta = out[it->second].meta;
        if (event == "join") {
            meta.joined[j.at("token_hash").get<std::string>()] = j.at("participant_id").get<std::string>();
        } else if (event == "start") {
            meta.started_at = j.at("started_at_ms").get<Millis>();
        }
    }
    for (auto& r : out) {
        const auto& id = r.meta.info.session_id;
        r.records = read_log(id, r.meta.info);
        for (const auto& line : read_lines(survey_path(id))) r.surveys.push_back(decode_survey(line));
        sessions_[id] = r.meta.info;
        last_seq_[id] = r.records.empty() ? 0 : r.records.back().seq;
        closed_[id] = !r.records.empty() && r.records.back().kind == PostKind::SessionEnd;
    }
    return out;
}

std::string SessionStore::export_dataset(const std::string& session_id) {
    SessionInfo info;
    {
        std::lock_guard lock(mutex_);
        const auto it = sessions_.find(session_id);
        if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "unknown session " + session_id);
        if (!closed_[session_id]) {
            throw Error(ErrorCode::SessionNotClosed, "session " + session_id + " is still open");
        }
        info = it->second;
    }
    return render_dataset(read_log(session_id, info), info);
}

std::string SessionStore::export_surveys(const std::string& session_id) {
    std::lock_guard lock(mutex_);
    if (!sessions_.contains(session_id)) {
        throw Error(ErrorCode::UnknownSession, "unknown session " + session_id);
    }
    std::string out;
    for (const auto& line : read_lines(survey_path(session_id))) {
        out += encode_survey(decode_survey(line));
        out += '\n';
    }
    return out;
}

fs::path SessionStore::write_export(const std::string& session_id, const fs::path& dir) {
    const std::string data = export_dataset(session_id);
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path file = dir / ("session_" + session_id + ".jsonl");
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out << data;
    if (!out) unavailable(file, "write failed");
    return file;
}

}  // namespace ptfa
