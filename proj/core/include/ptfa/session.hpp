#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ptfa/model.hpp"

namespace ptfa {

struct SessionInfo {
    std::string session_id;
    int topic_id = 0;
    FacilitationModel model = FacilitationModel::Model1;
    int group_size = kDefaultGroupSize;
    Millis duration_ms = 1'200'000;

    friend bool operator==(const SessionInfo&, const SessionInfo&) = default;
};

/// Receives every record before it becomes visible in the in-memory log.
/// Throwing aborts the append.
using Journal = std::function<void(const Post&)>;

/// One discussion room and its ordered transcript. Not synchronised; the
/// owner is the session's single writer.
class Session {
public:
    explicit Session(SessionInfo info, Journal journal = {});

    const SessionInfo& info() const noexcept { return info_; }
    const std::string& id() const noexcept { return info_.session_id; }
    FacilitationModel model() const noexcept { return info_.model; }

    /// "P1".."Pn".
    const std::vector<std::string>& participants() const noexcept { return participants_; }
    bool has_participant(std::string_view id) const noexcept;

    bool started() const noexcept { return started_at_.has_value(); }
    std::optional<Millis> started_at() const noexcept { return started_at_; }
    void start(Millis now_abs);

    Phase phase() const noexcept { return phase_; }
    bool closed() const noexcept { return phase_ == Phase::Closed; }
    std::int64_t last_seq() const noexcept { return seq_counter_; }
    const std::vector<Post>& log() const noexcept { return log_; }

    /// Offset of `now_abs` from the session start; ClockRegression when it
    /// precedes the last recorded timestamp.
    Millis elapsed_at(Millis now_abs) const;

    const Post& append_post(const Author& author, std::optional<Hat> hat, std::string_view text,
                            Millis now_abs);

    /// SYSTEM record announcing `next`. Phases only move forward; announcing
    /// Closed also seals the session.
    const Post& announce_phase(Phase next, std::string_view text, Millis now_abs);

    /// Final SYSTEM record; only valid once the session is Closed.
    const Post& end_session(std::string_view text, Millis now_abs);

    /// Re-insert a persisted record (recovery / replay). Does not journal.
    void restore(const Post& post);

private:
    const Post& commit(Post post);
    Post make_post(PostKind kind, const Author& author, std::optional<Hat> hat, std::string text,
                   Millis now_abs) const;

    SessionInfo info_;
    Journal journal_;
    std::vector<std::string> participants_;
    std::optional<Millis> started_at_;
    Phase phase_ = Phase::Divergent;
    bool ended_ = false;
    std::int64_t seq_counter_ = 0;
    std::vector<Post> log_;
};

}  // namespace ptfa
