#include "ptfa/session.hpp"

#include <algorithm>

#include "ptfa/error.hpp"
#include "ptfa/facilitation.hpp"
#include "ptfa/text.hpp"

namespace ptfa {

Session::Session(SessionInfo info, Journal journal)
    : info_(std::move(info)), journal_(std::move(journal)) {
    if (info_.group_size < 2) {
        throw Error(ErrorCode::InvalidGroupSize,
                    "group size must be at least 2, got " + std::to_string(info_.group_size));
    }
    participants_.reserve(static_cast<std::size_t>(info_.group_size));
    for (int i = 1; i <= info_.group_size; ++i) participants_.push_back("P" + std::to_string(i));
}

bool Session::has_participant(std::string_view id) const noexcept {
    return std::find(participants_.begin(), participants_.end(), id) != participants_.end();
}

void Session::start(Millis now_abs) {
    if (started_at_) throw Error(ErrorCode::PreconditionViolated, "session already started");
    started_at_ = now_abs;
}

Millis Session::elapsed_at(Millis now_abs) const {
    if (!started_at_) throw Error(ErrorCode::NotLive, "session has not started");
    const Millis elapsed = now_abs - *started_at_;
    const Millis floor = log_.empty() ? 0 : log_.back().ts_ms;
    if (elapsed < floor) {
        throw Error(ErrorCode::ClockRegression,
                    "clock moved backwards: elapsed " + std::to_string(elapsed) +
                        " ms precedes last record at " + std::to_string(floor) + " ms");
    }
    return elapsed;
}

Post Session::make_post(PostKind kind, const Author& author, std::optional<Hat> hat,
                        std::string text, Millis now_abs) const {
    Post p;
    p.session_id = info_.session_id;
    p.seq = seq_counter_ + 1;
    p.ts_ms = elapsed_at(now_abs);
    p.kind = kind;
    p.author = author;
    p.hat = hat;
    p.phase = phase_;
    p.text = std::move(text);
    return p;
}

const Post& Session::commit(Post post) {
    if (journal_) journal_(post);  // may throw; nothing is committed then
    seq_counter_ = post.seq;
    log_.push_back(std::move(post));
    return log_.back();
}

const Post& Session::append_post(const Author& author, std::optional<Hat> hat,
                                 std::string_view text, Millis now_abs) {
    if (!started_at_) throw Error(ErrorCode::NotLive, "session has not started");
    if (closed()) throw Error(ErrorCode::SessionClosed, "session is closed");

    const std::string_view body = text::trim(text);
    if (body.empty()) throw Error(ErrorCode::EmptyText, "post text is empty");
    if (text::char_count(body) > kMaxPostChars) {
        throw Error(ErrorCode::TextTooLong,
                    "post text exceeds " + std::to_string(kMaxPostChars) + " characters");
    }

    switch (author.kind()) {
        case AuthorKind::Participant:
            if (hat) throw Error(ErrorCode::HatMismatch, "participant posts carry no hat");
            if (!has_participant(author.id())) {
                throw Error(ErrorCode::NotJoined, author.id() + " is not part of this session");
            }
            break;
        case AuthorKind::Facilitator:
            if (info_.model == FacilitationModel::Model1 && !hat) {
                throw Error(ErrorCode::HatMismatch, "hat facilitator posts must name their hat");
            }
            if (info_.model == FacilitationModel::Model0 && hat) {
                throw Error(ErrorCode::HatMismatch, "timed facilitator posts carry no hat");
            }
            if (is_sentinel(body)) {
                throw Error(ErrorCode::PreconditionViolated, "sentinel text must not be posted");
            }
            break;
        case AuthorKind::System:
            if (hat) throw Error(ErrorCode::HatMismatch, "system posts carry no hat");
            break;
    }
    return commit(make_post(PostKind::Message, author, hat, std::string(body), now_abs));
}

const Post& Session::announce_phase(Phase next, std::string_view text, Millis now_abs) {
    if (!started_at_) throw Error(ErrorCode::NotLive, "session has not started");
    if (static_cast<int>(next) <= static_cast<int>(phase_)) {
        throw Error(ErrorCode::PreconditionViolated,
                    "phase cannot move from " + std::string(to_string(phase_)) + " to " +
                        std::string(to_string(next)));
    }
    Post p = make_post(PostKind::PhaseChange, Author::system(), std::nullopt, std::string(text),
                       now_abs);
    p.phase = next;
    const Post& stored = commit(std::move(p));
    phase_ = next;
    return stored;
}

const Post& Session::end_session(std::string_view text, Millis now_abs) {
    if (!closed()) throw Error(ErrorCode::PreconditionViolated, "session is still open");
    if (ended_) throw Error(ErrorCode::SessionClosed, "session already ended");
    const Post& stored = commit(
        make_post(PostKind::SessionEnd, Author::system(), std::nullopt, std::string(text), now_abs));
    ended_ = true;
    return stored;
}

void Session::restore(const Post& post) {
    if (post.seq != seq_counter_ + 1) {
        throw Error(ErrorCode::Conflict, "record seq " + std::to_string(post.seq) +
                                             " does not follow " + std::to_string(seq_counter_));
    }
    if (!log_.empty() && post.ts_ms < log_.back().ts_ms) {
        throw Error(ErrorCode::ClockRegression, "record timestamps go backwards");
    }
    if (static_cast<int>(post.phase) < static_cast<int>(phase_)) {
        throw Error(ErrorCode::Conflict, "record phase goes backwards");
    }
    seq_counter_ = post.seq;
    phase_ = post.phase;
    if (post.kind == PostKind::SessionEnd) ended_ = true;
    log_.push_back(post);
    log_.back().session_id = info_.session_id;
}

}  // namespace ptfa
