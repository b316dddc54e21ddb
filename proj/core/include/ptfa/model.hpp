#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ptfa {

using Millis = std::int64_t;

inline constexpr std::size_t kMaxPostChars = 4000;
inline constexpr int kDefaultGroupSize = 3;

enum class Hat { White, Red, Black, Yellow, Green, Blue };

inline constexpr std::array<Hat, 6> kAllHats{Hat::White, Hat::Red,   Hat::Black,
                                              Hat::Yellow, Hat::Green, Hat::Blue};

/// Lowercase wire name ("white", "red", ...).
std::string_view to_string(Hat hat) noexcept;
std::optional<Hat> parse_hat(std::string_view name) noexcept;
/// Display name ("White", "Red", ...).
std::string_view display_name(Hat hat) noexcept;

enum class Phase { Divergent = 0, Convergent = 1, Closed = 2 };

std::string_view to_string(Phase phase) noexcept;
std::optional<Phase> parse_phase(std::string_view name) noexcept;

enum class FacilitationModel { Model0 = 0, Model1 = 1 };

std::string_view to_string(FacilitationModel model) noexcept;  // "0" / "1"
std::optional<FacilitationModel> parse_model(std::string_view s) noexcept;

struct Topic {
    int id;
    std::string_view prompt_text;
};

/// The two discussion topics; throws InvalidTopic for any other id.
const Topic& topic(int id);

enum class AuthorKind { Participant, Facilitator, System };

inline constexpr std::string_view kFacilitatorId = "FACILITATOR";
inline constexpr std::string_view kSystemId = "SYSTEM";

class Author {
public:
    static Author participant(std::string id) { return Author{AuthorKind::Participant, std::move(id)}; }
    static Author facilitator() { return Author{AuthorKind::Facilitator, std::string(kFacilitatorId)}; }
    static Author system() { return Author{AuthorKind::System, std::string(kSystemId)}; }
    /// Inverse of id(); anything that is not FACILITATOR or SYSTEM is a participant.
    static Author from_id(std::string_view id);

    AuthorKind kind() const noexcept { return kind_; }
    const std::string& id() const noexcept { return id_; }
    bool is_participant() const noexcept { return kind_ == AuthorKind::Participant; }

    friend bool operator==(const Author&, const Author&) = default;

private:
    Author(AuthorKind kind, std::string id) : kind_(kind), id_(std::move(id)) {}

    AuthorKind kind_;
    std::string id_;
};

/// Regular messages are "post"; lifecycle events (phase changes, session end)
/// are recorded as SYSTEM posts of the other kinds.
enum class PostKind { Message, PhaseChange, SessionEnd };

std::string_view to_string(PostKind kind) noexcept;
std::optional<PostKind> parse_post_kind(std::string_view s) noexcept;

struct Post {
    std::string session_id;
    std::int64_t seq = 0;
    Millis ts_ms = 0;
    PostKind kind = PostKind::Message;
    Author author = Author::system();
    std::optional<Hat> hat;
    Phase phase = Phase::Divergent;
    std::string text;

    friend bool operator==(const Post&, const Post&) = default;
};

/// 1..7; 7 is the most positive anchor.
class Likert7 {
public:
    /// Throws OutOfRangeAnswer outside 1..7.
    explicit Likert7(int value);
    int value() const noexcept { return value_; }
    friend bool operator==(Likert7, Likert7) = default;

private:
    int value_;
};

enum class SurveyQuestion { Experience, Facilitator, Consensus };

std::string_view question_text(SurveyQuestion q) noexcept;
/// Verbal anchor for a Likert answer; Experience uses the satisfaction scale,
/// the other two the agreement scale.
std::string_view anchor_label(SurveyQuestion q, Likert7 answer) noexcept;

struct SurveyResponse {
    std::string session_id;
    std::string participant_id;
    Likert7 q_experience{4};
    Likert7 q_facilitator{4};
    Likert7 q_consensus{4};

    friend bool operator==(const SurveyResponse&, const SurveyResponse&) = default;
};

}  // namespace ptfa
