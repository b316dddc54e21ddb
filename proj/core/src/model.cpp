#include "ptfa/model.hpp"

#include <array>

#include "ptfa/error.hpp"

namespace ptfa {

std::string_view to_string(Hat hat) noexcept {
    switch (hat) {
        case Hat::White: return "white";
        case Hat::Red: return "red";
        case Hat::Black: return "black";
        case Hat::Yellow: return "yellow";
        case Hat::Green: return "green";
        case Hat::Blue: return "blue";
    }
    return "white";
}

std::string_view display_name(Hat hat) noexcept {
    switch (hat) {
        case Hat::White: return "White";
        case Hat::Red: return "Red";
        case Hat::Black: return "Black";
        case Hat::Yellow: return "Yellow";
        case Hat::Green: return "Green";
        case Hat::Blue: return "Blue";
    }
    return "White";
}

std::optional<Hat> parse_hat(std::string_view name) noexcept {
    for (Hat h : kAllHats) {
        if (to_string(h) == name) return h;
    }
    return std::nullopt;
}

std::string_view to_string(Phase phase) noexcept {
    switch (phase) {
        case Phase::Divergent: return "divergent";
        case Phase::Convergent: return "convergent";
        case Phase::Closed: return "closed";
    }
    return "divergent";
}

std::optional<Phase> parse_phase(std::string_view name) noexcept {
    if (name == "divergent") return Phase::Divergent;
    if (name == "convergent") return Phase::Convergent;
    if (name == "closed") return Phase::Closed;
    return std::nullopt;
}

std::string_view to_string(FacilitationModel model) noexcept {
    return model == FacilitationModel::Model0 ? "0" : "1";
}

std::optional<FacilitationModel> parse_model(std::string_view s) noexcept {
    if (s == "0") return FacilitationModel::Model0;
    if (s == "1") return FacilitationModel::Model1;
    return std::nullopt;
}

const Topic& topic(int id) {
    static const std::array<Topic, 2> topics{{
        {0, "Please decide one activity that you would like to do together"},
        {1, "Please decide one film that you would like to watch together"},
    }};
    if (id < 0 || id >= static_cast<int>(topics.size())) {
        throw Error(ErrorCode::InvalidTopic, "unknown topic id " + std::to_string(id));
    }
    return topics[static_cast<std::size_t>(id)];
}

Author Author::from_id(std::string_view id) {
    if (id == kFacilitatorId) return facilitator();
    if (id == kSystemId) return system();
    return participant(std::string(id));
}

std::string_view to_string(PostKind kind) noexcept {
    switch (kind) {
        case PostKind::Message: return "post";
        case PostKind::PhaseChange: return "phase";
        case PostKind::SessionEnd: return "session_end";
    }
    return "post";
}

std::optional<PostKind> parse_post_kind(std::string_view s) noexcept {
    if (s == "post") return PostKind::Message;
    if (s == "phase") return PostKind::PhaseChange;
    if (s == "session_end") return PostKind::SessionEnd;
    return std::nullopt;
}

Likert7::Likert7(int value) : value_(value) {
    if (value < 1 || value > 7) {
        throw Error(ErrorCode::OutOfRangeAnswer,
                    "answer " + std::to_string(value) + " is outside 1..7");
    }
}

std::string_view question_text(SurveyQuestion q) noexcept {
    switch (q) {
        case SurveyQuestion::Experience:
            return "How would you rate the user experience of the platform?";
        case SurveyQuestion::Facilitator:
            return "How would you rate the extent to which the facilitator in the discussion "
                   "helped consensus decision-making?";
        case SurveyQuestion::Consensus:
            return "Do you agree with the consensus reached in this discussion?";
    }
    return "";
}

std::string_view anchor_label(SurveyQuestion q, Likert7 answer) noexcept {
    // index 0 is answer 7
    static constexpr std::array<std::string_view, 7> satisfaction{
        "Very Satisfied",       "Satisfied",   "Somewhat Satisfied", "Neutral",
        "Somewhat Unsatisfied", "Unsatisfied", "Very Unsatisfied"};
    static constexpr std::array<std::string_view, 7> agreement{
        "Strongly Agree",    "Agree",    "Somewhat Agree",   "Neutral",
        "Somewhat Disagree", "Disagree", "Strongly Disagree"};
    const auto idx = static_cast<std::size_t>(7 - answer.value());
    return q == SurveyQuestion::Experience ? satisfaction[idx] : agreement[idx];
}

}  // namespace ptfa
