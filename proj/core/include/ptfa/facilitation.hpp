#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ptfa/llm.hpp"
#include "ptfa/model.hpp"

namespace ptfa {

struct HatAgentConfig {
    Hat hat = Hat::White;
    std::string role_name;
    /// Role, discussion background and objectives.
    std::string macro_prompt;
    /// Example interventions; may contain "[insert ...]" slots.
    std::vector<std::string> situational_templates;
    int divergent_priority = 1;  // 1 = most preferred
    int convergent_priority = 1;
    double temperature = 0.7;

    int priority(Phase phase) const;
};

/// Exactly one config per hat, with per-phase priorities forming a
/// permutation of 1..6.
class HatRegistry {
public:
    /// Built-in roles and templates.
    static HatRegistry defaults();

    /// Throws BadConfig when a hat is missing/duplicated or priorities are
    /// not a permutation.
    explicit HatRegistry(std::vector<HatAgentConfig> configs);

    const HatAgentConfig& at(Hat hat) const;
    const std::array<HatAgentConfig, 6>& all() const noexcept { return configs_; }

    /// Hats ordered best-first for `phase`.
    std::array<Hat, 6> ranking(Phase phase) const;

private:
    std::array<HatAgentConfig, 6> configs_;
};

inline constexpr std::string_view kSentinel = "Good";

/// True iff `text`, trimmed and with at most one trailing period removed,
/// equals "good" ignoring case.
bool is_sentinel(std::string_view text) noexcept;

struct PromptOptions {
    std::string topic_text;
    Millis elapsed_ms = 0;
    Millis duration_ms = 1'200'000;
    bool reengage = false;
    std::size_t max_output_chars = 500;
    Millis timeout_ms = 28'000;
};

/// Last posts of `log` that fit `budget`, oldest first.
std::vector<llm::ChatMessage> context_window(std::span<const Post> log,
                                             const llm::ContextBudget& budget);

/// Speaker label used in prompts: participant ids as stored, facilitator and
/// system posts labelled by role.
std::string speaker_label(const Post& post);

/// "17 of 20 minutes have elapsed; 3 minutes remain."
std::string time_clause(Millis elapsed_ms, Millis duration_ms);

/// Macro prompt + phase directive + time clause + abstention instruction +
/// situational guidance. Closed phase is a precondition violation.
llm::CompletionRequest assemble_prompt(const HatAgentConfig& cfg,
                                       std::vector<llm::ChatMessage> window, Phase phase,
                                       const PromptOptions& opts);

struct HatDecision {
    Hat hat = Hat::White;
    /// Respond text; empty means Abstain.
    std::optional<std::string> response;
    /// Why the hat abstained ("sentinel", "timeout", "late", provider message).
    std::string abstain_reason;
    Millis latency_ms = 0;

    bool responded() const noexcept { return response.has_value(); }

    static HatDecision respond(Hat hat, std::string text, Millis latency = 0);
    static HatDecision abstain(Hat hat, std::string reason, Millis latency = 0);
};

/// Runs one hat against `provider`. Sentinels, empty output and every provider
/// failure fold to Abstain.
HatDecision evaluate_hat(Hat hat, const llm::CompletionRequest& req, llm::Provider& provider);

/// Evaluates every request concurrently and joins the results by `deadline`
/// (steady-clock milliseconds from now). Anything still running is
/// reported as Abstain("late").
std::vector<HatDecision> evaluate_hats(
    const std::vector<std::pair<Hat, llm::CompletionRequest>>& requests,
    std::shared_ptr<llm::Provider> provider, Millis deadline_ms);

struct Intervention {
    Hat hat;
    std::string text;

    friend bool operator==(const Intervention&, const Intervention&) = default;
};

/// Picks at most one responding hat: best phase priority, except that hats
/// behind either of the two most recent facilitator posts rank below all
/// others. `recent_hats` is most-recent-first; only the first two count.
std::optional<Intervention> select_intervention(std::span<const HatDecision> decisions, Phase phase,
                                                std::span<const Hat> recent_hats,
                                                const HatRegistry& registry);

struct BaselineEntry {
    Millis offset_ms;
    std::string text;
};

/// The fixed three-message schedule of the timed facilitator.
class BaselineSchedule {
public:
    static BaselineSchedule standard();

    /// Exactly three entries, offsets strictly increasing and below `duration_ms`.
    BaselineSchedule(std::vector<BaselineEntry> entries, Millis duration_ms);

    const std::vector<BaselineEntry>& entries() const noexcept { return entries_; }

private:
    std::vector<BaselineEntry> entries_;
};

/// First unsent entry whose offset is <= elapsed; records it in `already_sent`.
std::optional<std::string> baseline_message(const BaselineSchedule& schedule, Millis elapsed_ms,
                                            std::set<std::size_t>& already_sent);

}  // namespace ptfa
