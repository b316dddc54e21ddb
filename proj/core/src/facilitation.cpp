#include "ptfa/facilitation.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <thread>

#include <spdlog/spdlog.h>

#include "ptfa/error.hpp"
#include "ptfa/text.hpp"

namespace ptfa {
namespace {

constexpr std::string_view kObjective =
    "You are one of six facilitator agents supporting a small online text discussion between "
    "anonymous participants (P1, P2, ...). Your overall goal is to help the group reach a "
    "consensus through a balanced, well-structured conversation. Keep every intervention short "
    "(one to three sentences), concrete and addressed to the whole group.";

HatAgentConfig make(Hat hat, std::string role, std::string_view focus, std::string templ,
                    int divergent, int convergent) {
    HatAgentConfig c;
    c.hat = hat;
    c.role_name = std::move(role);
    c.macro_prompt = std::string(kObjective) + "\n\n" + std::string(focus);
    c.situational_templates = {std::move(templ)};
    c.divergent_priority = divergent;
    c.convergent_priority = convergent;
    return c;
}

}  // namespace

int HatAgentConfig::priority(Phase phase) const {
    switch (phase) {
        case Phase::Divergent: return divergent_priority;
        case Phase::Convergent: return convergent_priority;
        case Phase::Closed: break;
    }
    throw Error(ErrorCode::PreconditionViolated, "no hat priorities once the session is closed");
}

HatRegistry HatRegistry::defaults() {
    return HatRegistry({
        make(Hat::White, "White Hat (facts and information)",
             "You wear the White Hat. Deal only in facts and information: supply accurate, "
             "neutral data when the group lacks it or when someone states something without "
             "support. Do not offer opinions or interpretations.",
             "Could you clarify the exact figures or facts related to this issue? Here's what we "
             "know so far: [insert relevant data].",
             4, 3),
        make(Hat::Red, "Red Hat (emotions and intuition)",
             "You wear the Red Hat. Give voice to feelings and gut reactions. When the "
             "conversation touches on what people like, dislike or feel, invite them to share "
             "their intuitive reaction briefly, without asking them to justify it.",
             "This feels like an emotional moment. How are we feeling about this issue right now?",
             3, 5),
        make(Hat::Black, "Black Hat (critical thinking and risk)",
             "You wear the Black Hat. Bring a cautious, critical view: name risks, weaknesses and "
             "practical problems the group may be missing so that downsides are weighed before "
             "anything is decided.",
             "Have we considered the potential downsides? Here's a risk we might be overlooking: "
             "[insert risk].",
             5, 2),
        make(Hat::Yellow, "Yellow Hat (optimism and benefits)",
             "You wear the Yellow Hat. Point out the benefits and strengths of the ideas on the "
             "table, especially when the discussion could use some encouragement.",
             "Looking at the bright side, this idea offers some exciting opportunities we "
             "shouldn’t overlook.",
             2, 4),
        make(Hat::Green, "Green Hat (creativity and alternatives)",
             "You wear the Green Hat. Contribute new ideas or alternative approaches when the "
             "conversation stalls or would profit from fresh options.",
             "What if we approached this from a different angle? Here’s an idea to consider: "
             "[insert new idea].",
             1, 6),
        make(Hat::Blue, "Blue Hat (process and control)",
             "You wear the Blue Hat. Manage the thinking process itself: keep the discussion on "
             "the question, summarise where the group stands, make sure every participant is "
             "heard and steer towards a decision in good time.",
             "It seems like we’re getting off track. Maybe we should focus on this key point: "
             "[insert key point].",
             6, 1),
    });
}

HatRegistry::HatRegistry(std::vector<HatAgentConfig> configs) {
    if (configs.size() != kAllHats.size()) {
        throw Error(ErrorCode::BadConfig, "hats: expected 6 hat configs, got " +
                                              std::to_string(configs.size()));
    }
    std::array<bool, 6> seen{};
    std::array<bool, 7> div{};
    std::array<bool, 7> conv{};
    for (auto& c : configs) {
        const auto idx = static_cast<std::size_t>(c.hat);
        const std::string key = "hats." + std::string(to_string(c.hat));
        if (seen[idx]) throw Error(ErrorCode::BadConfig, key + ": duplicate hat");
        seen[idx] = true;
        if (c.divergent_priority < 1 || c.divergent_priority > 6 || div[c.divergent_priority]) {
            throw Error(ErrorCode::BadConfig,
                        key + ".divergent_priority: priorities must be a permutation of 1..6");
        }
        if (c.convergent_priority < 1 || c.convergent_priority > 6 || conv[c.convergent_priority]) {
            throw Error(ErrorCode::BadConfig,
                        key + ".convergent_priority: priorities must be a permutation of 1..6");
        }
        if (c.temperature < 0.0 || c.temperature > 2.0) {
            throw Error(ErrorCode::BadConfig, key + ".temperature: must lie in [0, 2]");
        }
        div[c.divergent_priority] = true;
        conv[c.convergent_priority] = true;
        configs_[idx] = std::move(c);
    }
}

const HatAgentConfig& HatRegistry::at(Hat hat) const { return configs_[static_cast<std::size_t>(hat)]; }

std::array<Hat, 6> HatRegistry::ranking(Phase phase) const {
    std::array<Hat, 6> order = kAllHats;
    std::sort(order.begin(), order.end(),
              [&](Hat a, Hat b) { return at(a).priority(phase) < at(b).priority(phase); });
    return order;
}

bool is_sentinel(std::string_view candidate) noexcept {
    std::string_view s = text::trim(candidate);
    if (!s.empty() && s.back() == '.') s = text::trim(s.substr(0, s.size() - 1));
    if (s.size() != kSentinel.size()) return false;
    return text::to_lower_ascii(s) == "good";
}

std::vector<llm::ChatMessage> context_window(std::span<const Post> log,
                                             const llm::ContextBudget& budget) {
    std::vector<llm::ChatMessage> window;
    std::size_t chars = 0;
    for (auto it = log.rbegin(); it != log.rend(); ++it) {
        if (window.size() >= budget.max_messages) break;
        const std::size_t c = text::char_count(it->text);
        if (chars + c > budget.max_chars) break;
        chars += c;
        window.push_back({speaker_label(*it), it->text});
    }
    std::reverse(window.begin(), window.end());
    return window;
}

std::string speaker_label(const Post& post) {
    switch (post.author.kind()) {
        case AuthorKind::Participant: return post.author.id();
        case AuthorKind::Facilitator:
            if (post.hat) return "Facilitator (" + std::string(display_name(*post.hat)) + " Hat)";
            return "Facilitator";
        case AuthorKind::System: return "System";
    }
    return "System";
}

std::string time_clause(Millis elapsed_ms, Millis duration_ms) {
    constexpr Millis kMinute = 60'000;
    const Millis elapsed = std::max<Millis>(0, elapsed_ms);
    const Millis remaining_ms = std::max<Millis>(0, duration_ms - elapsed);
    const Millis total = (duration_ms + kMinute - 1) / kMinute;
    const Millis done = elapsed / kMinute;
    const Millis left = (remaining_ms + kMinute - 1) / kMinute;
    return std::to_string(done) + " of " + std::to_string(total) + " minutes have elapsed; " +
           std::to_string(left) + (left == 1 ? " minute remains." : " minutes remain.");
}

llm::CompletionRequest assemble_prompt(const HatAgentConfig& cfg,
                                       std::vector<llm::ChatMessage> window, Phase phase,
                                       const PromptOptions& opts) {
    std::string_view directive;
    switch (phase) {
        case Phase::Divergent:
            directive =
                "Current stage: divergent. Help the group generate and explore a wide range of "
                "ideas; it is too early to push for a decision.";
            break;
        case Phase::Convergent:
            directive =
                "Current stage: convergent. Help the group compare the ideas already raised and "
                "settle on one decision. Do not ask for new ideas, and if the group has already "
                "agreed, do not reopen the question.";
            break;
        case Phase::Closed:
            throw Error(ErrorCode::PreconditionViolated, "no prompts are assembled after close");
    }

    std::string system = cfg.macro_prompt;
    if (!opts.topic_text.empty()) {
        system += "\n\nThe group must agree on an answer to: \"" + opts.topic_text + "\"";
    }
    system += "\n\n";
    system += directive;
    system += "\nTime: " + time_clause(opts.elapsed_ms, opts.duration_ms);
    if (opts.reengage) {
        system +=
            "\nThe participants have been quiet for a while. Re-engage them with a targeted "
            "suggestion or a request to elaborate on something already said.";
    }
    system +=
        "\n\nStep in only when your perspective would help the discussion right now. If no "
        "intervention is needed, reply with exactly: ";
    system += kSentinel;
    if (!cfg.situational_templates.empty()) {
        system +=
            "\n\nExamples of how you might phrase an intervention (fill any [insert ...] slot "
            "from the discussion):";
        for (const auto& t : cfg.situational_templates) system += "\n- " + t;
    }
    system += "\n\nKeep your reply under " + std::to_string(opts.max_output_chars) + " characters.";

    llm::CompletionRequest req;
    req.agent = std::string(to_string(cfg.hat));
    req.system_prompt = std::move(system);
    req.messages = std::move(window);
    req.max_output_chars = opts.max_output_chars;
    req.temperature = cfg.temperature;
    req.timeout_ms = opts.timeout_ms;
    return req;
}

HatDecision HatDecision::respond(Hat hat, std::string text, Millis latency) {
    HatDecision d;
    d.hat = hat;
    d.response = std::move(text);
    d.latency_ms = latency;
    return d;
}

HatDecision HatDecision::abstain(Hat hat, std::string reason, Millis latency) {
    HatDecision d;
    d.hat = hat;
    d.abstain_reason = std::move(reason);
    d.latency_ms = latency;
    return d;
}

HatDecision evaluate_hat(Hat hat, const llm::CompletionRequest& req, llm::Provider& provider) {
    try {
        const auto result = provider.complete(req);
        const std::string_view body = text::trim(result.text);
        if (body.empty()) return HatDecision::abstain(hat, "empty", result.latency_ms);
        if (is_sentinel(body)) return HatDecision::abstain(hat, "sentinel", result.latency_ms);
        std::string cut = text::truncate_sentences(body, req.max_output_chars);
        if (cut.empty() || is_sentinel(cut)) {
            return HatDecision::abstain(hat, "empty", result.latency_ms);
        }
        return HatDecision::respond(hat, std::move(cut), result.latency_ms);
    } catch (const Error& e) {
        spdlog::warn("{} hat abstains: {} ({})", to_string(hat), to_string(e.code()), e.what());
        return HatDecision::abstain(hat, std::string(to_string(e.code())) + ": " + e.what());
    } catch (const std::exception& e) {
        spdlog::warn("{} hat abstains: {}", to_string(hat), e.what());
        return HatDecision::abstain(hat, e.what());
    }
}

std::vector<HatDecision> evaluate_hats(
    const std::vector<std::pair<Hat, llm::CompletionRequest>>& requests,
    std::shared_ptr<llm::Provider> provider, Millis deadline_ms) {
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::milliseconds(std::max<Millis>(0, deadline_ms));

    std::vector<std::future<HatDecision>> pending;
    pending.reserve(requests.size());
    for (const auto& [hat, req] : requests) {
        auto promise = std::make_shared<std::promise<HatDecision>>();
        pending.push_back(promise->get_future());
        std::thread([promise, provider, hat = hat, req = req] {
            promise->set_value(evaluate_hat(hat, req, *provider));
        }).detach();
    }

    std::vector<HatDecision> decisions;
    decisions.reserve(requests.size());
    for (std::size_t i = 0; i < pending.size(); ++i) {
        if (pending[i].wait_until(deadline) == std::future_status::ready) {
            decisions.push_back(pending[i].get());
        } else {
            spdlog::warn("{} hat missed the tick deadline", to_string(requests[i].first));
            decisions.push_back(HatDecision::abstain(requests[i].first, "late"));
        }
    }
    return decisions;
}

std::optional<Intervention> select_intervention(std::span<const HatDecision> decisions, Phase phase,
                                                std::span<const Hat> recent_hats,
                                                const HatRegistry& registry) {
    if (phase == Phase::Closed) {
        throw Error(ErrorCode::PreconditionViolated, "no interventions once the session is closed");
    }
    std::array<bool, 6> seen{};
    for (const auto& d : decisions) {
        auto& s = seen[static_cast<std::size_t>(d.hat)];
        if (s) throw Error(ErrorCode::PreconditionViolated, "more than one decision for a hat");
        s = true;
    }
    const auto recent = recent_hats.first(std::min<std::size_t>(2, recent_hats.size()));
    auto score = [&](const HatDecision& d) {
        const bool dominating = std::find(recent.begin(), recent.end(), d.hat) != recent.end();
        return registry.at(d.hat).priority(phase) + (dominating ? 6 : 0);
    };

    const HatDecision* best = nullptr;
    for (const auto& d : decisions) {
        if (!d.responded()) continue;
        if (best == nullptr || score(d) < score(*best)) best = &d;
    }
    if (best == nullptr) return std::nullopt;
    return Intervention{best->hat, *best->response};
}

BaselineSchedule BaselineSchedule::standard() {
    return BaselineSchedule(
        {
            {0,
             "Hi all, our goal today is to reach a consensus on the question posed at the end of "
             "the discussion. Please start by generating ideas."},
            {600'000,
             "You have already discussed it for 10 mins. This is a good time for you to reconsider "
             "the ideas that you have already had."},
            {1'020'000,
             "There are only 3 minutes left, if you haven’t reached a consensus yet, please "
             "make a decision as soon as possible."},
        },
        1'200'000);
}

BaselineSchedule::BaselineSchedule(std::vector<BaselineEntry> entries, Millis duration_ms)
    : entries_(std::move(entries)) {
    if (entries_.size() != 3) {
        throw Error(ErrorCode::BadConfig, "baseline schedule needs exactly three messages");
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const Millis off = entries_[i].offset_ms;
        if (off < 0 || off >= duration_ms) {
            throw Error(ErrorCode::BadConfig, "baseline offset outside the session");
        }
        if (i > 0 && off <= entries_[i - 1].offset_ms) {
            throw Error(ErrorCode::BadConfig, "baseline offsets must strictly increase");
        }
    }
}

std::optional<std::string> baseline_message(const BaselineSchedule& schedule, Millis elapsed_ms,
                                            std::set<std::size_t>& already_sent) {
    const auto& entries = schedule.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (already_sent.contains(i)) continue;
        if (entries[i].offset_ms > elapsed_ms) break;
        already_sent.insert(i);
        return entries[i].text;
    }
    return std::nullopt;
}

}  // namespace ptfa
