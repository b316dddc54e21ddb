#include "ptfa/llm.hpp"

#include <chrono>

#include "ptfa/error.hpp"
#include "ptfa/text.hpp"

namespace ptfa::llm {

void check_budget(const CompletionRequest& req, const ContextBudget& budget) {
    if (req.messages.size() > budget.max_messages) {
        throw Error(ErrorCode::ContextOverflow,
                    "context holds " + std::to_string(req.messages.size()) +
                        " messages, budget is " + std::to_string(budget.max_messages));
    }
    std::size_t chars = 0;
    for (const auto& m : req.messages) chars += text::char_count(m.text);
    if (chars > budget.max_chars) {
        throw Error(ErrorCode::ContextOverflow, "context holds " + std::to_string(chars) +
                                                    " characters, budget is " +
                                                    std::to_string(budget.max_chars));
    }
}

CompletionResult Provider::complete(const CompletionRequest& req) {
    check_budget(req, budget_);
    const auto t0 = std::chrono::steady_clock::now();
    CompletionResult result = do_complete(req);
    if (result.latency_ms == 0) {
        result.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                std::chrono::steady_clock::now() - t0)
                                .count();
    }
    if (result.provider_id.empty()) result.provider_id = id();
    return result;
}

ScriptedProvider::ScriptedProvider(std::vector<std::string> script, ContextBudget budget)
    : ScriptedProvider(std::move(script), {}, budget) {}

ScriptedProvider::ScriptedProvider(std::vector<std::string> default_script,
                                   std::map<std::string, std::vector<std::string>> per_agent,
                                   ContextBudget budget)
    : Provider(budget), default_script_(std::move(default_script)), per_agent_(std::move(per_agent)) {
    if (default_script_.empty() && per_agent_.empty()) {
        throw Error(ErrorCode::PreconditionViolated, "scripted provider needs a non-empty script");
    }
}

std::size_t ScriptedProvider::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

CompletionResult ScriptedProvider::do_complete(const CompletionRequest& req) {
    const auto it = per_agent_.find(req.agent);
    const auto& script = it != per_agent_.end() ? it->second : default_script_;

    std::lock_guard lock(mutex_);
    ++calls_;
    std::size_t& cursor = cursors_[req.agent];
    CompletionResult result;
    result.provider_id = id();
    result.latency_ms = 0;
    result.text = cursor < script.size() ? script[cursor] : std::string(kExhaustedReply);
    ++cursor;
    return result;
}

std::shared_ptr<ScriptedProvider> scripted_provider(std::vector<std::string> script) {
    return std::make_shared<ScriptedProvider>(std::move(script));
}

}  // namespace ptfa::llm
