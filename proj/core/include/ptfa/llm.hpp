#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "ptfa/model.hpp"

namespace ptfa::llm {

struct ContextBudget {
    std::size_t max_messages = 60;
    std::size_t max_chars = 12'000;
};

struct ChatMessage {
    std::string speaker;  // anonymous label: "P1", "Facilitator (Green Hat)", "System"
    std::string text;
};

struct CompletionRequest {
    /// Routing key for per-agent scripts; never sent to a remote provider.
    std::string agent;
    std::string system_prompt;
    std::vector<ChatMessage> messages;
    std::size_t max_output_chars = 500;
    double temperature = 0.7;
    Millis timeout_ms = 28'000;
};

struct CompletionResult {
    std::string text;
    Millis latency_ms = 0;
    std::string provider_id;
};

/// Throws ContextOverflow when the transcript part of `req` exceeds `budget`.
void check_budget(const CompletionRequest& req, const ContextBudget& budget);

/// Chat-completion backend. complete() validates the request against the
/// budget before dispatching, so an oversized request never leaves the process.
class Provider {
public:
    explicit Provider(ContextBudget budget = {}) : budget_(budget) {}
    virtual ~Provider() = default;

    Provider(const Provider&) = delete;
    Provider& operator=(const Provider&) = delete;

    CompletionResult complete(const CompletionRequest& req);

    const ContextBudget& budget() const noexcept { return budget_; }
    virtual std::string id() const = 0;

protected:
    virtual CompletionResult do_complete(const CompletionRequest& req) = 0;

private:
    ContextBudget budget_;
};

/// Replays canned responses. Each agent label has its own cursor over its
/// script (falling back to the shared default script), so concurrent calls
/// from different agents stay deterministic. Exhausted scripts answer "Good".
class ScriptedProvider final : public Provider {
public:
    static constexpr std::string_view kExhaustedReply = "Good";

    explicit ScriptedProvider(std::vector<std::string> script, ContextBudget budget = {});
    ScriptedProvider(std::vector<std::string> default_script,
                     std::map<std::string, std::vector<std::string>> per_agent,
                     ContextBudget budget = {});

    std::string id() const override { return "scripted"; }

    /// Number of complete() calls served so far, across all agents.
    std::size_t calls() const;

protected:
    CompletionResult do_complete(const CompletionRequest& req) override;

private:
    std::vector<std::string> default_script_;
    std::map<std::string, std::vector<std::string>> per_agent_;
    mutable std::mutex mutex_;
    std::map<std::string, std::size_t> cursors_;
    std::size_t calls_ = 0;
};

std::shared_ptr<ScriptedProvider> scripted_provider(std::vector<std::string> script);

struct HttpProviderConfig {
    /// e.g. "https://api.openai.com/v1"; requests go to <base_url>/chat/completions.
    std::string base_url;
    std::string model;
    /// Environment variable holding the bearer credential.
    std::string api_key_env = "PTFA_API_KEY";
};

/// OpenAI-compatible chat-completions client.
class HttpChatProvider final : public Provider {
public:
    explicit HttpChatProvider(HttpProviderConfig cfg, ContextBudget budget = {});

    std::string id() const override { return "http:" + cfg_.model; }

    /// Request body as sent on the wire (exposed for tests).
    std::string request_body(const CompletionRequest& req) const;

protected:
    CompletionResult do_complete(const CompletionRequest& req) override;

private:
    HttpProviderConfig cfg_;
    std::string origin_;       // scheme://host[:port]
    std::string path_prefix_;  // "/v1"
};

}  // namespace ptfa::llm
