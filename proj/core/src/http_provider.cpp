#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <future>
#include <memory>
#include <regex>
#include <thread>

#include <nlohmann/json.hpp>

#include "ptfa/error.hpp"
#include "ptfa/llm.hpp"
#include "ptfa/text.hpp"

namespace ptfa::llm {
namespace {

constexpr std::size_t kBodyExcerpt = 200;

std::string excerpt(const std::string& body) {
    return std::string(text::prefix_chars(body, kBodyExcerpt));
}

}  // namespace

HttpChatProvider::HttpChatProvider(HttpProviderConfig cfg, ContextBudget budget)
    : Provider(budget), cfg_(std::move(cfg)) {
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(cfg_.base_url, m, url)) {
        throw Error(ErrorCode::BadConfig, "provider.base_url: not an http(s) URL: " + cfg_.base_url);
    }
    origin_ = m[1].str();
    path_prefix_ = m[2].matched ? m[2].str() : "";
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::string HttpChatProvider::request_body(const CompletionRequest& req) const {
    nlohmann::json messages = nlohmann::json::array();
    messages.push_back({{"role", "system"}, {"content", req.system_prompt}});
    if (req.messages.empty()) {
        messages.push_back({{"role", "user"}, {"content", "(no messages yet)"}});
    }
    for (const auto& m : req.messages) {
        messages.push_back({{"role", "user"}, {"content", m.speaker + ": " + m.text}});
    }
    nlohmann::json body{
        {"model", cfg_.model},
        {"messages", std::move(messages)},
        {"temperature", req.temperature},
        {"max_tokens", std::max<std::size_t>(16, req.max_output_chars / 2)},
    };
    return body.dump();
}

CompletionResult HttpChatProvider::do_complete(const CompletionRequest& req) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw Error(ErrorCode::CredentialMissing, cfg_.api_key_env + " is not set");
    }

    struct Outcome {
        int status = 0;
        std::string body;
        std::string transport_error;
    };

    const Millis timeout = std::max<Millis>(1, req.timeout_ms);
    auto promise = std::make_shared<std::promise<Outcome>>();
    auto future = promise->get_future();

    // The worker owns copies of everything it touches, so abandoning it on
    // timeout is safe.
    std::thread([promise, origin = origin_, path = path_prefix_ + "/chat/completions",
                 body = request_body(req), auth = std::string("Bearer ") + key, timeout] {
        Outcome out;
        try {
            httplib::Client client(origin);
            const auto secs = static_cast<time_t>(timeout / 1000);
            const auto usecs = static_cast<time_t>((timeout % 1000) * 1000);
            client.set_connection_timeout(secs, usecs);
            client.set_read_timeout(secs, usecs);
            client.set_write_timeout(secs, usecs);
            httplib::Headers headers{{"Authorization", auth}};
            auto res = client.Post(path, headers, body, "application/json");
            if (res) {
                out.status = res->status;
                out.body = res->body;
            } else {
                out.transport_error = httplib::to_string(res.error());
            }
        } catch (const std::exception& e) {
            out.transport_error = e.what();
        }
        promise->set_value(std::move(out));
    }).detach();

    if (future.wait_for(std::chrono::milliseconds(timeout)) != std::future_status::ready) {
        throw Error(ErrorCode::Timeout,
                    "no response within " + std::to_string(timeout) + " ms");
    }
    Outcome out = future.get();
    if (!out.transport_error.empty()) {
        if (out.transport_error.find("Timeout") != std::string::npos ||
            out.transport_error.find("timeout") != std::string::npos) {
            throw Error(ErrorCode::Timeout, out.transport_error);
        }
        throw ProviderFailure(0, out.transport_error);
    }
    if (out.status != 200) throw ProviderFailure(out.status, excerpt(out.body));

    CompletionResult result;
    result.provider_id = id();
    try {
        const auto doc = nlohmann::json::parse(out.body);
        result.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw ProviderFailure(out.status, "unexpected response shape: " + excerpt(out.body));
    }
    return result;
}

}  // namespace ptfa::llm
