#include "stub_llm.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace ptfa::test {

struct StubLlmServer::Impl {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    mutable std::mutex mutex;
    Behaviour behaviour;
    std::string last_body;
    std::string last_auth;
};

StubLlmServer::StubLlmServer() : impl_(std::make_unique<Impl>()) {
    impl_->server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
        ++hits_;
        Behaviour b;
        {
            std::lock_guard lock(impl_->mutex);
            b = impl_->behaviour;
            impl_->last_body = req.body;
            impl_->last_auth = req.get_header_value("Authorization");
        }
        if (b.delay.count() > 0) std::this_thread::sleep_for(b.delay);
        res.status = b.status;
        if (!b.raw_body.empty()) {
            res.set_content(b.raw_body, "application/json");
            return;
        }
        if (b.status != 200) {
            res.set_content(R"({"error":{"message":"rate limited","type":"requests"}})", "application/json");
            return;
        }
        nlohmann::json body = {
            {"id", "stub"},
            {"object", "chat.completion"},
            {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", b.reply}}}, {"finish_reason", "stop"}}}}};
        res.set_content(body.dump(), "application/json");
    });
    impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

StubLlmServer::~StubLlmServer() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

void StubLlmServer::set(Behaviour b) {
    std::lock_guard lock(impl_->mutex);
    impl_->behaviour = std::move(b);
}

std::string StubLlmServer::base_url() const { return "http://127.0.0.1:" + std::to_string(impl_->port) + "/v1"; }

std::string StubLlmServer::last_body() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->last_body;
}

std::string StubLlmServer::last_authorization() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->last_auth;
}

}  // namespace ptfa::test
