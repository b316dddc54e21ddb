#include "ptfa/server.hpp"

#include <deque>
#include <system_error>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>
#include <openssl/crypto.h>
#include <spdlog/spdlog.h>

#include "ptfa/error.hpp"
#include "ptfa/protocol.hpp"
#include "ptfa/service.hpp"

namespace ptfa {
namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

http::status status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownSession: return http::status::not_found;
        case ErrorCode::SessionNotClosed: return http::status::conflict;
        case ErrorCode::InvalidTopic:
        case ErrorCode::InvalidModel:
        case ErrorCode::InvalidGroupSize:
        case ErrorCode::BadEnvelope: return http::status::bad_request;
        case ErrorCode::StorageUnavailable: return http::status::service_unavailable;
        default: return http::status::internal_server_error;
    }
}

Response make_response(const Request& req, http::status status, std::string body,
                       std::string_view content_type = "application/json") {
    Response res{status, req.version()};
    res.set(http::field::server, "ptfa");
    res.set(http::field::content_type, beast::string_view(content_type.data(), content_type.size()));
    res.keep_alive(req.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
}

Response error_response(const Request& req, http::status status, ErrorCode code, std::string_view msg) {
    return make_response(req, status, protocol::encode_error(code, msg) + "\n");
}

bool authorized(const Request& req, const std::string& admin_token) {
    if (admin_token.empty()) return false;
    const auto it = req.find(http::field::authorization);
    if (it == req.end()) return false;
    const std::string_view value(it->value().data(), it->value().size());
    constexpr std::string_view prefix = "Bearer ";
    if (value.size() != prefix.size() + admin_token.size() || value.substr(0, prefix.size()) != prefix) {
        return false;
    }
    return CRYPTO_memcmp(value.data() + prefix.size(), admin_token.data(), admin_token.size()) == 0;
}

// "/sessions/<id>/<leaf>" -> id, or empty.
std::string session_route(std::string_view target, std::string_view leaf) {
    constexpr std::string_view head = "/sessions/";
    if (target.substr(0, head.size()) != head) return {};
    target.remove_prefix(head.size());
    const auto slash = target.find('/');
    if (slash == std::string_view::npos || slash == 0 || target.substr(slash + 1) != leaf) return {};
    return std::string(target.substr(0, slash));
}

FacilitationModel parse_model(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "0") return FacilitationModel::Model0;
        if (s == "1") return FacilitationModel::Model1;
    } else if (j.is_number_integer()) {
        const int v = j.get<int>();
        if (v == 0) return FacilitationModel::Model0;
        if (v == 1) return FacilitationModel::Model1;
    }
    throw Error(ErrorCode::InvalidModel, "model must be \"0\" or \"1\"");
}

struct Shared {
    Shared(Service& s, ServerOptions o) : service(s), opts(std::move(o)) {}
    Service& service;
    ServerOptions opts;
    std::atomic<bool> stopped{false};
};

class WsSession;

// What the service holds on to. It must not keep the socket alive, since the
// service can outlive the io_context.
class WsSubscriber final : public Subscriber {
public:
    WsSubscriber(std::weak_ptr<WsSession> ws, std::shared_ptr<Shared> shared)
        : ws_(std::move(ws)), shared_(std::move(shared)) {}
    void deliver(const std::string& frame) override;

private:
    std::weak_ptr<WsSession> ws_;
    std::shared_ptr<Shared> shared_;
};

class WsSession final : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket&& socket, std::shared_ptr<Shared> shared)
        : ws_(std::move(socket)), shared_(std::move(shared)) {}

    void run(Request req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
    }

    void deliver(const std::string& frame) {
        net::post(ws_.get_executor(), [self = shared_from_this(), frame] { self->enqueue(frame); });
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return;
        do_read();
    }

    void do_read() {
        ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            if (!participant_.empty()) shared_->service.detach(session_id_, participant_, subscriber_.get());
            return;
        }
        const std::string frame = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        try {
            handle(protocol::parse_client(frame));
        } catch (const Error& e) {
            enqueue(protocol::encode_error(e.code(), e.what()));
        } catch (const std::exception& e) {
            spdlog::error("ws handler: {}", e.what());
            enqueue(protocol::encode_error(ErrorCode::StorageUnavailable, "internal error"));
        }
        do_read();
    }

    void handle(const protocol::ClientEnvelope& env) {
        auto& svc = shared_->service;
        if (const auto* join = std::get_if<protocol::JoinRequest>(&env)) {
            if (!participant_.empty()) throw Error(ErrorCode::BadEnvelope, "already joined");
            auto sub = std::make_shared<WsSubscriber>(weak_from_this(), shared_);
            const auto result = svc.join(join->session_id, join->token, sub);
            subscriber_ = std::move(sub);
            session_id_ = join->session_id;
            participant_ = result.participant_id;
            return;
        }
        if (participant_.empty()) throw Error(ErrorCode::NotJoined, "join the session first");
        if (const auto* post = std::get_if<protocol::PostRequest>(&env)) {
            svc.submit_post(session_id_, participant_, post->text);
            return;
        }
        const auto& survey = std::get<protocol::SurveyRequest>(env);
        svc.submit_survey(session_id_, participant_, survey.answers);
        enqueue(protocol::encode_survey_ack());
    }

    void enqueue(std::string frame) {
        queue_.push_back(std::move(frame));
        if (queue_.size() == 1) write_next();
    }

    void write_next() {
        ws_.text(true);
        ws_.async_write(net::buffer(queue_.front()),
                        beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        if (ec) {
            queue_.clear();
            return;
        }
        queue_.pop_front();
        if (!queue_.empty()) write_next();
    }

    websocket::stream<beast::tcp_stream> ws_;
    std::shared_ptr<Shared> shared_;
    beast::flat_buffer buffer_;
    std::deque<std::string> queue_;
    std::string session_id_;
    std::string participant_;
    std::shared_ptr<WsSubscriber> subscriber_;
};

void WsSubscriber::deliver(const std::string& frame) {
    if (shared_->stopped) return;
    if (auto ws = ws_.lock()) ws->deliver(frame);
}

class HttpSession final : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket&& socket, std::shared_ptr<Shared> shared)
        : stream_(std::move(socket)), shared_(std::move(shared)) {}

    void run() {
        net::dispatch(stream_.get_executor(),
                      beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
    }

private:
    void do_read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_,
                         beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
            return;
        }
        if (websocket::is_upgrade(req_)) {
            if (req_.target() == "/ws") {
                stream_.expires_never();
                std::make_shared<WsSession>(stream_.release_socket(), shared_)->run(std::move(req_));
                return;
            }
        }
        res_ = handle(req_);
        http::async_write(stream_, res_,
                          beast::bind_front_handler(&HttpSession::on_write, shared_from_this(),
                                                    res_.need_eof()));
    }

    void on_write(bool close, beast::error_code ec, std::size_t) {
        if (ec || close) {
            stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
            return;
        }
        do_read();
    }

    Response handle(const Request& req) {
        const std::string_view target(req.target().data(), req.target().size());
        try {
            if (target == "/healthz" && req.method() == http::verb::get) {
                return make_response(req, http::status::ok, "{\"status\":\"ok\"}\n");
            }
            if (target == "/sessions") {
                if (req.method() != http::verb::post) {
                    return error_response(req, http::status::method_not_allowed, ErrorCode::BadEnvelope,
                                          "use POST");
                }
                if (!authorized(req, shared_->opts.admin_token)) return unauthorized(req);
                return create(req);
            }
            for (const std::string_view leaf : {"export", "survey"}) {
                const std::string sid = session_route(target, leaf);
                if (sid.empty()) continue;
                if (req.method() != http::verb::get) {
                    return error_response(req, http::status::method_not_allowed, ErrorCode::BadEnvelope,
                                          "use GET");
                }
                if (!authorized(req, shared_->opts.admin_token)) return unauthorized(req);
                auto& svc = shared_->service;
                std::string body = leaf == "export" ? svc.export_dataset(sid) : svc.export_surveys(sid);
                return make_response(req, http::status::ok, std::move(body), "application/x-ndjson");
            }
            return error_response(req, http::status::not_found, ErrorCode::BadEnvelope, "no such route");
        } catch (const Error& e) {
            return error_response(req, status_for(e.code()), e.code(), e.what());
        } catch (const std::exception& e) {
            spdlog::error("http handler: {}", e.what());
            return error_response(req, http::status::internal_server_error, ErrorCode::StorageUnavailable,
                                  "internal error");
        }
    }

    Response unauthorized(const Request& req) {
        auto res = error_response(req, http::status::unauthorized, ErrorCode::TokenInvalid, "admin token required");
        res.set(http::field::www_authenticate, "Bearer");
        return res;
    }

    Response create(const Request& req) {
        const auto body = nlohmann::json::parse(req.body().empty() ? std::string("{}") : req.body(), nullptr, false);
        if (body.is_discarded() || !body.is_object()) throw Error(ErrorCode::BadEnvelope, "body must be a JSON object");
        const auto topic_it = body.find("topic_id");
        if (topic_it == body.end() || !topic_it->is_number_integer()) {
            throw Error(ErrorCode::InvalidTopic, "topic_id must be 0 or 1");
        }
        const auto model_it = body.find("model");
        if (model_it == body.end()) throw Error(ErrorCode::InvalidModel, "model must be \"0\" or \"1\"");
        int group_size = shared_->opts.default_group_size;
        if (const auto it = body.find("group_size"); it != body.end()) {
            if (!it->is_number_integer()) throw Error(ErrorCode::InvalidGroupSize, "group_size must be an integer");
            group_size = it->get<int>();
        }
        const auto created =
            shared_->service.create_session(topic_it->get<int>(), parse_model(*model_it), group_size);
        nlohmann::ordered_json out;
        out["session_id"] = created.session_id;
        out["tokens"] = created.tokens;
        return make_response(req, http::status::created, out.dump() + "\n");
    }

    beast::tcp_stream stream_;
    std::shared_ptr<Shared> shared_;
    beast::flat_buffer buffer_;
    Request req_;
    Response res_;
};

class Listener final : public std::enable_shared_from_this<Listener> {
public:
    Listener(net::io_context& ioc, tcp::acceptor& acceptor, std::shared_ptr<Shared> shared)
        : ioc_(ioc), acceptor_(acceptor), shared_(std::move(shared)) {}

    void accept() {
        acceptor_.async_accept(net::make_strand(ioc_),
                               beast::bind_front_handler(&Listener::on_accept, shared_from_this()));
    }

private:
    void on_accept(beast::error_code ec, tcp::socket socket) {
        if (ec == net::error::operation_aborted || !acceptor_.is_open()) return;
        if (!ec) std::make_shared<HttpSession>(std::move(socket), shared_)->run();
        accept();
    }

    net::io_context& ioc_;
    tcp::acceptor& acceptor_;
    std::shared_ptr<Shared> shared_;
};

}  // namespace

struct Server::Impl {
    std::shared_ptr<Shared> shared;
    net::io_context ioc;
    tcp::acceptor acceptor{ioc};
    std::vector<std::thread> threads;
};

Server::Server(Service& service, ServerOptions opts) : impl_(std::make_unique<Impl>()) {
    impl_->shared = std::make_shared<Shared>(service, std::move(opts));
}

Server::~Server() { stop(); }

unsigned short Server::start() {
    const auto& opts = impl_->shared->opts;
    auto& acceptor = impl_->acceptor;
    beast::error_code ec;
    const auto address = net::ip::make_address(opts.host, ec);
    if (ec) throw std::system_error(std::make_error_code(std::errc::invalid_argument), "bad host " + opts.host);
    const tcp::endpoint endpoint{address, opts.port};
    auto check = [&](const char* what) {
        if (ec) throw std::system_error(ec.value(), std::generic_category(), what);
    };
    acceptor.open(endpoint.protocol(), ec);
    check("open");
    acceptor.set_option(net::socket_base::reuse_address(true), ec);
    check("setsockopt");
    acceptor.bind(endpoint, ec);
    check("bind");
    acceptor.listen(net::socket_base::max_listen_connections, ec);
    check("listen");

    std::make_shared<Listener>(impl_->ioc, acceptor, impl_->shared)->accept();
    for (int i = 0; i < std::max(1, opts.threads); ++i) {
        impl_->threads.emplace_back([this] { impl_->ioc.run(); });
    }
    return acceptor.local_endpoint().port();
}

void Server::stop() {
    if (!impl_ || impl_->shared->stopped.exchange(true)) return;
    net::post(impl_->ioc, [this] {
        beast::error_code ec;
        impl_->acceptor.close(ec);
    });
    impl_->ioc.stop();
    for (auto& t : impl_->threads) {
        if (t.joinable()) t.join();
    }
    impl_->threads.clear();
}

}  // namespace ptfa
