#pragma once

#include <memory>
#include <string>

#include "ptfa/model.hpp"

namespace ptfa {

class Service;

struct ServerOptions {
    std::string host = "127.0.0.1";
    unsigned short port = 0;  // 0 = ephemeral
    std::string admin_token;
    int threads = 2;
    int default_group_size = kDefaultGroupSize;
};

/// HTTP + WebSocket front end on one port.
///
///   POST /sessions                 create (admin)
///   GET  /sessions/{id}/export     dataset JSON-lines (admin)
///   GET  /sessions/{id}/survey     survey JSON-lines (admin)
///   GET  /healthz
///   GET  /ws                       live channel (upgrade)
class Server {
public:
    Server(Service& service, ServerOptions opts);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and starts the I/O threads; returns the bound port. Throws
    /// std::system_error when the address is unavailable.
    unsigned short start();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace ptfa
