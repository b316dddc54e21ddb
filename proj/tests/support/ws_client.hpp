#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace ptfa::test {

/// Protocol-level client for the live channel. Frames are read on a
/// background thread and queued in arrival order.
class WsClient {
public:
    WsClient(const std::string& host, unsigned short port, const std::string& target = "/ws");
    ~WsClient();
    WsClient(const WsClient&) = delete;
    WsClient& operator=(const WsClient&) = delete;

    /// Blocks until the frame is written.
    void send(const std::string& frame);

    std::optional<std::string> recv(std::chrono::milliseconds timeout = std::chrono::seconds(5));

    /// Receives until `pred` holds for a frame (returned) or the timeout
    /// passes; skipped frames are appended to `skipped` when given.
    std::optional<std::string> recv_until(const std::function<bool(const std::string&)>& pred,
                                          std::chrono::milliseconds timeout = std::chrono::seconds(5),
                                          std::vector<std::string>* skipped = nullptr);

    /// Closes the TCP connection without a close handshake.
    void drop();

    bool disconnected() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace ptfa::test
