#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ptfa/clock.hpp"
#include "ptfa/scheduler.hpp"
#include "ptfa/storage.hpp"

namespace ptfa {

/// A connected client. deliver() must not block; it is called with the
/// session lock held so that every subscriber sees frames in seq order.
class Subscriber {
public:
    virtual ~Subscriber() = default;
    virtual void deliver(const std::string& frame) = 0;
};

enum class SessionState { Pending, Live, Closed };

std::string_view to_string(SessionState state) noexcept;

struct ServiceOptions {
    std::filesystem::path data_dir;
    SchedulerConfig scheduler;
    std::shared_ptr<const FacilitationSettings> settings;
    std::shared_ptr<llm::Provider> provider;
    std::shared_ptr<const Clock> clock;
    /// Run a background ticker per live session. Tests drive ticks by hand
    /// with tick_due() instead.
    bool run_tickers = true;
};

struct CreatedSession {
    std::string session_id;
    std::vector<std::string> tokens;
};

struct JoinResult {
    std::string participant_id;
    bool resumed = false;
};

/// Session registry behind the network layer. All mutations of one session
/// go through that session's lock; records are persisted before any
/// subscriber sees them.
class Service {
public:
    explicit Service(ServiceOptions opts);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    CreatedSession create_session(int topic_id, FacilitationModel model, int group_size);

    /// Binds `token` to the next anonymous id and subscribes `sub`. A token
    /// already in use may reattach only while its previous connection is
    /// detached (resume); the subscriber then gets the joined envelope and the
    /// full snapshot before any live frame. Filling the last seat starts the
    /// session and runs tick 0.
    JoinResult join(const std::string& session_id, const std::string& token,
                    std::shared_ptr<Subscriber> sub);

    void detach(const std::string& session_id, const std::string& participant_id,
                const Subscriber* sub);

    void submit_post(const std::string& session_id, const std::string& participant_id,
                     std::string_view text);

    void submit_survey(const std::string& session_id, const std::string& participant_id,
                       std::array<int, 3> answers);

    /// Runs every tick that is due at the clock's current time.
    void tick_due(const std::string& session_id);

    SessionState state(const std::string& session_id) const;
    std::vector<Post> log(const std::string& session_id) const;
    std::vector<TickReport> ticks(const std::string& session_id) const;

    std::string export_dataset(const std::string& session_id);
    std::string export_surveys(const std::string& session_id);

    /// Stops all tickers; idempotent.
    void shutdown();

private:
    struct Room;
    std::shared_ptr<Room> find(const std::string& session_id) const;
    void start_ticker(const std::shared_ptr<Room>& room);
    void ticker_loop(std::shared_ptr<Room> room);
    void publish(Room& room);
    bool tick_once(Room& room);

    ServiceOptions opts_;
    SessionStore store_;
    mutable std::mutex rooms_mutex_;
    std::map<std::string, std::shared_ptr<Room>> rooms_;
    bool stopping_ = false;
};

}  // namespace ptfa
