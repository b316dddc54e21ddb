#include "ptfa/service.hpp"

#include <chrono>
#include <condition_variable>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "ptfa/error.hpp"
#include "ptfa/protocol.hpp"

namespace ptfa {

std::string_view to_string(SessionState state) noexcept {
    switch (state) {
        case SessionState::Pending: return "pending";
        case SessionState::Live: return "live";
        case SessionState::Closed: return "closed";
    }
    return "pending";
}

struct Service::Room {
    std::mutex mutex;
    std::condition_variable cv;
    std::unique_ptr<SessionDriver> driver;
    std::vector<std::string> token_hashes;
    std::map<std::string, std::string> joined;  // token hash -> participant
    std::map<std::string, std::shared_ptr<Subscriber>> attached;
    std::set<std::string> surveyed;
    std::vector<TickReport> ticks;
    std::thread ticker;
    bool stop = false;
    bool aborted = false;

    SessionState state() const {
        const auto& s = driver->session();
        if (s.closed()) return SessionState::Closed;
        return s.started() ? SessionState::Live : SessionState::Pending;
    }
    bool is_member(const std::string& pid) const {
        for (const auto& [_, p] : joined) {
            if (p == pid) return true;
        }
        return false;
    }
};

Service::Service(ServiceOptions opts) : opts_(std::move(opts)), store_(opts_.data_dir) {
    if (!opts_.settings) opts_.settings = std::make_shared<const FacilitationSettings>();
    opts_.scheduler.validate();

    auto recovered = store_.recover();
    if (!opts_.clock && opts_.scheduler.clock_scale == 1.0) opts_.clock = std::make_shared<SystemClock>();
    if (!opts_.clock) {
        // Scaled time must not fall behind what was already recorded.
        Millis origin = SystemClock().now_ms();
        for (const auto& rec : recovered) {
            if (rec.meta.started_at && !rec.records.empty()) {
                origin = std::max(origin, *rec.meta.started_at + rec.records.back().ts_ms);
            }
        }
        opts_.clock = std::make_shared<ScaledClock>(opts_.scheduler.clock_scale, origin);
    }

    for (auto& rec : recovered) {
        auto room = std::make_shared<Room>();
        const auto journal = [this](const Post& p) { store_.persist(p); };
        SchedulerConfig cfg = opts_.scheduler;
        cfg.session_duration_ms = rec.meta.info.duration_ms;
        if (cfg.phase_boundary_ms >= cfg.session_duration_ms) cfg.phase_boundary_ms = cfg.session_duration_ms / 2;
        room->driver = std::make_unique<SessionDriver>(rec.meta.info, cfg, opts_.settings, journal);
        room->token_hashes = rec.meta.token_hashes;
        room->joined = rec.meta.joined;
        for (const auto& s : rec.surveys) room->surveyed.insert(s.participant_id);
        if (rec.meta.started_at) {
            room->driver->restore(*rec.meta.started_at, rec.records);
        }
        const bool live = room->state() == SessionState::Live;
        rooms_[rec.meta.info.session_id] = room;
        spdlog::info("recovered session {} ({} records, {})", rec.meta.info.session_id,
                     rec.records.size(), to_string(room->state()));
        if (live && opts_.run_tickers) start_ticker(room);
    }
}

Service::~Service() { shutdown(); }

void Service::shutdown() {
    std::vector<std::shared_ptr<Room>> rooms;
    {
        std::lock_guard lock(rooms_mutex_);
        if (stopping_) return;
        stopping_ = true;
        for (auto& [_, r] : rooms_) rooms.push_back(r);
    }
    for (auto& r : rooms) {
        {
            std::lock_guard lock(r->mutex);
            r->stop = true;
        }
        r->cv.notify_all();
    }
    for (auto& r : rooms) {
        if (r->ticker.joinable()) r->ticker.join();
    }
}

std::shared_ptr<Service::Room> Service::find(const std::string& session_id) const {
    std::lock_guard lock(rooms_mutex_);
    const auto it = rooms_.find(session_id);
    if (it == rooms_.end()) throw Error(ErrorCode::UnknownSession, "unknown session " + session_id);
    return it->second;
}

CreatedSession Service::create_session(int topic_id, FacilitationModel model, int group_size) {
    (void)topic(topic_id);
    if (model != FacilitationModel::Model0 && model != FacilitationModel::Model1) {
        throw Error(ErrorCode::InvalidModel, "unknown facilitation model");
    }
    if (group_size < 2) {
        throw Error(ErrorCode::InvalidGroupSize, "group size must be at least 2, got " + std::to_string(group_size));
    }

    CreatedSession created;
    created.session_id = random_hex(8);
    auto room = std::make_shared<Room>();
    for (int i = 0; i < group_size; ++i) {
        created.tokens.push_back(random_hex(16));
        room->token_hashes.push_back(hash_token(created.tokens.back()));
    }
    SessionInfo info{created.session_id, topic_id, model, group_size, opts_.scheduler.session_duration_ms};
    const auto journal = [this](const Post& p) { store_.persist(p); };
    room->driver = std::make_unique<SessionDriver>(info, opts_.scheduler, opts_.settings, journal);
    store_.record_session(room->driver->session().info(), room->token_hashes);

    std::lock_guard lock(rooms_mutex_);
    rooms_[created.session_id] = std::move(room);
    return created;
}

JoinResult Service::join(const std::string& session_id, const std::string& token,
                         std::shared_ptr<Subscriber> sub) {
    auto room = find(session_id);
    JoinResult result;
    bool started_now = false;
    {
        std::lock_guard lock(room->mutex);
        auto& driver = *room->driver;
        const std::string h = hash_token(token);
        if (std::find(room->token_hashes.begin(), room->token_hashes.end(), h) == room->token_hashes.end()) {
            throw Error(ErrorCode::TokenInvalid, "token is not valid for this session");
        }
        if (const auto it = room->joined.find(h); it != room->joined.end()) {
            if (room->attached.contains(it->second)) {
                throw Error(ErrorCode::TokenReused, "token is already in use");
            }
            result.participant_id = it->second;
            result.resumed = true;
        } else {
            if (room->state() == SessionState::Closed) throw Error(ErrorCode::SessionClosed, "session is closed");
            const auto& seats = driver.session().participants();
            if (room->joined.size() >= seats.size()) throw Error(ErrorCode::SessionFull, "session is full");
            result.participant_id = seats[room->joined.size()];
            store_.record_join(session_id, h, result.participant_id);
            room->joined[h] = result.participant_id;
        }

        const auto& s = driver.session();
        if (sub) {
            sub->deliver(protocol::encode_joined(result.participant_id, session_id, topic(s.info().topic_id),
                                                 s.info().duration_ms, to_string(room->state()), s.last_seq()));
            for (const auto& post : s.log()) sub->deliver(protocol::encode_post(post));
            room->attached[result.participant_id] = std::move(sub);
        }

        if (!result.resumed && room->joined.size() == s.participants().size()) {
            const Millis now = opts_.clock->now_ms();
            store_.record_start(session_id, now);
            driver.start(now);
            started_now = true;
        }
    }
    if (started_now) {
        if (opts_.run_tickers) {
            start_ticker(room);
        } else {
            tick_due(session_id);
        }
    }
    return result;
}

void Service::detach(const std::string& session_id, const std::string& participant_id, const Subscriber* sub) {
    std::shared_ptr<Room> room;
    try {
        room = find(session_id);
    } catch (const Error&) {
        return;
    }
    std::lock_guard lock(room->mutex);
    const auto it = room->attached.find(participant_id);
    if (it != room->attached.end() && (sub == nullptr || it->second.get() == sub)) room->attached.erase(it);
}

void Service::publish(Room& room) {
    for (const auto& post : room.driver->take_new_records()) {
        const std::string frame = protocol::encode_post(post);
        for (const auto& [_, sub] : room.attached) sub->deliver(frame);
    }
}

void Service::submit_post(const std::string& session_id, const std::string& participant_id,
                          std::string_view text) {
    auto room = find(session_id);
    std::lock_guard lock(room->mutex);
    if (!room->is_member(participant_id)) throw Error(ErrorCode::NotJoined, "join the session first");
    switch (room->state()) {
        case SessionState::Pending: throw Error(ErrorCode::NotLive, "session has not started yet");
        case SessionState::Closed: throw Error(ErrorCode::SessionClosed, "session is closed");
        case SessionState::Live: break;
    }
    try {
        room->driver->participant_post(participant_id, text, opts_.clock->now_ms());
    } catch (...) {
        publish(*room);  // a phase change may have been recorded before the failure
        throw;
    }
    publish(*room);
}

void Service::submit_survey(const std::string& session_id, const std::string& participant_id,
                            std::array<int, 3> answers) {
    auto room = find(session_id);
    std::lock_guard lock(room->mutex);
    if (!room->is_member(participant_id)) throw Error(ErrorCode::NotJoined, "join the session first");
    if (room->state() != SessionState::Closed) {
        throw Error(ErrorCode::SessionNotClosed, "the survey opens when the session ends");
    }
    SurveyResponse response{session_id, participant_id, Likert7(answers[0]), Likert7(answers[1]),
                            Likert7(answers[2])};
    if (room->surveyed.contains(participant_id)) {
        throw Error(ErrorCode::DuplicateResponse, participant_id + " already answered the survey");
    }
    store_.persist_survey(response);
    room->surveyed.insert(participant_id);
}

bool Service::tick_once(Room& room) {
    TickPlan plan;
    {
        std::lock_guard lock(room.mutex);
        const auto& s = room.driver->session();
        if (room.aborted || !s.started() || s.closed()) return false;
        const Millis now = opts_.clock->now_ms();
        if (now < room.driver->next_tick_at()) return false;
        try {
            plan = room.driver->prepare_tick(now);
        } catch (const Error& e) {
            publish(room);
            spdlog::error("session {}: tick aborted: {}", s.id(), e.what());
            room.aborted = e.code() == ErrorCode::ClockRegression;
            if (room.aborted) return false;
            throw;
        }
        publish(room);
    }

    std::vector<HatDecision> decisions;
    if (!plan.requests.empty()) {
        const auto wall = static_cast<Millis>(static_cast<double>(opts_.scheduler.evaluation_deadline_ms()) /
                                              opts_.scheduler.clock_scale);
        decisions = evaluate_hats(plan.requests, opts_.provider, std::max<Millis>(1, wall));
    }

    std::lock_guard lock(room.mutex);
    try {
        room.ticks.push_back(room.driver->complete_tick(plan, decisions, opts_.clock->now_ms()));
    } catch (const Error& e) {
        publish(room);
        spdlog::error("session {}: tick aborted: {}", room.driver->session().id(), e.what());
        room.aborted = e.code() == ErrorCode::ClockRegression;
        if (room.aborted) return false;
        throw;
    }
    publish(room);
    return true;
}

void Service::tick_due(const std::string& session_id) {
    auto room = find(session_id);
    while (tick_once(*room)) {
    }
}

void Service::start_ticker(const std::shared_ptr<Room>& room) {
    std::lock_guard lock(room->mutex);
    if (room->ticker.joinable()) {
        room->cv.notify_all();
        return;
    }
    room->ticker = std::thread([this, room] { ticker_loop(room); });
}

void Service::ticker_loop(std::shared_ptr<Room> room) {
    for (;;) {
        {
            std::unique_lock lock(room->mutex);
            if (room->stop) return;
            const auto& s = room->driver->session();
            if (room->aborted || s.closed()) return;
            const Millis wait = room->driver->next_tick_at() - opts_.clock->now_ms();
            if (wait > 0) {
                const auto real = std::chrono::duration<double, std::milli>(static_cast<double>(wait) /
                                                                           opts_.scheduler.clock_scale);
                room->cv.wait_for(lock, std::chrono::duration_cast<std::chrono::microseconds>(real) +
                                            std::chrono::microseconds(200));
                continue;
            }
        }
        try {
            tick_once(*room);
        } catch (const std::exception& e) {
            spdlog::error("ticker stopped: {}", e.what());
            return;
        }
    }
}

SessionState Service::state(const std::string& session_id) const {
    auto room = find(session_id);
    std::lock_guard lock(room->mutex);
    return room->state();
}

std::vector<Post> Service::log(const std::string& session_id) const {
    auto room = find(session_id);
    std::lock_guard lock(room->mutex);
    return room->driver->session().log();
}

std::vector<TickReport> Service::ticks(const std::string& session_id) const {
    auto room = find(session_id);
    std::lock_guard lock(room->mutex);
    return room->ticks;
}

std::string Service::export_dataset(const std::string& session_id) {
    (void)find(session_id);
    return store_.export_dataset(session_id);
}

std::string Service::export_surveys(const std::string& session_id) {
    (void)find(session_id);
    return store_.export_surveys(session_id);
}

}  // namespace ptfa
