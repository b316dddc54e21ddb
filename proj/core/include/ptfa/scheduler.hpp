#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ptfa/facilitation.hpp"
#include "ptfa/llm.hpp"
#include "ptfa/session.hpp"

namespace ptfa {

struct SchedulerConfig {
    Millis tick_interval_ms = 30'000;
    Millis session_duration_ms = 1'200'000;
    Millis phase_boundary_ms = 600'000;
    Millis inactivity_threshold_ms = 90'000;
    Millis min_intervention_gap_ms = 60'000;
    double clock_scale = 1.0;

    /// Throws BadConfig naming the offending field.
    void validate() const;

    /// Time the hats get per tick: two seconds short of the tick, but never
    /// less than half a tick.
    Millis evaluation_deadline_ms() const noexcept;

    /// ceil(session_duration / tick_interval).
    std::int64_t tick_count() const noexcept;
};

Phase phase_of(Millis elapsed_ms, const SchedulerConfig& cfg);

/// `last_activity_ms` is the latest participant post (or 0 if none yet).
bool detect_inactivity(Millis last_activity_ms, Millis elapsed_ms, const SchedulerConfig& cfg);

/// Gate for hat interventions: open when no facilitator has posted yet, when
/// the last facilitator post is at least min_intervention_gap_ms old, or when
/// the tick is inactive.
bool rate_gate(std::optional<Millis> last_facilitator_ms, Millis elapsed_ms,
               const SchedulerConfig& cfg, bool inactivity);

enum class TickAction { BaselinePosted, HatPosted, InactivityPrompt, PhaseAnnounced, SessionEnded };

std::string_view to_string(TickAction action) noexcept;

struct TickReport {
    std::int64_t tick_index = 0;
    Millis elapsed_ms = 0;
    Phase phase = Phase::Divergent;
    /// Empty means the tick did nothing visible.
    std::vector<TickAction> actions;
    std::optional<Hat> hat;
    bool inactive = false;
    bool gate_open = false;
    bool evaluated = false;
    int responders = 0;

    bool has(TickAction a) const;
    friend bool operator==(const TickReport&, const TickReport&) = default;
};

/// Work prepared for one tick under the session lock. The hat requests can be
/// evaluated outside the lock, then handed back to complete_tick().
struct TickPlan {
    std::int64_t tick_index = 0;
    Millis elapsed_ms = 0;
    Phase phase = Phase::Divergent;
    bool inactive = false;
    bool gate_open = false;
    bool ends_session = false;
    std::vector<TickAction> actions;  // lifecycle actions already applied
    std::vector<std::pair<Hat, llm::CompletionRequest>> requests;
};

struct FacilitationSettings {
    HatRegistry hats = HatRegistry::defaults();
    BaselineSchedule baseline = BaselineSchedule::standard();
    llm::ContextBudget context;
    std::size_t max_output_chars = 500;
};

/// Drives one session: phase transitions, the timed tick loop for either
/// facilitation model, and participant posts. Owned by a single writer.
class SessionDriver {
public:
    SessionDriver(SessionInfo info, SchedulerConfig cfg,
                  std::shared_ptr<const FacilitationSettings> settings, Journal journal = {});

    Session& session() noexcept { return session_; }
    const Session& session() const noexcept { return session_; }
    const SchedulerConfig& config() const noexcept { return cfg_; }

    /// Starts the clock at `now_abs`; the caller runs tick 0 next.
    void start(Millis now_abs);

    /// Rebuild engine state from persisted records of a started session.
    void restore(Millis started_at_abs, const std::vector<Post>& records);

    /// Appends a participant post, announcing a phase change first if the
    /// boundary has passed.
    const Post& participant_post(const std::string& participant_id, std::string_view text,
                                 Millis now_abs);

    /// Applies due phase changes and, if the session has run out, closes it.
    void sync(Millis now_abs);

    TickPlan prepare_tick(Millis now_abs);
    TickReport complete_tick(const TickPlan& plan, const std::vector<HatDecision>& decisions,
                             Millis now_abs);

    /// prepare + evaluate + complete in one call. `wall_deadline_ms` bounds
    /// the hat evaluations in real time.
    TickReport run_tick(Millis now_abs, const std::shared_ptr<llm::Provider>& provider,
                        Millis wall_deadline_ms);

    /// Absolute time of the next tick (or of session end).
    Millis next_tick_at() const;

    /// Records appended since the last call (for broadcasting).
    std::vector<Post> take_new_records();

    /// Most recent Model1 facilitator hats, newest first.
    std::vector<Hat> recent_hats() const;
    std::optional<Millis> last_facilitator_ms() const noexcept { return last_facilitator_ms_; }
    Millis last_participant_ms() const noexcept { return last_participant_ms_; }

private:
    void note(const Post& post);
    void advance_phase(Millis now_abs, std::vector<TickAction>* actions);

    SessionInfo info_;
    SchedulerConfig cfg_;
    std::shared_ptr<const FacilitationSettings> settings_;
    Session session_;
    std::set<std::size_t> baseline_sent_;
    std::vector<Hat> hat_history_;  // oldest first
    std::optional<Millis> last_facilitator_ms_;
    Millis last_participant_ms_ = 0;
    std::int64_t next_tick_index_ = 0;
    std::size_t published_ = 0;
};

}  // namespace ptfa
