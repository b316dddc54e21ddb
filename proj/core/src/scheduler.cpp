#include "ptfa/scheduler.hpp"

#include <algorithm>

#include "ptfa/error.hpp"

namespace ptfa {
namespace {

constexpr std::string_view kConvergentNotice =
    "The discussion now moves to the convergent stage: please compare the ideas you have and "
    "work towards one decision.";
constexpr std::string_view kClosedNotice = "The discussion time is over.";
constexpr std::string_view kEndNotice = "Session ended. Please complete the short survey.";

void require(bool ok, const char* key, const char* what) {
    if (!ok) throw Error(ErrorCode::BadConfig, std::string("scheduler.") + key + ": " + what);
}

}  // namespace

void SchedulerConfig::validate() const {
    require(tick_interval_ms > 0, "tick_interval_ms", "must be positive");
    require(session_duration_ms > 0, "session_duration_ms", "must be positive");
    require(phase_boundary_ms >= 0 && phase_boundary_ms < session_duration_ms, "phase_boundary_ms",
            "must lie in [0, session_duration_ms)");
    require(inactivity_threshold_ms > 0, "inactivity_threshold_ms", "must be positive");
    require(min_intervention_gap_ms >= 0, "min_intervention_gap_ms", "must not be negative");
    require(clock_scale > 0.0, "clock_scale", "must be positive");
}

Millis SchedulerConfig::evaluation_deadline_ms() const noexcept {
    return std::max(tick_interval_ms - 2'000, tick_interval_ms / 2);
}

std::int64_t SchedulerConfig::tick_count() const noexcept {
    return (session_duration_ms + tick_interval_ms - 1) / tick_interval_ms;
}

Phase phase_of(Millis elapsed_ms, const SchedulerConfig& cfg) {
    if (elapsed_ms < 0) throw Error(ErrorCode::PreconditionViolated, "negative elapsed time");
    if (elapsed_ms < cfg.phase_boundary_ms) return Phase::Divergent;
    if (elapsed_ms < cfg.session_duration_ms) return Phase::Convergent;
    return Phase::Closed;
}

bool detect_inactivity(Millis last_activity_ms, Millis elapsed_ms, const SchedulerConfig& cfg) {
    return elapsed_ms - last_activity_ms >= cfg.inactivity_threshold_ms;
}

bool rate_gate(std::optional<Millis> last_facilitator_ms, Millis elapsed_ms,
               const SchedulerConfig& cfg, bool inactivity) {
    if (inactivity || !last_facilitator_ms) return true;
    return elapsed_ms - *last_facilitator_ms >= cfg.min_intervention_gap_ms;
}

std::string_view to_string(TickAction action) noexcept {
    switch (action) {
        case TickAction::BaselinePosted: return "baseline_posted";
        case TickAction::HatPosted: return "hat_posted";
        case TickAction::InactivityPrompt: return "inactivity_prompt";
        case TickAction::PhaseAnnounced: return "phase_announced";
        case TickAction::SessionEnded: return "session_ended";
    }
    return "none";
}

bool TickReport::has(TickAction a) const {
    return std::find(actions.begin(), actions.end(), a) != actions.end();
}

SessionDriver::SessionDriver(SessionInfo info, SchedulerConfig cfg,
                             std::shared_ptr<const FacilitationSettings> settings, Journal journal)
    : info_([&] {
          info.duration_ms = cfg.session_duration_ms;
          return info;
      }()),
      cfg_(cfg),
      settings_(settings ? std::move(settings) : std::make_shared<const FacilitationSettings>()),
      session_(info_, std::move(journal)) {
    cfg_.validate();
}

void SessionDriver::start(Millis now_abs) {
    session_.start(now_abs);
    next_tick_index_ = 0;
}

void SessionDriver::restore(Millis started_at_abs, const std::vector<Post>& records) {
    session_.start(started_at_abs);
    for (const auto& r : records) {
        session_.restore(r);
        note(r);
        if (r.author.kind() == AuthorKind::Facilitator && info_.model == FacilitationModel::Model0) {
            baseline_sent_.insert(baseline_sent_.size());
        }
    }
    // A crash between the closing phase record and the end record.
    if (session_.closed() && session_.log().back().kind != PostKind::SessionEnd) {
        session_.end_session(kEndNotice, started_at_abs + session_.log().back().ts_ms);
    }
    published_ = session_.log().size();
    next_tick_index_ = 0;
}

void SessionDriver::note(const Post& post) {
    switch (post.author.kind()) {
        case AuthorKind::Participant: last_participant_ms_ = post.ts_ms; break;
        case AuthorKind::Facilitator:
            if (post.hat) {
                last_facilitator_ms_ = post.ts_ms;
                hat_history_.push_back(*post.hat);
            }
            break;
        case AuthorKind::System: break;
    }
}

void SessionDriver::advance_phase(Millis now_abs, std::vector<TickAction>* actions) {
    const Millis elapsed = session_.elapsed_at(now_abs);
    const Phase target = phase_of(elapsed, cfg_);
    while (static_cast<int>(session_.phase()) < static_cast<int>(target)) {
        const auto next = static_cast<Phase>(static_cast<int>(session_.phase()) + 1);
        session_.announce_phase(next, next == Phase::Closed ? kClosedNotice : kConvergentNotice,
                                now_abs);
        if (actions) actions->push_back(TickAction::PhaseAnnounced);
    }
    if (session_.closed() && session_.log().back().kind != PostKind::SessionEnd) {
        session_.end_session(kEndNotice, now_abs);
        if (actions) actions->push_back(TickAction::SessionEnded);
    }
}

void SessionDriver::sync(Millis now_abs) {
    if (!session_.started() || session_.closed()) return;
    advance_phase(now_abs, nullptr);
}

const Post& SessionDriver::participant_post(const std::string& participant_id,
                                            std::string_view text, Millis now_abs) {
    if (!session_.started()) throw Error(ErrorCode::NotLive, "session has not started");
    if (session_.closed()) throw Error(ErrorCode::SessionClosed, "session is closed");
    sync(now_abs);
    const Post& post = session_.append_post(Author::participant(participant_id), std::nullopt, text,
                                            now_abs);
    note(post);
    return post;
}

TickPlan SessionDriver::prepare_tick(Millis now_abs) {
    if (!session_.started()) throw Error(ErrorCode::NotLive, "session has not started");
    if (session_.closed()) throw Error(ErrorCode::SessionClosed, "session is closed");

    TickPlan plan;
    plan.elapsed_ms = session_.elapsed_at(now_abs);
    plan.tick_index = plan.elapsed_ms / cfg_.tick_interval_ms;
    advance_phase(now_abs, &plan.actions);
    next_tick_index_ = plan.tick_index + 1;
    plan.phase = session_.phase();
    if (session_.closed()) {
        plan.ends_session = true;
        return plan;
    }
    if (info_.model != FacilitationModel::Model1) return plan;

    plan.inactive = detect_inactivity(last_participant_ms_, plan.elapsed_ms, cfg_);
    plan.gate_open = rate_gate(last_facilitator_ms_, plan.elapsed_ms, cfg_, plan.inactive);
    if (!plan.gate_open) return plan;

    PromptOptions opts;
    opts.topic_text = std::string(topic(info_.topic_id).prompt_text);
    opts.elapsed_ms = plan.elapsed_ms;
    opts.duration_ms = cfg_.session_duration_ms;
    opts.reengage = plan.inactive;
    opts.max_output_chars = settings_->max_output_chars;
    opts.timeout_ms = cfg_.evaluation_deadline_ms();
    const auto window = context_window(session_.log(), settings_->context);
    for (Hat hat : kAllHats) {
        plan.requests.emplace_back(hat, assemble_prompt(settings_->hats.at(hat), window, plan.phase, opts));
    }
    return plan;
}

TickReport SessionDriver::complete_tick(const TickPlan& plan, const std::vector<HatDecision>& decisions,
                                        Millis now_abs) {
    TickReport report;
    report.tick_index = plan.tick_index;
    report.elapsed_ms = plan.elapsed_ms;
    report.phase = plan.phase;
    report.actions = plan.actions;
    report.inactive = plan.inactive;
    report.gate_open = plan.gate_open;
    report.evaluated = !plan.requests.empty();
    if (plan.ends_session || session_.closed()) return report;

    advance_phase(now_abs, &report.actions);
    if (session_.closed()) return report;

    if (info_.model == FacilitationModel::Model0) {
        const Millis elapsed = session_.elapsed_at(now_abs);
        if (auto msg = baseline_message(settings_->baseline, elapsed, baseline_sent_)) {
            note(session_.append_post(Author::facilitator(), std::nullopt, *msg, now_abs));
            report.actions.push_back(TickAction::BaselinePosted);
        }
        return report;
    }

    if (!plan.gate_open) return report;
    if (plan.inactive) report.actions.push_back(TickAction::InactivityPrompt);
    report.responders = static_cast<int>(
        std::count_if(decisions.begin(), decisions.end(), [](const auto& d) { return d.responded(); }));
    const auto recent = recent_hats();
    if (auto pick = select_intervention(decisions, plan.phase, recent, settings_->hats)) {
        note(session_.append_post(Author::facilitator(), pick->hat, pick->text, now_abs));
        report.actions.push_back(TickAction::HatPosted);
        report.hat = pick->hat;
    }
    return report;
}

TickReport SessionDriver::run_tick(Millis now_abs, const std::shared_ptr<llm::Provider>& provider,
                                   Millis wall_deadline_ms) {
    TickPlan plan = prepare_tick(now_abs);
    std::vector<HatDecision> decisions;
    if (!plan.requests.empty()) {
        if (!provider) throw Error(ErrorCode::PreconditionViolated, "hat ticks need a provider");
        decisions = evaluate_hats(plan.requests, provider, wall_deadline_ms);
    }
    return complete_tick(plan, decisions, now_abs);
}

Millis SessionDriver::next_tick_at() const {
    const Millis start = session_.started_at().value_or(0);
    const Millis offset = std::min(next_tick_index_ * cfg_.tick_interval_ms, cfg_.session_duration_ms);
    return start + offset;
}

std::vector<Post> SessionDriver::take_new_records() {
    const auto& log = session_.log();
    std::vector<Post> fresh(log.begin() + static_cast<std::ptrdiff_t>(published_), log.end());
    published_ = log.size();
    return fresh;
}

std::vector<Hat> SessionDriver::recent_hats() const {
    std::vector<Hat> recent;
    for (auto it = hat_history_.rbegin(); it != hat_history_.rend() && recent.size() < 2; ++it) {
        recent.push_back(*it);
    }
    return recent;
}

}  // namespace ptfa
