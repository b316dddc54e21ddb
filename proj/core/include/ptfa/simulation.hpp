#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ptfa/scheduler.hpp"

namespace ptfa {

struct ScriptedPost {
    Millis offset_ms;
    int participant;  // 0-based seat index
    std::string text;
};

/// Timed participant input plus optional provider responses.
struct ParticipantScript {
    std::vector<ScriptedPost> posts;  // sorted by offset, stable
    std::vector<std::string> llm_default;
    std::map<Hat, std::vector<std::string>> llm_per_hat;

    bool has_llm_script() const noexcept { return !llm_default.empty() || !llm_per_hat.empty(); }
};

/// JSON-lines: {"offset_ms":t,"participant":i,"text":x} for posts,
/// {"llm":x} or {"llm":x,"hat":"green"} for provider responses. BadScript
/// names the line and offset of the first invalid entry.
ParticipantScript parse_script(std::string_view jsonl, int group_size, Millis duration_ms);

/// Scripted provider built from the script's llm entries.
std::shared_ptr<llm::Provider> script_provider(const ParticipantScript& script,
                                               const llm::ContextBudget& budget = {});

struct SimulationResult {
    SessionInfo info;
    std::vector<Post> log;
    std::vector<TickReport> ticks;
};

struct SimulationOptions {
    SessionInfo info;
    SchedulerConfig scheduler;
    std::shared_ptr<const FacilitationSettings> settings;
    std::shared_ptr<llm::Provider> provider;
    /// Pace simulated time against the wall clock at scheduler.clock_scale;
    /// when false the run is as fast as possible.
    bool paced = false;
    Journal journal;
};

/// Runs a full session under simulated time. Participant posts due at the
/// same instant as a tick are applied before the tick.
SimulationResult run_session(const SimulationOptions& opts, const ParticipantScript& script);

std::string encode_tick(const TickReport& report);
TickReport decode_tick(std::string_view line);
std::string render_tick_log(const std::vector<TickReport>& ticks);

}  // namespace ptfa
