#include "ptfa/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include <nlohmann/json.hpp>

#include "ptfa/error.hpp"
#include "ptfa/text.hpp"

namespace ptfa {
namespace {

using ojson = nlohmann::ordered_json;

[[noreturn]] void bad_script(std::size_t line, std::optional<Millis> offset, const std::string& what) {
    std::string msg = "line " + std::to_string(line);
    if (offset) msg += " (offset_ms " + std::to_string(*offset) + ")";
    throw Error(ErrorCode::BadScript, msg + ": " + what);
}

std::optional<TickAction> parse_action(std::string_view s) {
    for (auto a : {TickAction::BaselinePosted, TickAction::HatPosted, TickAction::InactivityPrompt,
                   TickAction::PhaseAnnounced, TickAction::SessionEnded}) {
        if (to_string(a) == s) return a;
    }
    return std::nullopt;
}

}  // namespace

ParticipantScript parse_script(std::string_view jsonl, int group_size, Millis duration_ms) {
    ParticipantScript script;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < jsonl.size()) {
        const std::size_t nl = jsonl.find('\n', pos);
        const std::string_view line =
            jsonl.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? jsonl.size() : nl + 1;
        ++line_no;
        if (text::trim(line).empty()) continue;

        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) bad_script(line_no, std::nullopt, "not a JSON object");

        if (j.contains("llm")) {
            if (!j["llm"].is_string()) bad_script(line_no, std::nullopt, "'llm' must be a string");
            std::string reply = j["llm"].get<std::string>();
            if (j.contains("hat")) {
                const auto hat = j["hat"].is_string() ? parse_hat(j["hat"].get<std::string>()) : std::nullopt;
                if (!hat) bad_script(line_no, std::nullopt, "unknown hat");
                script.llm_per_hat[*hat].push_back(std::move(reply));
            } else {
                script.llm_default.push_back(std::move(reply));
            }
            continue;
        }

        if (!j.contains("offset_ms") || !j["offset_ms"].is_number_integer()) {
            bad_script(line_no, std::nullopt, "'offset_ms' must be an integer");
        }
        const Millis offset = j["offset_ms"].get<Millis>();
        if (offset < 0 || offset >= duration_ms) bad_script(line_no, offset, "offset outside the session");
        if (!j.contains("participant") || !j["participant"].is_number_integer()) {
            bad_script(line_no, offset, "'participant' must be an integer");
        }
        const int who = j["participant"].get<int>();
        if (who < 0 || who >= group_size) bad_script(line_no, offset, "participant index out of range");
        if (!j.contains("text") || !j["text"].is_string()) bad_script(line_no, offset, "'text' must be a string");
        std::string body = j["text"].get<std::string>();
        if (text::trim(body).empty()) bad_script(line_no, offset, "text is empty");
        if (text::char_count(text::trim(body)) > kMaxPostChars) bad_script(line_no, offset, "text too long");
        script.posts.push_back({offset, who, std::move(body)});
    }
    std::stable_sort(script.posts.begin(), script.posts.end(),
                     [](const auto& a, const auto& b) { return a.offset_ms < b.offset_ms; });
    return script;
}

std::shared_ptr<llm::Provider> script_provider(const ParticipantScript& script,
                                               const llm::ContextBudget& budget) {
    std::vector<std::string> fallback = script.llm_default;
    if (fallback.empty()) fallback.emplace_back(llm::ScriptedProvider::kExhaustedReply);
    std::map<std::string, std::vector<std::string>> per_agent;
    for (const auto& [hat, replies] : script.llm_per_hat) per_agent[std::string(to_string(hat))] = replies;
    return std::make_shared<llm::ScriptedProvider>(std::move(fallback), std::move(per_agent), budget);
}

SimulationResult run_session(const SimulationOptions& opts, const ParticipantScript& script) {
    SessionDriver driver(opts.info, opts.scheduler, opts.settings, opts.journal);
    const auto& cfg = driver.config();

    const auto wall_start = std::chrono::steady_clock::now();
    auto pace = [&](Millis sim_ms) {
        if (!opts.paced) return;
        const auto offset = std::chrono::duration<double, std::milli>(static_cast<double>(sim_ms) / cfg.clock_scale);
        std::this_thread::sleep_until(wall_start + std::chrono::duration_cast<std::chrono::nanoseconds>(offset));
    };
    const Millis wall_deadline =
        opts.paced ? std::max<Millis>(1, static_cast<Millis>(static_cast<double>(cfg.evaluation_deadline_ms()) /
                                                              cfg.clock_scale))
                   : cfg.evaluation_deadline_ms();

    constexpr Millis kStart = 0;
    driver.start(kStart);

    SimulationResult result;
    std::size_t next_post = 0;
    while (!driver.session().closed()) {
        const Millis tick_at = driver.next_tick_at();
        if (next_post < script.posts.size() && kStart + script.posts[next_post].offset_ms <= tick_at) {
            const auto& p = script.posts[next_post++];
            pace(p.offset_ms);
            driver.participant_post(driver.session().participants()[static_cast<std::size_t>(p.participant)],
                                    p.text, kStart + p.offset_ms);
            continue;
        }
        pace(tick_at - kStart);
        result.ticks.push_back(driver.run_tick(tick_at, opts.provider, wall_deadline));
    }
    result.info = driver.session().info();
    result.log = driver.session().log();
    return result;
}

std::string encode_tick(const TickReport& r) {
    ojson j;
    j["tick_index"] = r.tick_index;
    j["elapsed_ms"] = r.elapsed_ms;
    j["phase"] = to_string(r.phase);
    j["actions"] = ojson::array();
    for (auto a : r.actions) j["actions"].push_back(to_string(a));
    j["hat"] = r.hat ? ojson(std::string(to_string(*r.hat))) : ojson(nullptr);
    j["inactive"] = r.inactive;
    j["gate_open"] = r.gate_open;
    j["evaluated"] = r.evaluated;
    j["responders"] = r.responders;
    return j.dump();
}

TickReport decode_tick(std::string_view line) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::SchemaViolation, "tick line is not an object");
    try {
        TickReport r;
        r.tick_index = j.at("tick_index").get<std::int64_t>();
        r.elapsed_ms = j.at("elapsed_ms").get<Millis>();
        r.phase = parse_phase(j.at("phase").get<std::string>()).value();
        for (const auto& a : j.at("actions")) r.actions.push_back(parse_action(a.get<std::string>()).value());
        if (!j.at("hat").is_null()) r.hat = parse_hat(j.at("hat").get<std::string>()).value();
        r.inactive = j.at("inactive").get<bool>();
        r.gate_open = j.at("gate_open").get<bool>();
        r.evaluated = j.at("evaluated").get<bool>();
        r.responders = j.at("responders").get<int>();
        return r;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::SchemaViolation, std::string("bad tick line: ") + e.what());
    }
}

std::string render_tick_log(const std::vector<TickReport>& ticks) {
    std::string out;
    for (const auto& t : ticks) {
        out += encode_tick(t);
        out += '\n';
    }
    return out;
}

}  // namespace ptfa
