#include "ptfa/config.hpp"

#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ptfa/error.hpp"

namespace ptfa {
namespace {

using json = nlohmann::json;

[[noreturn]] void bad(const std::string& key, const std::string& what) {
    throw Error(ErrorCode::BadConfig, key + ": " + what);
}

const json& object_at(const json& parent, const std::string& key, std::initializer_list<const char*> allowed) {
    const json& obj = parent.at(key.substr(key.rfind('.') + 1));
    if (!obj.is_object()) bad(key, "must be an object");
    for (const auto& [k, _] : obj.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || k == a;
        if (!known) bad(key + "." + k, "unknown key");
    }
    return obj;
}

template <typename T>
void read(const json& obj, const std::string& path, const char* key, T& out) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    const std::string full = path + "." + key;
    if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) bad(full, "must be a string");
        out = it->template get<std::string>();
    } else if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) bad(full, "must be a number");
        out = it->template get<double>();
    } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
        if (!it->is_array()) bad(full, "must be an array of strings");
        out.clear();
        for (const auto& e : *it) {
            if (!e.is_string()) bad(full, "must be an array of strings");
            out.push_back(e.template get<std::string>());
        }
    } else {
        if (!it->is_number_integer()) bad(full, "must be an integer");
        const auto v = it->template get<std::int64_t>();
        bool in_range = false;
        if constexpr (std::is_unsigned_v<T>) {
            in_range = v >= 0 && static_cast<std::uint64_t>(v) <= std::numeric_limits<T>::max();
        } else {
            in_range = v >= static_cast<std::int64_t>(std::numeric_limits<T>::min()) &&
                       v <= static_cast<std::int64_t>(std::numeric_limits<T>::max());
        }
        if (!in_range) bad(full, "out of range");
        out = static_cast<T>(v);
    }
}

}  // namespace

ServiceConfig parse_config(std::string_view json_text) {
    const json root = json::parse(json_text, nullptr, false);
    if (root.is_discarded()) bad("<root>", "not valid JSON");
    if (!root.is_object()) bad("<root>", "must be an object");
    for (const auto& [k, _] : root.items()) {
        if (k != "server" && k != "scheduler" && k != "facilitation" && k != "provider" && k != "hats") {
            bad(k, "unknown key");
        }
    }

    ServiceConfig cfg;
    if (root.contains("server")) {
        const auto& s = object_at(root, "server", {"host", "port", "data_dir", "default_group_size"});
        read(s, "server", "host", cfg.server.host);
        read(s, "server", "port", cfg.server.port);
        std::string dir = cfg.server.data_dir.string();
        read(s, "server", "data_dir", dir);
        cfg.server.data_dir = dir;
        read(s, "server", "default_group_size", cfg.server.default_group_size);
        if (cfg.server.default_group_size < 2) bad("server.default_group_size", "must be at least 2");
    }
    if (root.contains("scheduler")) {
        const auto& s = object_at(root, "scheduler",
                                  {"tick_interval_ms", "session_duration_ms", "phase_boundary_ms",
                                   "inactivity_threshold_ms", "min_intervention_gap_ms", "clock_scale"});
        auto& c = cfg.scheduler;
        read(s, "scheduler", "tick_interval_ms", c.tick_interval_ms);
        read(s, "scheduler", "session_duration_ms", c.session_duration_ms);
        read(s, "scheduler", "phase_boundary_ms", c.phase_boundary_ms);
        read(s, "scheduler", "inactivity_threshold_ms", c.inactivity_threshold_ms);
        read(s, "scheduler", "min_intervention_gap_ms", c.min_intervention_gap_ms);
        read(s, "scheduler", "clock_scale", c.clock_scale);
    }
    cfg.scheduler.validate();

    if (root.contains("facilitation")) {
        const auto& f = object_at(root, "facilitation",
                                  {"max_output_chars", "context_max_posts", "context_max_chars"});
        read(f, "facilitation", "max_output_chars", cfg.facilitation.max_output_chars);
        read(f, "facilitation", "context_max_posts", cfg.facilitation.context.max_messages);
        read(f, "facilitation", "context_max_chars", cfg.facilitation.context.max_chars);
        if (cfg.facilitation.max_output_chars == 0) bad("facilitation.max_output_chars", "must be positive");
    }

    if (root.contains("provider")) {
        const auto& p = object_at(root, "provider", {"kind", "base_url", "model", "script"});
        read(p, "provider", "kind", cfg.provider.kind);
        read(p, "provider", "base_url", cfg.provider.http.base_url);
        read(p, "provider", "model", cfg.provider.http.model);
        read(p, "provider", "script", cfg.provider.script);
        if (cfg.provider.kind != "http" && cfg.provider.kind != "scripted") {
            bad("provider.kind", "must be \"http\" or \"scripted\"");
        }
        if (cfg.provider.kind == "scripted" && cfg.provider.script.empty()) {
            bad("provider.script", "scripted provider needs a non-empty script");
        }
    }

    if (root.contains("hats")) {
        const auto& hats = root.at("hats");
        if (!hats.is_object()) bad("hats", "must be an object");
        std::vector<HatAgentConfig> configs(cfg.facilitation.hats.all().begin(),
                                            cfg.facilitation.hats.all().end());
        for (const auto& [name, _] : hats.items()) {
            const auto hat = parse_hat(name);
            if (!hat) bad("hats." + name, "unknown hat");
            const std::string path = "hats." + name;
            const auto& h = object_at(hats, path,
                                      {"role_name", "macro_prompt", "situational_templates",
                                       "divergent_priority", "convergent_priority", "temperature"});
            auto& c = configs[static_cast<std::size_t>(*hat)];
            read(h, path, "role_name", c.role_name);
            read(h, path, "macro_prompt", c.macro_prompt);
            read(h, path, "situational_templates", c.situational_templates);
            read(h, path, "divergent_priority", c.divergent_priority);
            read(h, path, "convergent_priority", c.convergent_priority);
            read(h, path, "temperature", c.temperature);
        }
        cfg.facilitation.hats = HatRegistry(std::move(configs));
    }
    return cfg;
}

ServiceConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::BadConfig, path.string() + ": cannot read config file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::shared_ptr<llm::Provider> make_provider(const ProviderSettings& settings,
                                             const llm::ContextBudget& budget) {
    if (settings.kind == "scripted") {
        return std::make_shared<llm::ScriptedProvider>(settings.script, budget);
    }
    if (settings.http.base_url.empty()) bad("provider.base_url", "required for the http provider");
    if (settings.http.model.empty()) bad("provider.model", "required for the http provider");
    return std::make_shared<llm::HttpChatProvider>(settings.http, budget);
}

}  // namespace ptfa
