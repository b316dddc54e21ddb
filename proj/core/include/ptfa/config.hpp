#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "ptfa/llm.hpp"
#include "ptfa/scheduler.hpp"

namespace ptfa {

struct ProviderSettings {
    std::string kind = "http";  // "http" | "scripted"
    llm::HttpProviderConfig http;
    std::vector<std::string> script;
};

struct ServerSettings {
    std::string host = "127.0.0.1";
    unsigned short port = 8080;
    std::filesystem::path data_dir = "ptfa-data";
    int default_group_size = kDefaultGroupSize;
};

struct ServiceConfig {
    ServerSettings server;
    SchedulerConfig scheduler;
    FacilitationSettings facilitation;
    ProviderSettings provider;
};

/// Parses a JSON config. Unknown keys and wrong types raise BadConfig with
/// the dotted key path in the message.
ServiceConfig parse_config(std::string_view json_text);
ServiceConfig load_config(const std::filesystem::path& path);

std::shared_ptr<llm::Provider> make_provider(const ProviderSettings& settings,
                                             const llm::ContextBudget& budget);

}  // namespace ptfa
