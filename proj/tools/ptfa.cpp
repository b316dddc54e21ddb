// ptfa: serve | simulate | metrics
//
// Exit codes: 0 ok, 1 data error, 2 usage or config error, 3 environment
// error (port in use, admin token missing).

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ptfa/analytics.hpp"
#include "ptfa/config.hpp"
#include "ptfa/error.hpp"
#include "ptfa/server.hpp"
#include "ptfa/service.hpp"
#include "ptfa/simulation.hpp"
#include "ptfa/storage.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kDataError = 1;
constexpr int kUsageError = 2;
constexpr int kEnvError = 3;

struct Exit {
    int code;
    std::string message;
};

std::string read_file(const std::filesystem::path& path, int code_on_failure) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Exit{code_on_failure, "cannot read " + path.string()};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) throw Exit{kEnvError, "cannot write " + path.string()};
}

ptfa::ServiceConfig config_or_default(const std::string& path) {
    if (path.empty()) return {};
    return ptfa::parse_config(read_file(path, kUsageError));
}

// serve ----------------------------------------------------------------------

struct ServeArgs {
    std::string config;
    std::string host;
    int port = -1;
    std::string data_dir;
};

int cmd_serve(const ServeArgs& args) {
    auto cfg = config_or_default(args.config);
    if (!args.host.empty()) cfg.server.host = args.host;
    if (args.port >= 0) cfg.server.port = static_cast<unsigned short>(args.port);
    if (!args.data_dir.empty()) cfg.server.data_dir = args.data_dir;

    const char* admin = std::getenv("PTFA_ADMIN_TOKEN");
    if (admin == nullptr || *admin == '\0') throw Exit{kEnvError, "PTFA_ADMIN_TOKEN is not set"};
    if (cfg.provider.kind == "http" && std::getenv(cfg.provider.http.api_key_env.c_str()) == nullptr) {
        spdlog::warn("{} is not set; hat agents will abstain", cfg.provider.http.api_key_env);
    }

    // Block the shutdown signals before any thread starts so only sigwait sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    ptfa::ServiceOptions sopts;
    sopts.data_dir = cfg.server.data_dir;
    sopts.scheduler = cfg.scheduler;
    sopts.settings = std::make_shared<const ptfa::FacilitationSettings>(cfg.facilitation);
    sopts.provider = ptfa::make_provider(cfg.provider, cfg.facilitation.context);
    ptfa::Service service(sopts);

    ptfa::ServerOptions server_opts;
    server_opts.host = cfg.server.host;
    server_opts.port = cfg.server.port;
    server_opts.admin_token = admin;
    server_opts.default_group_size = cfg.server.default_group_size;
    ptfa::Server server(service, server_opts);
    unsigned short port = 0;
    try {
        port = server.start();
    } catch (const std::system_error& e) {
        throw Exit{kEnvError, "PortInUse: cannot listen on " + cfg.server.host + ":" +
                                  std::to_string(cfg.server.port) + ": " + e.what()};
    }
    std::cout << "ptfa listening on http://" << cfg.server.host << ":" << port << std::endl;

    int sig = 0;
    sigwait(&signals, &sig);
    spdlog::info("signal {} received, shutting down", sig);
    server.stop();
    service.shutdown();
    return kOk;
}

// simulate -------------------------------------------------------------------

struct SimulateArgs {
    std::string script;
    std::string config;
    std::string model = "1";
    double scale = 1.0;
    bool virtual_time = false;
    int topic = 0;
    std::string out = ".";
    std::string session_id = "sim";
};

int cmd_simulate(const SimulateArgs& args) {
    auto cfg = config_or_default(args.config);
    if (args.scale <= 0) throw Exit{kUsageError, "--scale must be positive"};
    cfg.scheduler.clock_scale = args.scale;
    cfg.scheduler.validate();

    ptfa::SessionInfo info;
    info.session_id = args.session_id;
    info.topic_id = args.topic;
    info.model = args.model == "0" ? ptfa::FacilitationModel::Model0 : ptfa::FacilitationModel::Model1;
    info.group_size = cfg.server.default_group_size;
    info.duration_ms = cfg.scheduler.session_duration_ms;
    (void)ptfa::topic(info.topic_id);

    const auto script = ptfa::parse_script(read_file(args.script, kUsageError), info.group_size,
                                           info.duration_ms);

    ptfa::SimulationOptions opts;
    opts.info = info;
    opts.scheduler = cfg.scheduler;
    opts.settings = std::make_shared<const ptfa::FacilitationSettings>(cfg.facilitation);
    if (script.has_llm_script() || args.config.empty()) {
        opts.provider = ptfa::script_provider(script, cfg.facilitation.context);
    } else {
        opts.provider = ptfa::make_provider(cfg.provider, cfg.facilitation.context);
    }
    opts.paced = !args.virtual_time;

    const auto started = std::chrono::steady_clock::now();
    const auto result = ptfa::run_session(opts, script);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    const std::filesystem::path out(args.out);
    std::filesystem::create_directories(out);
    const auto dataset = out / ("session_" + info.session_id + ".jsonl");
    const auto ticks = out / ("ticks_" + info.session_id + ".jsonl");
    write_file(dataset, ptfa::render_dataset(result.log, result.info));
    write_file(ticks, ptfa::render_tick_log(result.ticks));

    std::int64_t facilitator = 0;
    for (const auto& p : result.log) {
        if (p.kind == ptfa::PostKind::Message && p.author.kind() == ptfa::AuthorKind::Facilitator) ++facilitator;
    }
    std::cout << "session " << info.session_id << ": " << result.log.size() << " records, " << facilitator
              << " facilitator posts, " << result.ticks.size() << " tick reports, " << secs << " s\n"
              << "dataset " << dataset.string() << "\n"
              << "ticks   " << ticks.string() << std::endl;
    return kOk;
}

// metrics --------------------------------------------------------------------

int cmd_metrics(const std::vector<std::string>& files, const std::string& format) {
    if (files.empty()) throw Exit{kUsageError, "metrics needs at least one dataset file"};
    std::vector<std::filesystem::path> paths(files.begin(), files.end());
    for (const auto& p : paths) {
        if (!std::filesystem::is_regular_file(p)) throw Exit{kDataError, "cannot read " + p.string()};
    }
    const auto m = ptfa::compute_metrics(paths);
    std::cout << (format == "table" ? ptfa::metrics_table(m) : ptfa::metrics_json(m));
    return kOk;
}

int exit_code_for(ptfa::ErrorCode code) {
    switch (code) {
        case ptfa::ErrorCode::BadConfig:
        case ptfa::ErrorCode::InvalidTopic:
        case ptfa::ErrorCode::InvalidModel:
        case ptfa::ErrorCode::InvalidGroupSize: return kUsageError;
        case ptfa::ErrorCode::StorageUnavailable:
        case ptfa::ErrorCode::CredentialMissing: return kEnvError;
        default: return kDataError;
    }
}

}  // namespace

int main(int argc, char** argv) {
    // stdout is reserved for command output.
    spdlog::set_default_logger(spdlog::stderr_color_mt("ptfa"));

    CLI::App app{"Parallel-thinking facilitation service"};
    app.require_subcommand(1);

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP and live-channel service");
    serve_cmd->add_option("-c,--config", serve.config, "JSON config file");
    serve_cmd->add_option("--host", serve.host, "Bind address (overrides config)");
    serve_cmd->add_option("--port", serve.port, "Port, 0 for ephemeral (overrides config)")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--data-dir", serve.data_dir, "Storage directory (overrides config)");

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Run one scripted session under simulated time");
    sim_cmd->add_option("script", sim.script, "Participant script (JSON-lines)")->required();
    sim_cmd->add_option("-c,--config", sim.config, "JSON config file");
    sim_cmd->add_option("-m,--model", sim.model, "Facilitation model")->check(CLI::IsMember({"0", "1"}));
    sim_cmd->add_option("-s,--scale", sim.scale, "Simulated milliseconds per wall millisecond");
    sim_cmd->add_flag("--virtual", sim.virtual_time, "Do not pace against the wall clock");
    sim_cmd->add_option("-t,--topic", sim.topic, "Topic id")->check(CLI::IsMember({0, 1}));
    sim_cmd->add_option("-o,--out", sim.out, "Output directory");
    sim_cmd->add_option("--session-id", sim.session_id, "Session id used in the export");

    std::vector<std::string> metric_files;
    std::string format = "json";
    auto* metrics_cmd = app.add_subcommand("metrics", "Transcript metrics over dataset exports");
    metrics_cmd->add_option("files", metric_files, "Dataset files");
    metrics_cmd->add_option("-f,--format", format, "Output format")->check(CLI::IsMember({"json", "table"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    try {
        if (*serve_cmd) return cmd_serve(serve);
        if (*sim_cmd) return cmd_simulate(sim);
        return cmd_metrics(metric_files, format);
    } catch (const Exit& e) {
        std::cerr << "ptfa: " << e.message << "\n";
        return e.code;
    } catch (const ptfa::Error& e) {
        std::cerr << "ptfa: " << ptfa::to_string(e.code()) << ": " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "ptfa: " << e.what() << "\n";
        return kEnvError;
    }
}
