#include "manifest_json.hpp"

#include "mcms/bundle_codec.hpp"
#include "mcms/distribution.hpp"
#include "mcms/engine.hpp"
#include "mcms/fs.hpp"
#include "mcms/proximity_sim.hpp"

#include "CLI11.hpp"

#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <iostream>
#include <thread>

namespace mcms::studio {

using namespace detail;

namespace {

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kIo = 3, kRemote = 4 };

/// Raised by commands whose input failed project validation.
struct ValidationFailed : std::runtime_error {
    explicit ValidationFailed(model::ValidationReport r)
        : std::runtime_error("project has " + std::to_string(r.errors.size()) + " validation error(s)"),
          report(std::move(r)) {}
    model::ValidationReport report;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Failure {
    int exit;
    std::string name;
    std::string detail;
};

int exit_for(bundle::BundleErrc c) {
    switch (c) {
        case bundle::BundleErrc::InvalidProject:
        case bundle::BundleErrc::BundleTooLarge: return kValidation;
        case bundle::BundleErrc::EmptyQuery: return kUsage;
        default: return kIo;
    }
}

int exit_for(dist::DistErrc c) {
    switch (c) {
        case dist::DistErrc::StorageFailure:
        case dist::DistErrc::InvalidConfig: return kIo;
        default: return kRemote;
    }
}

int exit_for(sim::SimErrc c) { return c == sim::SimErrc::MalformedReport ? kIo : kValidation; }

int exit_for(StudioErrc c) { return c == StudioErrc::IoError ? kIo : kValidation; }

template <typename E>
Failure failure(const E& e, int code) {
    return {code, std::string(e.name()), e.detail()};
}

/// Maps the in-flight exception to an exit code and a printable name.
Failure classify() {
    try {
        throw;
    } catch (const ValidationFailed& e) {
        return {kValidation, "ValidationFailed", e.what()};
    } catch (const UsageError& e) {
        return {kUsage, "Usage", e.what()};
    } catch (const StudioError& e) {
        return failure(e, exit_for(e.code()));
    } catch (const model::ModelError& e) {
        return failure(e, kValidation);
    } catch (const text::TextError& e) {
        return failure(e, kValidation);
    } catch (const bundle::BundleError& e) {
        return failure(e, exit_for(e.code()));
    } catch (const engine::EngineError& e) {
        return failure(e, e.code() == engine::EngineErrc::EmptyQuery ? kUsage : kValidation);
    } catch (const dist::DistError& e) {
        return failure(e, exit_for(e.code()));
    } catch (const sim::SimError& e) {
        return failure(e, exit_for(e.code()));
    } catch (const std::filesystem::filesystem_error& e) {
        return {kIo, "IoError", e.what()};
    } catch (const std::exception& e) {
        return {kIo, "InternalError", e.what()};
    }
}

Bytes read_or_throw(const std::filesystem::path& p) {
    auto bytes = fs::read_file(p);
    if (!bytes) throw StudioError(StudioErrc::IoError, "cannot read " + p.string());
    return std::move(*bytes);
}

void write_or_throw(const std::filesystem::path& p, ByteView data) {
    try {
        fs::write_file_atomic(p, data);
    } catch (const std::filesystem::filesystem_error& e) {
        throw StudioError(StudioErrc::IoError, e.what());
    }
}

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

void print_issues(std::ostream& out, const char* kind, const std::vector<model::ValidationIssue>& issues) {
    for (const auto& i : issues) {
        out << kind << " " << model::to_string(i.code);
        if (i.page_id) out << " page=" << i.page_id->value;
        if (!i.detail.empty()) out << ": " << i.detail;
        out << "\n";
    }
}

std::string default_app_id(const std::filesystem::path& dir) {
    std::string id;
    for (unsigned char c : dir.filename().string()) {
        if (std::isalnum(c)) id += static_cast<char>(std::tolower(c));
        else if (!id.empty() && id.back() != '-') id += '-';
        if (id.size() == 64) break;
    }
    while (!id.empty() && id.back() == '-') id.pop_back();
    return id.empty() ? "app" : id;
}

/// SIGINT/SIGTERM are blocked in the calling thread before it creates any thread, so only sigwait sees them.
class SignalWaiter {
public:
    SignalWaiter() {
        sigemptyset(&set_);
        sigaddset(&set_, SIGINT);
        sigaddset(&set_, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &set_, &old_);
    }
    ~SignalWaiter() { pthread_sigmask(SIG_SETMASK, &old_, nullptr); }
    SignalWaiter(const SignalWaiter&) = delete;
    SignalWaiter& operator=(const SignalWaiter&) = delete;

    int wait() {
        int sig = 0;
        sigwait(&set_, &sig);
        return sig;
    }

private:
    sigset_t set_{};
    sigset_t old_{};
};

/// Periodic sync_once loop on its own thread.
class SyncAgent {
public:
    SyncAgent(dist::Node& node, const dist::NodeConfig& config, std::ostream& log) : node_(node), config_(config), log_(log) {
        thread_ = std::thread([this] { loop(); });
    }
    ~SyncAgent() {
        {
            std::lock_guard lock(mutex_);
            stopping_ = true;
        }
        cv_.notify_all();
        thread_.join();
    }
    SyncAgent(const SyncAgent&) = delete;
    SyncAgent& operator=(const SyncAgent&) = delete;

private:
    void loop() {
        dist::HttpUpstream upstream(config_.upstream_url, config_.token);
        std::unique_lock lock(mutex_);
        while (!stopping_) {
            lock.unlock();
            try {
                const auto r = dist::sync_once(node_, upstream);
                if (r.downloaded || r.failed) {
                    std::lock_guard out(log_mutex_);
                    log_ << "sync downloaded=" << r.downloaded << " skipped=" << r.skipped << " failed=" << r.failed
                         << std::endl;
                }
            } catch (const std::exception& e) {
                std::lock_guard out(log_mutex_);
                log_ << "sync error: " << e.what() << std::endl;
            }
            lock.lock();
            cv_.wait_for(lock, std::chrono::duration<double>(config_.sync_interval_s), [this] { return stopping_; });
        }
    }

    dist::Node& node_;
    dist::NodeConfig config_;
    std::ostream& log_;
    std::mutex log_mutex_;
    std::mutex mutex_;
    std::condition_variable cv_;
    bool stopping_{false};
    std::thread thread_;
};

/// node.json plus MCMS_TOKEN, and MCMS_LISTEN when the file names no listen address.
dist::NodeConfig read_node_config(const std::filesystem::path& file) {
    const Bytes bytes = read_or_throw(file);
    dist::NodeConfig config = dist::parse_node_config(as_string(bytes), file.parent_path());
    const json j = json::parse(as_string(bytes), nullptr, false);
    if (j.is_object() && !j.contains("listen")) config.listen = env_or("MCMS_LISTEN", config.listen);
    config.token = env_or("MCMS_TOKEN", "");
    return config;
}

struct Cli {
    std::istream& in;
    std::ostream& out;
    std::ostream& err;

    int cmd_new(const std::filesystem::path& dir, std::string app_id) {
        if (std::filesystem::exists(dir / kManifestName)) {
            throw StudioError(StudioErrc::IoError, (dir / kManifestName).string() + " already exists");
        }
        std::error_code ec;
        std::filesystem::create_directories(dir / kAssetsDir, ec);
        if (ec) throw StudioError(StudioErrc::IoError, "cannot create " + (dir / kAssetsDir).string() + ": " + ec.message());
        save_project(scaffold_project(app_id.empty() ? default_app_id(std::filesystem::absolute(dir)) : app_id), dir);
        out << "created " << (dir / kManifestName).string() << "\n";
        return kOk;
    }

    int cmd_validate(const std::filesystem::path& dir, bool as_json) {
        const auto report = model::validate_project(load_project(dir));
        if (as_json) {
            out << report_to_json(report);
        } else {
            print_issues(out, "error", report.errors);
            print_issues(out, "warning", report.warnings);
            if (report.ok()) out << "ok\n";
        }
        return report.ok() ? kOk : kValidation;
    }

    int cmd_compile(const std::filesystem::path& dir, const std::filesystem::path& output,
                    const std::optional<std::filesystem::path>& glyphs, bool as_json) {
        const auto report = model::validate_project(load_project(dir));
        if (!report.ok()) {
            if (!as_json) print_issues(err, "error", report.errors);
            throw ValidationFailed(report);
        }
        const Bytes bytes = compile_dir(dir, glyphs);
        write_or_throw(output, bytes);
        out << sha256(bytes).hex() << " " << bytes.size() << " " << output.string() << "\n";
        return kOk;
    }

    int cmd_inspect(const std::filesystem::path& file) {
        out << bundle::inspect(read_or_throw(file));
        return kOk;
    }

    int cmd_search(const std::filesystem::path& file, const std::string& query) {
        const Bytes bytes = read_or_throw(file);
        const auto session = engine::open_bundle(bytes);
        const auto hits = engine::search_pages(session, query);
        if (hits.empty()) out << "no hits\n";
        for (const auto& h : hits) {
            out << "#" << h.page.value << " score=" << h.score << " " << session.bundle->page(h.page)->title << "\n";
        }
        return kOk;
    }

    int cmd_nav(const std::filesystem::path& file) {
        const Bytes bytes = read_or_throw(file);
        engine::CollectingSink sink;
        engine::run_repl(engine::open_bundle(bytes), in, out, sink);
        return kOk;
    }

    int cmd_serve(const std::string& role_name, const std::filesystem::path& config_file, const std::string& listen) {
        const auto role = dist::role_from_string(role_name);
        if (!role) throw UsageError("role must be central, sub or kiosk");
        dist::NodeConfig config = read_node_config(config_file);
        if (config.role != *role) {
            throw dist::DistError(dist::DistErrc::InvalidConfig,
                                  "config role is " + std::string(dist::to_string(config.role)) + ", not " + role_name);
        }
        if (!listen.empty()) config.listen = listen;
        SignalWaiter signals;
        dist::Node node(config);
        dist::NodeServer server(node, config.token);
        const auto [host, port] = dist::split_listen(config.listen);
        server.start(host, port);
        out << "listening " << server.url() << std::endl;
        std::optional<SyncAgent> agent;
        if (config.role != dist::Role::central) agent.emplace(node, config, err);
        signals.wait();
        agent.reset();
        server.stop();
        out << "stopped" << std::endl;
        return kOk;
    }

    int cmd_publish(const std::filesystem::path& file, const std::string& url, const std::string& app_id,
                    std::uint32_t version, const std::string& category, const std::string& token) {
        const Bytes bytes = read_or_throw(file);
        const auto r = dist::publish_remote(url, token, app_id, version, category, bytes);
        out << dist::release_to_json(r) << "\n";
        return kOk;
    }

    int cmd_sync(const std::filesystem::path& config_file, bool once) {
        const dist::NodeConfig config = read_node_config(config_file);
        if (config.role == dist::Role::central) throw dist::DistError(dist::DistErrc::InvalidConfig, "central does not sync");
        dist::Node node(config);
        dist::HttpUpstream upstream(config.upstream_url, config.token);
        auto report = [&](const dist::SyncReport& r) {
            out << "downloaded=" << r.downloaded << " skipped=" << r.skipped << " failed=" << r.failed << std::endl;
        };
        if (once) {
            report(dist::sync_once(node, upstream));
            return kOk;
        }
        SignalWaiter signals;
        std::atomic<bool> stop{false};
        std::thread waiter([&] {
            signals.wait();
            stop = true;
        });
        while (!stop) {
            try {
                report(dist::sync_once(node, upstream));
            } catch (const dist::DistError& e) {
                err << "sync error: " << e.what() << std::endl;
            }
            for (double t = 0; t < config.sync_interval_s && !stop; t += 0.1) {
                std::this_thread::sleep_for(std::chrono::milliseconds(100));
            }
        }
        waiter.join();
        return kOk;
    }

    int cmd_simulate(const std::optional<std::filesystem::path>& scenario, std::uint64_t seeds,
                     const std::optional<std::filesystem::path>& output, std::string format, unsigned threads,
                     std::optional<double> p_reject, std::optional<std::uint64_t> seed, bool write_scenario) {
        sim::SimConfig config = scenario ? sim::parse_scenario(as_string(read_or_throw(*scenario))) : sim::exhibition_preset();
        if (p_reject) config.p_reject = *p_reject;
        if (seed) config.seed = *seed;
        sim::validate(config);
        if (write_scenario) {
            out << sim::scenario_to_json(config);
            return kOk;
        }
        if (format.empty()) format = output && output->extension() == ".csv" ? "csv" : "json";
        const auto fmt = format == "csv" ? sim::ReportFormat::csv : sim::ReportFormat::json;
        const auto runs = sim::run_sweep(config, seeds, threads);
        const std::string text = sim::emit_report(runs, fmt);
        if (!output) {
            out << text;
            return kOk;
        }
        write_or_throw(*output, as_bytes(text));
        sim::SimStats total;
        double in_range = 0;
        for (const auto& r : runs) {
            total.attempts += r.stats.attempts;
            total.successes += r.stats.successes;
            total.failures += r.stats.failures;
            total.rejections += r.stats.rejections;
            in_range += r.stats.mean_concurrent_in_range;
        }
        const double n = static_cast<double>(runs.size());
        out << "runs=" << runs.size() << " mean_attempts=" << static_cast<double>(total.attempts) / n
            << " mean_in_range=" << in_range / n << " -> " << output->string() << "\n";
        return kOk;
    }

    int cmd_studio(const std::filesystem::path& dir, std::string listen, StudioOptions options) {
        if (listen.empty()) listen = env_or("MCMS_LISTEN", "127.0.0.1:8080");
        options.token = env_or("MCMS_TOKEN", "");
        SignalWaiter signals;
        Studio studio(dir, std::move(options));
        const auto [host, port] = dist::split_listen(listen);
        studio.start(host, port);
        out << "studio listening " << studio.url() << std::endl;
        signals.wait();
        studio.stop();
        return kOk;
    }
};

} // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    Cli cli{in, out, err};
    CLI::App app{"Mobile content management: authoring, bundles, distribution and simulation", "mcms"};
    app.require_subcommand(1);
    app.fallthrough();
    bool as_json = false;
    app.add_flag("--json", as_json, "Machine-readable errors on stderr");
    std::function<int()> action;

    std::filesystem::path dir, file, config_file, output;
    std::string app_id, url, category, query, role, listen, format;
    std::uint32_t version = 0;
    std::optional<std::filesystem::path> glyphs, scenario, out_file, static_dir, sim_report;
    std::uint64_t seeds = 30;
    unsigned threads = 1;
    std::optional<double> p_reject;
    std::optional<std::uint64_t> seed;
    bool once = false, print_scenario = false;
    std::vector<std::string> nodes;
    std::string token = env_or("MCMS_TOKEN", "");

    auto* c_new = app.add_subcommand("new", "Scaffold a project directory");
    c_new->add_option("dir", dir)->required();
    c_new->add_option("--app-id", app_id, "Application id (default: derived from the directory name)");
    c_new->callback([&] { action = [&] { return cli.cmd_new(dir, app_id); }; });

    auto* c_validate = app.add_subcommand("validate", "Validate a project directory");
    c_validate->add_option("dir", dir)->required();
    c_validate->callback([&] { action = [&] { return cli.cmd_validate(dir, as_json); }; });

    auto* c_compile = app.add_subcommand("compile", "Compile a project into a bundle");
    c_compile->add_option("dir", dir)->required();
    c_compile->add_option("-o,--output", output, "Bundle path")->required();
    c_compile->add_option("--glyphs", glyphs, "Glyph sheet (default: <dir>/glyphs.txt when present)");
    c_compile->callback([&] { action = [&] { return cli.cmd_compile(dir, output, glyphs, as_json); }; });

    auto* c_inspect = app.add_subcommand("inspect", "Summarize a bundle");
    c_inspect->add_option("bundle", file)->required();
    c_inspect->callback([&] { action = [&] { return cli.cmd_inspect(file); }; });

    auto* c_search = app.add_subcommand("search", "Search a bundle");
    c_search->add_option("bundle", file)->required();
    c_search->add_option("query", query)->required();
    c_search->callback([&] { action = [&] { return cli.cmd_search(file, query); }; });

    auto* c_nav = app.add_subcommand("nav", "Interactive bundle navigation on stdin");
    c_nav->add_option("bundle", file)->required();
    c_nav->callback([&] { action = [&] { return cli.cmd_nav(file); }; });

    auto* c_serve = app.add_subcommand("serve", "Run a distribution node");
    c_serve->add_option("role", role, "central, sub or kiosk")->required()->check(CLI::IsMember({"central", "sub", "kiosk"}));
    c_serve->add_option("--config", config_file, "node.json")->required();
    c_serve->add_option("--listen", listen, "host:port (overrides node.json)");
    c_serve->callback([&] { action = [&] { return cli.cmd_serve(role, config_file, listen); }; });

    auto* c_publish = app.add_subcommand("publish", "Upload a bundle to a central node");
    c_publish->add_option("bundle", file)->required();
    c_publish->add_option("--to", url, "Central node URL")->required();
    c_publish->add_option("--app-id", app_id)->required();
    c_publish->add_option("--version", version)->required();
    c_publish->add_option("--category", category)->required();
    c_publish->add_option("--token", token, "Bearer token (default: MCMS_TOKEN)");
    c_publish->callback([&] { action = [&] { return cli.cmd_publish(file, url, app_id, version, category, token); }; });

    auto* c_sync = app.add_subcommand("sync", "Pull from the configured upstream");
    c_sync->add_option("--config", config_file, "node.json")->required();
    c_sync->add_flag("--once", once, "Run a single round");
    c_sync->callback([&] { action = [&] { return cli.cmd_sync(config_file, once); }; });

    auto* c_sim = app.add_subcommand("simulate", "Run the proximity broadcast simulator");
    c_sim->add_option("--scenario", scenario, "Scenario JSON (default: exhibition preset)");
    c_sim->add_option("--seeds", seeds, "Number of consecutive seeds")->check(CLI::PositiveNumber);
    c_sim->add_option("--out", out_file, "Report file (default: stdout)");
    c_sim->add_option("--format", format, "json or csv (default: from --out extension)")->check(CLI::IsMember({"json", "csv"}));
    c_sim->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1u, 256u));
    c_sim->add_option("--p-reject", p_reject, "Override p_reject");
    c_sim->add_option("--seed", seed, "Override the first seed");
    c_sim->add_flag("--print-scenario", print_scenario, "Print the effective scenario and exit");
    c_sim->callback([&] {
        action = [&] { return cli.cmd_simulate(scenario, seeds, out_file, format, threads, p_reject, seed, print_scenario); };
    });

    auto* c_studio = app.add_subcommand("studio", "Serve the authoring API for one project");
    c_studio->add_option("dir", dir)->required();
    c_studio->add_option("--listen", listen, "host:port (default: MCMS_LISTEN or 127.0.0.1:8080)");
    c_studio->add_option("--static", static_dir, "Console assets mounted at /");
    c_studio->add_option("--node", nodes, "Node URL shown by /api/fleet (repeatable)");
    c_studio->add_option("--sim-report", sim_report, "Report served by /api/sim/latest");
    c_studio->callback([&] {
        action = [&] { return cli.cmd_studio(dir, listen, StudioOptions{nodes, sim_report, static_dir, {}, 3.0}); };
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kUsage;
    }

    try {
        return action();
    } catch (...) {
        const Failure f = classify();
        if (as_json) {
            ojson j = {{"error", f.name}, {"detail", f.detail}, {"exit", f.exit}};
            try {
                throw;
            } catch (const ValidationFailed& v) {
                j["report"] = report_to_ojson(v.report);
            } catch (...) {
            }
            err << j.dump() << "\n";
        } else {
            err << "error: " << f.name;
            if (!f.detail.empty()) err << ": " << f.detail;
            err << "\n";
        }
        return f.exit;
    }
}

} // namespace mcms::studio
