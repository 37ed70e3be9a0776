#include "mcms/distribution.hpp"

#include "httplib.h"
#include "json.hpp"

#include <atomic>
#include <sstream>
#include <thread>

namespace mcms::dist {

using nlohmann::json;

namespace {

std::unique_ptr<httplib::Client> client_for(const std::string& base_url, const std::string& token, double timeout_s) {
    auto c = std::make_unique<httplib::Client>(base_url);
    if (!c->is_valid()) throw DistError(DistErrc::InvalidConfig, "bad url " + base_url);
    const auto sec = static_cast<time_t>(timeout_s);
    const auto usec = static_cast<time_t>((timeout_s - static_cast<double>(sec)) * 1e6);
    c->set_connection_timeout(sec, usec);
    c->set_read_timeout(sec, usec);
    c->set_write_timeout(sec, usec);
    if (!token.empty()) c->set_bearer_token_auth(token);
    return c;
}

[[noreturn]] void unreachable(const std::string& url, const httplib::Result& res) {
    throw DistError(DistErrc::UpstreamUnreachable, url + ": " + httplib::to_string(res.error()));
}

DistErrc code_from_body(const std::string& body, DistErrc fallback) {
    const json j = json::parse(body, nullptr, false);
    if (!j.is_object() || !j.contains("error") || !j["error"].is_string()) return fallback;
    const std::string name = j["error"].get<std::string>();
    for (auto c : {DistErrc::VersionNotIncreased, DistErrc::MalformedBundle, DistErrc::StorageFailure,
                   DistErrc::UpstreamUnreachable, DistErrc::DigestMismatch, DistErrc::UnknownApp, DistErrc::NotFound,
                   DistErrc::InvalidConfig, DistErrc::Unauthorized, DistErrc::ProtocolError}) {
        if (to_string(c) == name) return c;
    }
    return fallback;
}

[[noreturn]] void remote_error(const httplib::Response& r) {
    DistErrc fallback = DistErrc::ProtocolError;
    if (r.status == 401) fallback = DistErrc::Unauthorized;
    if (r.status == 404) fallback = DistErrc::NotFound;
    throw DistError(code_from_body(r.body, fallback), "HTTP " + std::to_string(r.status) + ": " + r.body);
}

std::string join(const CategorySet& s) {
    std::string out;
    for (const auto& c : s) {
        if (!out.empty()) out += ',';
        out += c;
    }
    return out;
}

CategorySet split_categories(const std::string& s) {
    CategorySet out;
    std::stringstream in(s);
    std::string part;
    while (std::getline(in, part, ',')) {
        if (!part.empty()) out.insert(part);
    }
    return out;
}

std::string health_json(const Health& h) {
    return json{{"role", std::string(to_string(h.role))}, {"seq", h.seq}, {"held_count", h.held_count}}.dump();
}

} // namespace

// -- client side -----------------------------------------------------------------

HttpUpstream::HttpUpstream(std::string base_url, std::string token, double timeout_s)
    : base_url_(std::move(base_url)), token_(std::move(token)), timeout_s_(timeout_s) {}

std::vector<Release> HttpUpstream::fetch_catalog(const CategorySet& categories, std::uint64_t since_seq) {
    auto c = client_for(base_url_, token_, timeout_s_);
    httplib::Params params{{"since", std::to_string(since_seq)}};
    if (!categories.empty()) params.emplace("categories", join(categories));
    auto res = c->Get("/v1/catalog", params, httplib::Headers{});
    if (!res) unreachable(base_url_, res);
    if (res->status != 200) remote_error(*res);
    return releases_from_json(res->body);
}

std::optional<Bytes> HttpUpstream::fetch_blob(const Digest& digest) {
    auto c = client_for(base_url_, token_, timeout_s_);
    auto res = c->Get("/v1/bundles/" + digest.hex());
    if (!res) unreachable(base_url_, res);
    if (res->status == 404) return std::nullopt;
    if (res->status != 200) remote_error(*res);
    return to_bytes(res->body);
}

Release publish_remote(const std::string& base_url, const std::string& token, const std::string& app_id,
                       std::uint32_t version, const std::string& category, ByteView bundle_bytes) {
    auto c = client_for(base_url, token, 30.0);
    const json meta = {{"app_id", app_id}, {"version", version}, {"category", category}, {"digest", sha256(bundle_bytes).hex()}};
    httplib::MultipartFormDataItems items = {
        {"release", meta.dump(), "", "application/json"},
        {"bundle", as_string(bundle_bytes), app_id + ".amb", "application/octet-stream"},
    };
    auto res = c->Post("/v1/releases", items);
    if (!res) unreachable(base_url, res);
    if (res->status != 201) remote_error(*res);
    return release_from_json(res->body);
}

Health fetch_health(const std::string& base_url, const std::string& token, double timeout_s) {
    auto c = client_for(base_url, token, timeout_s);
    auto res = c->Get("/v1/health");
    if (!res) unreachable(base_url, res);
    if (res->status != 200) remote_error(*res);
    const json j = json::parse(res->body, nullptr, false);
    try {
        const auto role = role_from_string(j.at("role").get<std::string>());
        if (!role) throw DistError(DistErrc::ProtocolError, "bad role in health");
        return {*role, j.at("seq").get<std::uint64_t>(), j.at("held_count").get<std::size_t>()};
    } catch (const json::exception& e) {
        throw DistError(DistErrc::ProtocolError, e.what());
    }
}

std::pair<std::string, int> split_listen(const std::string& listen) {
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw DistError(DistErrc::InvalidConfig, "listen must be host:port");
    try {
        std::size_t used = 0;
        const int port = std::stoi(listen.substr(colon + 1), &used);
        if (used != listen.size() - colon - 1 || port < 0 || port > 65535) throw std::out_of_range("port");
        return {listen.substr(0, colon), port};
    } catch (const std::exception&) {
        throw DistError(DistErrc::InvalidConfig, "bad port in " + listen);
    }
}

// -- server side -----------------------------------------------------------------

struct NodeServer::Impl {
    Node& node;
    std::string token;
    httplib::Server server;
    std::thread thread;

    Impl(Node& n, std::string t) : node(n), token(std::move(t)) { routes(); }

    static void send_error(httplib::Response& res, int status, DistErrc code, const std::string& detail) {
        res.status = status;
        res.set_content(json{{"error", std::string(to_string(code))}, {"detail", detail}}.dump(), "application/json");
    }

    static int status_for(DistErrc code) {
        switch (code) {
            case DistErrc::VersionNotIncreased: return 409;
            case DistErrc::MalformedBundle:
            case DistErrc::DigestMismatch: return 422;
            case DistErrc::UnknownApp:
            case DistErrc::NotFound: return 404;
            case DistErrc::Unauthorized: return 401;
            case DistErrc::ProtocolError:
            case DistErrc::InvalidConfig: return 400;
            default: return 500;
        }
    }

    bool authorized(const httplib::Request& req) const {
        return token.empty() || req.get_header_value("Authorization") == "Bearer " + token;
    }

    void routes() {
        server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
            if (req.path == "/v1/health" || authorized(req)) return httplib::Server::HandlerResponse::Unhandled;
            send_error(res, 401, DistErrc::Unauthorized, "missing or wrong bearer token");
            return httplib::Server::HandlerResponse::Handled;
        });
        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const DistError& e) {
                send_error(res, status_for(e.code()), e.code(), e.detail());
            } catch (const std::exception& e) {
                send_error(res, 500, DistErrc::StorageFailure, e.what());
            }
        });

        server.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
            res.set_content(health_json(node.health()), "application/json");
        });

        server.Get("/v1/catalog", [this](const httplib::Request& req, httplib::Response& res) {
            std::uint64_t since = 0;
            if (req.has_param("since")) {
                try {
                    since = std::stoull(req.get_param_value("since"));
                } catch (const std::exception&) {
                    return send_error(res, 400, DistErrc::ProtocolError, "bad since");
                }
            }
            const CategorySet cats = split_categories(req.get_param_value("categories"));
            res.set_content(releases_to_json(node.catalog()->since(cats, since)), "application/json");
        });

        server.Get(R"(/v1/bundles/([0-9a-f]{64}))", [this](const httplib::Request& req, httplib::Response& res) {
            const auto d = Digest::from_hex(req.matches[1].str());
            const auto bytes = d ? node.blob(*d) : std::nullopt;
            if (!bytes) return send_error(res, 404, DistErrc::NotFound, req.matches[1].str());
            res.set_content(as_string(*bytes), "application/octet-stream");
        });

        server.Post("/v1/releases", [this](const httplib::Request& req, httplib::Response& res) {
            if (node.role() != Role::central) {
                return send_error(res, 405, DistErrc::InvalidConfig, "only the central node accepts releases");
            }
            if (!req.has_file("release") || !req.has_file("bundle")) {
                return send_error(res, 400, DistErrc::ProtocolError, "multipart fields 'release' and 'bundle' required");
            }
            const json meta = json::parse(req.get_file_value("release").content, nullptr, false);
            std::string app_id, category;
            std::uint32_t version = 0;
            std::optional<Digest> claimed;
            try {
                app_id = meta.at("app_id").get<std::string>();
                version = meta.at("version").get<std::uint32_t>();
                category = meta.at("category").get<std::string>();
                if (meta.contains("digest")) {
                    claimed = Digest::from_hex(meta.at("digest").get<std::string>());
                    if (!claimed) return send_error(res, 422, DistErrc::MalformedBundle, "bad digest");
                }
            } catch (const json::exception& e) {
                return send_error(res, 400, DistErrc::ProtocolError, e.what());
            }
            if (version == 0) return send_error(res, 400, DistErrc::ProtocolError, "version must be positive");
            const std::string& body = req.get_file_value("bundle").content;
            const Release r = node.publish(app_id, version, category, as_bytes(body), claimed);
            res.status = 201;
            res.set_content(release_to_json(r), "application/json");
        });

        server.Get("/v1/menu", [this](const httplib::Request&, httplib::Response& res) {
            if (node.role() != Role::kiosk) return send_error(res, 404, DistErrc::NotFound, "menu is served by kiosks");
            json arr = json::array();
            for (const auto& e : kiosk_menu(node)) {
                arr.push_back({{"app_id", e.app_id}, {"title", e.title}, {"version", e.version}, {"size", e.size}});
            }
            const auto s = node.state();
            res.set_content(json{{"apps", arr}, {"auto_broadcast", s->auto_broadcast ? json(*s->auto_broadcast) : json(nullptr)}}
                                .dump(),
                            "application/json");
        });

        server.Put("/v1/broadcast", [this](const httplib::Request& req, httplib::Response& res) {
            if (node.role() != Role::kiosk) return send_error(res, 404, DistErrc::NotFound, "broadcast is a kiosk setting");
            const json j = json::parse(req.body, nullptr, false);
            if (!j.is_object() || !j.contains("app_id") || !j["app_id"].is_string() || !j.contains("enabled") ||
                !j["enabled"].is_boolean()) {
                return send_error(res, 400, DistErrc::ProtocolError, "body must be {app_id, enabled}");
            }
            const SyncState s = node.mark_auto_broadcast(j["app_id"].get<std::string>(), j["enabled"].get<bool>());
            res.set_content(json{{"auto_broadcast", s.auto_broadcast ? json(*s.auto_broadcast) : json(nullptr)}}.dump(),
                            "application/json");
        });
    }
};

NodeServer::NodeServer(Node& node, std::string token) : impl_(std::make_unique<Impl>(node, std::move(token))) {}

NodeServer::~NodeServer() { stop(); }

int NodeServer::start(const std::string& host, int port) {
    port_ = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw DistError(DistErrc::InvalidConfig, "cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port_;
}

void NodeServer::run(const std::string& host, int port) {
    port_ = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw DistError(DistErrc::InvalidConfig, "cannot bind " + host + ":" + std::to_string(port));
    impl_->server.listen_after_bind();
}

void NodeServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

std::string NodeServer::url() const { return "http://127.0.0.1:" + std::to_string(port_); }

} // namespace mcms::dist
