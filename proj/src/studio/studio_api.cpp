#include "manifest_json.hpp"

#include "mcms/bundle_codec.hpp"
#include "mcms/distribution.hpp"
#include "mcms/engine.hpp"
#include "mcms/fs.hpp"

#include "httplib.h"

#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

namespace mcms::studio {

using namespace detail;

namespace {

struct Snapshot {
    model::Project project;
    std::uint64_t revision{};
};

/// Response produced by a handler: status plus JSON body.
struct Reply {
    int status{200};
    ojson body;
};

Reply error_reply(int status, std::string_view code, const std::string& detail) {
    return {status, {{"error", std::string(code)}, {"detail", detail}}};
}

Reply validation_reply(const model::ValidationReport& report) {
    ojson body = report_to_ojson(report);
    body["error"] = "ValidationFailed";
    return {422, body};
}

/// Issues in `next` absent from `prev`.
model::ValidationReport new_errors(const model::ValidationReport& prev, const model::ValidationReport& next) {
    model::ValidationReport out;
    for (const auto& e : next.errors) {
        if (std::find(prev.errors.begin(), prev.errors.end(), e) == prev.errors.end()) out.errors.push_back(e);
    }
    out.warnings = next.warnings;
    return out;
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    json j = json::parse(req.body, nullptr, false);
    if (j.is_discarded()) syntax("", "request body is not valid JSON");
    if (!j.is_object()) syntax("", "request body must be an object");
    return j;
}

model::ParentRef parent_field(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return model::PageId{get_u32(j[key], std::string("/") + key)};
}

std::size_t index_field(const json& j, const char* key) { return get_u32(member(j, "", key), std::string("/") + key); }

std::string mime_for(const std::string& name) {
    static const std::map<std::string, std::string> table = {
        {".png", "image/png"},   {".jpg", "image/jpeg"},  {".jpeg", "image/jpeg"}, {".gif", "image/gif"},
        {".bmp", "image/bmp"},   {".mp3", "audio/mpeg"},  {".wav", "audio/wav"},   {".ogg", "audio/ogg"},
        {".amr", "audio/amr"},   {".mid", "audio/midi"},  {".mp4", "video/mp4"},   {".3gp", "video/3gpp"},
        {".webm", "video/webm"}, {".avi", "video/x-msvideo"},
    };
    std::string ext = std::filesystem::path(name).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const auto it = table.find(ext);
    return it == table.end() ? "application/octet-stream" : it->second;
}

bool safe_asset_name(const std::string& name) {
    if (name.empty() || name.size() > 128 || name.front() == '.') return false;
    return std::all_of(name.begin(), name.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '.' || c == '_' || c == '-';
    });
}

ojson glyph_json(const text::PositionedGlyph& g) {
    ojson j = {{"codepoint", static_cast<std::uint32_t>(g.codepoint)},
               {"source", static_cast<std::uint32_t>(g.source)},
               {"form", std::string(text::to_string(g.form))},
               {"x", g.x_offset},
               {"advance", g.advance}};
    if (g.glyph) {
        j["width"] = g.glyph->width;
        j["height"] = g.glyph->height;
        j["bearing"] = g.glyph->bearing;
    }
    return j;
}

ojson lines_json(const std::optional<std::vector<text::ShapedLine>>& lines, std::uint16_t line_height) {
    if (!lines) return nullptr;
    ojson arr = ojson::array();
    for (const auto& l : *lines) {
        ojson glyphs = ojson::array();
        for (const auto& g : l.glyphs) glyphs.push_back(glyph_json(g));
        arr.push_back({{"width", l.total_advance}, {"height", line_height}, {"glyphs", glyphs}});
    }
    return arr;
}

std::string_view direction_name(text::Direction d) { return d == text::Direction::rtl ? "rtl" : "ltr"; }

ojson render_item_json(const engine::RenderItem& item, std::uint16_t line_height) {
    return std::visit(
        [&](const auto& v) -> ojson {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, engine::RenderedText>) {
                return {{"type", "text"},
                        {"body", v.body},
                        {"direction", std::string(direction_name(v.direction))},
                        {"lines", lines_json(v.lines, line_height)}};
            } else if constexpr (std::is_same_v<T, engine::RenderedMedia>) {
                return {{"type", std::string(model::type_tag(model::media_type(v.kind)))},
                        {"digest", v.digest.hex()},
                        {"mime", v.mime},
                        {"caption", v.caption}};
            } else {
                return item_to_json(model::ContentItem{v});
            }
        },
        item);
}

ojson render_tree(ByteView bytes) {
    const engine::NavSession root = engine::open_bundle(bytes);
    const bundle::Bundle& b = root.bundle->bundle();
    const std::uint16_t lh = b.atlas ? b.atlas->line_height : 0;
    ojson pages = ojson::array();
    for (const auto& p : b.pages) {
        const engine::NavSession at = engine::jump_to(root, p.id);
        ojson items = ojson::array();
        for (const auto& item : engine::view_contents(at)) items.push_back(render_item_json(item, lh));
        const text::Direction dir = text::detect_direction(p.title);
        pages.push_back({{"id", p.id.value},
                         {"parent", p.parent ? ojson(p.parent->value) : ojson(nullptr)},
                         {"depth", at.trail.size() - 1},
                         {"title", p.title},
                         {"title_direction", std::string(direction_name(dir))},
                         {"title_lines", lines_json(engine::shape_text(b, p.title, dir), lh)},
                         {"items", items}});
    }
    return pages;
}

model::PageId path_id(const httplib::Request& req) {
    const std::string s = req.matches[1].str();
    if (s.size() > 10 || std::stoull(s) > model::kMaxPageId) throw model::ModelError(model::ModelErrc::UnknownPage, s);
    return model::PageId{static_cast<std::uint32_t>(std::stoull(s))};
}

std::optional<std::uint64_t> parse_revision(std::string value) {
    value.erase(std::remove(value.begin(), value.end(), '"'), value.end());
    if (value.empty() || value.size() > 19 || !std::all_of(value.begin(), value.end(), ::isdigit)) return std::nullopt;
    return std::stoull(value);
}

} // namespace

struct Studio::Impl {
    std::filesystem::path dir;
    StudioOptions options;
    mutable std::mutex snapshot_mutex;
    std::shared_ptr<const Snapshot> snapshot;
    std::mutex write_mutex;
    std::mutex preview_mutex;
    std::optional<Digest> preview_cache;
    httplib::Server server;
    std::thread thread;
    int port{0};

    Impl(std::filesystem::path d, StudioOptions o) : dir(std::move(d)), options(std::move(o)) {
        auto s = std::make_shared<Snapshot>();
        s->project = load_project(dir);
        s->revision = 1;
        snapshot = std::move(s);
        routes();
    }

    std::shared_ptr<const Snapshot> current() const {
        std::lock_guard lock(snapshot_mutex);
        return snapshot;
    }

    static void send(httplib::Response& res, const Reply& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    }

    /// Runs a mutation under the single-writer lock with the If-Match revision check.
    Reply mutate(const httplib::Request& req, const std::function<model::Project(const model::Project&, ojson&)>& edit) {
        if (!req.has_header("If-Match")) return error_reply(428, "PreconditionRequired", "If-Match: <revision> is required");
        const auto expected = parse_revision(req.get_header_value("If-Match"));
        if (!expected) return error_reply(400, "BadRequest", "If-Match must be a revision number");
        std::lock_guard lock(write_mutex);
        const auto before = current();
        if (*expected != before->revision) {
            Reply r = error_reply(409, "RevisionMismatch",
                                  "expected " + std::to_string(*expected) + ", current " + std::to_string(before->revision));
            r.body["revision"] = before->revision;
            return r;
        }
        ojson extra = ojson::object();
        model::Project next = edit(before->project, extra);
        const auto introduced = new_errors(model::validate_project(before->project), model::validate_project(next));
        if (!introduced.ok()) return validation_reply(introduced);
        save_project(next, dir);
        auto snap = std::make_shared<Snapshot>(Snapshot{std::move(next), before->revision + 1});
        {
            std::lock_guard slock(snapshot_mutex);
            snapshot = snap;
        }
        ojson body = {{"revision", snap->revision}};
        for (auto& [k, v] : extra.items()) body[k] = v;
        return {200, body};
    }

    template <typename F>
    void guarded(httplib::Response& res, F&& f) {
        try {
            send(res, f());
        } catch (const StudioError& e) {
            if (e.code() == StudioErrc::IoError) send(res, error_reply(500, e.name(), e.detail()));
            else send(res, error_reply(400, e.name(), e.detail()));
        } catch (const model::ModelError& e) {
            switch (e.code()) {
                case model::ModelErrc::UnknownPage:
                case model::ModelErrc::UnknownParent: send(res, error_reply(404, e.name(), e.detail())); break;
                case model::ModelErrc::LastRootPage: {
                    model::ValidationReport r;
                    r.errors.push_back({model::ValidationCode::NoPages, std::nullopt, e.detail()});
                    send(res, validation_reply(r));
                    break;
                }
                default: send(res, error_reply(422, e.name(), e.detail()));
            }
        } catch (const text::TextError& e) {
            send(res, error_reply(422, e.name(), e.detail()));
        } catch (const bundle::BundleError& e) {
            send(res, error_reply(422, e.name(), e.detail()));
        } catch (const engine::EngineError& e) {
            send(res, error_reply(500, e.name(), e.detail()));
        } catch (const std::exception& e) {
            send(res, error_reply(500, "InternalError", e.what()));
        }
    }

    Reply compiled(const Snapshot& s, Bytes& bytes) {
        const auto report = model::validate_project(s.project);
        if (!report.ok()) return validation_reply(report);
        bytes = bundle::compile(s.project, load_glyphs(dir / kGlyphsName));
        return {200, {{"report", report_to_ojson(report)}}};
    }

    void routes() {
        server.Get("/api/project", [this](const httplib::Request&, httplib::Response& res) {
            const auto s = current();
            res.set_header("ETag", std::to_string(s->revision));
            send(res, {200, {{"revision", s->revision}, {"project", project_to_ojson(s->project)}}});
        });

        server.Patch("/api/project", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = parse_body(req);
                only_fields(body, "", {"app_id", "version", "title", "languages", "category", "theme"});
                return mutate(req, [&](const model::Project& p, ojson&) {
                    model::Project n = p;
                    if (body.contains("app_id")) n.app_id = get_string(body["app_id"], "/app_id");
                    if (body.contains("version")) n.version = get_u32(body["version"], "/version");
                    if (body.contains("title")) n.title = get_string(body["title"], "/title");
                    if (body.contains("languages")) n.languages = strings_from_json(body["languages"], "/languages");
                    if (body.contains("category")) n.category = get_string(body["category"], "/category");
                    if (body.contains("theme")) n.theme = theme_from_json(body["theme"], "/theme", n.theme);
                    return n;
                });
            });
        });

        server.Post("/api/pages", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = parse_body(req);
                only_fields(body, "", {"parent", "title", "position"});
                const auto parent = parent_field(body, "parent");
                const std::string title = get_string(member(body, "", "title"), "/title");
                return mutate(req, [&](const model::Project& p, ojson& extra) {
                    std::size_t position = 0;
                    if (body.contains("position")) {
                        position = get_u32(body["position"], "/position");
                    } else if (!parent) {
                        position = p.root_pages.size();
                    } else if (const auto* node = model::find_page(p, *parent)) {
                        position = node->children.size();
                    }
                    auto added = model::add_page(p, parent, title, position);
                    extra["id"] = added.id.value;
                    return std::move(added.project);
                });
            });
        });

        server.Post(R"(/api/pages/(\d+)/move)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = parse_body(req);
                only_fields(body, "", {"parent", "position"});
                const model::PageId id = path_id(req);
                const auto parent = parent_field(body, "parent");
                const std::size_t position = index_field(body, "position");
                return mutate(req, [&](const model::Project& p, ojson&) { return model::move_page(p, id, parent, position); });
            });
        });

        server.Post(R"(/api/pages/(\d+)/reorder)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = parse_body(req);
                only_fields(body, "", {"from", "to"});
                const model::PageId id = path_id(req);
                const std::size_t from = index_field(body, "from"), to = index_field(body, "to");
                return mutate(req,
                              [&](const model::Project& p, ojson&) { return model::reorder_content(p, id, from, to); });
            });
        });

        server.Patch(R"(/api/pages/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = parse_body(req);
                only_fields(body, "", {"title"});
                const model::PageId id = path_id(req);
                const std::string title = get_string(member(body, "", "title"), "/title");
                return mutate(req, [&](const model::Project& p, ojson&) { return model::rename_page(p, id, title); });
            });
        });

        server.Put(R"(/api/pages/(\d+)/contents)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = parse_body(req);
                only_fields(body, "", {"contents"});
                const model::PageId id = path_id(req);
                auto items = items_from_json(member(body, "", "contents"), "/contents");
                return mutate(req, [&](const model::Project& p, ojson&) { return model::set_page_contents(p, id, items); });
            });
        });

        server.Delete(R"(/api/pages/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const model::PageId id = path_id(req);
                return mutate(req, [&](const model::Project& p, ojson&) { return model::delete_page(p, id); });
            });
        });

        server.Post("/api/assets", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                std::string name, mime, content;
                if (req.is_multipart_form_data()) {
                    if (!req.has_file("file")) return error_reply(400, "BadRequest", "multipart field 'file' is required");
                    const auto f = req.get_file_value("file");
                    name = req.has_file("filename") ? req.get_file_value("filename").content : f.filename;
                    mime = req.has_file("mime") ? req.get_file_value("mime").content : std::string();
                    content = f.content;
                } else {
                    name = req.get_param_value("filename");
                    mime = req.get_param_value("mime");
                    content = req.body;
                }
                if (!safe_asset_name(name)) return error_reply(400, "BadRequest", "filename must be a plain file name");
                if (mime.empty()) mime = mime_for(name);
                return mutate(req, [&](const model::Project& p, ojson& extra) {
                    try {
                        fs::write_file_atomic(dir / kAssetsDir / name, as_bytes(content));
                    } catch (const std::filesystem::filesystem_error& e) {
                        throw StudioError(StudioErrc::IoError, e.what());
                    }
                    extra["asset"] = asset_to_json({name, mime});
                    extra["digest"] = sha256(content).hex();
                    return p;
                });
            });
        });

        server.Post("/api/preview", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] {
                const auto s = current();
                Bytes bytes;
                Reply r = compiled(*s, bytes);
                if (r.status != 200) return r;
                const Digest d = sha256(bytes);
                {
                    std::lock_guard lock(preview_mutex);
                    preview_cache = d;
                }
                r.body["revision"] = s->revision;
                r.body["digest"] = d.hex();
                r.body["size"] = bytes.size();
                r.body["pages"] = render_tree(bytes);
                return r;
            });
        });

        server.Post("/api/publish", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = parse_body(req);
                only_fields(body, "", {"url", "app_id", "version", "category"});
                const std::string url = get_string(member(body, "", "url"), "/url");
                // Overrides are compiled into the bundle so its META matches the release.
                Snapshot target = *current();
                if (body.contains("app_id")) target.project.app_id = get_string(body["app_id"], "/app_id");
                if (body.contains("version")) target.project.version = get_u32(body["version"], "/version");
                if (body.contains("category")) target.project.category = get_string(body["category"], "/category");
                Bytes bytes;
                Reply r = compiled(target, bytes);
                if (r.status != 200) return r;
                const auto& p = target.project;
                try {
                    const auto release = dist::publish_remote(url, options.token, p.app_id, p.version, p.category, bytes);
                    return Reply{200, {{"release", ojson::parse(dist::release_to_json(release))}, {"digest", release.digest.hex()}}};
                } catch (const dist::DistError& e) {
                    return error_reply(502, e.name(), e.detail());
                }
            });
        });

        server.Get("/api/fleet", [this](const httplib::Request&, httplib::Response& res) {
            ojson nodes = ojson::array();
            std::size_t failed = 0;
            for (const auto& url : options.fleet) {
                try {
                    const auto h = dist::fetch_health(url, options.token, options.upstream_timeout_s);
                    nodes.push_back({{"url", url},
                                     {"ok", true},
                                     {"role", std::string(dist::to_string(h.role))},
                                     {"seq", h.seq},
                                     {"held_count", h.held_count}});
                } catch (const dist::DistError& e) {
                    ++failed;
                    nodes.push_back({{"url", url}, {"ok", false}, {"error", std::string(e.name())}, {"detail", e.detail()}});
                }
            }
            const bool all_down = !options.fleet.empty() && failed == options.fleet.size();
            send(res, {all_down ? 502 : 200, {{"nodes", nodes}}});
        });

        server.Get("/api/sim/latest", [this](const httplib::Request&, httplib::Response& res) {
            const auto bytes = options.sim_report ? fs::read_file(*options.sim_report) : std::nullopt;
            if (!bytes) return send(res, error_reply(404, "NotFound", "no simulation report available"));
            res.set_content(as_string(*bytes), "application/json");
        });

        if (options.static_dir) server.set_mount_point("/", options.static_dir->string());
    }
};

Studio::Studio(std::filesystem::path dir, StudioOptions options)
    : impl_(std::make_unique<Impl>(std::move(dir), std::move(options))) {}

Studio::~Studio() { stop(); }

int Studio::start(const std::string& host, int port) {
    impl_->port = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (impl_->port < 0) throw StudioError(StudioErrc::IoError, "cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->port;
}

void Studio::run(const std::string& host, int port) {
    impl_->port = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (impl_->port < 0) throw StudioError(StudioErrc::IoError, "cannot bind " + host + ":" + std::to_string(port));
    impl_->server.listen_after_bind();
}

void Studio::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

std::string Studio::url() const { return "http://127.0.0.1:" + std::to_string(impl_->port); }

std::uint64_t Studio::revision() const { return impl_->current()->revision; }

model::Project Studio::project() const { return impl_->current()->project; }

} // namespace mcms::studio
