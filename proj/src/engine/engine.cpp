#include "mcms/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace mcms::engine {

std::string_view to_string(EngineErrc code) {
    switch (code) {
        case EngineErrc::IndexOutOfRange: return "IndexOutOfRange";
        case EngineErrc::AtRootMenu: return "AtRootMenu";
        case EngineErrc::UnknownPage: return "UnknownPage";
        case EngineErrc::EmptyQuery: return "EmptyQuery";
    }
    return "Unknown";
}

LoadedBundle::LoadedBundle(bundle::Bundle bundle) : bundle_(std::move(bundle)) {
    for (std::size_t i = 0; i < bundle_.pages.size(); ++i) {
        const auto& p = bundle_.pages[i];
        position_.emplace(p.id.value, i);
        if (p.parent) children_[p.parent->value].push_back(p.id);
        else roots_.push_back(p.id);
    }
}

const bundle::BundlePage* LoadedBundle::page(model::PageId id) const {
    const auto it = position_.find(id.value);
    return it == position_.end() ? nullptr : &bundle_.pages[it->second];
}

const std::vector<model::PageId>& LoadedBundle::children(model::ParentRef parent) const {
    static const std::vector<model::PageId> kNone;
    if (!parent) return roots_;
    const auto it = children_.find(parent->value);
    return it == children_.end() ? kNone : it->second;
}

std::vector<model::PageId> LoadedBundle::path_to(model::PageId id) const {
    std::vector<model::PageId> path;
    for (const auto* p = page(id); p != nullptr; p = p->parent ? page(*p->parent) : nullptr) path.push_back(p->id);
    return {path.rbegin(), path.rend()};
}

NavSession open_bundle(ByteView bytes) { return open_bundle(std::make_shared<const LoadedBundle>(bundle::parse(bytes))); }

NavSession open_bundle(std::shared_ptr<const LoadedBundle> bundle) { return NavSession{std::move(bundle), {}}; }

std::vector<MenuEntry> listing(const NavSession& session) {
    std::vector<MenuEntry> out;
    for (model::PageId id : session.bundle->children(session.current())) {
        out.push_back({id, session.bundle->page(id)->title, session.bundle->children(id).size()});
    }
    return out;
}

NavSession enter(const NavSession& session, std::size_t child_index) {
    const auto& kids = session.bundle->children(session.current());
    if (child_index >= kids.size()) {
        throw EngineError(EngineErrc::IndexOutOfRange,
                          std::to_string(child_index) + " >= " + std::to_string(kids.size()) + " children");
    }
    NavSession next = session;
    next.trail.push_back(kids[child_index]);
    return next;
}

NavSession back(const NavSession& session) {
    NavSession next = session;
    if (!next.trail.empty()) next.trail.pop_back();
    return next;
}

std::optional<std::vector<text::ShapedLine>> shape_text(const bundle::Bundle& bundle, std::string_view body,
                                                        text::Direction direction) {
    if (!bundle.atlas) return std::nullopt;
    std::vector<text::ShapedLine> lines;
    std::size_t start = 0;
    try {
        while (true) {
            const std::size_t nl = body.find('\n', start);
            lines.push_back(text::shape_line(body.substr(start, nl == std::string_view::npos ? body.npos : nl - start),
                                             *bundle.atlas, direction));
            if (nl == std::string_view::npos) break;
            start = nl + 1;
        }
    } catch (const text::TextError&) {
        return std::nullopt;
    }
    return lines;
}

namespace {

const bundle::BundlePage& current_page(const NavSession& session) {
    const auto id = session.current();
    if (!id) throw EngineError(EngineErrc::AtRootMenu, "no page selected");
    return *session.bundle->page(*id);
}

} // namespace

std::vector<RenderItem> view_contents(const NavSession& session) {
    const auto& page = current_page(session);
    const auto& b = session.bundle->bundle();
    std::vector<RenderItem> out;
    out.reserve(page.items.size());
    for (const auto& item : page.items) {
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, model::Text>) {
                    const auto dir = text::detect_direction(v.body);
                    out.emplace_back(RenderedText{v.body, shape_text(b, v.body, dir), dir});
                } else if constexpr (std::is_same_v<T, bundle::MediaItem>) {
                    const auto& asset = b.assets.at(v.asset_index);
                    out.emplace_back(RenderedMedia{v.kind, asset.digest, asset.mime, v.caption});
                } else {
                    out.emplace_back(v);
                }
            },
            item);
    }
    return out;
}

std::vector<bundle::SearchHit> search_pages(const NavSession& session, std::string_view query) {
    try {
        return bundle::search(session.bundle->bundle(), query);
    } catch (const bundle::BundleError& e) {
        if (e.code() == bundle::BundleErrc::EmptyQuery) throw EngineError(EngineErrc::EmptyQuery, e.detail());
        throw;
    }
}

NavSession jump_to(const NavSession& session, model::PageId page) {
    auto path = session.bundle->path_to(page);
    if (path.empty()) throw EngineError(EngineErrc::UnknownPage, std::to_string(page.value));
    return NavSession{session.bundle, std::move(path)};
}

std::string share_text(const bundle::BundleItem& item) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, model::Text>) {
                return v.body;
            } else if constexpr (std::is_same_v<T, bundle::MediaItem>) {
                return v.caption;
            } else if constexpr (std::is_same_v<T, model::MapPoint>) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.6f,%.6f", v.lat, v.lon);
                return v.label.empty() ? std::string(buf) : v.label + ": " + buf;
            } else if constexpr (std::is_same_v<T, model::PhoneNumber>) {
                return v.digits;
            } else if constexpr (std::is_same_v<T, model::Email>) {
                return v.address;
            } else {
                return v.label.empty() ? v.url : v.label + ": " + v.url;
            }
        },
        item);
}

ShareEvent share_content(const NavSession& session, std::size_t item_index, std::string target, ShareSink& sink) {
    const auto& page = current_page(session);
    if (item_index >= page.items.size()) {
        throw EngineError(EngineErrc::IndexOutOfRange,
                          std::to_string(item_index) + " >= " + std::to_string(page.items.size()) + " items");
    }
    const auto& item = page.items[item_index];
    ShareEvent event;
    if (const auto* m = std::get_if<bundle::MediaItem>(&item)) {
        event = {ShareKind::mms, session.bundle->bundle().assets.at(m->asset_index).digest.hex(), std::move(target)};
    } else {
        event = {ShareKind::sms, share_text(item), std::move(target)};
    }
    sink.emit(event);
    return event;
}

// -- REPL --------------------------------------------------------------------

namespace {

std::string escape_line(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '\n') out += "\\n";
        else if (c == '\r') out += "\\r";
        else out += c;
    }
    return out;
}

std::string where(const NavSession& s) {
    const auto id = s.current();
    if (!id) return "@ root";
    return "@ #" + std::to_string(id->value) + " " + escape_line(s.bundle->page(*id)->title);
}

std::string_view kind_name(model::MediaKind k) { return model::type_tag(model::media_type(k)); }

void print_item(std::ostream& out, std::size_t i, const RenderItem& item) {
    out << "[" << i << "] ";
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, RenderedText>) {
                out << "text: " << escape_line(v.body);
                if (v.lines) {
                    std::size_t glyphs = 0;
                    std::int32_t widest = 0;
                    for (const auto& l : *v.lines) {
                        glyphs += l.glyphs.size();
                        widest = std::max(widest, l.total_advance);
                    }
                    out << " (shaped " << (v.direction == text::Direction::rtl ? "rtl" : "ltr") << ", "
                        << v.lines->size() << " lines, " << glyphs << " glyphs, width " << widest << ")";
                }
            } else if constexpr (std::is_same_v<T, RenderedMedia>) {
                out << kind_name(v.kind) << " " << v.digest.hex() << " " << v.mime;
                if (!v.caption.empty()) out << " \"" << escape_line(v.caption) << "\"";
            } else if constexpr (std::is_same_v<T, model::MapPoint>) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.6f,%.6f", v.lat, v.lon);
                out << "map " << buf;
                if (!v.label.empty()) out << " \"" << escape_line(v.label) << "\"";
            } else if constexpr (std::is_same_v<T, model::PhoneNumber>) {
                out << "phone " << v.digits;
            } else if constexpr (std::is_same_v<T, model::Email>) {
                out << "email " << v.address;
            } else {
                out << "link " << v.url;
                if (!v.label.empty()) out << " \"" << escape_line(v.label) << "\"";
            }
        },
        item);
    out << "\n";
}

bool parse_index(std::string_view s, std::size_t& out) {
    if (s.empty() || s.size() > 9) return false;
    out = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
        out = out * 10 + static_cast<std::size_t>(c - '0');
    }
    return true;
}

} // namespace

void run_repl(NavSession session, std::istream& in, std::ostream& out, ShareSink& sink) {
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream words(line);
        std::string cmd;
        if (!(words >> cmd)) continue;
        std::string rest;
        std::getline(words >> std::ws, rest);
        try {
            if (cmd == "quit") {
                out << "bye\n";
                return;
            } else if (cmd == "ls") {
                out << where(session) << "\n";
                const auto entries = listing(session);
                for (std::size_t i = 0; i < entries.size(); ++i) {
                    out << i << " #" << entries[i].id.value << " " << escape_line(entries[i].title) << " ("
                        << entries[i].child_count << ")\n";
                }
            } else if (cmd == "enter") {
                std::size_t n = 0;
                if (!parse_index(rest, n)) {
                    out << "error: usage: enter N\n";
                    continue;
                }
                session = enter(session, n);
                out << where(session) << "\n";
            } else if (cmd == "back") {
                session = back(session);
                out << where(session) << "\n";
            } else if (cmd == "view") {
                const auto items = view_contents(session);
                out << where(session) << "\n";
                for (std::size_t i = 0; i < items.size(); ++i) print_item(out, i, items[i]);
            } else if (cmd == "search") {
                const auto hits = search_pages(session, rest);
                if (hits.empty()) out << "no hits\n";
                for (const auto& h : hits) {
                    out << "hit #" << h.page.value << " score=" << h.score << " "
                        << escape_line(session.bundle->page(h.page)->title) << "\n";
                }
            } else if (cmd == "jump") {
                std::size_t id = 0;
                if (!parse_index(rest, id)) {
                    out << "error: usage: jump ID\n";
                    continue;
                }
                session = jump_to(session, model::PageId{static_cast<std::uint32_t>(id)});
                out << where(session) << "\n";
            } else if (cmd == "share") {
                std::istringstream args(rest);
                std::string index_word;
                std::string target;
                std::size_t n = 0;
                if (!(args >> index_word >> target) || !parse_index(index_word, n)) {
                    out << "error: usage: share N TARGET\n";
                    continue;
                }
                const auto ev = share_content(session, n, target, sink);
                out << "share " << (ev.kind == ShareKind::sms ? "sms" : "mms") << " to=" << ev.target << " "
                    << escape_line(ev.payload) << "\n";
            } else {
                out << "error: unknown command '" << cmd << "'\n";
            }
        } catch (const EngineError& e) {
            out << "error: " << e.what() << "\n";
        }
    }
}

} // namespace mcms::engine
