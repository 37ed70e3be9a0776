#include "manifest_json.hpp"

#include "mcms/bundle_codec.hpp"
#include "mcms/fs.hpp"

#include <algorithm>
#include <limits>

namespace mcms::studio {

std::string_view to_string(StudioErrc code) {
    switch (code) {
        case StudioErrc::ManifestSyntax: return "ManifestSyntax";
        case StudioErrc::ManifestUnknownField: return "ManifestUnknownField";
        case StudioErrc::IoError: return "IoError";
    }
    return "Unknown";
}

namespace detail {

namespace {

std::string at(const std::string& pointer, std::string_view key) { return pointer + "/" + std::string(key); }
std::string at(const std::string& pointer, std::size_t index) { return pointer + "/" + std::to_string(index); }

}  // namespace

void syntax(const std::string& pointer, const std::string& what) {
    throw StudioError(StudioErrc::ManifestSyntax, (pointer.empty() ? std::string("/") : pointer) + ": " + what);
}

void only_fields(const json& j, const std::string& pointer, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) syntax(pointer, "expected an object");
    for (const auto& [k, v] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
            throw StudioError(StudioErrc::ManifestUnknownField, at(pointer, k));
        }
    }
}

const json& member(const json& j, const std::string& pointer, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) syntax(at(pointer, key), "missing field");
    return *it;
}

std::string get_string(const json& j, const std::string& pointer) {
    if (!j.is_string()) syntax(pointer, "expected a string");
    return j.get<std::string>();
}

std::uint32_t get_u32(const json& j, const std::string& pointer) {
    if (!j.is_number_unsigned() || j.get<std::uint64_t>() > std::numeric_limits<std::uint32_t>::max()) {
        syntax(pointer, "expected an unsigned 32-bit integer");
    }
    return j.get<std::uint32_t>();
}

double get_number(const json& j, const std::string& pointer) {
    if (!j.is_number()) syntax(pointer, "expected a number");
    return j.get<double>();
}

std::vector<std::string> strings_from_json(const json& j, const std::string& pointer) {
    if (!j.is_array()) syntax(pointer, "expected an array");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_string(j[i], at(pointer, i)));
    return out;
}

ojson asset_to_json(const model::AssetRef& a) { return {{"relative_path", a.relative_path}, {"mime", a.mime}}; }

model::AssetRef asset_from_json(const json& j, const std::string& pointer) {
    only_fields(j, pointer, {"relative_path", "mime"});
    return {get_string(member(j, pointer, "relative_path"), at(pointer, "relative_path")),
            get_string(member(j, pointer, "mime"), at(pointer, "mime"))};
}

std::optional<model::AssetRef> optional_asset(const json& j, const std::string& pointer) {
    if (j.is_null()) return std::nullopt;
    return asset_from_json(j, pointer);
}

ojson item_to_json(const model::ContentItem& item) {
    const std::string tag(model::type_tag(model::content_type(item)));
    return std::visit(
        [&](const auto& v) -> ojson {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, model::Text>) {
                return {{"type", tag}, {"body", v.body}};
            } else if constexpr (std::is_same_v<T, model::Media>) {
                return {{"type", tag}, {"asset", asset_to_json(v.asset)}, {"caption", v.caption}};
            } else if constexpr (std::is_same_v<T, model::MapPoint>) {
                return {{"type", tag}, {"lat", v.lat}, {"lon", v.lon}, {"label", v.label}};
            } else if constexpr (std::is_same_v<T, model::PhoneNumber>) {
                return {{"type", tag}, {"digits", v.digits}};
            } else if constexpr (std::is_same_v<T, model::Email>) {
                return {{"type", tag}, {"address", v.address}};
            } else {
                return {{"type", tag}, {"url", v.url}, {"label", v.label}};
            }
        },
        item);
}

model::ContentItem item_from_json(const json& j, const std::string& pointer) {
    if (!j.is_object()) syntax(pointer, "expected an object");
    const std::string tag = get_string(member(j, pointer, "type"), at(pointer, "type"));
    const auto type = model::type_from_tag(tag);
    if (!type) syntax(at(pointer, "type"), "unknown content type '" + tag + "'");
    const auto str = [&](const char* key) { return get_string(member(j, pointer, key), at(pointer, key)); };
    const auto opt_str = [&](const char* key) {
        return j.contains(key) ? get_string(j[key], at(pointer, key)) : std::string();
    };
    switch (*type) {
        case model::ContentType::text:
            only_fields(j, pointer, {"type", "body"});
            return model::Text{str("body")};
        case model::ContentType::image:
        case model::ContentType::audio:
        case model::ContentType::video:
        case model::ContentType::animation:
            only_fields(j, pointer, {"type", "asset", "caption"});
            return model::Media{model::media_kind(*type), asset_from_json(member(j, pointer, "asset"), at(pointer, "asset")),
                                opt_str("caption")};
        case model::ContentType::map_point:
            only_fields(j, pointer, {"type", "lat", "lon", "label"});
            return model::MapPoint{get_number(member(j, pointer, "lat"), at(pointer, "lat")),
                                   get_number(member(j, pointer, "lon"), at(pointer, "lon")), opt_str("label")};
        case model::ContentType::phone:
            only_fields(j, pointer, {"type", "digits"});
            return model::PhoneNumber{str("digits")};
        case model::ContentType::email:
            only_fields(j, pointer, {"type", "address"});
            return model::Email{str("address")};
        case model::ContentType::web_link:
            only_fields(j, pointer, {"type", "url", "label"});
            return model::WebLink{str("url"), opt_str("label")};
    }
    syntax(pointer, "unreachable");
}

std::vector<model::ContentItem> items_from_json(const json& j, const std::string& pointer) {
    if (!j.is_array()) syntax(pointer, "expected an array");
    std::vector<model::ContentItem> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(item_from_json(j[i], at(pointer, i)));
    return out;
}

ojson theme_to_json(const model::Theme& t) {
    return {{"fg_color", t.fg_color},
            {"bg_color", t.bg_color},
            {"highlight_color", t.highlight_color},
            {"background_image", t.background_image ? asset_to_json(*t.background_image) : ojson(nullptr)},
            {"background_music", t.background_music ? asset_to_json(*t.background_music) : ojson(nullptr)}};
}

model::Theme theme_from_json(const json& j, const std::string& pointer, model::Theme t) {
    only_fields(j, pointer, {"fg_color", "bg_color", "highlight_color", "background_image", "background_music"});
    if (j.contains("fg_color")) t.fg_color = get_string(j["fg_color"], at(pointer, "fg_color"));
    if (j.contains("bg_color")) t.bg_color = get_string(j["bg_color"], at(pointer, "bg_color"));
    if (j.contains("highlight_color")) t.highlight_color = get_string(j["highlight_color"], at(pointer, "highlight_color"));
    if (j.contains("background_image")) t.background_image = optional_asset(j["background_image"], at(pointer, "background_image"));
    if (j.contains("background_music")) t.background_music = optional_asset(j["background_music"], at(pointer, "background_music"));
    return t;
}

ojson page_to_json(const model::PageNode& p) {
    ojson contents = ojson::array();
    for (const auto& item : p.contents) contents.push_back(item_to_json(item));
    ojson children = ojson::array();
    for (const auto& c : p.children) children.push_back(page_to_json(c));
    return {{"id", p.id.value}, {"title", p.title}, {"contents", contents}, {"children", children}};
}

model::PageNode page_from_json(const json& j, const std::string& pointer) {
    only_fields(j, pointer, {"id", "title", "contents", "children"});
    model::PageNode p;
    p.id = model::PageId{get_u32(member(j, pointer, "id"), at(pointer, "id"))};
    p.title = get_string(member(j, pointer, "title"), at(pointer, "title"));
    if (j.contains("contents")) p.contents = items_from_json(j["contents"], at(pointer, "contents"));
    if (j.contains("children")) {
        const json& kids = j["children"];
        const std::string kp = at(pointer, "children");
        if (!kids.is_array()) syntax(kp, "expected an array");
        for (std::size_t i = 0; i < kids.size(); ++i) p.children.push_back(page_from_json(kids[i], at(kp, i)));
    }
    return p;
}

ojson project_to_ojson(const model::Project& p) {
    ojson roots = ojson::array();
    for (const auto& r : p.root_pages) roots.push_back(page_to_json(r));
    return {{"app_id", p.app_id},   {"version", p.version},   {"title", p.title},      {"languages", p.languages},
            {"category", p.category}, {"theme", theme_to_json(p.theme)}, {"root_pages", roots}};
}

ojson report_to_ojson(const model::ValidationReport& r) {
    const auto issues = [](const std::vector<model::ValidationIssue>& list) {
        ojson arr = ojson::array();
        for (const auto& i : list) {
            arr.push_back({{"code", std::string(model::to_string(i.code))},
                           {"page_id", i.page_id ? ojson(i.page_id->value) : ojson(nullptr)},
                           {"detail", i.detail}});
        }
        return arr;
    };
    return {{"ok", r.ok()}, {"errors", issues(r.errors)}, {"warnings", issues(r.warnings)}};
}

} // namespace detail

using namespace detail;

std::string project_to_json(const model::Project& project) { return project_to_ojson(project).dump(2) + "\n"; }

model::Project project_from_json(std::string_view text, const std::filesystem::path& asset_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t upto = std::min<std::size_t>(e.byte ? e.byte - 1 : 0, text.size());
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < upto; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw StudioError(StudioErrc::ManifestSyntax,
                          "line " + std::to_string(line) + ", column " + std::to_string(col) + ": invalid JSON");
    }
    only_fields(j, "", {"app_id", "version", "title", "languages", "category", "theme", "root_pages"});
    model::Project p;
    p.app_id = get_string(member(j, "", "app_id"), "/app_id");
    p.version = get_u32(member(j, "", "version"), "/version");
    p.title = get_string(member(j, "", "title"), "/title");
    p.languages = strings_from_json(member(j, "", "languages"), "/languages");
    p.category = get_string(member(j, "", "category"), "/category");
    if (j.contains("theme")) p.theme = theme_from_json(j["theme"], "/theme");
    const json& roots = member(j, "", "root_pages");
    if (!roots.is_array()) syntax("/root_pages", "expected an array");
    for (std::size_t i = 0; i < roots.size(); ++i) p.root_pages.push_back(page_from_json(roots[i], "/root_pages/" + std::to_string(i)));
    p.asset_dir = asset_dir;
    return p;
}

model::Project load_project(const std::filesystem::path& dir) {
    const auto bytes = fs::read_file(dir / kManifestName);
    if (!bytes) throw StudioError(StudioErrc::IoError, "cannot read " + (dir / kManifestName).string());
    return project_from_json(as_string(*bytes), dir / kAssetsDir);
}

void save_project(const model::Project& project, const std::filesystem::path& dir) {
    try {
        fs::write_file_atomic(dir / kManifestName, as_bytes(project_to_json(project)));
    } catch (const std::filesystem::filesystem_error& e) {
        throw StudioError(StudioErrc::IoError, e.what());
    }
}

std::optional<text::GlyphSheet> load_glyphs(const std::filesystem::path& file) {
    const auto bytes = fs::read_file(file);
    if (!bytes) {
        std::error_code ec;
        if (std::filesystem::exists(file, ec)) throw StudioError(StudioErrc::IoError, "cannot read " + file.string());
        return std::nullopt;
    }
    return text::build_atlas(as_string(*bytes));
}

Bytes compile_dir(const std::filesystem::path& dir, const std::optional<std::filesystem::path>& glyphs) {
    const model::Project p = load_project(dir);
    std::optional<text::GlyphSheet> atlas;
    if (glyphs) {
        atlas = load_glyphs(*glyphs);
        if (!atlas) throw StudioError(StudioErrc::IoError, "cannot read " + glyphs->string());
    } else {
        atlas = load_glyphs(dir / kGlyphsName);
    }
    return bundle::compile(p, atlas);
}

std::string report_to_json(const model::ValidationReport& report) { return report_to_ojson(report).dump(2) + "\n"; }

model::Project scaffold_project(std::string app_id) {
    model::Project p;
    p.app_id = std::move(app_id);
    p.version = 1;
    p.title = "New application";
    p.languages = {"en", "fa"};
    p.category = "general";
    model::PageNode home;
    home.id = model::PageId{1};
    home.title = "Home";
    home.contents.push_back(model::Text{"Welcome"});
    p.root_pages.push_back(home);
    return p;
}

} // namespace mcms::studio
