#include "mcms/content_model.hpp"

#include "mcms/utf8.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <set>
#include <system_error>

namespace mcms::model {

namespace {

constexpr std::size_t kMaxShortField = 0xFFFF;
constexpr std::size_t kMaxItems = 0xFFFF;

bool is_lower_alnum_hyphen(std::string_view s, std::size_t max_len) {
    if (s.empty() || s.size() > max_len) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
    });
}

bool is_language_tag(std::string_view s) {
    // primary subtag of 2-8 letters, then any number of 1-8 alphanumeric subtags
    std::size_t start = 0;
    bool first = true;
    while (true) {
        const std::size_t dash = s.find('-', start);
        const std::string_view part = s.substr(start, dash == std::string_view::npos ? s.npos : dash - start);
        const std::size_t min_len = first ? 2 : 1;
        if (part.size() < min_len || part.size() > 8) return false;
        for (char c : part) {
            const bool alpha = std::isalpha(static_cast<unsigned char>(c)) != 0;
            const bool digit = std::isdigit(static_cast<unsigned char>(c)) != 0;
            if (first ? !alpha : !(alpha || digit)) return false;
        }
        if (dash == std::string_view::npos) return true;
        start = dash + 1;
        first = false;
    }
}

bool is_color(std::string_view s) {
    return s.size() == 7 && s[0] == '#' &&
           std::all_of(s.begin() + 1, s.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; });
}

bool is_phone(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    return s.size() >= 3 && s.size() <= 15 &&
           std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool has_space(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; });
}

bool is_email(std::string_view s) {
    const auto at = s.find('@');
    return at != std::string_view::npos && s.find('@', at + 1) == std::string_view::npos && at > 0 &&
           at + 1 < s.size() && !has_space(s);
}

bool is_web_url(std::string_view s) {
    const auto lower_prefix = [&](std::string_view prefix) {
        if (s.size() <= prefix.size()) return false;
        for (std::size_t i = 0; i < prefix.size(); ++i) {
            if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
        }
        return true;
    };
    return (lower_prefix("http://") || lower_prefix("https://")) && !has_space(s);
}

bool is_mime(std::string_view s) {
    const auto slash = s.find('/');
    return s.size() <= 255 && slash != std::string_view::npos && slash > 0 && slash + 1 < s.size() &&
           s.find('/', slash + 1) == std::string_view::npos && !has_space(s);
}

class Validator {
public:
    Validator(const Project& project, bool full) : project_(project), full_(full) {}

    ValidationReport run() {
        if (full_) check_meta();
        if (project_.root_pages.empty()) error(ValidationCode::NoPages, std::nullopt, "project has no root pages");
        for (const auto& page : project_.root_pages) visit(page, 1);
        return std::move(report_);
    }

private:
    void error(ValidationCode code, std::optional<PageId> page, std::string detail) {
        report_.errors.push_back({code, page, std::move(detail)});
    }

    void check_meta() {
        if (!is_lower_alnum_hyphen(project_.app_id, 64)) error(ValidationCode::InvalidAppId, std::nullopt, project_.app_id);
        if (project_.version == 0) error(ValidationCode::InvalidVersion, std::nullopt, "version must be positive");
        if (!utf8::is_valid(project_.title)) error(ValidationCode::InvalidUtf8, std::nullopt, "title");
        if (project_.title.size() > kMaxShortField) error(ValidationCode::InvalidTitle, std::nullopt, "title too long");
        if (project_.languages.empty()) error(ValidationCode::NoLanguages, std::nullopt, "at least one language required");
        for (const auto& lang : project_.languages) {
            if (!is_language_tag(lang)) error(ValidationCode::InvalidLanguage, std::nullopt, lang);
        }
        if (!is_lower_alnum_hyphen(project_.category, 64)) {
            error(ValidationCode::InvalidCategory, std::nullopt, project_.category);
        }
        const Theme& t = project_.theme;
        for (const auto* color : {&t.fg_color, &t.bg_color, &t.highlight_color}) {
            if (!is_color(*color)) error(ValidationCode::InvalidColor, std::nullopt, *color);
        }
        if (t.background_image) check_asset(*t.background_image, std::nullopt);
        if (t.background_music) check_asset(*t.background_music, std::nullopt);
    }

    void check_text(std::string_view s, PageId page, std::string_view field, std::size_t max_bytes) {
        if (!utf8::is_valid(s)) {
            error(ValidationCode::InvalidUtf8, page, std::string(field));
        } else if (s.size() > max_bytes) {
            error(ValidationCode::FieldTooLong, page, std::string(field));
        }
    }

    void check_asset(const AssetRef& ref, std::optional<PageId> page) {
        const std::filesystem::path rel(ref.relative_path);
        bool traversal = ref.relative_path.empty() || rel.is_absolute() || rel.has_root_path() ||
                         ref.relative_path.find('\\') != std::string::npos || !utf8::is_valid(ref.relative_path);
        for (const auto& part : rel) {
            if (part == "..") traversal = true;
        }
        if (traversal) {
            error(ValidationCode::InvalidAssetPath, page, ref.relative_path);
            return;
        }
        if (!is_mime(ref.mime)) error(ValidationCode::InvalidMime, page, ref.mime);
        std::error_code ec;
        const auto full = project_.asset_dir / rel;
        if (!std::filesystem::is_regular_file(full, ec)) {
            error(ValidationCode::MissingAsset, page, ref.relative_path);
            return;
        }
        // symlinks must not lead outside the asset directory
        const auto root = std::filesystem::weakly_canonical(project_.asset_dir, ec);
        const auto resolved = std::filesystem::weakly_canonical(full, ec);
        const auto [r_end, _] = std::mismatch(root.begin(), root.end(), resolved.begin(), resolved.end());
        if (ec || r_end != root.end()) error(ValidationCode::InvalidAssetPath, page, ref.relative_path);
    }

    void check_item(const ContentItem& item, PageId page) {
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Text>) {
                    check_text(v.body, page, "text body", 0xFFFFFFFFu);
                } else if constexpr (std::is_same_v<T, Media>) {
                    check_text(v.caption, page, "caption", kMaxShortField);
                    if (full_) check_asset(v.asset, page);
                } else if constexpr (std::is_same_v<T, MapPoint>) {
                    if (!(v.lat >= -90.0 && v.lat <= 90.0) || !(v.lon >= -180.0 && v.lon <= 180.0)) {
                        error(ValidationCode::InvalidMapPoint, page, "coordinates out of range");
                    }
                    check_text(v.label, page, "map label", kMaxShortField);
                } else if constexpr (std::is_same_v<T, PhoneNumber>) {
                    if (!is_phone(v.digits)) error(ValidationCode::InvalidPhone, page, v.digits);
                } else if constexpr (std::is_same_v<T, Email>) {
                    if (!is_email(v.address) || v.address.size() > kMaxShortField || !utf8::is_valid(v.address)) {
                        error(ValidationCode::InvalidEmail, page, v.address);
                    }
                } else if constexpr (std::is_same_v<T, WebLink>) {
                    if (!is_web_url(v.url) || v.url.size() > kMaxShortField || !utf8::is_valid(v.url)) {
                        error(ValidationCode::InvalidUrl, page, v.url);
                    }
                    check_text(v.label, page, "link label", kMaxShortField);
                }
            },
            item);
    }

    void visit(const PageNode& page, std::size_t depth) {
        if (depth > kMaxDepth) {
            error(ValidationCode::DepthExceeded, page.id, "depth " + std::to_string(depth));
            return;
        }
        if (page.id.value == 0 || page.id.value > kMaxPageId) {
            error(ValidationCode::InvalidPageId, page.id, std::to_string(page.id.value));
        } else if (!seen_.insert(page.id.value).second) {
            error(ValidationCode::DuplicatePageId, page.id, std::to_string(page.id.value));
        }
        if (full_) {
            const std::size_t chars = utf8::length(page.title);
            if (!utf8::is_valid(page.title)) {
                error(ValidationCode::InvalidUtf8, page.id, "page title");
            } else if (chars == 0 || chars > kMaxTitleChars) {
                error(ValidationCode::InvalidPageTitle, page.id, "title must be 1-256 characters");
            }
            if (page.contents.size() > kMaxItems) {
                error(ValidationCode::TooManyItems, page.id, std::to_string(page.contents.size()));
            }
            for (const auto& item : page.contents) check_item(item, page.id);
            if (page.contents.empty() && page.children.empty()) {
                report_.warnings.push_back({ValidationCode::EmptyPage, page.id, page.title});
            }
        }
        for (const auto& child : page.children) visit(child, depth + 1);
    }

    const Project& project_;
    bool full_;
    std::set<std::uint32_t> seen_;
    ValidationReport report_;
};

// Mutable lookup helpers operate on a private copy.

std::vector<PageNode>* siblings_of(Project& p, ParentRef parent);

PageNode* find_mut(std::vector<PageNode>& pages, PageId id) {
    for (auto& page : pages) {
        if (page.id == id) return &page;
        if (auto* hit = find_mut(page.children, id)) return hit;
    }
    return nullptr;
}

std::vector<PageNode>* siblings_of(Project& p, ParentRef parent) {
    if (!parent) return &p.root_pages;
    PageNode* node = find_mut(p.root_pages, *parent);
    return node ? &node->children : nullptr;
}

bool locate_in(const std::vector<PageNode>& pages, ParentRef parent, PageId id, PageLocation& out) {
    for (std::size_t i = 0; i < pages.size(); ++i) {
        if (pages[i].id == id) {
            out = {parent, i};
            return true;
        }
        if (locate_in(pages[i].children, pages[i].id, id, out)) return true;
    }
    return false;
}

bool subtree_contains(const PageNode& node, PageId id) {
    if (node.id == id) return true;
    return std::any_of(node.children.begin(), node.children.end(),
                       [&](const PageNode& c) { return subtree_contains(c, id); });
}

void flatten_into(const std::vector<PageNode>& pages, ParentRef parent, std::vector<FlatPage>& out) {
    for (const auto& page : pages) {
        out.push_back({&page, parent, out.size()});
        flatten_into(page.children, page.id, out);
    }
}

} // namespace

std::string_view to_string(ValidationCode code) {
    switch (code) {
        case ValidationCode::NoPages: return "NoPages";
        case ValidationCode::InvalidAppId: return "InvalidAppId";
        case ValidationCode::InvalidVersion: return "InvalidVersion";
        case ValidationCode::InvalidTitle: return "InvalidTitle";
        case ValidationCode::NoLanguages: return "NoLanguages";
        case ValidationCode::InvalidLanguage: return "InvalidLanguage";
        case ValidationCode::InvalidCategory: return "InvalidCategory";
        case ValidationCode::InvalidColor: return "InvalidColor";
        case ValidationCode::InvalidPageId: return "InvalidPageId";
        case ValidationCode::DuplicatePageId: return "DuplicatePageId";
        case ValidationCode::InvalidPageTitle: return "InvalidPageTitle";
        case ValidationCode::DepthExceeded: return "DepthExceeded";
        case ValidationCode::TooManyItems: return "TooManyItems";
        case ValidationCode::InvalidAssetPath: return "InvalidAssetPath";
        case ValidationCode::InvalidMime: return "InvalidMime";
        case ValidationCode::MissingAsset: return "MissingAsset";
        case ValidationCode::InvalidMapPoint: return "InvalidMapPoint";
        case ValidationCode::InvalidPhone: return "InvalidPhone";
        case ValidationCode::InvalidEmail: return "InvalidEmail";
        case ValidationCode::InvalidUrl: return "InvalidUrl";
        case ValidationCode::InvalidUtf8: return "InvalidUtf8";
        case ValidationCode::FieldTooLong: return "FieldTooLong";
        case ValidationCode::EmptyPage: return "EmptyPage";
    }
    return "Unknown";
}

std::string_view to_string(ModelErrc code) {
    switch (code) {
        case ModelErrc::UnknownParent: return "UnknownParent";
        case ModelErrc::UnknownPage: return "UnknownPage";
        case ModelErrc::PositionOutOfRange: return "PositionOutOfRange";
        case ModelErrc::CycleWouldForm: return "CycleWouldForm";
        case ModelErrc::IndexOutOfRange: return "IndexOutOfRange";
        case ModelErrc::InvalidProject: return "InvalidProject";
        case ModelErrc::LastRootPage: return "LastRootPage";
    }
    return "Unknown";
}

bool ValidationReport::has_error(ValidationCode code) const {
    return std::any_of(errors.begin(), errors.end(), [&](const ValidationIssue& i) { return i.code == code; });
}

ContentType content_type(const ContentItem& item) {
    return std::visit(
        [](const auto& v) -> ContentType {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Text>) return ContentType::text;
            else if constexpr (std::is_same_v<T, Media>) return media_type(v.kind);
            else if constexpr (std::is_same_v<T, MapPoint>) return ContentType::map_point;
            else if constexpr (std::is_same_v<T, PhoneNumber>) return ContentType::phone;
            else if constexpr (std::is_same_v<T, Email>) return ContentType::email;
            else return ContentType::web_link;
        },
        item);
}

std::string_view type_tag(ContentType t) {
    switch (t) {
        case ContentType::text: return "text";
        case ContentType::image: return "image";
        case ContentType::audio: return "audio";
        case ContentType::video: return "video";
        case ContentType::animation: return "animation";
        case ContentType::map_point: return "map_point";
        case ContentType::phone: return "phone";
        case ContentType::email: return "email";
        case ContentType::web_link: return "web_link";
    }
    return "unknown";
}

std::optional<ContentType> type_from_tag(std::string_view tag) {
    for (std::uint8_t code = 1; code <= 9; ++code) {
        const auto t = static_cast<ContentType>(code);
        if (type_tag(t) == tag) return t;
    }
    return std::nullopt;
}

MediaKind media_kind(ContentType t) {
    switch (t) {
        case ContentType::audio: return MediaKind::audio;
        case ContentType::video: return MediaKind::video;
        case ContentType::animation: return MediaKind::animation;
        default: return MediaKind::image;
    }
}

ContentType media_type(MediaKind k) {
    switch (k) {
        case MediaKind::image: return ContentType::image;
        case MediaKind::audio: return ContentType::audio;
        case MediaKind::video: return ContentType::video;
        case MediaKind::animation: return ContentType::animation;
    }
    return ContentType::image;
}

ValidationReport validate_project(const Project& project) { return Validator(project, true).run(); }

ValidationReport validate_structure(const Project& project) { return Validator(project, false).run(); }

namespace {

void collect_max(const std::vector<PageNode>& pages, std::uint32_t& best) {
    for (const auto& p : pages) {
        best = std::max(best, p.id.value);
        collect_max(p.children, best);
    }
}

std::size_t count_pages(const std::vector<PageNode>& pages) {
    std::size_t n = pages.size();
    for (const auto& p : pages) n += count_pages(p.children);
    return n;
}

} // namespace

PageId max_page_id(const Project& project) {
    std::uint32_t best = 0;
    collect_max(project.root_pages, best);
    return PageId{best};
}

std::size_t page_count(const Project& project) { return count_pages(project.root_pages); }

AddedPage add_page(const Project& project, ParentRef parent, std::string title, std::size_t position) {
    Project out = project;
    auto* siblings = siblings_of(out, parent);
    if (!siblings) throw ModelError(ModelErrc::UnknownParent, std::to_string(parent->value));
    if (position > siblings->size()) {
        throw ModelError(ModelErrc::PositionOutOfRange,
                         std::to_string(position) + " > " + std::to_string(siblings->size()));
    }
    const std::uint32_t max_id = max_page_id(project).value;
    if (max_id >= kMaxPageId) throw ModelError(ModelErrc::InvalidProject, "page id space exhausted");
    const PageId id{max_id + 1};
    PageNode node;
    node.id = id;
    node.title = std::move(title);
    siblings->insert(siblings->begin() + static_cast<std::ptrdiff_t>(position), std::move(node));
    return {std::move(out), id};
}

Project move_page(const Project& project, PageId page, ParentRef new_parent, std::size_t position) {
    const auto loc = locate_page(project, page);
    if (!loc) throw ModelError(ModelErrc::UnknownPage, std::to_string(page.value));
    if (new_parent) {
        const PageNode* target = find_page(project, *new_parent);
        if (!target) throw ModelError(ModelErrc::UnknownPage, std::to_string(new_parent->value));
        if (subtree_contains(*find_page(project, page), *new_parent)) {
            throw ModelError(ModelErrc::CycleWouldForm,
                             std::to_string(new_parent->value) + " is within subtree of " + std::to_string(page.value));
        }
    }
    Project out = project;
    auto* from = siblings_of(out, loc->parent);
    PageNode node = std::move((*from)[loc->index]);
    from->erase(from->begin() + static_cast<std::ptrdiff_t>(loc->index));
    auto* to = siblings_of(out, new_parent);
    if (position > to->size()) {
        throw ModelError(ModelErrc::PositionOutOfRange, std::to_string(position) + " > " + std::to_string(to->size()));
    }
    to->insert(to->begin() + static_cast<std::ptrdiff_t>(position), std::move(node));
    return out;
}

Project delete_page(const Project& project, PageId page) {
    const auto loc = locate_page(project, page);
    if (!loc) throw ModelError(ModelErrc::UnknownPage, std::to_string(page.value));
    if (!loc->parent && project.root_pages.size() == 1) {
        throw ModelError(ModelErrc::LastRootPage, "cannot delete the last root page");
    }
    Project out = project;
    auto* siblings = siblings_of(out, loc->parent);
    siblings->erase(siblings->begin() + static_cast<std::ptrdiff_t>(loc->index));
    return out;
}

Project rename_page(const Project& project, PageId page, std::string title) {
    Project out = project;
    PageNode* node = find_mut(out.root_pages, page);
    if (!node) throw ModelError(ModelErrc::UnknownPage, std::to_string(page.value));
    node->title = std::move(title);
    return out;
}

Project set_page_contents(const Project& project, PageId page, std::vector<ContentItem> contents) {
    Project out = project;
    PageNode* node = find_mut(out.root_pages, page);
    if (!node) throw ModelError(ModelErrc::UnknownPage, std::to_string(page.value));
    node->contents = std::move(contents);
    return out;
}

PageNode reorder_content(const PageNode& page, std::size_t from, std::size_t to) {
    const std::size_t n = page.contents.size();
    if (from >= n || to >= n) {
        throw ModelError(ModelErrc::IndexOutOfRange,
                         "from=" + std::to_string(from) + " to=" + std::to_string(to) + " size=" + std::to_string(n));
    }
    PageNode out = page;
    auto& c = out.contents;
    const auto first = c.begin();
    if (from < to) {
        std::rotate(first + static_cast<std::ptrdiff_t>(from), first + static_cast<std::ptrdiff_t>(from) + 1,
                    first + static_cast<std::ptrdiff_t>(to) + 1);
    } else if (from > to) {
        std::rotate(first + static_cast<std::ptrdiff_t>(to), first + static_cast<std::ptrdiff_t>(from),
                    first + static_cast<std::ptrdiff_t>(from) + 1);
    }
    return out;
}

Project reorder_content(const Project& project, PageId page, std::size_t from, std::size_t to) {
    Project out = project;
    PageNode* node = find_mut(out.root_pages, page);
    if (!node) throw ModelError(ModelErrc::UnknownPage, std::to_string(page.value));
    *node = reorder_content(*node, from, to);
    return out;
}

const PageNode* find_page(const Project& project, PageId id) {
    const std::function<const PageNode*(const std::vector<PageNode>&)> walk =
        [&](const std::vector<PageNode>& pages) -> const PageNode* {
        for (const auto& p : pages) {
            if (p.id == id) return &p;
            if (const auto* hit = walk(p.children)) return hit;
        }
        return nullptr;
    };
    return walk(project.root_pages);
}

std::optional<PageLocation> locate_page(const Project& project, PageId id) {
    PageLocation loc;
    if (locate_in(project.root_pages, std::nullopt, id, loc)) return loc;
    return std::nullopt;
}

std::vector<FlatPage> flatten_pages(const Project& project) {
    const auto report = validate_structure(project);
    if (!report.ok()) {
        const auto& e = report.errors.front();
        throw ModelError(ModelErrc::InvalidProject, std::string(to_string(e.code)) + ": " + e.detail);
    }
    std::vector<FlatPage> out;
    out.reserve(page_count(project));
    flatten_into(project.root_pages, std::nullopt, out);
    return out;
}

std::vector<const AssetRef*> asset_refs(const Project& project) {
    std::vector<const AssetRef*> out;
    if (project.theme.background_image) out.push_back(&*project.theme.background_image);
    if (project.theme.background_music) out.push_back(&*project.theme.background_music);
    const std::function<void(const std::vector<PageNode>&)> walk = [&](const std::vector<PageNode>& pages) {
        for (const auto& p : pages) {
            for (const auto& item : p.contents) {
                if (const auto* m = std::get_if<Media>(&item)) out.push_back(&m->asset);
            }
            walk(p.children);
        }
    };
    walk(project.root_pages);
    return out;
}

} // namespace mcms::model
