#include "mcms/bundle_codec.hpp"

#include "byte_io.hpp"
#include "mcms/utf8.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <set>

namespace mcms::bundle {

using detail::Reader;
using detail::Writer;
using nlohmann::json;

std::string_view section_name(SectionId id) {
    switch (id) {
        case SectionId::meta: return "META";
        case SectionId::pages: return "PAGES";
        case SectionId::assets: return "ASSETS";
        case SectionId::index: return "INDEX";
        case SectionId::font: return "FONT";
    }
    return "UNKNOWN";
}

std::string_view to_string(BundleErrc code) {
    switch (code) {
        case BundleErrc::InvalidProject: return "InvalidProject";
        case BundleErrc::AssetReadFailure: return "AssetReadFailure";
        case BundleErrc::BundleTooLarge: return "BundleTooLarge";
        case BundleErrc::BadMagic: return "BadMagic";
        case BundleErrc::UnsupportedVersion: return "UnsupportedVersion";
        case BundleErrc::ChecksumMismatch: return "ChecksumMismatch";
        case BundleErrc::TruncatedSection: return "TruncatedSection";
        case BundleErrc::MalformedSection: return "MalformedSection";
        case BundleErrc::EmptyQuery: return "EmptyQuery";
    }
    return "Unknown";
}

model::ContentType item_type(const BundleItem& item) {
    return std::visit(
        [](const auto& v) -> model::ContentType {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, model::Text>) return model::ContentType::text;
            else if constexpr (std::is_same_v<T, MediaItem>) return model::media_type(v.kind);
            else if constexpr (std::is_same_v<T, model::MapPoint>) return model::ContentType::map_point;
            else if constexpr (std::is_same_v<T, model::PhoneNumber>) return model::ContentType::phone;
            else if constexpr (std::is_same_v<T, model::Email>) return model::ContentType::email;
            else return model::ContentType::web_link;
        },
        item);
}

const IndexTerm* InvertedIndex::find(std::string_view term) const {
    const auto it = std::lower_bound(terms.begin(), terms.end(), term,
                                     [](const IndexTerm& t, std::string_view key) { return t.term < key; });
    return it != terms.end() && it->term == term ? &*it : nullptr;
}

std::vector<std::string_view> searchable_fields(const BundlePage& page) {
    std::vector<std::string_view> out{page.title};
    for (const auto& item : page.items) {
        if (const auto* t = std::get_if<model::Text>(&item)) out.push_back(t->body);
        else if (const auto* m = std::get_if<MediaItem>(&item)) out.push_back(m->caption);
        else if (const auto* p = std::get_if<model::MapPoint>(&item)) out.push_back(p->label);
        else if (const auto* w = std::get_if<model::WebLink>(&item)) out.push_back(w->label);
    }
    return out;
}

// -- model building ----------------------------------------------------------

namespace {

Bytes read_file(const std::filesystem::path& path, const std::string& display) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw BundleError(BundleErrc::AssetReadFailure, display);
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw BundleError(BundleErrc::AssetReadFailure, display);
    return data;
}

InvertedIndex build_index(const std::vector<BundlePage>& pages) {
    std::map<std::string, std::map<std::uint32_t, std::uint32_t>> postings;
    for (const auto& page : pages) {
        for (std::string_view field : searchable_fields(page)) {
            for (auto& term : text::tokenize(field)) ++postings[std::move(term)][page.id.value];
        }
    }
    InvertedIndex index;
    index.terms.reserve(postings.size());
    for (auto& [term, per_page] : postings) {
        IndexTerm t{term, {}};
        t.postings.reserve(per_page.size());
        for (const auto& [id, tf] : per_page) t.postings.push_back({model::PageId{id}, tf});
        index.terms.push_back(std::move(t));
    }
    return index;
}

} // namespace

Bundle build_bundle(const model::Project& project, const std::optional<text::GlyphSheet>& atlas) {
    // Dedupe by digest; the first reference in canonical order decides the mime.
    std::map<std::string, Digest> digest_of_path;
    std::map<Digest, BundleAsset> by_digest;
    for (const model::AssetRef* ref : model::asset_refs(project)) {
        if (digest_of_path.count(ref->relative_path)) continue;
        Bytes blob = read_file(project.asset_dir / ref->relative_path, ref->relative_path);
        const Digest d = sha256(blob);
        digest_of_path.emplace(ref->relative_path, d);
        by_digest.try_emplace(d, BundleAsset{d, ref->mime, std::move(blob)});
    }

    Bundle b;
    for (auto& [d, asset] : by_digest) b.assets.push_back(std::move(asset));
    std::map<Digest, std::uint32_t> index_of;
    for (std::uint32_t i = 0; i < b.assets.size(); ++i) index_of.emplace(b.assets[i].digest, i);
    const auto digest_for = [&](const model::AssetRef& ref) { return digest_of_path.at(ref.relative_path); };

    const model::Theme& theme = project.theme;
    b.meta = {project.app_id, project.version, project.title, project.languages, project.category,
              ThemeMeta{theme.fg_color, theme.bg_color, theme.highlight_color,
                        theme.background_image ? std::optional(digest_for(*theme.background_image)) : std::nullopt,
                        theme.background_music ? std::optional(digest_for(*theme.background_music)) : std::nullopt}};

    for (const auto& flat : model::flatten_pages(project)) {
        BundlePage page{flat.page->id, flat.parent, flat.page->title, {}};
        page.items.reserve(flat.page->contents.size());
        for (const auto& item : flat.page->contents) {
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, model::Media>) {
                        page.items.emplace_back(MediaItem{v.kind, index_of.at(digest_for(v.asset)), v.caption});
                    } else {
                        page.items.emplace_back(v);
                    }
                },
                item);
        }
        b.pages.push_back(std::move(page));
    }
    b.index = build_index(b.pages);
    b.atlas = atlas;
    return b;
}

// -- encoding ----------------------------------------------------------------

namespace {

json meta_json(const BundleMeta& m) {
    json theme = {{"fg_color", m.theme.fg_color}, {"bg_color", m.theme.bg_color}, {"highlight_color", m.theme.highlight_color}};
    if (m.theme.background_image) theme["background_image"] = m.theme.background_image->hex();
    if (m.theme.background_music) theme["background_music"] = m.theme.background_music->hex();
    return {{"app_id", m.app_id}, {"version", m.version},   {"title", m.title},
            {"languages", m.languages}, {"category", m.category}, {"theme", theme}};
}

Bytes encode_meta(const BundleMeta& m) { return to_bytes(meta_json(m).dump()); }

Bytes encode_pages(const std::vector<BundlePage>& pages) {
    Writer w;
    w.u32(static_cast<std::uint32_t>(pages.size()));
    for (const auto& page : pages) {
        w.u32(page.id.value);
        w.u32(page.parent ? page.parent->value : kRootParent);
        w.str16(page.title);
        w.u16(static_cast<std::uint16_t>(page.items.size()));
        for (const auto& item : page.items) {
            w.u8(static_cast<std::uint8_t>(item_type(item)));
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, model::Text>) {
                        w.str32(v.body);
                    } else if constexpr (std::is_same_v<T, MediaItem>) {
                        w.u32(v.asset_index);
                        w.str16(v.caption);
                    } else if constexpr (std::is_same_v<T, model::MapPoint>) {
                        w.f64(v.lat);
                        w.f64(v.lon);
                        w.str16(v.label);
                    } else if constexpr (std::is_same_v<T, model::PhoneNumber>) {
                        w.str16(v.digits);
                    } else if constexpr (std::is_same_v<T, model::Email>) {
                        w.str16(v.address);
                    } else {
                        w.str16(v.url);
                        w.str16(v.label);
                    }
                },
                item);
        }
    }
    return std::move(w.bytes());
}

Bytes encode_assets(const std::vector<BundleAsset>& assets) {
    Writer w;
    w.u32(static_cast<std::uint32_t>(assets.size()));
    for (const auto& a : assets) {
        w.raw(ByteView(a.digest.bytes));
        w.str16(a.mime);
        w.u64(a.blob.size());
        w.raw(a.blob);
    }
    return std::move(w.bytes());
}

Bytes encode_index(const InvertedIndex& index) {
    Writer w;
    w.u32(static_cast<std::uint32_t>(index.terms.size()));
    for (const auto& t : index.terms) {
        w.str16(t.term);
        w.u32(static_cast<std::uint32_t>(t.postings.size()));
        for (const auto& p : t.postings) {
            w.u32(p.page.value);
            w.u32(p.tf);
        }
    }
    return std::move(w.bytes());
}

Bytes encode_font(const text::GlyphSheet& sheet) {
    Writer w;
    w.u16(sheet.line_height);
    w.u32(static_cast<std::uint32_t>(sheet.joining.size()));
    for (const auto& [cp, cls] : sheet.joining) {
        w.u32(static_cast<std::uint32_t>(cp));
        w.u8(static_cast<std::uint8_t>(cls));
    }
    w.u32(static_cast<std::uint32_t>(sheet.glyphs.size()));
    for (const auto& g : sheet.glyphs) {
        w.u32(static_cast<std::uint32_t>(g.codepoint));
        w.u8(static_cast<std::uint8_t>(g.form));
        w.u8(g.width);
        w.u8(g.height);
        w.u8(g.advance);
        w.i8(g.bearing);
        w.raw(g.bitmap);
    }
    return std::move(w.bytes());
}

constexpr std::size_t kFixedHeader = 4 + 2 + 2 + 2;
constexpr std::size_t kTableEntry = 1 + 8 + 8;

} // namespace

Bytes encode(const Bundle& bundle) {
    std::vector<std::pair<SectionId, Bytes>> sections;
    sections.emplace_back(SectionId::meta, encode_meta(bundle.meta));
    sections.emplace_back(SectionId::pages, encode_pages(bundle.pages));
    sections.emplace_back(SectionId::assets, encode_assets(bundle.assets));
    sections.emplace_back(SectionId::index, encode_index(bundle.index));
    if (bundle.atlas) sections.emplace_back(SectionId::font, encode_font(*bundle.atlas));

    const std::size_t header = kFixedHeader + kTableEntry * sections.size();
    std::uint64_t total = header + 4;
    for (const auto& [id, body] : sections) total += body.size();
    if (total > 0xFFFFFFFFull) throw BundleError(BundleErrc::BundleTooLarge, std::to_string(total) + " bytes");

    Writer w;
    w.raw(ByteView(kMagic));
    w.u16(kFormatVersion);
    w.u16(static_cast<std::uint16_t>((bundle.atlas ? 0x1 : 0x0) | 0x2));
    w.u16(static_cast<std::uint16_t>(sections.size()));
    std::uint64_t offset = header;
    for (const auto& [id, body] : sections) {
        w.u8(static_cast<std::uint8_t>(id));
        w.u64(offset);
        w.u64(body.size());
        offset += body.size();
    }
    for (const auto& [id, body] : sections) w.raw(body);
    w.u32(crc32c(w.bytes()));
    return std::move(w.bytes());
}

Bytes compile(const model::Project& project, const std::optional<text::GlyphSheet>& atlas) {
    const auto report = model::validate_project(project);
    if (!report.ok()) {
        const auto& e = report.errors.front();
        throw BundleError(BundleErrc::InvalidProject, std::string(model::to_string(e.code)) + ": " + e.detail);
    }
    if (atlas) {
        try {
            text::check_sheet(*atlas);
        } catch (const text::TextError& e) {
            throw BundleError(BundleErrc::InvalidProject, std::string("atlas: ") + e.what());
        }
    }
    return encode(build_bundle(project, atlas));
}

// -- parsing -----------------------------------------------------------------

namespace {

std::string checked_utf8(Reader& r, std::string s) {
    if (!utf8::is_valid(s)) r.fail("invalid UTF-8 string");
    return s;
}

BundleMeta parse_meta(ByteView body) {
    Reader r(body, SectionId::meta);
    const std::string text = as_string(body);
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) r.fail("not a JSON object");
    BundleMeta m;
    try {
        const std::set<std::string> keys{"app_id", "version", "title", "languages", "category", "theme"};
        for (const auto& [k, v] : j.items()) {
            if (!keys.count(k)) r.fail("unknown field " + k);
        }
        m.app_id = j.at("app_id").get<std::string>();
        m.version = j.at("version").get<std::uint32_t>();
        m.title = j.at("title").get<std::string>();
        m.languages = j.at("languages").get<std::vector<std::string>>();
        m.category = j.at("category").get<std::string>();
        const json& t = j.at("theme");
        const std::set<std::string> theme_keys{"fg_color", "bg_color", "highlight_color", "background_image",
                                               "background_music"};
        for (const auto& [k, v] : t.items()) {
            if (!theme_keys.count(k)) r.fail("unknown theme field " + k);
        }
        m.theme.fg_color = t.at("fg_color").get<std::string>();
        m.theme.bg_color = t.at("bg_color").get<std::string>();
        m.theme.highlight_color = t.at("highlight_color").get<std::string>();
        for (auto [key, slot] : {std::pair{"background_image", &m.theme.background_image},
                                 std::pair{"background_music", &m.theme.background_music}}) {
            if (!t.contains(key)) continue;
            const auto d = Digest::from_hex(t.at(key).get<std::string>());
            if (!d) r.fail(std::string("bad digest in ") + key);
            *slot = *d;
        }
    } catch (const json::exception& e) {
        r.fail(e.what());
    }
    // canonical form only, so that re-encoding is byte-identical
    if (encode_meta(m) != Bytes(body.begin(), body.end())) r.fail("META is not in canonical form");
    return m;
}

std::vector<BundlePage> parse_pages(ByteView body, std::size_t asset_count) {
    Reader r(body, SectionId::pages);
    const std::uint32_t count = r.u32();
    std::vector<BundlePage> pages;
    pages.reserve(std::min<std::size_t>(count, r.remaining() / 12));
    std::set<std::uint32_t> ids;
    std::vector<std::uint32_t> ancestors;  // path to the previous page, for the pre-order check
    for (std::uint32_t i = 0; i < count; ++i) {
        BundlePage page;
        const std::uint32_t id = r.u32();
        const std::uint32_t parent = r.u32();
        if (id == 0 || id == kRootParent || !ids.insert(id).second) r.fail("bad or duplicate page id " + std::to_string(id));
        if (parent == kRootParent) {
            ancestors.clear();
        } else {
            while (!ancestors.empty() && ancestors.back() != parent) ancestors.pop_back();
            if (ancestors.empty()) r.fail("page " + std::to_string(id) + " breaks pre-order");
            page.parent = model::PageId{parent};
        }
        ancestors.push_back(id);
        page.id = model::PageId{id};
        page.title = checked_utf8(r, r.str16());
        const std::uint16_t items = r.u16();
        page.items.reserve(items);
        for (std::uint16_t k = 0; k < items; ++k) {
            const std::uint8_t type = r.u8();
            switch (static_cast<model::ContentType>(type)) {
                case model::ContentType::text: page.items.emplace_back(model::Text{checked_utf8(r, r.str32())}); break;
                case model::ContentType::image:
                case model::ContentType::audio:
                case model::ContentType::video:
                case model::ContentType::animation: {
                    const std::uint32_t asset = r.u32();
                    if (asset >= asset_count) r.fail("asset index out of range");
                    page.items.emplace_back(
                        MediaItem{model::media_kind(static_cast<model::ContentType>(type)), asset, checked_utf8(r, r.str16())});
                    break;
                }
                case model::ContentType::map_point: {
                    model::MapPoint p;
                    p.lat = r.f64();
                    p.lon = r.f64();
                    if (!(p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0)) r.fail("bad coordinates");
                    p.label = checked_utf8(r, r.str16());
                    page.items.emplace_back(std::move(p));
                    break;
                }
                case model::ContentType::phone: page.items.emplace_back(model::PhoneNumber{checked_utf8(r, r.str16())}); break;
                case model::ContentType::email: page.items.emplace_back(model::Email{checked_utf8(r, r.str16())}); break;
                case model::ContentType::web_link: {
                    model::WebLink link;
                    link.url = checked_utf8(r, r.str16());
                    link.label = checked_utf8(r, r.str16());
                    page.items.emplace_back(std::move(link));
                    break;
                }
                default: r.fail("unknown item type " + std::to_string(type));
            }
        }
        pages.push_back(std::move(page));
    }
    if (!r.done()) r.fail("trailing bytes");
    return pages;
}

std::vector<BundleAsset> parse_assets(ByteView body) {
    Reader r(body, SectionId::assets);
    const std::uint32_t count = r.u32();
    std::vector<BundleAsset> assets;
    for (std::uint32_t i = 0; i < count; ++i) {
        BundleAsset a;
        const ByteView d = r.raw(32);
        std::copy(d.begin(), d.end(), a.digest.bytes.begin());
        a.mime = checked_utf8(r, r.str16());
        const std::uint64_t len = r.u64();
        const ByteView blob = r.raw(len);
        a.blob.assign(blob.begin(), blob.end());
        if (sha256(a.blob) != a.digest) r.fail("asset digest mismatch");
        if (!assets.empty() && !(assets.back().digest < a.digest)) r.fail("assets not sorted by digest");
        assets.push_back(std::move(a));
    }
    if (!r.done()) r.fail("trailing bytes");
    return assets;
}

InvertedIndex parse_index(ByteView body, const std::set<std::uint32_t>& page_ids) {
    Reader r(body, SectionId::index);
    const std::uint32_t count = r.u32();
    InvertedIndex index;
    for (std::uint32_t i = 0; i < count; ++i) {
        IndexTerm t;
        t.term = checked_utf8(r, r.str16());
        if (t.term.empty()) r.fail("empty term");
        if (!index.terms.empty() && !(index.terms.back().term < t.term)) r.fail("terms not sorted");
        const std::uint32_t postings = r.u32();
        if (postings == 0) r.fail("term without postings");
        for (std::uint32_t k = 0; k < postings; ++k) {
            Posting p{model::PageId{r.u32()}, r.u32()};
            if (p.tf == 0) r.fail("zero term frequency");
            if (!page_ids.count(p.page.value)) r.fail("posting for unknown page " + std::to_string(p.page.value));
            if (!t.postings.empty() && !(t.postings.back().page < p.page)) r.fail("postings not ascending");
            t.postings.push_back(p);
        }
        index.terms.push_back(std::move(t));
    }
    if (!r.done()) r.fail("trailing bytes");
    return index;
}

text::GlyphSheet parse_font(ByteView body) {
    Reader r(body, SectionId::font);
    text::GlyphSheet sheet;
    sheet.line_height = r.u16();
    const std::uint32_t joins = r.u32();
    for (std::uint32_t i = 0; i < joins; ++i) {
        const char32_t cp = r.u32();
        const std::uint8_t cls = r.u8();
        if (!utf8::is_scalar(cp) || cls > 2) r.fail("bad join entry");
        if (!sheet.joining.empty() && sheet.joining.rbegin()->first >= cp) r.fail("join entries not sorted");
        sheet.joining.emplace(cp, static_cast<text::JoiningClass>(cls));
    }
    const std::uint32_t glyphs = r.u32();
    for (std::uint32_t i = 0; i < glyphs; ++i) {
        text::Glyph g;
        g.codepoint = r.u32();
        const std::uint8_t form = r.u8();
        g.width = r.u8();
        g.height = r.u8();
        g.advance = r.u8();
        g.bearing = r.i8();
        if (!utf8::is_scalar(g.codepoint) || form > 3 || g.width < 1 || g.width > 32 || g.height < 1 || g.height > 32) {
            r.fail("bad glyph header");
        }
        g.form = static_cast<text::GlyphForm>(form);
        const ByteView bits = r.raw(g.row_bytes() * g.height);
        g.bitmap.assign(bits.begin(), bits.end());
        const unsigned pad = static_cast<unsigned>(g.row_bytes() * 8 - g.width);
        for (std::size_t row = 0; row < g.height; ++row) {
            if (g.bitmap[row * g.row_bytes() + g.row_bytes() - 1] & ((1u << pad) - 1u)) r.fail("nonzero padding bits");
        }
        sheet.glyphs.push_back(std::move(g));
    }
    if (!r.done()) r.fail("trailing bytes");
    try {
        text::check_sheet(sheet);
    } catch (const text::TextError& e) {
        r.fail(e.what());
    }
    return sheet;
}

struct TableEntry {
    SectionId id;
    std::uint64_t offset;
    std::uint64_t length;
};

[[noreturn]] void header_fail(const std::string& what) {
    throw BundleError(BundleErrc::MalformedSection, "header (id 0): " + what);
}

} // namespace

Bundle parse(ByteView bytes) {
    if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
        throw BundleError(BundleErrc::BadMagic, "missing AMB1 magic");
    }
    if (bytes.size() < kFixedHeader + 4) throw BundleError(BundleErrc::TruncatedSection, "file shorter than header");
    const ByteView body = bytes.first(bytes.size() - 4);
    Reader trailer(bytes.last(4), SectionId::meta);
    if (crc32c(body) != trailer.u32()) throw BundleError(BundleErrc::ChecksumMismatch, "CRC32C trailer does not match");

    Reader h(body, SectionId::meta);
    h.raw(4);
    const std::uint16_t version = h.u16();
    if (version != kFormatVersion) throw BundleError(BundleErrc::UnsupportedVersion, std::to_string(version));
    const std::uint16_t flags = h.u16();
    const std::uint16_t count = h.u16();
    if (flags & ~0x3u) header_fail("reserved flag bits set");
    if (!(flags & 0x2u)) header_fail("index flag not set");
    const bool font = flags & 0x1u;
    const std::size_t expected = font ? 5 : 4;
    if (count != expected) header_fail("section count " + std::to_string(count) + " does not match flags");
    if (h.remaining() < kTableEntry * count) throw BundleError(BundleErrc::TruncatedSection, "section table");
    std::vector<TableEntry> table;
    std::uint64_t cursor = kFixedHeader + kTableEntry * count;
    for (std::uint16_t i = 0; i < count; ++i) {
        TableEntry e{static_cast<SectionId>(h.u8()), h.u64(), h.u64()};
        if (static_cast<std::size_t>(e.id) != i + 1u) header_fail("unexpected section id " + std::to_string(static_cast<int>(e.id)));
        if (e.offset > body.size() || e.length > body.size() - e.offset) {
            throw BundleError(BundleErrc::TruncatedSection, std::string(section_name(e.id)));
        }
        if (e.offset != cursor) {
            throw BundleError(BundleErrc::MalformedSection, std::string(section_name(e.id)) + " (id " +
                                                                std::to_string(static_cast<int>(e.id)) + "): misplaced");
        }
        cursor += e.length;
        table.push_back(e);
    }
    if (cursor != body.size()) header_fail("sections do not cover the file");
    const auto section = [&](SectionId id) {
        const TableEntry& e = table[static_cast<std::size_t>(id) - 1];
        return body.subspan(static_cast<std::size_t>(e.offset), static_cast<std::size_t>(e.length));
    };

    Bundle b;
    b.meta = parse_meta(section(SectionId::meta));
    b.assets = parse_assets(section(SectionId::assets));
    b.pages = parse_pages(section(SectionId::pages), b.assets.size());
    std::set<std::uint32_t> ids;
    for (const auto& p : b.pages) ids.insert(p.id.value);
    b.index = parse_index(section(SectionId::index), ids);
    if (font) b.atlas = parse_font(section(SectionId::font));
    for (const auto* d : {&b.meta.theme.background_image, &b.meta.theme.background_music}) {
        if (*d && std::none_of(b.assets.begin(), b.assets.end(), [&](const BundleAsset& a) { return a.digest == **d; })) {
            throw BundleError(BundleErrc::MalformedSection, "META (id 1): theme asset missing from ASSETS");
        }
    }
    return b;
}

// -- search ------------------------------------------------------------------

std::vector<SearchHit> search(const Bundle& bundle, std::string_view query) {
    const auto tokens = text::tokenize(query);
    if (tokens.empty()) throw BundleError(BundleErrc::EmptyQuery, std::string(query));
    const std::set<std::string> terms(tokens.begin(), tokens.end());

    std::map<std::uint32_t, std::uint32_t> score;
    for (const auto& term : terms) {
        if (const IndexTerm* t = bundle.index.find(term)) {
            for (const auto& p : t->postings) score[p.page.value] += p.tf;
        }
    }
    std::map<std::uint32_t, std::size_t> preorder;
    for (std::size_t i = 0; i < bundle.pages.size(); ++i) preorder.emplace(bundle.pages[i].id.value, i);

    std::vector<SearchHit> hits;
    hits.reserve(score.size());
    for (const auto& [id, s] : score) hits.push_back({model::PageId{id}, s});
    std::sort(hits.begin(), hits.end(), [&](const SearchHit& a, const SearchHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return preorder.at(a.page.value) < preorder.at(b.page.value);
    });
    return hits;
}

} // namespace mcms::bundle
