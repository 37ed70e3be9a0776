#pragma once

#include "mcms/bytes.hpp"
#include "mcms/content_model.hpp"
#include "mcms/digest.hpp"
#include "mcms/error.hpp"
#include "mcms/text_kit.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mcms::bundle {

inline constexpr std::uint8_t kMagic[4] = {'A', 'M', 'B', '1'};
inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::uint32_t kRootParent = 0xFFFFFFFFu;

enum class SectionId : std::uint8_t { meta = 1, pages = 2, assets = 3, index = 4, font = 5 };
std::string_view section_name(SectionId id);

enum class BundleErrc {
    InvalidProject,
    AssetReadFailure,
    BundleTooLarge,
    BadMagic,
    UnsupportedVersion,
    ChecksumMismatch,
    TruncatedSection,
    MalformedSection,
    EmptyQuery,
};

std::string_view to_string(BundleErrc code);
using BundleError = Error<BundleErrc>;

struct ThemeMeta {
    std::string fg_color;
    std::string bg_color;
    std::string highlight_color;
    std::optional<Digest> background_image;
    std::optional<Digest> background_music;

    friend bool operator==(const ThemeMeta&, const ThemeMeta&) = default;
};

struct BundleMeta {
    std::string app_id;
    std::uint32_t version{};
    std::string title;
    std::vector<std::string> languages;
    std::string category;
    ThemeMeta theme;

    friend bool operator==(const BundleMeta&, const BundleMeta&) = default;
};

/// Asset-backed item; `asset_index` points into Bundle::assets.
struct MediaItem {
    model::MediaKind kind{model::MediaKind::image};
    std::uint32_t asset_index{};
    std::string caption;

    friend bool operator==(const MediaItem&, const MediaItem&) = default;
};

using BundleItem = std::variant<model::Text, MediaItem, model::MapPoint, model::PhoneNumber, model::Email, model::WebLink>;

model::ContentType item_type(const BundleItem& item);

struct BundlePage {
    model::PageId id;
    model::ParentRef parent;
    std::string title;
    std::vector<BundleItem> items;

    friend bool operator==(const BundlePage&, const BundlePage&) = default;
};

struct BundleAsset {
    Digest digest;
    std::string mime;
    Bytes blob;

    friend bool operator==(const BundleAsset&, const BundleAsset&) = default;
};

struct Posting {
    model::PageId page;
    std::uint32_t tf{};

    friend bool operator==(const Posting&, const Posting&) = default;
};

struct IndexTerm {
    std::string term;
    std::vector<Posting> postings;  // ascending page id

    friend bool operator==(const IndexTerm&, const IndexTerm&) = default;
};

struct InvertedIndex {
    std::vector<IndexTerm> terms;  // sorted bytewise

    [[nodiscard]] const IndexTerm* find(std::string_view term) const;

    friend bool operator==(const InvertedIndex&, const InvertedIndex&) = default;
};

struct Bundle {
    BundleMeta meta;
    std::vector<BundlePage> pages;    // pre-order
    std::vector<BundleAsset> assets;  // sorted by digest
    InvertedIndex index;
    std::optional<text::GlyphSheet> atlas;

    friend bool operator==(const Bundle&, const Bundle&) = default;
};

/// Searchable strings of one page: title, text bodies, captions, map and link labels.
std::vector<std::string_view> searchable_fields(const BundlePage& page);

/// Turns a validated project into the in-memory bundle model (assets read from disk).
Bundle build_bundle(const model::Project& project, const std::optional<text::GlyphSheet>& atlas);

/// Bit-exact serialization of a bundle model.
Bytes encode(const Bundle& bundle);

/// compile = encode(build_bundle(...)) after validation.
Bytes compile(const model::Project& project, const std::optional<text::GlyphSheet>& atlas = std::nullopt);

/// Inverse of encode. Rejects anything encode would not produce.
Bundle parse(ByteView bytes);

struct SearchHit {
    model::PageId page;
    std::uint32_t score{};

    friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

/// OR query; score is the summed term frequency of the distinct query terms.
/// Ranked by score descending, then pre-order position.
std::vector<SearchHit> search(const Bundle& bundle, std::string_view query);

/// Human-readable summary; tolerates checksum failures and truncation. Throws only BadMagic.
std::string inspect(ByteView bytes);

} // namespace mcms::bundle
