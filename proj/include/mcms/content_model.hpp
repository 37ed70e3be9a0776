#pragma once

#include "mcms/error.hpp"

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mcms::model {

/// Project-scoped page identifier. Always positive; assigned max+1 on insertion.
struct PageId {
    std::uint32_t value{};

    friend auto operator<=>(const PageId&, const PageId&) = default;
};

/// Parent reference: nullopt is the root sentinel.
using ParentRef = std::optional<PageId>;

inline constexpr std::size_t kMaxDepth = 64;
inline constexpr std::size_t kMaxTitleChars = 256;
inline constexpr std::uint32_t kMaxPageId = 0xFFFFFFFEu;

struct AssetRef {
    std::string relative_path;
    std::string mime;

    friend bool operator==(const AssetRef&, const AssetRef&) = default;
};

struct Text {
    std::string body;
    friend bool operator==(const Text&, const Text&) = default;
};

enum class MediaKind : std::uint8_t { image, audio, video, animation };

struct Media {
    MediaKind kind{MediaKind::image};
    AssetRef asset;
    std::string caption;
    friend bool operator==(const Media&, const Media&) = default;
};

struct MapPoint {
    double lat{};
    double lon{};
    std::string label;
    friend bool operator==(const MapPoint&, const MapPoint&) = default;
};

struct PhoneNumber {
    std::string digits;
    friend bool operator==(const PhoneNumber&, const PhoneNumber&) = default;
};

struct Email {
    std::string address;
    friend bool operator==(const Email&, const Email&) = default;
};

struct WebLink {
    std::string url;
    std::string label;
    friend bool operator==(const WebLink&, const WebLink&) = default;
};

using ContentItem = std::variant<Text, Media, MapPoint, PhoneNumber, Email, WebLink>;

/// Wire type codes, shared with the bundle format and the manifest "type" tags.
enum class ContentType : std::uint8_t {
    text = 1,
    image = 2,
    audio = 3,
    video = 4,
    animation = 5,
    map_point = 6,
    phone = 7,
    email = 8,
    web_link = 9,
};

ContentType content_type(const ContentItem& item);
std::string_view type_tag(ContentType t);
std::optional<ContentType> type_from_tag(std::string_view tag);
MediaKind media_kind(ContentType t);
ContentType media_type(MediaKind k);

struct Theme {
    std::string fg_color{"#000000"};
    std::string bg_color{"#FFFFFF"};
    std::string highlight_color{"#1E88E5"};
    std::optional<AssetRef> background_image;
    std::optional<AssetRef> background_music;

    friend bool operator==(const Theme&, const Theme&) = default;
};

struct PageNode {
    PageId id;
    std::string title;
    std::vector<ContentItem> contents;
    std::vector<PageNode> children;

    friend bool operator==(const PageNode&, const PageNode&) = default;
};

struct Project {
    std::string app_id;
    std::uint32_t version{1};
    std::string title;
    std::vector<std::string> languages;
    std::string category;
    Theme theme;
    std::vector<PageNode> root_pages;
    std::filesystem::path asset_dir;

    friend bool operator==(const Project&, const Project&) = default;
};

enum class ValidationCode {
    NoPages,
    InvalidAppId,
    InvalidVersion,
    InvalidTitle,
    NoLanguages,
    InvalidLanguage,
    InvalidCategory,
    InvalidColor,
    InvalidPageId,
    DuplicatePageId,
    InvalidPageTitle,
    DepthExceeded,
    TooManyItems,
    InvalidAssetPath,
    InvalidMime,
    MissingAsset,
    InvalidMapPoint,
    InvalidPhone,
    InvalidEmail,
    InvalidUrl,
    InvalidUtf8,
    FieldTooLong,
    EmptyPage,
};

std::string_view to_string(ValidationCode code);

struct ValidationIssue {
    ValidationCode code;
    std::optional<PageId> page_id;
    std::string detail;

    friend bool operator==(const ValidationIssue&, const ValidationIssue&) = default;
};

struct ValidationReport {
    std::vector<ValidationIssue> errors;
    std::vector<ValidationIssue> warnings;

    [[nodiscard]] bool ok() const noexcept { return errors.empty(); }
    [[nodiscard]] bool has_error(ValidationCode code) const;

    friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

enum class ModelErrc {
    UnknownParent,
    UnknownPage,
    PositionOutOfRange,
    CycleWouldForm,
    IndexOutOfRange,
    InvalidProject,
    LastRootPage,
};

std::string_view to_string(ModelErrc code);
using ModelError = Error<ModelErrc>;

/// Lists every violated invariant. Reads the filesystem to resolve asset references.
ValidationReport validate_project(const Project& project);

/// Structural subset of validate_project (ids, depth, at least one root); no I/O.
ValidationReport validate_structure(const Project& project);

// Edit operations return an updated copy; the input is never modified.

struct AddedPage {
    Project project;
    PageId id;
};

AddedPage add_page(const Project& project, ParentRef parent, std::string title, std::size_t position);

/// Reattaches the subtree at `page`. `position` indexes the sibling list with the page removed.
Project move_page(const Project& project, PageId page, ParentRef new_parent, std::size_t position);

/// Removes the page and its whole subtree.
Project delete_page(const Project& project, PageId page);

Project rename_page(const Project& project, PageId page, std::string title);
Project set_page_contents(const Project& project, PageId page, std::vector<ContentItem> contents);

PageNode reorder_content(const PageNode& page, std::size_t from, std::size_t to);
Project reorder_content(const Project& project, PageId page, std::size_t from, std::size_t to);

const PageNode* find_page(const Project& project, PageId id);

/// Parent of `id` and its index among siblings; nullopt when the page is absent.
struct PageLocation {
    ParentRef parent;
    std::size_t index{};
};
std::optional<PageLocation> locate_page(const Project& project, PageId id);

struct FlatPage {
    const PageNode* page;
    ParentRef parent;
    std::size_t preorder_index;
};

/// Depth-first pre-order over root_pages. Pointers alias into `project`.
/// Throws InvalidProject when validate_structure reports errors.
std::vector<FlatPage> flatten_pages(const Project& project);

std::size_t page_count(const Project& project);
PageId max_page_id(const Project& project);

/// Every asset reference in canonical order: theme image, theme music, then items in pre-order.
std::vector<const AssetRef*> asset_refs(const Project& project);

} // namespace mcms::model
