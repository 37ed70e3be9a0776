#pragma once

#include "mcms/bundle_codec.hpp"
#include "mcms/error.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace mcms::engine {

enum class EngineErrc {
    IndexOutOfRange,
    AtRootMenu,
    UnknownPage,
    EmptyQuery,
};

std::string_view to_string(EngineErrc code);
using EngineError = Error<EngineErrc>;

/// Parsed bundle plus the navigation tables derived from it. Immutable; shared across sessions.
class LoadedBundle {
public:
    explicit LoadedBundle(bundle::Bundle bundle);

    [[nodiscard]] const bundle::Bundle& bundle() const noexcept { return bundle_; }
    [[nodiscard]] const bundle::BundlePage* page(model::PageId id) const;
    [[nodiscard]] const std::vector<model::PageId>& children(model::ParentRef parent) const;
    /// Root-to-page path (inclusive). Empty when the page is unknown.
    [[nodiscard]] std::vector<model::PageId> path_to(model::PageId id) const;

private:
    bundle::Bundle bundle_;
    std::unordered_map<std::uint32_t, std::size_t> position_;
    std::unordered_map<std::uint32_t, std::vector<model::PageId>> children_;
    std::vector<model::PageId> roots_;
};

/// Cheap-to-copy navigation state. `trail` is the root-to-current path; empty means the root menu.
struct NavSession {
    std::shared_ptr<const LoadedBundle> bundle;
    std::vector<model::PageId> trail;

    [[nodiscard]] bool at_root_menu() const noexcept { return trail.empty(); }
    [[nodiscard]] std::optional<model::PageId> current() const {
        return trail.empty() ? std::nullopt : std::optional(trail.back());
    }
};

struct MenuEntry {
    model::PageId id;
    std::string title;
    std::size_t child_count{};

    friend bool operator==(const MenuEntry&, const MenuEntry&) = default;
};

NavSession open_bundle(ByteView bytes);
NavSession open_bundle(std::shared_ptr<const LoadedBundle> bundle);

/// Children of the current node (root pages at the root menu), in authored order.
std::vector<MenuEntry> listing(const NavSession& session);

NavSession enter(const NavSession& session, std::size_t child_index);
/// Pops one level. At the root menu it returns the session unchanged.
NavSession back(const NavSession& session);

struct RenderedText {
    std::string body;
    /// Shaped lines (split on '\n') when the bundle carries an atlas covering the text.
    std::optional<std::vector<text::ShapedLine>> lines;
    text::Direction direction{text::Direction::ltr};
};

struct RenderedMedia {
    model::MediaKind kind;
    Digest digest;
    std::string mime;
    std::string caption;
};

using RenderItem = std::variant<RenderedText, RenderedMedia, model::MapPoint, model::PhoneNumber, model::Email, model::WebLink>;

std::vector<RenderItem> view_contents(const NavSession& session);

/// Shapes each line of `text` with the bundle atlas; nullopt when there is no atlas or a glyph is missing.
std::optional<std::vector<text::ShapedLine>> shape_text(const bundle::Bundle& bundle, std::string_view text,
                                                        text::Direction direction);

std::vector<bundle::SearchHit> search_pages(const NavSession& session, std::string_view query);
NavSession jump_to(const NavSession& session, model::PageId page);

enum class ShareKind { sms, mms };

struct ShareEvent {
    ShareKind kind;
    std::string payload;  // text body for sms, asset digest hex for mms
    std::string target;

    friend bool operator==(const ShareEvent&, const ShareEvent&) = default;
};

/// Receives share events; nothing is transmitted.
class ShareSink {
public:
    virtual ~ShareSink() = default;
    virtual void emit(const ShareEvent& event) = 0;
};

class CollectingSink final : public ShareSink {
public:
    void emit(const ShareEvent& event) override { events.push_back(event); }
    std::vector<ShareEvent> events;
};

/// Textual rendering used when a non-media item is shared over sms.
std::string share_text(const bundle::BundleItem& item);

ShareEvent share_content(const NavSession& session, std::size_t item_index, std::string target, ShareSink& sink);

/// Line-oriented REPL over a session (ls, enter N, back, view, search Q, jump ID, share N TARGET, quit).
/// Returns when input ends or `quit` is read.
void run_repl(NavSession session, std::istream& in, std::ostream& out, ShareSink& sink);

} // namespace mcms::engine
