#pragma once

#include "mcms/error.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mcms::text {

enum class TextErrc {
    SyntaxError,
    DuplicateGlyph,
    MissingIsolatedForm,
    MissingGlyph,
    InvalidUtf8,
};

std::string_view to_string(TextErrc code);

/// Text-kit failure. `line()` is the 1-based glyph-sheet line for sheet errors, 0 otherwise.
class TextError : public Error<TextErrc> {
public:
    TextError(TextErrc code, std::string detail, std::size_t line = 0)
        : Error<TextErrc>(code, line ? "line " + std::to_string(line) + ": " + detail : detail), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// -- search text -------------------------------------------------------------

/// NFC, simple case fold, Persian letter unification (yeh, kaf), tatweel and harakat removal.
std::string normalize_text(std::string_view s);

/// Normalizes, then splits on Unicode whitespace and punctuation. Never yields empty terms.
std::vector<std::string> tokenize(std::string_view s);

// -- bitmap fonts ------------------------------------------------------------

enum class GlyphForm : std::uint8_t { isolated = 0, initial = 1, medial = 2, final = 3 };
enum class JoiningClass : std::uint8_t { non_joining = 0, dual = 1, right_joining = 2 };

std::string_view to_string(GlyphForm form);

using JoiningMap = std::map<char32_t, JoiningClass>;

struct Glyph {
    char32_t codepoint{};
    GlyphForm form{GlyphForm::isolated};
    std::uint8_t width{1};
    std::uint8_t height{1};
    std::uint8_t advance{0};
    std::int8_t bearing{0};
    /// Row-major, each row padded to whole bytes; padding bits are zero.
    std::vector<std::uint8_t> bitmap;

    [[nodiscard]] std::size_t row_bytes() const noexcept { return (width + 7u) / 8u; }
    [[nodiscard]] bool pixel(std::size_t x, std::size_t y) const;

    friend bool operator==(const Glyph&, const Glyph&) = default;
};

struct GlyphSheet {
    std::uint16_t line_height{0};
    JoiningMap joining;
    /// Sorted by (codepoint, form), unique.
    std::vector<Glyph> glyphs;

    [[nodiscard]] const Glyph* find(char32_t cp, GlyphForm form) const;
    [[nodiscard]] JoiningClass joining_class(char32_t cp) const;

    friend bool operator==(const GlyphSheet&, const GlyphSheet&) = default;
};

/// Parses the textual glyph-sheet format (`lineheight`, `join`, `glyph` lines).
GlyphSheet build_atlas(std::string_view sheet_file);

/// Canonical glyph-sheet text; build_atlas(render_sheet(s)) == s.
std::string render_sheet(const GlyphSheet& sheet);

/// Checks the sheet invariants (sorted unique glyphs, isolated forms, bitmap sizes).
void check_sheet(const GlyphSheet& sheet);

/// One form per input codepoint, chosen from the joining classes of its logical neighbours.
std::vector<GlyphForm> select_joining_forms(std::span<const char32_t> codepoints, const JoiningMap& joining);

// -- line shaping ------------------------------------------------------------

enum class Direction : std::uint8_t { ltr, rtl };

/// Arabic and Hebrew blocks (including presentation forms).
bool is_rtl_char(char32_t cp);

/// Direction of the first strong character; `fallback` when there is none.
Direction detect_direction(std::string_view s, Direction fallback = Direction::ltr);

inline constexpr char32_t kReplacementChar = 0xFFFD;

struct PositionedGlyph {
    char32_t codepoint{};  // glyph actually drawn (U+FFFD when substituted)
    char32_t source{};     // logical input character
    GlyphForm form{GlyphForm::isolated};
    std::int32_t x_offset{};
    std::int32_t advance{};
    const Glyph* glyph{nullptr};

    friend bool operator==(const PositionedGlyph& a, const PositionedGlyph& b) {
        return a.codepoint == b.codepoint && a.source == b.source && a.form == b.form && a.x_offset == b.x_offset &&
               a.advance == b.advance;
    }
};

struct ShapedLine {
    std::vector<PositionedGlyph> glyphs;  // visual order, left to right
    std::int32_t total_advance{};

    friend bool operator==(const ShapedLine&, const ShapedLine&) = default;
};

/// Simplified bidi: RTL runs reversed into visual order, neutrals attach to the preceding run,
/// run order follows `base`. Joining forms are chosen in logical order before reversal.
ShapedLine shape_line(std::string_view s, const GlyphSheet& atlas, Direction base);

} // namespace mcms::text
