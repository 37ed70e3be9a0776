#include "mcms/text_kit.hpp"

#include "mcms/utf8.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <set>

namespace mcms::text {

std::string_view to_string(TextErrc code) {
    switch (code) {
        case TextErrc::SyntaxError: return "SyntaxError";
        case TextErrc::DuplicateGlyph: return "DuplicateGlyph";
        case TextErrc::MissingIsolatedForm: return "MissingIsolatedForm";
        case TextErrc::MissingGlyph: return "MissingGlyph";
        case TextErrc::InvalidUtf8: return "InvalidUtf8";
    }
    return "Unknown";
}

std::string_view to_string(GlyphForm form) {
    switch (form) {
        case GlyphForm::isolated: return "isolated";
        case GlyphForm::initial: return "initial";
        case GlyphForm::medial: return "medial";
        case GlyphForm::final: return "final";
    }
    return "isolated";
}

bool Glyph::pixel(std::size_t x, std::size_t y) const {
    if (x >= width || y >= height) return false;
    const std::uint8_t byte = bitmap[y * row_bytes() + x / 8];
    return (byte >> (7 - x % 8)) & 1u;
}

const Glyph* GlyphSheet::find(char32_t cp, GlyphForm form) const {
    const auto it = std::lower_bound(glyphs.begin(), glyphs.end(), std::pair{cp, form},
                                     [](const Glyph& g, const std::pair<char32_t, GlyphForm>& key) {
                                         return std::pair{g.codepoint, g.form} < key;
                                     });
    if (it == glyphs.end() || it->codepoint != cp || it->form != form) return nullptr;
    return &*it;
}

JoiningClass GlyphSheet::joining_class(char32_t cp) const {
    const auto it = joining.find(cp);
    return it == joining.end() ? JoiningClass::non_joining : it->second;
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

template <typename T>
bool parse_int(std::string_view s, T& out) {
    if (s.empty()) return false;
    const auto* first = s.data();
    if (*first == '+') return false;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

class SheetParser {
public:
    explicit SheetParser(std::string_view text) : text_(text) {}

    GlyphSheet run() {
        std::size_t pos = 0;
        while (pos <= text_.size()) {
            const std::size_t nl = text_.find('\n', pos);
            std::string_view line = text_.substr(pos, nl == std::string_view::npos ? text_.npos : nl - pos);
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            parse_line(line);
            if (nl == std::string_view::npos) break;
            pos = nl + 1;
        }
        if (!line_height_) {
            std::uint16_t tallest = 1;
            for (const auto& g : sheet_.glyphs) tallest = std::max<std::uint16_t>(tallest, g.height);
            sheet_.line_height = tallest;
        }
        std::sort(sheet_.glyphs.begin(), sheet_.glyphs.end(), [](const Glyph& a, const Glyph& b) {
            return std::pair{a.codepoint, a.form} < std::pair{b.codepoint, b.form};
        });
        for (const auto& g : sheet_.glyphs) {
            if (!sheet_.find(g.codepoint, GlyphForm::isolated)) {
                char buf[16];
                std::snprintf(buf, sizeof buf, "U+%04X", static_cast<unsigned>(g.codepoint));
                throw TextError(TextErrc::MissingIsolatedForm, buf, glyph_lines_.at(g.codepoint));
            }
        }
        return std::move(sheet_);
    }

private:
    [[noreturn]] void fail(const std::string& what) const { throw TextError(TextErrc::SyntaxError, what, line_no_); }

    char32_t parse_codepoint(std::string_view tok) const {
        if (tok.size() < 6 || tok.size() > 8 || tok.substr(0, 2) != "U+") fail("expected U+XXXX, got '" + std::string(tok) + "'");
        char32_t cp = 0;
        for (char c : tok.substr(2)) {
            const int v = hex_value(c);
            if (v < 0) fail("bad hex digit in '" + std::string(tok) + "'");
            cp = cp * 16 + static_cast<char32_t>(v);
        }
        if (!utf8::is_scalar(cp)) fail("not a Unicode scalar value: " + std::string(tok));
        return cp;
    }

    std::string_view expect_key(std::string_view tok, std::string_view key) const {
        if (tok.size() <= key.size() || tok.substr(0, key.size()) != key || tok[key.size()] != '=') {
            fail("expected " + std::string(key) + "=..., got '" + std::string(tok) + "'");
        }
        return tok.substr(key.size() + 1);
    }

    template <typename T>
    T int_field(std::string_view tok, std::string_view key, long lo, long hi) const {
        long v = 0;
        if (!parse_int(expect_key(tok, key), v) || v < lo || v > hi) {
            fail(std::string(key) + " must be an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
        return static_cast<T>(v);
    }

    void parse_line(std::string_view raw) {
        std::string_view line = raw;
        while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
        if (line.empty() || line.front() == '#') return;
        const auto tok = split_ws(line);
        if (tok[0] == "lineheight") {
            if (tok.size() != 2) fail("lineheight takes exactly one value");
            if (line_height_) fail("duplicate lineheight");
            long v = 0;
            if (!parse_int(tok[1], v) || v < 1 || v > 0xFFFF) fail("lineheight must be in [1, 65535]");
            sheet_.line_height = static_cast<std::uint16_t>(v);
            line_height_ = true;
        } else if (tok[0] == "join") {
            if (tok.size() != 3) fail("join takes a codepoint and a class");
            const char32_t cp = parse_codepoint(tok[1]);
            JoiningClass cls;
            if (tok[2] == "dual") cls = JoiningClass::dual;
            else if (tok[2] == "right") cls = JoiningClass::right_joining;
            else if (tok[2] == "none") cls = JoiningClass::non_joining;
            else fail("joining class must be dual|right|none");
            if (!sheet_.joining.emplace(cp, cls).second) fail("duplicate join entry for " + std::string(tok[1]));
        } else if (tok[0] == "glyph") {
            parse_glyph(tok);
        } else {
            fail("unknown directive '" + std::string(tok[0]) + "'");
        }
    }

    void parse_glyph(const std::vector<std::string_view>& tok) {
        if (tok.size() != 8) fail("glyph takes codepoint form width height advance bearing bits");
        Glyph g;
        g.codepoint = parse_codepoint(tok[1]);
        const auto form = expect_key(tok[2], "form");
        if (form == "isolated") g.form = GlyphForm::isolated;
        else if (form == "initial") g.form = GlyphForm::initial;
        else if (form == "medial") g.form = GlyphForm::medial;
        else if (form == "final") g.form = GlyphForm::final;
        else fail("form must be isolated|initial|medial|final");
        g.width = int_field<std::uint8_t>(tok[3], "width", 1, 32);
        g.height = int_field<std::uint8_t>(tok[4], "height", 1, 32);
        g.advance = int_field<std::uint8_t>(tok[5], "advance", 0, 255);
        g.bearing = int_field<std::int8_t>(tok[6], "bearing", -128, 127);
        const auto bits = expect_key(tok[7], "bits");
        const std::size_t expected = g.row_bytes() * g.height;
        if (bits.size() != expected * 2) {
            fail("bits must be " + std::to_string(expected * 2) + " hex digits");
        }
        g.bitmap.resize(expected);
        for (std::size_t i = 0; i < expected; ++i) {
            const int hi = hex_value(bits[2 * i]);
            const int lo = hex_value(bits[2 * i + 1]);
            if (hi < 0 || lo < 0) fail("bad hex digit in bits");
            g.bitmap[i] = static_cast<std::uint8_t>(hi << 4 | lo);
        }
        const unsigned pad = static_cast<unsigned>(g.row_bytes() * 8 - g.width);
        const std::uint8_t pad_mask = static_cast<std::uint8_t>((1u << pad) - 1u);
        for (std::size_t row = 0; row < g.height; ++row) {
            if (g.bitmap[row * g.row_bytes() + g.row_bytes() - 1] & pad_mask) fail("padding bits must be zero");
        }
        if (!seen_.insert({g.codepoint, g.form}).second) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "U+%04X form=%s", static_cast<unsigned>(g.codepoint),
                          std::string(to_string(g.form)).c_str());
            throw TextError(TextErrc::DuplicateGlyph, buf, line_no_);
        }
        glyph_lines_.emplace(g.codepoint, line_no_);
        sheet_.glyphs.push_back(std::move(g));
    }

    std::string_view text_;
    std::size_t line_no_ = 0;
    bool line_height_ = false;
    GlyphSheet sheet_;
    std::set<std::pair<char32_t, GlyphForm>> seen_;
    std::map<char32_t, std::size_t> glyph_lines_;
};

} // namespace

GlyphSheet build_atlas(std::string_view sheet_file) { return SheetParser(sheet_file).run(); }

void check_sheet(const GlyphSheet& sheet) {
    for (std::size_t i = 0; i < sheet.glyphs.size(); ++i) {
        const Glyph& g = sheet.glyphs[i];
        if (i > 0) {
            const Glyph& p = sheet.glyphs[i - 1];
            if (std::pair{p.codepoint, p.form} >= std::pair{g.codepoint, g.form}) {
                throw TextError(TextErrc::DuplicateGlyph, "glyphs not sorted and unique");
            }
        }
        if (g.width < 1 || g.width > 32 || g.height < 1 || g.height > 32 ||
            g.bitmap.size() != g.row_bytes() * g.height || static_cast<unsigned>(g.form) > 3) {
            throw TextError(TextErrc::SyntaxError, "glyph dimensions out of range");
        }
        if (!sheet.find(g.codepoint, GlyphForm::isolated)) {
            throw TextError(TextErrc::MissingIsolatedForm, "codepoint without isolated form");
        }
    }
}

std::string render_sheet(const GlyphSheet& sheet) {
    std::string out = "lineheight " + std::to_string(sheet.line_height) + "\n";
    char buf[160];
    for (const auto& [cp, cls] : sheet.joining) {
        const char* name = cls == JoiningClass::dual ? "dual" : cls == JoiningClass::right_joining ? "right" : "none";
        std::snprintf(buf, sizeof buf, "join U+%04X %s\n", static_cast<unsigned>(cp), name);
        out += buf;
    }
    for (const auto& g : sheet.glyphs) {
        std::snprintf(buf, sizeof buf, "glyph U+%04X form=%s width=%u height=%u advance=%u bearing=%d bits=",
                      static_cast<unsigned>(g.codepoint), std::string(to_string(g.form)).c_str(), unsigned{g.width},
                      unsigned{g.height}, unsigned{g.advance}, int{g.bearing});
        out += buf;
        for (std::uint8_t b : g.bitmap) {
            std::snprintf(buf, sizeof buf, "%02X", unsigned{b});
            out += buf;
        }
        out += '\n';
    }
    return out;
}

} // namespace mcms::text
