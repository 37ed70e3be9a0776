#include "mcms/text_kit.hpp"

#include "mcms/utf8.hpp"

#include <unicode/uchar.h>

#include <algorithm>
#include <cstdio>

namespace mcms::text {

namespace {

bool can_join_right(JoiningClass c) { return c == JoiningClass::dual || c == JoiningClass::right_joining; }

enum class CharClass { ltr, rtl, neutral };

CharClass classify(char32_t cp) {
    if (is_rtl_char(cp)) return CharClass::rtl;
    const auto c = static_cast<UChar32>(cp);
    if (u_isalpha(c) || u_isdigit(c)) return CharClass::ltr;
    return CharClass::neutral;
}

struct Run {
    Direction dir;
    std::size_t begin;
    std::size_t end;
};

} // namespace

bool is_rtl_char(char32_t cp) {
    return (cp >= 0x0590 && cp <= 0x05FF) ||  // hebrew
           (cp >= 0x0600 && cp <= 0x06FF) ||  // arabic
           (cp >= 0x0750 && cp <= 0x077F) ||  // arabic supplement
           (cp >= 0x08A0 && cp <= 0x08FF) ||  // arabic extended-a
           (cp >= 0xFB1D && cp <= 0xFB4F) ||  // hebrew presentation forms
           (cp >= 0xFB50 && cp <= 0xFDFF) ||  // arabic presentation forms-a
           (cp >= 0xFE70 && cp <= 0xFEFF);    // arabic presentation forms-b
}

Direction detect_direction(std::string_view s, Direction fallback) {
    const auto cps = utf8::decode(s);
    if (!cps) return fallback;
    for (char32_t cp : *cps) {
        switch (classify(cp)) {
            case CharClass::rtl: return Direction::rtl;
            case CharClass::ltr: return Direction::ltr;
            case CharClass::neutral: break;
        }
    }
    return fallback;
}

std::vector<GlyphForm> select_joining_forms(std::span<const char32_t> codepoints, const JoiningMap& joining) {
    const auto cls = [&](std::size_t i) {
        const auto it = joining.find(codepoints[i]);
        return it == joining.end() ? JoiningClass::non_joining : it->second;
    };
    // A link between i-1 and i exists when i-1 can join forward and i can accept it.
    const auto linked = [&](std::size_t i) { return cls(i - 1) == JoiningClass::dual && can_join_right(cls(i)); };
    std::vector<GlyphForm> forms(codepoints.size(), GlyphForm::isolated);
    for (std::size_t i = 0; i < codepoints.size(); ++i) {
        const bool right = i > 0 && linked(i);
        const bool left = i + 1 < codepoints.size() && linked(i + 1);
        if (left && right) forms[i] = GlyphForm::medial;
        else if (left) forms[i] = GlyphForm::initial;
        else if (right) forms[i] = GlyphForm::final;
    }
    return forms;
}

ShapedLine shape_line(std::string_view s, const GlyphSheet& atlas, Direction base) {
    const auto decoded = utf8::decode(s);
    if (!decoded) throw TextError(TextErrc::InvalidUtf8, "shape_line input is not valid UTF-8");
    const std::u32string& cps = *decoded;
    const auto forms = select_joining_forms(cps, atlas.joining);

    std::vector<Run> runs;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const CharClass c = classify(cps[i]);
        Direction dir;
        if (c == CharClass::neutral) dir = runs.empty() ? base : runs.back().dir;
        else dir = c == CharClass::rtl ? Direction::rtl : Direction::ltr;
        if (!runs.empty() && runs.back().dir == dir) {
            runs.back().end = i + 1;
        } else {
            runs.push_back({dir, i, i + 1});
        }
    }
    if (base == Direction::rtl) std::reverse(runs.begin(), runs.end());

    std::vector<std::size_t> visual;
    visual.reserve(cps.size());
    for (const Run& run : runs) {
        if (run.dir == Direction::ltr) {
            for (std::size_t i = run.begin; i < run.end; ++i) visual.push_back(i);
        } else {
            for (std::size_t i = run.end; i-- > run.begin;) visual.push_back(i);
        }
    }

    ShapedLine line;
    line.glyphs.reserve(visual.size());
    std::int32_t pen = 0;
    for (std::size_t logical : visual) {
        const char32_t cp = cps[logical];
        const GlyphForm form = forms[logical];
        const Glyph* g = atlas.find(cp, form);
        if (!g) g = atlas.find(cp, GlyphForm::isolated);
        if (!g) g = atlas.find(kReplacementChar, GlyphForm::isolated);
        if (!g) {
            char buf[16];
            std::snprintf(buf, sizeof buf, "U+%04X", static_cast<unsigned>(cp));
            throw TextError(TextErrc::MissingGlyph, buf);
        }
        line.glyphs.push_back({g->codepoint, cp, g->form, pen, g->advance, g});
        pen += g->advance;
    }
    line.total_advance = pen;
    return line;
}

} // namespace mcms::text
