#include "doctest.h"

#include "mcms/text_kit.hpp"
#include "mcms/utf8.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

#include <algorithm>

using namespace mcms;
using namespace mcms::text;

namespace {

std::u32string cps(std::string_view s) { return *utf8::decode(s); }

template <typename F>
TextError text_error(F&& f) {
    try {
        f();
    } catch (const TextError& e) {
        return e;
    }
    FAIL("expected TextError");
    return TextError(TextErrc::SyntaxError, "");
}

const GlyphSheet& demo() {
    static const GlyphSheet sheet = build_atlas(mcms::testing::demo_sheet_text());
    return sheet;
}

std::vector<char32_t> drawn(const ShapedLine& l) {
    std::vector<char32_t> out;
    for (const auto& g : l.glyphs) out.push_back(g.source);
    return out;
}

} // namespace

// -- normalization -------------------------------------------------------------

TEST_CASE("normalize: case fold") { CHECK(normalize_text("Hello") == "hello"); }

TEST_CASE("normalize: arabic kaf becomes keheh (codepoint dump)") {
    CHECK(cps(normalize_text("\u0643\u062A\u0627\u0628")) == std::u32string{0x06A9, 0x062A, 0x0627, 0x0628});
}

TEST_CASE("normalize: tatweel removed (codepoint dump)") {
    CHECK(cps(normalize_text("\u06A9\u0640\u062A\u0627\u0628")) == std::u32string{0x06A9, 0x062A, 0x0627, 0x0628});
}

TEST_CASE("normalize: arabic yeh, harakat, NFC") {
    CHECK(cps(normalize_text("\u0645\u0648\u0628\u0627\u064A\u0644")) ==
          std::u32string{0x0645, 0x0648, 0x0628, 0x0627, 0x06CC, 0x0644});
    // fatha U+064E, shadda U+0651, sukun U+0652 and U+065F are all stripped
    CHECK(cps(normalize_text("\u0633\u064E\u0644\u0651\u0627\u0652\u0645\u065F")) ==
          std::u32string{0x0633, 0x0644, 0x0627, 0x0645});
    // U+0660 (arabic-indic zero) is just past the harakat range
    CHECK(cps(normalize_text("\u0660")) == std::u32string{0x0660});
    CHECK(cps(normalize_text("e\u0301cole")) == std::u32string{0x00E9, 'c', 'o', 'l', 'e'});
    CHECK(normalize_text("CAF\u00C9") == normalize_text("caf\u00E9"));
    CHECK(normalize_text("") == "");
}

TEST_CASE("normalize: idempotent on random text") {
    mcms::testing::Rng rng(3);
    for (int i = 0; i < 500; ++i) {
        const std::string s = mcms::testing::random_sentence(rng, 10);
        const std::string once = normalize_text(s);
        CHECK(normalize_text(once) == once);
    }
}

// -- tokenize ------------------------------------------------------------------

TEST_CASE("tokenize: basic split") {
    CHECK(tokenize("Hello, World") == std::vector<std::string>{"hello", "world"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("!!!").empty());
    CHECK(tokenize("a+b x$y") == std::vector<std::string>{"a+b", "x$y"});
    CHECK(tokenize("\u00ABsalam\u00BB\u060C dost\u061F") == std::vector<std::string>{"salam", "dost"});
    CHECK(tokenize("one\u00A0two\tthree\nfour") == std::vector<std::string>{"one", "two", "three", "four"});
}

TEST_CASE("tokenize: ZWNJ stays inside a word") {
    const auto terms = tokenize("\u0646\u06CC\u0645\u200C\u0641\u0627\u0635\u0644\u0647 ok");
    REQUIRE(terms.size() == 2);
    CHECK(cps(terms[0]).find(0x200C) != std::u32string::npos);
}

TEST_CASE("tokenize: matches the per-character scanner on mixed sentences") {
    mcms::testing::Rng rng(17);
    for (int i = 0; i < 2000; ++i) {
        const std::string s = mcms::testing::random_sentence(rng, 12);
        const auto terms = tokenize(s);
        CHECK(terms == mcms::testing::scan_terms(normalize_text(s)));
        for (const auto& t : terms) {
            CHECK(!t.empty());
            for (char32_t c : cps(t)) CHECK(!mcms::testing::oracle_separator(c));
        }
    }
}

// -- glyph sheets --------------------------------------------------------------

TEST_CASE("build_atlas: single glyph") {
    const auto s = build_atlas(mcms::testing::glyph_line(U'A', "isolated", 5, 7, 6));
    REQUIRE(s.glyphs.size() == 1);
    CHECK(s.glyphs[0].codepoint == U'A');
    CHECK(s.glyphs[0].width == 5);
    CHECK(s.glyphs[0].height == 7);
    CHECK(s.glyphs[0].bitmap.size() == 7);
    CHECK(s.line_height == 7);  // defaults to the tallest glyph
}

TEST_CASE("build_atlas: bitmap bits") {
    // 10 px wide: 2 bytes per row, 6 padding bits
    const auto s = build_atlas("lineheight 4\nglyph U+0042 form=isolated width=10 height=2 advance=11 bearing=-1 bits=80C0FFC0\n");
    const Glyph& g = s.glyphs.at(0);
    CHECK(g.bearing == -1);
    CHECK(g.pixel(0, 0));
    CHECK(!g.pixel(1, 0));
    CHECK(g.pixel(8, 0));
    CHECK(g.pixel(9, 0));
    CHECK(g.pixel(7, 1));
    CHECK(s.line_height == 4);
}

TEST_CASE("build_atlas: errors") {
    CHECK(text_error([] { build_atlas(mcms::testing::glyph_line(U'A', "isolated", 5, 7, 6) +
                                      mcms::testing::glyph_line(U'A', "isolated", 5, 7, 6)); })
              .code() == TextErrc::DuplicateGlyph);
    CHECK(text_error([] { build_atlas(mcms::testing::glyph_line(0x0628, "initial", 5, 7, 6)); }).code() ==
          TextErrc::MissingIsolatedForm);

    const std::vector<std::pair<std::string, std::size_t>> bad = {
        {"hello\n", 1},
        {"# ok\nlineheight x\n", 2},
        {"lineheight 10\nlineheight 11\n", 2},
        {"join U+0628 triple\n", 1},
        {"join U+0628 dual\njoin U+0628 right\n", 2},
        {"glyph U+0041 form=isolated width=33 height=1 advance=1 bearing=0 bits=00000000000\n", 1},
        {"glyph U+0041 form=isolated width=0 height=1 advance=1 bearing=0 bits=\n", 1},
        {"glyph U+0041 form=sideways width=1 height=1 advance=1 bearing=0 bits=00\n", 1},
        {"glyph U+0041 form=isolated width=8 height=1 advance=1 bearing=0 bits=0\n", 1},
        {"glyph U+0041 form=isolated width=8 height=2 advance=1 bearing=0 bits=FF\n", 1},
        {"glyph U+0041 form=isolated width=4 height=1 advance=1 bearing=0 bits=F1\n", 1},  // padding bits set
        {"glyph U+0041 width=1 form=isolated height=1 advance=1 bearing=0 bits=80\n", 1},
        {"glyph U+D800 form=isolated width=1 height=1 advance=1 bearing=0 bits=80\n", 1},
        {"\nglyph U+0041 form=isolated width=1 height=1 advance=1 bearing=0 bits=80 extra\n", 2},
    };
    for (const auto& [sheet, line] : bad) {
        CAPTURE(sheet);
        const auto e = text_error([&] { build_atlas(sheet); });
        CHECK(e.code() == TextErrc::SyntaxError);
        CHECK(e.line() == line);
    }
}

TEST_CASE("render_sheet round trip") {
    const GlyphSheet& s = demo();
    CHECK(build_atlas(render_sheet(s)) == s);
    CHECK(render_sheet(build_atlas(render_sheet(s))) == render_sheet(s));
    CHECK_NOTHROW(check_sheet(s));
}

// -- joining -------------------------------------------------------------------

TEST_CASE("select_joining_forms: basic cases") {
    const JoiningMap j = {{0x0628, JoiningClass::dual}, {0x0627, JoiningClass::right_joining}};
    const std::u32string one = {0x0628};
    CHECK(select_joining_forms(one, j) == std::vector<GlyphForm>{GlyphForm::isolated});
    // beh is dual and alef right-joining per the Unicode ArabicShaping table
    const std::u32string ba = {0x0628, 0x0627};
    CHECK(select_joining_forms(ba, j) == std::vector<GlyphForm>{GlyphForm::initial, GlyphForm::final});
    const std::u32string latin = U"abc";
    CHECK(select_joining_forms(latin, j) == std::vector<GlyphForm>(3, GlyphForm::isolated));
    const std::u32string bbb = {0x0628, 0x0628, 0x0628};
    CHECK(select_joining_forms(bbb, j) ==
          std::vector<GlyphForm>{GlyphForm::initial, GlyphForm::medial, GlyphForm::final});
    // alef does not join forward: the following beh starts a new group
    const std::u32string bab = {0x0628, 0x0627, 0x0628};
    CHECK(select_joining_forms(bab, j) ==
          std::vector<GlyphForm>{GlyphForm::initial, GlyphForm::final, GlyphForm::isolated});
    // a space after a dual letter leaves it unjoined
    const std::u32string bspace = {0x0628, U' '};
    CHECK(select_joining_forms(bspace, j) == std::vector<GlyphForm>{GlyphForm::isolated, GlyphForm::isolated});
    CHECK(select_joining_forms(std::u32string{}, j).empty());
}

TEST_CASE("select_joining_forms: random class sequences vs four-case table") {
    mcms::testing::Rng rng(99);
    const JoiningMap j = {{U'D', JoiningClass::dual}, {U'R', JoiningClass::right_joining}, {U'N', JoiningClass::non_joining}};
    for (int i = 0; i < 500; ++i) {
        std::u32string s;
        std::vector<JoiningClass> cls;
        const std::size_t n = mcms::testing::pick(rng, 12);
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t c = mcms::testing::pick(rng, 4);
            s.push_back(c == 0 ? U'D' : c == 1 ? U'R' : c == 2 ? U'N' : U'x');  // x: absent from the map
            cls.push_back(c == 0 ? JoiningClass::dual : c == 1 ? JoiningClass::right_joining : JoiningClass::non_joining);
        }
        const auto forms = select_joining_forms(s, j);
        CHECK(forms.size() == s.size());
        CHECK(forms == mcms::testing::joining_oracle(cls));
    }
}

// -- shaping -------------------------------------------------------------------

TEST_CASE("shape_line: pure LTR keeps logical order") {
    const auto line = shape_line("abc", demo(), Direction::ltr);
    CHECK(drawn(line) == std::vector<char32_t>{U'a', U'b', U'c'});
    std::int32_t sum = 0;
    for (char32_t c : U"abc") {
        if (c) sum += demo().find(c, GlyphForm::isolated)->advance;
    }
    CHECK(line.total_advance == sum);
    CHECK(line.glyphs[0].x_offset == 0);
    CHECK(line.glyphs[1].x_offset == line.glyphs[0].advance);
}

TEST_CASE("shape_line: pure RTL reverses") {
    // seen: sin, lam, meem (all dual): initial, medial, final
    const std::string s = "\u0633\u0644\u0645";
    const auto line = shape_line(s, demo(), Direction::rtl);
    CHECK(drawn(line) == std::vector<char32_t>{0x0645, 0x0644, 0x0633});
    CHECK(line.glyphs[0].form == GlyphForm::final);
    CHECK(line.glyphs[1].form == GlyphForm::medial);
    CHECK(line.glyphs[2].form == GlyphForm::initial);
    // base direction does not matter for a single run
    CHECK(drawn(shape_line(s, demo(), Direction::ltr)) == drawn(line));
}

TEST_CASE("shape_line: LTR segment then reversed RTL segment") {
    // "ab " + beh, alef; the space attaches to the preceding LTR run
    const auto line = shape_line("ab \u0628\u0627", demo(), Direction::ltr);
    CHECK(drawn(line) == std::vector<char32_t>{U'a', U'b', U' ', 0x0627, 0x0628});
    CHECK(line.glyphs[3].form == GlyphForm::final);
    CHECK(line.glyphs[4].form == GlyphForm::initial);
    // rtl base flips run order
    const auto rtl = shape_line("ab \u0628\u0627", demo(), Direction::rtl);
    CHECK(drawn(rtl) == std::vector<char32_t>{0x0627, 0x0628, U'a', U'b', U' '});
    // leading neutrals take the base direction
    CHECK(drawn(shape_line(". \u0628\u0627", demo(), Direction::rtl)) ==
          std::vector<char32_t>{0x0627, 0x0628, U' ', U'.'});
}

TEST_CASE("shape_line: fallbacks") {
    // alef has no initial form; a missing form falls back to isolated
    const GlyphSheet sheet = build_atlas("join U+0628 dual\n" + mcms::testing::glyph_line(0x0628, "isolated", 4, 4, 4) +
                                         mcms::testing::glyph_line(0xFFFD, "isolated", 3, 4, 3));
    const auto line = shape_line("\u0628\u0628z", sheet, Direction::ltr);
    REQUIRE(line.glyphs.size() == 3);
    CHECK(line.glyphs[0].source == 0x0628);
    CHECK(line.glyphs[0].form == GlyphForm::isolated);
    CHECK(line.glyphs[1].codepoint == 0x0628);
    CHECK(line.glyphs[2].codepoint == kReplacementChar);
    CHECK(line.glyphs[2].source == U'z');
    CHECK(line.total_advance == 4 + 4 + 3);

    const GlyphSheet bare = build_atlas(mcms::testing::glyph_line(U'a', "isolated", 4, 4, 4));
    CHECK(text_error([&] { shape_line("ab", bare, Direction::ltr); }).code() == TextErrc::MissingGlyph);
    CHECK(text_error([&] { shape_line("\xc3", bare, Direction::ltr); }).code() == TextErrc::InvalidUtf8);
}

TEST_CASE("shape_line: advance sum and monotone offsets on random text") {
    mcms::testing::Rng rng(41);
    for (int i = 0; i < 1000; ++i) {
        const std::string s = mcms::testing::random_sentence(rng, 8);
        for (Direction d : {Direction::ltr, Direction::rtl}) {
            const auto line = shape_line(s, demo(), d);
            std::int32_t sum = 0;
            std::int32_t last = 0;
            for (const auto& g : line.glyphs) {
                CHECK(g.x_offset >= last);
                CHECK(g.x_offset == sum);
                last = g.x_offset;
                sum += g.advance;
                CHECK(g.advance == g.glyph->advance);
            }
            CHECK(line.total_advance == sum);
            CHECK(line.glyphs.size() == cps(s).size());
            // visual order is a permutation of the logical characters
            auto got = drawn(line);
            auto want = cps(s);
            std::sort(got.begin(), got.end());
            std::sort(want.begin(), want.end());
            CHECK(std::u32string(got.begin(), got.end()) == want);
        }
    }
}

TEST_CASE("detect_direction") {
    CHECK(detect_direction("hello") == Direction::ltr);
    CHECK(detect_direction("  \u0633\u0644\u0627\u0645 hi") == Direction::rtl);
    CHECK(detect_direction("123 \u0633") == Direction::ltr);
    CHECK(detect_direction("...", Direction::rtl) == Direction::rtl);
}
