#include "doctest.h"

#include "mcms/bundle_codec.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

#include <cstring>
#include <set>

using namespace mcms;
using namespace mcms::bundle;
using mcms::testing::TempDir;

namespace {

template <typename F>
BundleErrc bundle_error(F&& f) {
    try {
        f();
    } catch (const BundleError& e) {
        return e.code();
    }
    FAIL("expected BundleError");
    return BundleErrc::InvalidProject;
}

model::Project one_page(const std::filesystem::path& dir, std::vector<model::ContentItem> items, std::string title = "Home") {
    model::Project p = mcms::testing::base_project(dir);
    model::PageNode n;
    n.id = model::PageId{1};
    n.title = std::move(title);
    n.contents = std::move(items);
    p.root_pages.push_back(std::move(n));
    return p;
}

std::uint16_t u16_at(const Bytes& b, std::size_t at) { return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8)); }

std::uint64_t u64_at(const Bytes& b, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[at + static_cast<std::size_t>(i)];
    return v;
}

void fix_crc(Bytes& b) {
    const std::uint32_t crc = crc32c(ByteView(b).first(b.size() - 4));
    for (int i = 0; i < 4; ++i) b[b.size() - 4 + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(crc >> (8 * i));
}

} // namespace

TEST_CASE("digest primitives") {
    CHECK(sha256(std::string_view("")).hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256(std::string_view("abc")).hex() == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(crc32c(as_bytes("123456789")) == 0xE3069283u);
    const auto d = Digest::from_hex(sha256(std::string_view("x")).hex());
    REQUIRE(d);
    CHECK(*d == sha256(std::string_view("x")));
    CHECK(!Digest::from_hex("zz"));
    CHECK(!Digest::from_hex(std::string(64, 'A')));
}

TEST_CASE("compile: deterministic for a minimal project") {
    TempDir dir;
    const auto p = one_page(dir.path(), {model::Text{"hello world"}});
    const Bytes a = compile(p);
    const Bytes b = compile(p);
    CHECK(a == b);
    CHECK(std::memcmp(a.data(), "AMB1", 4) == 0);
    CHECK(u16_at(a, 4) == 1);
    CHECK(u16_at(a, 6) == 0x0002);  // index, no font
    CHECK(u16_at(a, 8) == 4);
}

TEST_CASE("compile: header and section table layout") {
    TempDir dir;
    const auto atlas = text::build_atlas(mcms::testing::demo_sheet_text());
    const Bytes b = compile(one_page(dir.path(), {model::Text{"x"}}), atlas);
    CHECK(u16_at(b, 6) == 0x0003);
    const std::uint16_t n = u16_at(b, 8);
    REQUIRE(n == 5);
    std::uint64_t expect_offset = 10 + 17u * n;
    for (std::uint16_t i = 0; i < n; ++i) {
        const std::size_t e = 10 + 17u * i;
        CHECK(b[e] == i + 1);
        CHECK(u64_at(b, e + 1) == expect_offset);
        expect_offset += u64_at(b, e + 9);
    }
    CHECK(expect_offset + 4 == b.size());
    // META is the canonical JSON of the meta fields
    const std::size_t meta_at = static_cast<std::size_t>(u64_at(b, 11));
    const std::size_t meta_len = static_cast<std::size_t>(u64_at(b, 19));
    const std::string meta(b.begin() + static_cast<std::ptrdiff_t>(meta_at),
                           b.begin() + static_cast<std::ptrdiff_t>(meta_at + meta_len));
    CHECK(meta.rfind("{\"app_id\":\"demo-app\",\"category\":\"education\"", 0) == 0);
}

TEST_CASE("compile: byte-identical assets are stored once") {
    TempDir dir;
    mcms::testing::AssetPool pool(dir.path());
    const auto p = one_page(dir.path(), {model::Media{model::MediaKind::image, {"logo.png", "image/png"}, "a"},
                                         model::Media{model::MediaKind::image, {"copy-of-logo.png", "image/png"}, "b"}});
    const Bundle b = parse(compile(p));
    std::set<Digest> digests;
    for (const auto* ref : model::asset_refs(p)) digests.insert(sha256(mcms::testing::read_file(dir.path() / ref->relative_path)));
    CHECK(b.assets.size() == digests.size());
    CHECK(b.assets.size() == 1);
    CHECK(std::get<MediaItem>(b.pages[0].items[0]).asset_index == 0);
    CHECK(std::get<MediaItem>(b.pages[0].items[1]).asset_index == 0);
}

TEST_CASE("compile: no searchable text still writes an empty index") {
    TempDir dir;
    const auto p = one_page(dir.path(), {model::PhoneNumber{"12345"}}, "!!!");
    const Bytes bytes = compile(p);
    CHECK((u16_at(bytes, 6) & 0x2) != 0);
    const Bundle b = parse(bytes);
    CHECK(b.index.terms.empty());
    CHECK(inspect(bytes).find("terms: 0") != std::string::npos);
}

TEST_CASE("compile: invalid project and unreadable asset") {
    TempDir dir;
    auto p = one_page(dir.path(), {});
    p.root_pages.clear();
    CHECK(bundle_error([&] { compile(p); }) == BundleErrc::InvalidProject);
    mcms::testing::write_file(dir / "a.png", "x");
    p = one_page(dir.path(), {model::Media{model::MediaKind::image, {"a.png", "image/png"}, ""}});
    CHECK_NOTHROW(compile(p));
    const Bundle built = build_bundle(p, std::nullopt);
    std::filesystem::remove(dir / "a.png");
    CHECK(bundle_error([&] { build_bundle(p, std::nullopt); }) == BundleErrc::AssetReadFailure);
    CHECK(built.assets.size() == 1);
}

TEST_CASE("parse: rejects malformed input") {
    TempDir dir;
    const Bytes good = compile(one_page(dir.path(), {model::Text{"hello"}}));
    CHECK(bundle_error([] { parse(Bytes{}); }) == BundleErrc::BadMagic);
    CHECK(bundle_error([] { parse(as_bytes("AMB2xxxxxxxxxxxxxx")); }) == BundleErrc::BadMagic);
    CHECK(bundle_error([] { parse(as_bytes("AMB1")); }) == BundleErrc::TruncatedSection);

    Bytes truncated(good.begin(), good.end() - 10);
    CHECK(bundle_error([&] { parse(truncated); }) == BundleErrc::ChecksumMismatch);

    Bytes v2 = good;
    v2[4] = 2;
    fix_crc(v2);
    CHECK(bundle_error([&] { parse(v2); }) == BundleErrc::UnsupportedVersion);

    Bytes flags = good;
    flags[6] ^= 0x01;  // claims a font that is not there
    fix_crc(flags);
    CHECK(bundle_error([&] { parse(flags); }) == BundleErrc::MalformedSection);

    Bytes far = good;
    far[10 + 17 + 1 + 7] = 0x7F;  // PAGES offset beyond the file
    fix_crc(far);
    CHECK(bundle_error([&] { parse(far); }) == BundleErrc::TruncatedSection);
}

TEST_CASE("parse: every single-byte flip is detected") {
    TempDir dir;
    mcms::testing::AssetPool pool(dir.path());
    mcms::testing::Rng rng(1);
    const auto p = mcms::testing::random_project(rng, pool, 6);
    const Bytes good = compile(p, text::build_atlas(mcms::testing::glyph_line(U'a', "isolated", 3, 3, 3)));
    for (std::size_t i = 0; i < good.size(); ++i) {
        Bytes bad = good;
        bad[i] ^= static_cast<std::uint8_t>(1u << (i % 8));
        CAPTURE(i);
        CHECK_THROWS_AS(parse(bad), BundleError);
    }
}

TEST_CASE("parse: structural errors behind a valid checksum are named by section") {
    TempDir dir;
    const Bytes good = compile(one_page(dir.path(), {model::Text{"hello"}}));
    const std::size_t pages_at = static_cast<std::size_t>(u64_at(good, 10 + 17 + 1));
    Bytes bad = good;
    bad[pages_at] = 9;  // page_count 9 with only one record
    fix_crc(bad);
    try {
        parse(bad);
        FAIL("expected MalformedSection");
    } catch (const BundleError& e) {
        CHECK(e.code() == BundleErrc::MalformedSection);
        CHECK(e.detail().find("PAGES") != std::string::npos);
    }
}

TEST_CASE("round trip on randomized projects") {
    TempDir dir;
    mcms::testing::AssetPool pool(dir.path());
    mcms::testing::Rng rng(77);
    const auto atlas = text::build_atlas(mcms::testing::demo_sheet_text());
    for (int i = 0; i < 100; ++i) {
        const auto p = mcms::testing::random_project(rng, pool, 30);
        REQUIRE(model::validate_project(p).ok());
        const std::optional<text::GlyphSheet> a = mcms::testing::coin(rng) ? std::optional(atlas) : std::nullopt;
        const Bytes bytes = compile(p, a);
        const Bundle parsed = parse(bytes);
        CHECK(parsed == mcms::testing::canonical_bundle(p, a));
        CHECK(encode(parsed) == bytes);
        CHECK(compile(p, a) == bytes);
        for (const auto& term : parsed.index.terms) {
            for (const auto& post : term.postings) {
                CHECK(post.tf >= 1);
                CHECK(std::any_of(parsed.pages.begin(), parsed.pages.end(), [&](const auto& pg) { return pg.id == post.page; }));
            }
        }
    }
}

TEST_CASE("search") {
    TempDir dir;
    model::Project p = mcms::testing::base_project(dir.path());
    const auto page = [](std::uint32_t id, std::string title, std::string body) {
        model::PageNode n;
        n.id = model::PageId{id};
        n.title = std::move(title);
        n.contents.push_back(model::Text{std::move(body)});
        return n;
    };
    p.root_pages.push_back(page(1, "intro", "nothing here"));
    p.root_pages.push_back(page(2, "kiosk", "Kiosk kiosk, and more"));
    p.root_pages.push_back(page(5, "other", "a kiosk."));
    p.root_pages[0].children.push_back(page(9, "\u06A9\u062A\u0627\u0628", "\u06A9\u062A\u0627\u0628 kiosk"));
    const Bundle b = parse(compile(p));

    SUBCASE("term frequency ranking") {
        const auto hits = search(b, "KIOSK");
        REQUIRE(hits.size() == 3);
        CHECK(hits[0] == SearchHit{model::PageId{2}, 3});
        CHECK(hits == mcms::testing::naive_search(b, "KIOSK"));
        // equal scores keep pre-order: 9 comes before 5
        CHECK(hits[1].page == model::PageId{9});
        CHECK(hits[2].page == model::PageId{5});
    }
    SUBCASE("empty query") {
        CHECK(bundle_error([&] { search(b, "!!!"); }) == BundleErrc::EmptyQuery);
        CHECK(bundle_error([&] { search(b, ""); }) == BundleErrc::EmptyQuery);
    }
    SUBCASE("arabic kaf query finds keheh text") {
        const auto hits = search(b, "\u0643\u062A\u0627\u0628");
        REQUIRE(!hits.empty());
        CHECK(hits[0] == SearchHit{model::PageId{9}, 2});
    }
    SUBCASE("OR semantics; repeated terms count once") {
        CHECK(search(b, "intro other") == std::vector<SearchHit>{{model::PageId{1}, 1}, {model::PageId{5}, 1}});
        CHECK(search(b, "intro intro") == std::vector<SearchHit>{{model::PageId{1}, 1}});
        CHECK(search(b, "absent").empty());
    }
}

TEST_CASE("search matches the naive scan on random corpora") {
    TempDir dir;
    mcms::testing::AssetPool pool(dir.path());
    mcms::testing::Rng rng(5);
    for (int c = 0; c < 20; ++c) {
        const Bundle b = parse(compile(mcms::testing::random_project(rng, pool, 80)));
        for (int q = 0; q < 20; ++q) {
            const std::string query = mcms::testing::random_sentence(rng, 3);
            if (text::tokenize(query).empty()) {
                CHECK(bundle_error([&] { search(b, query); }) == BundleErrc::EmptyQuery);
                continue;
            }
            CHECK(search(b, query) == mcms::testing::naive_search(b, query));
        }
    }
}

TEST_CASE("inspect") {
    TempDir dir;
    const auto atlas = text::build_atlas(mcms::testing::demo_sheet_text());
    const auto p = one_page(dir.path(), {model::Text{"hello"}});
    const Bytes with_font = compile(p, atlas);
    const std::string s = inspect(with_font);
    for (const char* name : {"META", "PAGES", "ASSETS", "INDEX", "FONT"}) CHECK(s.find(name) != std::string::npos);
    CHECK(s.find("checksum: OK") != std::string::npos);
    CHECK(s.find("structure: OK") != std::string::npos);
    CHECK(s.find("pages: 1") != std::string::npos);
    CHECK(s.find("font: present (" + std::to_string(atlas.glyphs.size()) + " glyphs)") != std::string::npos);

    const Bytes plain = compile(p);
    CHECK(inspect(plain).find("font: absent") != std::string::npos);

    const Bytes cut(with_font.begin(), with_font.begin() + static_cast<std::ptrdiff_t>(with_font.size() / 2));
    const std::string t = inspect(cut);
    CHECK(t.find("checksum: FAILED") != std::string::npos);
    CHECK(t.find("(truncated)") != std::string::npos);
    CHECK(inspect(as_bytes("AMB1")).find("checksum: FAILED") != std::string::npos);
    CHECK(bundle_error([] { inspect(Bytes{}); }) == BundleErrc::BadMagic);
}
