#include "doctest.h"

#include "mcms/engine.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

#include <sstream>

using namespace mcms;
using namespace mcms::engine;
using mcms::testing::TempDir;

namespace {

model::PageNode node(std::uint32_t id, std::string title, std::vector<model::ContentItem> items = {},
                     std::vector<model::PageNode> kids = {}) {
    model::PageNode n;
    n.id = model::PageId{id};
    n.title = std::move(title);
    n.contents = std::move(items);
    n.children = std::move(kids);
    return n;
}

struct Fixture {
    TempDir dir;
    model::Project project;
    Bytes bytes;
    NavSession session;

    explicit Fixture(bool with_atlas = true) {
        mcms::testing::write_file(dir / "pic.png", "PNGDATA");
        project = mcms::testing::base_project(dir.path());
        project.root_pages.push_back(node(1, "Home",
                                          {model::Text{"hi"}, model::Media{model::MediaKind::image, {"pic.png", "image/png"}, "cap"},
                                           model::PhoneNumber{"5551234"}},
                                          {node(2, "Child", {model::Text{"kiosk"}}, {node(4, "Grandchild", {model::Text{"deep kiosk kiosk"}})})}));
        project.root_pages.push_back(node(3, "Farsi", {model::Text{"\u0633\u0644\u0645"},
                                                       model::WebLink{"https://example.org", "site"},
                                                       model::WebLink{"https://example.org/2", ""},
                                                       model::MapPoint{35.5, 51.25, "Tehran"}, model::Email{"a@b.org"}}));
        project.root_pages.push_back(node(5, "Third", {model::Text{"x"}}));
        std::optional<text::GlyphSheet> atlas;
        if (with_atlas) atlas = text::build_atlas(mcms::testing::demo_sheet_text());
        bytes = bundle::compile(project, atlas);
        session = open_bundle(bytes);
    }
};

template <typename F>
EngineErrc engine_error(F&& f) {
    try {
        f();
    } catch (const EngineError& e) {
        return e.code();
    }
    FAIL("expected EngineError");
    return EngineErrc::UnknownPage;
}

std::vector<std::string> titles(const std::vector<MenuEntry>& m) {
    std::vector<std::string> out;
    for (const auto& e : m) out.push_back(e.title);
    return out;
}

} // namespace

TEST_CASE("open_bundle lists root pages in authored order") {
    Fixture f;
    CHECK(f.session.at_root_menu());
    CHECK(titles(listing(f.session)) == std::vector<std::string>{"Home", "Farsi", "Third"});
    CHECK(listing(f.session)[0].child_count == 1);
}

TEST_CASE("open_bundle propagates parse errors") {
    Fixture f;
    Bytes bad = f.bytes;
    bad[bad.size() / 2] ^= 0xFF;
    try {
        open_bundle(bad);
        FAIL("expected error");
    } catch (const bundle::BundleError& e) {
        CHECK(e.code() == bundle::BundleErrc::ChecksumMismatch);
    }
}

TEST_CASE("enter and back") {
    Fixture f;
    const NavSession in = enter(f.session, 0);
    CHECK(in.current() == model::PageId{1});
    CHECK(titles(listing(in)) == std::vector<std::string>{"Child"});
    const NavSession out = back(in);
    CHECK(out.trail == f.session.trail);
    CHECK(back(f.session).trail.empty());
    const NavSession leaf = enter(enter(in, 0), 0);
    CHECK(leaf.trail == std::vector<model::PageId>{model::PageId{1}, model::PageId{2}, model::PageId{4}});
    CHECK(engine_error([&] { enter(leaf, 0); }) == EngineErrc::IndexOutOfRange);
    CHECK(engine_error([&] { enter(f.session, 3); }) == EngineErrc::IndexOutOfRange);
}

TEST_CASE("random walks keep the trail a root-to-current path") {
    Fixture f;
    mcms::testing::Rng rng(3);
    NavSession s = f.session;
    for (int i = 0; i < 500; ++i) {
        const auto kids = listing(s);
        if (!kids.empty() && mcms::testing::coin(rng, 0.6)) s = enter(s, mcms::testing::pick(rng, kids.size()));
        else s = back(s);
        if (s.current()) {
            const auto want = mcms::testing::path_oracle(f.project, s.current()->value);
            std::vector<std::uint32_t> got;
            for (auto id : s.trail) got.push_back(id.value);
            CHECK(got == want);
        }
    }
    CHECK(sha256(f.bytes) == sha256(bundle::compile(f.project, text::build_atlas(mcms::testing::demo_sheet_text()))));
}

TEST_CASE("view_contents") {
    Fixture f;
    CHECK(engine_error([&] { view_contents(f.session); }) == EngineErrc::AtRootMenu);

    const auto items = view_contents(enter(f.session, 0));
    REQUIRE(items.size() == 3);
    CHECK(std::get<RenderedText>(items[0]).body == "hi");
    const auto& media = std::get<RenderedMedia>(items[1]);
    CHECK(media.digest == sha256(std::string_view("PNGDATA")));
    CHECK(media.mime == "image/png");
    CHECK(media.caption == "cap");
    CHECK(std::get<model::PhoneNumber>(items[2]).digits == "5551234");

    const auto farsi = view_contents(enter(f.session, 1));
    const auto& t = std::get<RenderedText>(farsi[0]);
    CHECK(t.direction == text::Direction::rtl);
    REQUIRE(t.lines);
    REQUIRE(t.lines->size() == 1);
    const auto& line = (*t.lines)[0];
    const auto oracle = text::shape_line("\u0633\u0644\u0645", f.session.bundle->bundle().atlas.value(), text::Direction::rtl);
    CHECK(line == oracle);
    REQUIRE(line.glyphs.size() == 3);
    CHECK(line.glyphs[0].source == 0x0645);
    CHECK(line.glyphs[2].source == 0x0633);
}

TEST_CASE("view_contents without an atlas leaves text unshaped") {
    Fixture f(false);
    const auto items = view_contents(enter(f.session, 0));
    CHECK(!std::get<RenderedText>(items[0]).lines);
}

TEST_CASE("search and jump") {
    Fixture f;
    const auto hits = search_pages(f.session, "kiosk");
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].page == model::PageId{4});
    const NavSession j = jump_to(f.session, hits[0].page);
    CHECK(j.trail == std::vector<model::PageId>{model::PageId{1}, model::PageId{2}, model::PageId{4}});
    CHECK_NOTHROW(view_contents(j));
    CHECK(engine_error([&] { jump_to(f.session, model::PageId{9999}); }) == EngineErrc::UnknownPage);
    CHECK(engine_error([&] { search_pages(f.session, "..."); }) == EngineErrc::EmptyQuery);
}

TEST_CASE("jump trail matches the tree walk on random projects") {
    TempDir dir;
    mcms::testing::AssetPool pool(dir.path());
    mcms::testing::Rng rng(8);
    for (int i = 0; i < 30; ++i) {
        const auto p = mcms::testing::random_project(rng, pool, 40);
        const NavSession s = open_bundle(bundle::compile(p));
        for (const auto& e : mcms::testing::preorder_oracle(p)) {
            std::vector<std::uint32_t> got;
            for (auto id : jump_to(s, model::PageId{e.id}).trail) got.push_back(id.value);
            CHECK(got == mcms::testing::path_oracle(p, e.id));
        }
    }
}

TEST_CASE("share_content") {
    Fixture f;
    CollectingSink sink;
    const NavSession home = enter(f.session, 0);
    CHECK(share_content(home, 0, "555", sink) == ShareEvent{ShareKind::sms, "hi", "555"});
    const auto mms = share_content(home, 1, "555", sink);
    CHECK(mms.kind == ShareKind::mms);
    CHECK(mms.payload == sha256(std::string_view("PNGDATA")).hex());
    CHECK(share_content(home, 2, "1", sink).payload == "5551234");
    CHECK(engine_error([&] { share_content(home, 3, "1", sink); }) == EngineErrc::IndexOutOfRange);
    CHECK(engine_error([&] { share_content(f.session, 0, "1", sink); }) == EngineErrc::AtRootMenu);

    const NavSession farsi = enter(f.session, 1);
    CHECK(share_content(farsi, 1, "9", sink) == ShareEvent{ShareKind::sms, "site: https://example.org", "9"});
    CHECK(share_content(farsi, 2, "9", sink).payload == "https://example.org/2");
    CHECK(share_content(farsi, 3, "9", sink).payload == "Tehran: 35.500000,51.250000");
    CHECK(share_content(farsi, 4, "9", sink).payload == "a@b.org");
    CHECK(sink.events.size() == 7);
}

TEST_CASE("nav REPL transcript") {
    Fixture f;
    std::istringstream in("ls\nenter 0\nls\nview\nshare 0 555\nback\nback\nsearch kiosk\njump 4\nview\nenter 9\nenter x\nfrob\nview\nquit\nls\n");
    std::ostringstream out;
    CollectingSink sink;
    run_repl(f.session, in, out, sink);
    const std::string digest = sha256(std::string_view("PNGDATA")).hex();
    const std::string want = "@ root\n"
                             "0 #1 Home (1)\n"
                             "1 #3 Farsi (0)\n"
                             "2 #5 Third (0)\n"
                             "@ #1 Home\n"
                             "@ #1 Home\n"
                             "0 #2 Child (1)\n"
                             "@ #1 Home\n"
                             "[0] text: hi (shaped ltr, 1 lines, 2 glyphs, width 12)\n"
                             "[1] image " + digest + " image/png \"cap\"\n"
                             "[2] phone 5551234\n"
                             "share sms to=555 hi\n"
                             "@ root\n"
                             "@ root\n"
                             "hit #4 score=2 Grandchild\n"
                             "hit #2 score=1 Child\n"
                             "@ #4 Grandchild\n"
                             "@ #4 Grandchild\n"
                             "[0] text: deep kiosk kiosk (shaped ltr, 1 lines, 16 glyphs, width 100)\n"
                             "error: IndexOutOfRange: 9 >= 0 children\n"
                             "error: usage: enter N\n"
                             "error: unknown command 'frob'\n"
                             "@ #4 Grandchild\n"
                             "[0] text: deep kiosk kiosk (shaped ltr, 1 lines, 16 glyphs, width 100)\n"
                             "bye\n";
    CHECK(out.str() == want);
    REQUIRE(sink.events.size() == 1);
}
