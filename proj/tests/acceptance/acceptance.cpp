// One line per acceptance criterion: PASS/FAIL, name, measured values, wall time.

#include "mcms/bundle_codec.hpp"
#include "mcms/distribution.hpp"
#include "mcms/proximity_sim.hpp"
#include "mcms/studio.hpp"
#include "mcms/utf8.hpp"
#include "support/fleet.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>

using namespace mcms;
using namespace mcms::testing;

namespace {

struct Verdict {
    bool ok{true};
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail << "violated: " << what << "; ";
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void criterion(const std::string& name, double limit_s, const std::function<void(Verdict&)>& body) {
    Verdict v;
    const auto t0 = Clock::now();
    try {
        body(v);
    } catch (const std::exception& e) {
        v.ok = false;
        v.detail << "exception: " << e.what() << "; ";
    }
    const double t = seconds_since(t0);
    if (limit_s > 0 && t >= limit_s) {
        v.ok = false;
        v.detail << "over time limit " << limit_s << " s; ";
    }
    if (!v.ok) ++failures;
    std::printf("%s  %-28s %s[%.2f s]\n", v.ok ? "PASS" : "FAIL", name.c_str(), v.detail.str().c_str(), t);
    std::fflush(stdout);
}

struct Means {
    double reject{}, success{}, fail{}, attempts{}, in_range{};
};

Means means(const std::vector<sim::SimRun>& runs) {
    Means m;
    for (const auto& r : runs) {
        const auto& s = r.stats;
        const double a = static_cast<double>(s.attempts);
        m.reject += static_cast<double>(s.rejections) / a;
        m.success += static_cast<double>(s.successes) / a;
        m.fail += static_cast<double>(s.failures) / a;
        m.attempts += a;
        m.in_range += s.mean_concurrent_in_range;
    }
    const double n = static_cast<double>(runs.size());
    return {m.reject / n, m.success / n, m.fail / n, m.attempts / n, m.in_range / n};
}

bool within(double x, double lo, double hi) { return x >= lo && x <= hi; }

/// Persian spelling variants that search normalization must equate.
std::string persian_variant(Rng& rng, const std::string& word) {
    std::u32string cps = *utf8::decode(word);
    std::u32string out;
    for (char32_t c : cps) {
        if (c == 0x06A9 && coin(rng)) c = 0x0643;       // keheh -> arabic kaf
        else if (c == 0x0643 && coin(rng)) c = 0x06A9;
        else if (c == 0x06CC && coin(rng)) c = 0x064A;  // farsi yeh -> arabic yeh
        else if (c == 0x064A && coin(rng)) c = 0x06CC;
        out.push_back(c);
        if (c >= 0x0600 && c <= 0x06FF && coin(rng, 0.25)) out.push_back(coin(rng) ? 0x0640 : 0x064E);  // tatweel, fatha
    }
    return utf8::encode(out);
}

std::string run_process(const std::string& cmd) {
    std::string out;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) throw std::runtime_error("cannot run " + cmd);
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
    const int status = pclose(p);
    if (status != 0) throw std::runtime_error(cmd + " exited with " + std::to_string(status));
    return out;
}

std::string quote(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

} // namespace

int main() {
    const sim::SimConfig preset = sim::exhibition_preset();
    std::vector<sim::SimRun> sweep;

    criterion("simulator-calibration", 300, [&](Verdict& v) {
        double slowest = 0;
        for (std::uint64_t s = 0; s < 30; ++s) {
            sim::SimConfig c = preset;
            c.seed = preset.seed + s;
            const auto t0 = Clock::now();
            sweep.push_back({c.seed, sim::run_sim(c)});
            slowest = std::max(slowest, seconds_since(t0));
        }
        const Means m = means(sweep);
        v.detail << "rej/att=" << m.reject << " succ/att=" << m.success << " fail/att=" << m.fail
                 << " attempts=" << m.attempts << " in_range=" << m.in_range << " slowest_run=" << slowest << "s ";
        v.require(within(m.reject, 0.506, 0.606), "rejections/attempts in [0.506, 0.606]");
        v.require(within(m.success, 0.283, 0.383), "successes/attempts in [0.283, 0.383]");
        v.require(within(m.fail, 0.081, 0.141), "failures/attempts in [0.081, 0.141]");
        v.require(within(m.attempts, 1530, 2070), "mean attempts in [1530, 2070]");
        v.require(within(m.in_range, 160, 200), "mean_concurrent_in_range in [160, 200]");
        v.require(slowest < 10, "each run < 10 s");
    });

    criterion("slot-bound", 0, [&](Verdict& v) {
        // run_sim asserts the bound inside its event loop (std::logic_error).
        std::uint32_t peak = 0;
        std::size_t runs = 0;
        for (const auto& r : sweep) peak = std::max(peak, r.stats.peak_active), ++runs;
        for (double p : {0.0, 0.5, 1.0}) {
            sim::SimConfig c = preset;
            c.p_reject = p;
            for (std::uint64_t s = 0; s < 30; ++s) {
                c.seed = preset.seed + s;
                peak = std::max(peak, sim::run_sim(c).peak_active);
                ++runs;
            }
        }
        v.detail << "runs=" << runs << " peak_active=" << peak << " slots=" << preset.slots << " ";
        v.require(runs == 120, "30-seed sweep plus 3x30 grid");
        v.require(peak <= 7, "active transfers <= 7");
    });

    criterion("codec-round-trip", 60, [&](Verdict& v) {
        TempDir dir;
        AssetPool pool(dir.path());
        Rng rng(2024);
        const auto atlas = text::build_atlas(demo_sheet_text());
        std::set<model::ContentType> seen;
        std::size_t with_atlas = 0, max_pages = 0;
        for (int i = 0; i < 1000; ++i) {
            const auto p = random_project(rng, pool, 50);
            for (const auto& f : model::flatten_pages(p)) {
                for (const auto& item : f.page->contents) seen.insert(model::content_type(item));
            }
            max_pages = std::max(max_pages, model::page_count(p));
            const std::optional<text::GlyphSheet> a = coin(rng) ? std::optional(atlas) : std::nullopt;
            with_atlas += a.has_value();
            const Bytes bytes = bundle::compile(p, a);
            v.require(bundle::parse(bytes) == canonical_bundle(p, a), "parse(compile(p)) == canonical(p)");
            v.require(bundle::compile(p, a) == bytes, "double compile byte-equal");
        }
        v.detail << "projects=1000 content_types=" << seen.size() << " with_atlas=" << with_atlas
                 << " max_pages=" << max_pages << " ";
        v.require(seen.size() == 9, "all 9 content types exercised");
        v.require(max_pages <= 50, "<= 50 pages");
    });

    criterion("search-oracle", 60, [&](Verdict& v) {
        TempDir dir;
        AssetPool pool(dir.path());
        Rng rng(808);
        std::size_t queries = 0, variant_queries = 0, nonempty = 0;
        std::vector<std::string> persian;
        for (const auto& w : vocabulary()) {
            if (text::is_rtl_char(utf8::decode(w)->front())) persian.push_back(w);
        }
        for (int c = 0; c < 100; ++c) {
            const auto p = random_project(rng, pool, 200);
            v.require(model::page_count(p) <= 200, "<= 200 pages");
            const bundle::Bundle b = bundle::parse(bundle::compile(p));
            for (int q = 0; q < 20; ++q) {
                std::string query;
                const bool variant = q % 2 == 1;
                if (variant) {
                    query = persian_variant(rng, persian[pick(rng, persian.size())]);
                    ++variant_queries;
                } else {
                    do query = random_sentence(rng, 3);
                    while (text::tokenize(query).empty());
                }
                const auto hits = bundle::search(b, query);
                v.require(hits == naive_search(b, query), "indexed search == naive scan (set and ranking)");
                nonempty += !hits.empty();
                ++queries;
            }
        }
        v.detail << "corpora=100 queries=" << queries << " persian_variants=" << variant_queries
                 << " with_hits=" << nonempty << " ";
        v.require(queries == 2000, "20 queries per corpus");
        v.require(nonempty > queries / 4, "queries actually hit");
    });

    criterion("shaping-properties", 0, [&](Verdict& v) {
        const auto atlas = text::build_atlas(demo_sheet_text());
        Rng rng(31);
        const std::vector<char32_t> rtl_letters = {0x0628, 0x062A, 0x0633, 0x0641, 0x06A9, 0x0644, 0x0645,
                                                   0x0646, 0x06CC, 0x0647, 0x0627, 0x0648, 0x0632, 0x062F};
        std::size_t inputs = 0;
        auto advance_sum = [&](const text::ShapedLine& line) {
            std::int32_t sum = 0;
            bool ok = true;
            for (const auto& g : line.glyphs) {
                ok = ok && g.x_offset == sum && g.glyph && g.advance == g.glyph->advance;
                sum += g.advance;
            }
            return ok && sum == line.total_advance;
        };
        for (int i = 0; i < 500; ++i) {
            // Printable ASCII opening with a strong letter; a leading neutral would take an RTL base direction.
            std::u32string ltr(1, U'a' + static_cast<char32_t>(pick(rng, 26)));
            for (std::size_t k = 0, n = pick(rng, 20); k < n; ++k) ltr.push_back(0x20 + static_cast<char32_t>(pick(rng, 95)));
            for (auto dir : {text::Direction::ltr, text::Direction::rtl}) {
                const auto line = text::shape_line(utf8::encode(ltr), atlas, dir);
                std::u32string drawn;
                for (const auto& g : line.glyphs) drawn.push_back(g.codepoint);
                v.require(drawn == ltr, "pure-LTR identity");
                v.require(advance_sum(line), "advance sum");
                ++inputs;
            }
            std::u32string rtl;
            for (std::size_t k = 0, n = 1 + pick(rng, 20); k < n; ++k) rtl.push_back(rtl_letters[pick(rng, rtl_letters.size())]);
            for (auto dir : {text::Direction::ltr, text::Direction::rtl}) {
                const auto line = text::shape_line(utf8::encode(rtl), atlas, dir);
                std::u32string drawn;
                for (const auto& g : line.glyphs) drawn.push_back(g.source);
                v.require(drawn == std::u32string(rtl.rbegin(), rtl.rend()), "pure-RTL reversal");
                v.require(advance_sum(line), "advance sum");
                ++inputs;
            }
            const std::string mixed = random_sentence(rng, 8);
            for (auto dir : {text::Direction::ltr, text::Direction::rtl}) {
                v.require(advance_sum(text::shape_line(mixed, atlas, dir)), "advance sum");
                ++inputs;
            }
        }
        const text::JoiningMap joining = {{U'D', text::JoiningClass::dual},
                                          {U'R', text::JoiningClass::right_joining},
                                          {U'N', text::JoiningClass::non_joining}};
        for (int i = 0; i < 50; ++i) {
            std::u32string s;
            std::vector<text::JoiningClass> cls;
            for (std::size_t k = 0, n = 1 + pick(rng, 12); k < n; ++k) {
                const std::size_t c = pick(rng, 3);
                s.push_back(c == 0 ? U'D' : c == 1 ? U'R' : U'N');
                cls.push_back(static_cast<text::JoiningClass>(c == 0 ? 1 : c == 1 ? 2 : 0));
            }
            v.require(text::select_joining_forms(s, joining) == joining_oracle(cls), "joining forms == 4-case oracle");
        }
        v.detail << "shaped_inputs=" << inputs << " joining_sequences=50 ";
    });

    criterion("sync-convergence", 120, [&](Verdict& v) {
        Rng rng(4242);
        std::size_t releases = 0, corrupt_attempts = 0;
        for (int round = 0; round < 200; ++round) {
            TempDir dir;
            const dist::CategorySet sub_a = {"education", "commerce"}, sub_b = {"health", "culture", "commerce"};
            const std::vector<dist::CategorySet> kiosk_cats = {{}, {"commerce"}, {"health", "education"}, {}};
            dist::Node central("c", dist::Role::central, {}, dir / "c");
            dist::Node sa("sa", dist::Role::subserver, sub_a, dir / "sa");
            dist::Node sb("sb", dist::Role::subserver, sub_b, dir / "sb");
            std::vector<std::unique_ptr<dist::Node>> kiosks;
            for (int k = 0; k < 4; ++k) {
                kiosks.push_back(std::make_unique<dist::Node>("k" + std::to_string(k), dist::Role::kiosk, kiosk_cats[k],
                                                              dir / ("k" + std::to_string(k))));
            }
            const auto ops = random_schedule(rng, 20, 5);
            std::map<std::string, Digest> digests;
            for (const auto& op : ops) {
                const Bytes b = app_bundle(dir.path(), op.app_id, op.version, op.category);
                digests[op.app_id + "@" + std::to_string(op.version)] = sha256(b);
                central.publish(op.app_id, op.version, op.category, b);
            }
            releases += ops.size();
            dist::LocalUpstream uc(central), ua(sa), ub(sb);
            dist::sync_once(sa, uc);
            dist::sync_once(sb, uc);
            for (int k = 0; k < 4; ++k) dist::sync_once(*kiosks[k], k < 2 ? ua : ub);
            for (int k = 0; k < 4; ++k) {
                const auto& sub_cats = k < 2 ? sub_a : sub_b;
                v.require(held_of(*kiosks[k]) == expected_held(ops, digests, {sub_cats, kiosk_cats[k]}),
                          "kiosk held == filtered central catalog");
            }
            v.require(held_of(sa) == expected_held(ops, digests, {sub_a}), "sub-server held == filtered catalog");
            v.require(held_of(sb) == expected_held(ops, digests, {sub_b}), "sub-server held == filtered catalog");

            std::size_t second = dist::sync_once(sa, uc).downloaded + dist::sync_once(sb, uc).downloaded;
            for (int k = 0; k < 4; ++k) second += dist::sync_once(*kiosks[k], k < 2 ? ua : ub).downloaded;
            v.require(second == 0, "second round downloads 0");

            // A fresh kiosk behind a corrupting link: every tampered blob is rejected, nothing bad is held.
            std::set<Digest> targets;
            for (const auto& [app, r] : central.catalog()->entries) {
                if (coin(rng)) targets.insert(r.digest);
            }
            dist::Node victim("v", dist::Role::kiosk, {}, dir / "v");
            CorruptingUpstream bad(uc, targets);
            const auto rep = dist::sync_once(victim, bad);
            std::size_t hit = 0;
            for (const auto& [app, h] : victim.state()->held) {
                v.require(targets.count(h.digest) == 0, "corrupted blob never installed");
                v.require(sha256(*victim.blob(h.digest)) == h.digest, "held blob verifies");
            }
            for (const auto& [app, r] : central.catalog()->entries) hit += targets.count(r.digest);
            v.require(rep.failed == hit, "each corrupted entry counted failed");
            corrupt_attempts += hit;
        }
        v.detail << "schedules=200 releases=" << releases << " corrupted_blobs=" << corrupt_attempts << " ";
    });

    criterion("banner-direction", 0, [&](Verdict& v) {
        std::size_t decreased = 0;
        double before = 0, after = 0;
        for (const auto& r : sweep) {
            sim::SimConfig c = preset;
            c.seed = r.seed;
            c.p_reject = 0.40;
            const auto s = sim::run_sim(c);
            const double f0 = static_cast<double>(r.stats.rejections) / static_cast<double>(r.stats.attempts);
            const double f1 = static_cast<double>(s.rejections) / static_cast<double>(s.attempts);
            before += f0;
            after += f1;
            decreased += f1 < f0;
        }
        v.detail << "p_reject " << preset.p_reject << "->0.40 mean_rej_frac " << before / sweep.size() << "->"
                 << after / sweep.size() << " decreased_on=" << decreased << "/" << sweep.size() << " ";
        v.require(!sweep.empty() && decreased == sweep.size(), "strict decrease on every common seed");
    });

    criterion("determinism", 0, [&](Verdict& v) {
        TempDir dir;
        const std::string bin = MCMS_BIN;
        // Simulator: equal seeds and configs, two processes.
        sim::SimConfig c = preset;
        c.timeline = true;
        std::ofstream(dir / "scenario.json") << sim::scenario_to_json(c);
        for (const char* fmt : {"json", "csv"}) {
            const std::string a = run_process(bin + " simulate --scenario " + quote(dir / "scenario.json") +
                                              " --seeds 5 --format " + fmt);
            const std::string b = run_process(bin + " simulate --scenario " + quote(dir / "scenario.json") +
                                              " --seeds 5 --threads 2 --format " + fmt);
            v.require(!a.empty() && a == b, std::string("byte-equal ") + fmt + " reports across processes");
            if (std::string(fmt) == "json") {
                v.require(a == sim::emit_report(sim::run_sweep(c, 5), sim::ReportFormat::json), "CLI report == in-process");
            }
        }
        // Compiler: two equal project directories, two processes each.
        Rng rng(99);
        std::size_t projects = 0;
        for (int i = 0; i < 5; ++i) {
            const auto d1 = dir / ("p" + std::to_string(i) + "a"), d2 = dir / ("p" + std::to_string(i) + "b");
            AssetPool pool1(d1 / "assets");
            AssetPool pool2(d2 / "assets");
            const auto p = random_project(rng, pool1, 40);
            studio::save_project(p, d1);
            studio::save_project(p, d2);
            write_file(d1 / "glyphs.txt", demo_sheet_text());
            write_file(d2 / "glyphs.txt", demo_sheet_text());
            const std::string a = run_process(bin + " compile " + quote(d1) + " -o " + quote(d1 / "out.amb"));
            const std::string b = run_process(bin + " compile " + quote(d2) + " -o " + quote(d2 / "out.amb"));
            v.require(a.substr(0, 64) == b.substr(0, 64), "equal project dirs give equal digests");
            v.require(read_file(d1 / "out.amb") == read_file(d2 / "out.amb"), "equal bundle bytes");
            v.require(a.substr(0, 64) == sha256(studio::compile_dir(d1)).hex(), "CLI digest == in-process digest");
            ++projects;
        }
        v.detail << "sim_reports=json+csv x5 seeds, project_pairs=" << projects << " ";
    });

    std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
