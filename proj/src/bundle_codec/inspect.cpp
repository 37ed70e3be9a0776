#include "mcms/bundle_codec.hpp"

#include "byte_io.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace mcms::bundle {

namespace {

std::optional<std::uint32_t> leading_u32(ByteView bytes, std::uint64_t offset, std::uint64_t length) {
    if (length < 4 || offset > bytes.size() || length > bytes.size() - offset) return std::nullopt;
    detail::Reader r(bytes.subspan(static_cast<std::size_t>(offset), 4), SectionId::meta);
    return r.u32();
}

} // namespace

std::string inspect(ByteView bytes) {
    if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
        throw BundleError(BundleErrc::BadMagic, "missing AMB1 magic");
    }
    std::ostringstream out;
    out << "bundle: AMB1, " << bytes.size() << " bytes\n";

    bool checksum_ok = false;
    if (bytes.size() >= 14) {
        detail::Reader trailer(bytes.last(4), SectionId::meta);
        checksum_ok = crc32c(bytes.first(bytes.size() - 4)) == trailer.u32();
    }

    std::optional<std::uint32_t> pages;
    std::optional<std::uint32_t> assets;
    std::optional<std::uint32_t> terms;
    std::optional<std::uint32_t> glyphs;
    bool font = false;
    try {
        detail::Reader h(bytes, SectionId::meta);
        h.raw(4);
        const std::uint16_t version = h.u16();
        const std::uint16_t flags = h.u16();
        const std::uint16_t count = h.u16();
        char buf[64];
        std::snprintf(buf, sizeof buf, "format_version: %u\nflags: 0x%04x\n", unsigned{version}, unsigned{flags});
        out << buf << "sections: " << count << "\n";
        for (std::uint16_t i = 0; i < count; ++i) {
            const auto id = static_cast<SectionId>(h.u8());
            const std::uint64_t offset = h.u64();
            const std::uint64_t length = h.u64();
            const bool in_bounds = offset <= bytes.size() && length <= bytes.size() - offset;
            std::snprintf(buf, sizeof buf, "  %-6s offset=%llu length=%llu%s", std::string(section_name(id)).c_str(),
                          static_cast<unsigned long long>(offset), static_cast<unsigned long long>(length),
                          in_bounds ? "" : " (truncated)");
            out << buf << "\n";
            if (id == SectionId::pages) pages = leading_u32(bytes, offset, length);
            if (id == SectionId::assets) assets = leading_u32(bytes, offset, length);
            if (id == SectionId::index) terms = leading_u32(bytes, offset, length);
            if (id == SectionId::font) {
                font = true;
                // line_height u16, join_count u32, joins (5 bytes each), glyph_count u32
                if (const auto joins = leading_u32(bytes, offset + 2, length >= 2 ? length - 2 : 0)) {
                    const std::uint64_t at = 6 + std::uint64_t{*joins} * 5;
                    if (at <= length) glyphs = leading_u32(bytes, offset + at, length - at);
                }
            }
        }
    } catch (const BundleError&) {
        out << "  (section table truncated)\n";
    }
    const auto count = [](const std::optional<std::uint32_t>& v) { return v ? std::to_string(*v) : std::string("?"); };
    out << "pages: " << count(pages) << "\n";
    out << "assets: " << count(assets) << "\n";
    out << "terms: " << count(terms) << "\n";
    out << "font: " << (font ? "present (" + count(glyphs) + " glyphs)" : std::string("absent")) << "\n";
    out << "checksum: " << (checksum_ok ? "OK" : "FAILED") << "\n";
    if (checksum_ok) {
        try {
            parse(bytes);
            out << "structure: OK\n";
        } catch (const BundleError& e) {
            out << "structure: " << e.what() << "\n";
        }
    }
    return out.str();
}

} // namespace mcms::bundle
