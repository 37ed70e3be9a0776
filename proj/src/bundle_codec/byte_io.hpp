#pragma once

#include "mcms/bundle_codec.hpp"

#include <bit>
#include <cstring>

namespace mcms::bundle::detail {

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { le(v); }
    void u32(std::uint32_t v) { le(v); }
    void u64(std::uint64_t v) { le(v); }
    void i8(std::int8_t v) { out_.push_back(static_cast<std::uint8_t>(v)); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
    void raw(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }
    void raw(std::string_view s) { raw(as_bytes(s)); }
    void str16(std::string_view s) {
        u16(static_cast<std::uint16_t>(s.size()));
        raw(s);
    }
    void str32(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s);
    }

    [[nodiscard]] std::size_t size() const { return out_.size(); }
    Bytes& bytes() { return out_; }

private:
    template <typename T>
    void le(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    Bytes out_;
};

/// Bounds-checked little-endian reader; any overrun is a MalformedSection for `section`.
class Reader {
public:
    Reader(ByteView data, SectionId section) : data_(data), section_(section) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(le<std::uint8_t>()); }
    std::uint16_t u16() { return le<std::uint16_t>(); }
    std::uint32_t u32() { return le<std::uint32_t>(); }
    std::uint64_t u64() { return le<std::uint64_t>(); }
    std::int8_t i8() { return static_cast<std::int8_t>(u8()); }
    double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }

    ByteView raw(std::uint64_t n) {
        need(n);
        const ByteView out = data_.subspan(pos_, static_cast<std::size_t>(n));
        pos_ += static_cast<std::size_t>(n);
        return out;
    }
    std::string str16() { return as_string(raw(u16())); }
    std::string str32() { return as_string(raw(u32())); }

    [[nodiscard]] bool done() const { return pos_ == data_.size(); }
    [[nodiscard]] std::size_t remaining() const { return data_.size() - pos_; }

    [[noreturn]] void fail(const std::string& what) const {
        throw BundleError(BundleErrc::MalformedSection,
                          std::string(section_name(section_)) + " (id " + std::to_string(static_cast<int>(section_)) +
                              "): " + what);
    }

private:
    void need(std::uint64_t n) const {
        if (n > data_.size() - pos_) fail("unexpected end of section");
    }

    template <typename T>
    T le() {
        need(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(data_[pos_ + i]) << (8 * i));
        pos_ += sizeof(T);
        return v;
    }

    ByteView data_;
    SectionId section_;
    std::size_t pos_ = 0;
};

} // namespace mcms::bundle::detail
