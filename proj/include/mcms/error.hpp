#pragma once

#include <string>
#include <string_view>
#include <stdexcept>

namespace mcms {

// Exception carrying a module-specific error code. Each module declares an
// `enum class` of codes plus a `to_string` overload found by ADL.
template <typename Code>
class Error : public std::runtime_error {
public:
    Error(Code code, std::string detail = {})
        : std::runtime_error(format(code, detail)), code_(code), detail_(std::move(detail)) {}

    [[nodiscard]] Code code() const noexcept { return code_; }
    [[nodiscard]] const std::string& detail() const noexcept { return detail_; }
    [[nodiscard]] std::string_view name() const noexcept { return to_string(code_); }

private:
    static std::string format(Code code, const std::string& detail) {
        std::string out{to_string(code)};
        if (!detail.empty()) {
            out += ": ";
            out += detail;
        }
        return out;
    }

    Code code_;
    std::string detail_;
};

} // namespace mcms
