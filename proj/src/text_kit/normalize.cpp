#include "mcms/text_kit.hpp"

#include "mcms/utf8.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <stdexcept>

namespace mcms::text {

namespace {

const icu::Normalizer2& nfc() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || n == nullptr) throw std::runtime_error("ICU NFC normalizer unavailable");
    return *n;
}

icu::UnicodeString to_nfc(const icu::UnicodeString& s) {
    UErrorCode status = U_ZERO_ERROR;
    icu::UnicodeString out = nfc().normalize(s, status);
    if (U_FAILURE(status)) throw std::runtime_error("ICU normalization failed");
    return out;
}

bool is_stripped(UChar32 cp) { return cp == 0x0640 || (cp >= 0x064B && cp <= 0x065F); }

UChar32 unify(UChar32 cp) {
    switch (cp) {
        case 0x064A: return 0x06CC;  // arabic yeh -> farsi yeh
        case 0x0643: return 0x06A9;  // arabic kaf -> keheh
        default: return cp;
    }
}

bool is_separator(UChar32 cp) { return u_isUWhiteSpace(cp) || u_ispunct(cp); }

} // namespace

std::string normalize_text(std::string_view s) {
    const icu::UnicodeString composed =
        to_nfc(icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size()))));
    icu::UnicodeString folded;
    for (int32_t i = 0; i < composed.length();) {
        const UChar32 cp = composed.char32At(i);
        i += U16_LENGTH(cp);
        if (is_stripped(cp)) continue;
        folded.append(unify(u_foldCase(cp, U_FOLD_CASE_DEFAULT)));
    }
    std::string out;
    to_nfc(folded).toUTF8String(out);
    return out;
}

std::vector<std::string> tokenize(std::string_view s) {
    const auto cps = utf8::decode(normalize_text(s));
    std::vector<std::string> terms;
    if (!cps) return terms;
    std::string current;
    for (char32_t cp : *cps) {
        if (is_separator(static_cast<UChar32>(cp))) {
            if (!current.empty()) terms.push_back(std::move(current));
            current.clear();
        } else {
            utf8::append(current, cp);
        }
    }
    if (!current.empty()) terms.push_back(std::move(current));
    return terms;
}

} // namespace mcms::text
