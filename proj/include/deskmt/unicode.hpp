#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace deskmt::unicode {

// Decodes UTF-8 into code points. Throws DataError on malformed input
// (overlong forms, surrogates, truncated sequences).
std::vector<uint32_t> decode_utf8(std::string_view s);

// True iff s is well-formed UTF-8.
bool valid_utf8(std::string_view s);

std::string encode_utf8(const std::vector<uint32_t>& cps);
void append_utf8(std::string& out, uint32_t cp);

// Canonical composition (NFC). Table-driven, Hangul handled algorithmically.
std::string nfc(std::string_view s);

// Splits a string into whole code points, each re-encoded as UTF-8.
std::vector<std::string> split_code_points(std::string_view s);

}  // namespace deskmt::unicode
