#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// Text primitives shared by the annotator, the gazetteer and the corpus
// readers. All span arithmetic in this project is in Unicode code points,
// so algorithms convert to std::u32string once and work there.
namespace wikigeo::uni {

// UTF-8 decoding is lenient: invalid byte sequences become U+FFFD.
std::u32string to_utf32(std::string_view utf8);
std::string to_utf8(std::u32string_view cps);
void append_utf8(std::string& out, char32_t cp);
std::size_t cp_length(std::string_view utf8);

// Substring by code-point offsets, end-exclusive.
std::string cp_substr(std::string_view utf8, std::size_t begin,
                      std::size_t end);

std::string nfc(std::string_view utf8);
std::string fold_case(std::string_view utf8);

// Canonical text form used for all title/text matching: NFC followed by
// mapping the modifier-letter apostrophe (U+02BC) and the right single
// quotation mark (U+2019) to the ASCII apostrophe. Article titles carry
// ASCII apostrophes while body text often carries U+02BC, so both sides of
// every comparison must go through this. Idempotent. Can change the number
// of code points, therefore it must run before any offsets are computed.
std::string normalize_text(std::string_view utf8);

bool is_letter_or_digit(char32_t cp);
bool is_upper(char32_t cp);
bool is_space(char32_t cp);
bool is_punct(char32_t cp);

}  // namespace wikigeo::uni
