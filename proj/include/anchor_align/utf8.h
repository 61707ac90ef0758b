// anchor_align/utf8.h

// Copyright 2026  The anchor-align Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ANCHOR_ALIGN_UTF8_H_
#define ANCHOR_ALIGN_UTF8_H_

#include <string>
#include <string_view>

namespace anchor_align::utf8 {

// Invalid byte sequences decode to U+FFFD.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view text);
std::string encode(char32_t codepoint);

// Lower-cases ASCII and Latin-1/Latin Extended-A letters; other codepoints
// pass through unchanged.
char32_t to_lower(char32_t c);
bool is_space(char32_t c);

}  // namespace anchor_align::utf8

#endif  // ANCHOR_ALIGN_UTF8_H_
