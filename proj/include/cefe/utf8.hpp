#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cefe::utf8 {

// Decodes UTF-8 into code points. Throws CefeError(Parse) on malformed bytes.
std::vector<char32_t> decode(std::string_view text);

void append(std::string& out, char32_t cp);

std::string encode(const std::vector<char32_t>& cps);
std::string encode(const char32_t* data, std::size_t len);

// Code point count.
std::size_t length(std::string_view text);

}  // namespace cefe::utf8
