/*
* Copyright (C) 2026 The fieldlab authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/
#include "fieldlab/text_config.h"

#include "fieldlab/errors.h"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <sstream>

namespace fieldlab
{

namespace
{

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

} // namespace

TextConfig TextConfig::parse(std::istream& in)
{
    TextConfig config;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(fmt::format("line {}: expected 'key = value'", number));
        }
        auto key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw ParseError(fmt::format("line {}: empty key", number));
        }
        config.m_entries.emplace_back(std::move(key), trim(line.substr(eq + 1)));
    }
    return config;
}

TextConfig TextConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError(fmt::format("cannot read {}", path.string()));
    }
    return parse(in);
}

std::optional<std::string> TextConfig::get(const std::string& key) const
{
    std::optional<std::string> found;
    for (const auto& [k, v] : m_entries) {
        if (k == key) {
            found = v;
        }
    }
    return found;
}

std::vector<std::string> TextConfig::get_all(const std::string& key) const
{
    std::vector<std::string> values;
    for (const auto& [k, v] : m_entries) {
        if (k == key) {
            values.push_back(v);
        }
    }
    return values;
}

std::string TextConfig::get_or(const std::string& key, const std::string& fallback) const
{
    return get(key).value_or(fallback);
}

void TextConfig::set(const std::string& key, const std::string& value)
{
    m_entries.emplace_back(key, value);
}

std::vector<std::string> split_words(const std::string& text)
{
    std::istringstream in(text);
    std::vector<std::string> words;
    std::string w;
    while (in >> w) {
        words.push_back(w);
    }
    return words;
}

double parse_double(const std::string& text, const std::string& what)
{
    double value     = 0.0;
    const auto* end  = text.data() + text.size();
    auto [ptr, ec]   = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParseError(fmt::format("{}: '{}' is not a number", what, text));
    }
    return value;
}

long long parse_integer(const std::string& text, const std::string& what)
{
    long long value = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec]  = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParseError(fmt::format("{}: '{}' is not an integer", what, text));
    }
    return value;
}

std::uint64_t parse_unsigned(const std::string& text, const std::string& what)
{
    std::uint64_t value = 0;
    const auto* end     = text.data() + text.size();
    auto [ptr, ec]      = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParseError(fmt::format("{}: '{}' is not an unsigned integer", what, text));
    }
    return value;
}

} // namespace fieldlab
