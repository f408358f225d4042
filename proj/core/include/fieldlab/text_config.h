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
#ifndef FIELDLAB_TEXT_CONFIG_H
#define FIELDLAB_TEXT_CONFIG_H

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fieldlab
{

/**
 * Plain-text key/value configuration.
 *
 * One `key = value` per line; `#` starts a comment; blank lines are
 * ignored. Keys may repeat (e.g. several `group` lines); entries keep file
 * order.
 */
class TextConfig
{
public:
    static TextConfig parse(std::istream& in);
    static TextConfig load(const std::filesystem::path& path);

    std::optional<std::string> get(const std::string& key) const;
    std::vector<std::string> get_all(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    void set(const std::string& key, const std::string& value);

    const std::vector<std::pair<std::string, std::string>>& entries() const
    {
        return m_entries;
    }

private:
    std::vector<std::pair<std::string, std::string>> m_entries;
};

/// Whitespace-separated tokens.
std::vector<std::string> split_words(const std::string& text);

double parse_double(const std::string& text, const std::string& what);
long long parse_integer(const std::string& text, const std::string& what);
std::uint64_t parse_unsigned(const std::string& text, const std::string& what);

} // namespace fieldlab

#endif // FIELDLAB_TEXT_CONFIG_H
