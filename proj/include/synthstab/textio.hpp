#pragma once

#include <map>
#include <string>
#include <string_view>

namespace synthstab {

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view content);
std::string read_file(const std::string& path);

/// `key=value` lines; '#' starts a comment; surrounding blanks are trimmed.
std::map<std::string, std::string> parse_key_values(std::string_view text, char separator = '=');

std::string trim(std::string_view s);
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

void ensure_directory(const std::string& path);

}  // namespace synthstab
