#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hiernav::text {

// Splits on '\n', stripping a trailing '\r'. A final empty line is dropped.
std::vector<std::string_view> lines(std::string_view text);
std::vector<std::string_view> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
// Strict parse of the whole string; returns false on any trailing garbage.
bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, long long& out);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace hiernav::text
