#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small text helpers shared by the CSV and spec-file readers.
namespace iclv::text {

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep, bool trim_fields = true);
std::vector<std::string> split_ws(std::string_view s);

// Strict parses: the whole field must be consumed.
bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, int& out);

// Shortest representation that round-trips exactly.
std::string format_double(double v);
// Fixed-precision rendering for reports.
std::string fixed(double v, int decimals);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace iclv::text
