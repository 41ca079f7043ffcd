#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tm2d {

// Shortest decimal that round-trips to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::vector<std::string> split_ws(std::string_view line);
std::string trim(std::string_view s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace tm2d
