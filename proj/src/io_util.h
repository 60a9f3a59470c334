#ifndef COMPLYFED_SRC_IO_UTIL_H_
#define COMPLYFED_SRC_IO_UTIL_H_

#include <filesystem>
#include <string>
#include <string_view>

namespace complyfed::internal {

std::string read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, std::string_view contents);

// Shortest decimal text that round-trips the double ("%.17g").
std::string format_double(double value);

}  // namespace complyfed::internal

#endif  // COMPLYFED_SRC_IO_UTIL_H_
