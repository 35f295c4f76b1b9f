#pragma once

#include <string>
#include <vector>

namespace fdm {

// printf-style append onto an output string.
void append_format(std::string& out, const char* fmt, ...);

// Splits plain comma-separated text into rows of fields. No quoting rules:
// fields may not contain commas or newlines. A trailing newline does not
// produce an empty row.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

}  // namespace fdm
