#include "fdm/csv.hpp"

#include <cstdarg>
#include <cstdio>
#include <string_view>

namespace fdm {

void append_format(std::string& out, const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    char stack_buf[512];
    va_list copy;
    va_copy(copy, args);
    const int need = std::vsnprintf(stack_buf, sizeof(stack_buf), fmt, copy);
    va_end(copy);
    if (need < static_cast<int>(sizeof(stack_buf))) {
        out.append(stack_buf, static_cast<std::size_t>(need));
    } else {
        std::vector<char> heap_buf(static_cast<std::size_t>(need) + 1);
        std::vsnprintf(heap_buf.data(), heap_buf.size(), fmt, args);
        out.append(heap_buf.data(), static_cast<std::size_t>(need));
    }
    va_end(args);
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) {
            std::vector<std::string> fields;
            std::size_t f = 0;
            while (true) {
                std::size_t comma = line.find(',', f);
                if (comma == std::string_view::npos) {
                    fields.emplace_back(line.substr(f));
                    break;
                }
                fields.emplace_back(line.substr(f, comma - f));
                f = comma + 1;
            }
            rows.push_back(std::move(fields));
        }
        pos = eol + 1;
    }
    return rows;
}

}  // namespace fdm
