#include "fdm/io.hpp"

#include <cstdio>
#include <filesystem>

namespace fdm {

namespace fs = std::filesystem;

static void write_then_rename(const std::string& path, const char* data, std::size_t n) {
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for write: " + tmp.string());
        out.write(data, static_cast<std::streamsize>(n));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

void atomic_write_file(const std::string& path, const std::vector<char>& bytes) {
    write_then_rename(path, bytes.data(), bytes.size());
}

void atomic_write_file(const std::string& path, const std::string& text) {
    write_then_rename(path, text.data(), text.size());
}

std::vector<char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    in.seekg(0, std::ios::end);
    std::streamsize n = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<char> bytes(static_cast<std::size_t>(n));
    in.read(bytes.data(), n);
    if (!in) throw std::runtime_error("read failed: " + path);
    return bytes;
}

void ensure_dir(const std::string& path) { fs::create_directories(path); }

}  // namespace fdm
