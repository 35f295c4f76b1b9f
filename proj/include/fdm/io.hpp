#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdm {

// Little-endian binary writer. All project file formats are little-endian;
// these helpers assume a little-endian host (asserted at startup in the CLI).
class BinWriter {
public:
    void put_bytes(const void* p, std::size_t n) {
        const char* c = static_cast<const char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    void put_magic(const char magic[8]) { put_bytes(magic, 8); }
    void put_u8(std::uint8_t v) { put_bytes(&v, 1); }
    void put_u32(std::uint32_t v) { put_bytes(&v, 4); }
    void put_u64(std::uint64_t v) { put_bytes(&v, 8); }
    void put_f32(float v) { put_bytes(&v, 4); }
    void put_f64(double v) { put_bytes(&v, 8); }

    const std::vector<char>& bytes() const { return buf_; }

private:
    std::vector<char> buf_;
};

class BinReader {
public:
    explicit BinReader(std::vector<char> bytes) : buf_(std::move(bytes)) {}

    void get_bytes(void* p, std::size_t n) {
        if (pos_ + n > buf_.size()) throw std::runtime_error("binary file truncated");
        std::memcpy(p, buf_.data() + pos_, n);
        pos_ += n;
    }
    void expect_magic(const char magic[8]) {
        char got[8];
        get_bytes(got, 8);
        if (std::memcmp(got, magic, 8) != 0)
            throw std::runtime_error("bad file magic, expected " + std::string(magic, 8));
    }
    std::uint8_t get_u8() { std::uint8_t v; get_bytes(&v, 1); return v; }
    std::uint32_t get_u32() { std::uint32_t v; get_bytes(&v, 4); return v; }
    std::uint64_t get_u64() { std::uint64_t v; get_bytes(&v, 8); return v; }
    float get_f32() { float v; get_bytes(&v, 4); return v; }
    double get_f64() { double v; get_bytes(&v, 8); return v; }
    bool at_end() const { return pos_ == buf_.size(); }

private:
    std::vector<char> buf_;
    std::size_t pos_ = 0;
};

// Writes via a temp file in the same directory, then renames over the target.
void atomic_write_file(const std::string& path, const std::vector<char>& bytes);
void atomic_write_file(const std::string& path, const std::string& text);

std::vector<char> read_file(const std::string& path);

void ensure_dir(const std::string& path);

}  // namespace fdm
