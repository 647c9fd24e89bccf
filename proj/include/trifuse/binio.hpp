// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "trifuse/error.hpp"

namespace trifuse {

// Little-endian binary readers/writers shared by the TRPL/IMGF/FLOW/MLPW
// container formats. The readers track the byte offset so format errors can
// say where the file went wrong.

class binary_writer {
  public:
    explicit binary_writer(const std::filesystem::path& path)
        : path_(path.string()), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw io_error("cannot open for writing: " + path_);
    }

    void magic(const char tag[4]) { raw(tag, 4); }
    void u32(uint32_t v) { raw(&v, 4); }
    void f32(float v) { raw(&v, 4); }
    void f32_array(std::span<const float> v) { raw(v.data(), v.size() * 4); }

    void finish() {
        out_.flush();
        if (!out_) throw io_error("write failed: " + path_);
    }

  private:
    void raw(const void* p, size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }

    std::string path_;
    std::ofstream out_;
};

class binary_reader {
  public:
    explicit binary_reader(const std::filesystem::path& path)
        : path_(path.string()), in_(path, std::ios::binary) {
        if (!in_) throw io_error("cannot open for reading: " + path_);
    }

    void expect_magic(const char tag[4]) {
        char got[4] = {};
        raw(got, 4, "magic");
        if (std::memcmp(got, tag, 4) != 0)
            throw format_error(path_ + ": bad magic at byte 0 (expected \"" +
                               std::string(tag, 4) + "\")");
    }

    uint32_t u32(const char* what) {
        uint32_t v = 0;
        raw(&v, 4, what);
        return v;
    }

    void expect_version(uint32_t want) {
        size_t at = offset_;
        uint32_t got = u32("version");
        if (got != want)
            throw format_error(path_ + ": unsupported version " + std::to_string(got) +
                               " at byte " + std::to_string(at));
    }

    void f32_array(std::span<float> v, const char* what) { raw(v.data(), v.size() * 4, what); }

    size_t offset() const { return offset_; }
    const std::string& path() const { return path_; }

  private:
    void raw(void* p, size_t n, const char* what) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<size_t>(in_.gcount()) != n)
            throw format_error(path_ + ": truncated while reading " + std::string(what) +
                               " at byte " + std::to_string(offset_ + in_.gcount()));
        offset_ += n;
    }

    std::string path_;
    std::ifstream in_;
    size_t offset_ = 0;
};

}  // namespace trifuse
