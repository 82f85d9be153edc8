#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>

#include "errors.hpp"

namespace frlab {

// All floating-point output goes through one formatter (12 significant
// digits) so reruns can be compared byte for byte.
inline std::string fmt_g12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

class CsvWriter {
public:
    struct Cell {
        std::string text;
        Cell(const char* s) : text(s) {}
        Cell(std::string s) : text(std::move(s)) {}
        Cell(std::string_view s) : text(s) {}
        Cell(double v) : text(fmt_g12(v)) {}
        Cell(int v) : text(std::to_string(v)) {}
        Cell(long v) : text(std::to_string(v)) {}
        Cell(long long v) : text(std::to_string(v)) {}
        Cell(unsigned long v) : text(std::to_string(v)) {}
        Cell(unsigned long long v) : text(std::to_string(v)) {}
        Cell(bool v) : text(v ? "1" : "0") {}
    };

    explicit CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
        if (!out_)
            throw resource_error("csv: cannot open " + path.string() + " for writing");
    }

    void row(std::initializer_list<Cell> cells) {
        bool first = true;
        for (const auto& c : cells) {
            if (!first) out_ << ',';
            out_ << c.text;
            first = false;
        }
        out_ << '\n';
    }

    void flush() { out_.flush(); }

private:
    std::ofstream out_;
};

} // namespace frlab
