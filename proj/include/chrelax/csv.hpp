#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "chrelax/errors.hpp"

namespace chrelax {

/// Shortest decimal with 17 significant digits: round-trips binary doubles.
inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Comma-separated file with a header row; all numeric cells are expected to
/// be pre-formatted through g17 so that identical runs produce identical
/// bytes.
class CsvFile {
public:
    explicit CsvFile(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw Error("cannot open output file " + path);
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

} // namespace chrelax
