#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "error.hpp"

namespace ctreg {

/// Shortest round-trip decimal form ("%.17g"), with inf/-inf/nan spelled out.
/// Used for every number written to CSV/JSON so outputs are byte-stable.
inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw FormatError(path.filename().string(), "cannot open for writing");
        row_strings(header);
    }

    template <class... Ts>
    void row(const Ts&... values) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(values), first = false), ...);
        out_ << '\n';
    }

    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

private:
    static std::string cell(double x) { return format_number(x); }
    static std::string cell(int x) { return std::to_string(x); }
    static std::string cell(long x) { return std::to_string(x); }
    static std::string cell(long long x) { return std::to_string(x); }
    static std::string cell(std::size_t x) { return std::to_string(x); }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }

    std::ofstream out_;
};

}  // namespace ctreg
