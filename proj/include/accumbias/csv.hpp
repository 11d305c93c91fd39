#pragma once

// Minimal CSV output: comma separated, '.' decimals, LF line endings.
// Provenance goes in leading '#' lines above the header row.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "accumbias/config.hpp"
#include "accumbias/errors.hpp"

namespace accumbias {

inline constexpr std::string_view csv_na = "NA";

// 6 significant digits; NA for non-finite values.
inline std::string csv_num(double x) {
    return std::isfinite(x) ? format_double(x, 6) : std::string(csv_na);
}

// Shortest round-trip digits, for columns read back by tests.
inline std::string csv_full(double x) {
    return std::isfinite(x) ? format_double(x) : std::string(csv_na);
}

inline std::string csv_int(std::int64_t x) { return std::to_string(x); }

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void comment(const std::string& key, const std::string& value) {
        comments_.emplace_back(key, value);
    }

    void row(std::vector<std::string> cells) {
        if (cells.size() != columns_.size()) {
            throw invalid_input_error("csv row has " + std::to_string(cells.size()) +
                                      " cells, expected " + std::to_string(columns_.size()));
        }
        rows_.push_back(std::move(cells));
    }

    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }

    std::string str() const {
        std::string out;
        for (const auto& [k, v] : comments_) out += "# " + k + ": " + v + "\n";
        append_line(out, columns_);
        for (const auto& r : rows_) append_line(out, r);
        return out;
    }

    void write(const std::filesystem::path& path) const {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw io_error("cannot open '" + path.string() + "' for writing");
        const auto text = str();
        f.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!f) throw io_error("failed writing '" + path.string() + "'");
    }

private:
    static void append_line(std::string& out, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    }

    std::vector<std::string> columns_;
    std::vector<std::pair<std::string, std::string>> comments_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace accumbias
