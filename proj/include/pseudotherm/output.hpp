#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "pseudotherm/matrix.hpp"

namespace pt {

inline constexpr const char* kVersion = "0.1.0";

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row);
    double number(std::size_t row, std::size_t col) const;
    std::size_t column(const std::string& name) const;
};

// "# pseudotherm v<semver> config=<hash> seed=<n>[ key=value ...]"
std::string provenance_line(const std::string& config_hash, std::uint64_t seed,
                            const std::vector<std::pair<std::string, std::string>>& extra = {});

// floats with 17 significant digits, so a parse/format round trip is exact
std::string format_cell(const Cell& c);
std::string format_csv(const Table& t, const std::string& provenance);
Table parse_csv(const std::string& text, std::string* provenance = nullptr);

struct PlotOptions {
    std::string title;
    std::string x_label, y_label;
    bool log_x = false;
    bool scatter = false;
};

// line or scatter plot of every numeric column against the first one
std::string render_svg(const Table& t, const PlotOptions& opt);

// first line dim, then dim rows of whitespace-separated re,im pairs
ComplexMatrix parse_matrix(const std::string& text, const std::string& origin = "<matrix>");
ComplexMatrix read_matrix_file(const std::string& path);
std::string format_matrix(const ComplexMatrix& m);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& content);

}  // namespace pt
