#include "pseudotherm/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pseudotherm/errors.hpp"

namespace pt {

void Table::add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw InvalidArgument("row width differs from the header");
    rows.push_back(std::move(row));
}

double Table::number(std::size_t row, std::size_t col) const {
    const Cell& c = rows.at(row).at(col);
    if (auto d = std::get_if<double>(&c)) return *d;
    if (auto i = std::get_if<std::int64_t>(&c)) return double(*i);
    throw InvalidArgument("cell is not numeric");
}

std::size_t Table::column(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw InvalidArgument("no column '" + name + "'");
    return std::size_t(it - columns.begin());
}

std::string provenance_line(const std::string& config_hash, std::uint64_t seed,
                            const std::vector<std::pair<std::string, std::string>>& extra) {
    std::ostringstream os;
    os << "# pseudotherm v" << kVersion << " config=" << config_hash << " seed=" << seed;
    for (const auto& [k, v] : extra) os << " " << k << "=" << v;
    return os.str();
}

std::string format_cell(const Cell& c) {
    if (auto i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    if (auto s = std::get_if<std::string>(&c)) return *s;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", std::get<double>(c));
    return buf;
}

std::string format_csv(const Table& t, const std::string& provenance) {
    std::ostringstream os;
    os << provenance << "\n";
    for (std::size_t k = 0; k < t.columns.size(); ++k) os << (k ? "," : "") << t.columns[k];
    os << "\n";
    for (const auto& row : t.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << format_cell(row[k]);
        os << "\n";
    }
    return os.str();
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

Cell parse_cell(const std::string& s) {
    if (s.empty()) return s;
    char* end = nullptr;
    const bool integral = s.find_first_of(".eEinfINFnaNA") == std::string::npos;
    if (integral) {
        const long long v = std::strtoll(s.c_str(), &end, 10);
        if (end && *end == '\0') return std::int64_t(v);
    }
    const double d = std::strtod(s.c_str(), &end);
    if (end && *end == '\0') return d;
    return s;
}

}  // namespace

Table parse_csv(const std::string& text, std::string* provenance) {
    Table t;
    std::stringstream ss(text);
    std::string line;
    bool header = false;
    while (std::getline(ss, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind("#", 0) == 0) {
            if (provenance && provenance->empty()) *provenance = line;
            continue;
        }
        if (line.empty()) continue;
        if (!header) {
            t.columns = split(line, ',');
            header = true;
            continue;
        }
        std::vector<Cell> row;
        for (const auto& f : split(line, ',')) row.push_back(parse_cell(f));
        t.add(std::move(row));
    }
    if (!header) throw InvalidArgument("CSV has no header row");
    return t;
}

namespace {

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

std::string tick_label(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<')
            o += "&lt;";
        else if (c == '>')
            o += "&gt;";
        else if (c == '&')
            o += "&amp;";
        else
            o += c;
    }
    return o;
}

}  // namespace

std::string render_svg(const Table& t, const PlotOptions& opt) {
    const double W = 720, H = 440, left = 80, right = 170, top = 40, bottom = 60;
    const double pw = W - left - right, ph = H - top - bottom;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    std::vector<std::size_t> ycols;
    for (std::size_t c = 1; c < t.columns.size(); ++c) {
        bool numeric = !t.rows.empty();
        for (const auto& row : t.rows) numeric &= !std::holds_alternative<std::string>(row[c]);
        if (numeric) ycols.push_back(c);
    }
    auto xval = [&](std::size_t r) {
        const double x = t.number(r, 0);
        return opt.log_x ? std::log10(x) : x;
    };
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const double x = xval(r);
        if (!std::isfinite(x)) continue;
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        for (auto c : ycols) {
            const double y = t.number(r, c);
            if (!std::isfinite(y)) continue;
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    if (!(x1 > x0)) x1 = x0 + 1;
    if (!(y1 > y0)) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto X = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto Y = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(opt.title)
       << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double xv = x0 + (x1 - x0) * k / 5, yv = y0 + (y1 - y0) * k / 5;
        os << "<line x1=\"" << num(X(xv)) << "\" y1=\"" << top + ph << "\" x2=\"" << num(X(xv)) << "\" y2=\""
           << top + ph + 5 << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(X(xv)) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
           << tick_label(opt.log_x ? std::pow(10.0, xv) : xv) << "</text>\n";
        os << "<line x1=\"" << left - 5 << "\" y1=\"" << num(Y(yv)) << "\" x2=\"" << left << "\" y2=\"" << num(Y(yv))
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << left - 8 << "\" y=\"" << num(Y(yv) + 4) << "\" text-anchor=\"end\">" << tick_label(yv)
           << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">"
       << escape(opt.x_label.empty() ? t.columns[0] : opt.x_label) << "</text>\n";
    os << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
       << escape(opt.y_label) << "</text>\n";

    for (std::size_t k = 0; k < ycols.size(); ++k) {
        const char* col = colors[k % 6];
        const std::size_t c = ycols[k];
        if (opt.scatter) {
            for (std::size_t r = 0; r < t.rows.size(); ++r) {
                const double x = xval(r), y = t.number(r, c);
                if (std::isfinite(x) && std::isfinite(y))
                    os << "<circle cx=\"" << num(X(x)) << "\" cy=\"" << num(Y(y)) << "\" r=\"2.5\" fill=\"" << col
                       << "\"/>\n";
            }
        } else {
            os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t r = 0; r < t.rows.size(); ++r) {
                const double x = xval(r), y = t.number(r, c);
                if (std::isfinite(x) && std::isfinite(y)) os << num(X(x)) << "," << num(Y(y)) << " ";
            }
            os << "\"/>\n";
        }
        const double ly = top + 14 + 18 * double(k);
        os << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw + 32 << "\" y2=\""
           << ly - 4 << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << left + pw + 36 << "\" y=\"" << ly << "\">" << escape(t.columns[c]) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

ComplexMatrix parse_matrix(const std::string& text, const std::string& origin) {
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + msg);
    };
    auto next = [&]() {
        while (std::getline(ss, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") != std::string::npos) return true;
        }
        return false;
    };
    if (!next()) fail("empty matrix file");
    char* end = nullptr;
    const long dim = std::strtol(line.c_str(), &end, 10);
    if (dim < 1 || (end && std::string(end).find_first_not_of(" \t") != std::string::npos))
        fail("first line must be the dimension");
    ComplexMatrix m{static_cast<std::size_t>(dim)};
    for (long i = 0; i < dim; ++i) {
        if (!next()) fail("expected " + std::to_string(dim) + " rows");
        std::stringstream row(line);
        std::string tok;
        long j = 0;
        while (row >> tok) {
            if (j >= dim) fail("too many entries in row");
            const auto comma = tok.find(',');
            if (comma == std::string::npos) fail("entry '" + tok + "' is not re,im");
            const std::string re = tok.substr(0, comma), im = tok.substr(comma + 1);
            char* e1 = nullptr;
            char* e2 = nullptr;
            const double a = std::strtod(re.c_str(), &e1), b = std::strtod(im.c_str(), &e2);
            if (re.empty() || im.empty() || *e1 != '\0' || *e2 != '\0' || !std::isfinite(a) || !std::isfinite(b))
                fail("entry '" + tok + "' is not re,im");
            m(std::size_t(i), std::size_t(j++)) = cplx(a, b);
        }
        if (j != dim) fail("row has " + std::to_string(j) + " entries, expected " + std::to_string(dim));
    }
    if (next()) fail("trailing content after the matrix");
    return m;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ComplexMatrix read_matrix_file(const std::string& path) { return parse_matrix(read_text(path), path); }

std::string format_matrix(const ComplexMatrix& m) {
    std::ostringstream os;
    os << m.dim() << "\n";
    for (std::size_t i = 0; i < m.dim(); ++i) {
        for (std::size_t j = 0; j < m.dim(); ++j)
            os << (j ? " " : "") << format_cell(m(i, j).real()) << "," << format_cell(m(i, j).imag());
        os << "\n";
    }
    return os.str();
}

void write_text(const std::string& path, const std::string& content) {
    const auto dir = std::filesystem::path(path).parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(path + ": cannot write file");
    out << content;
}

}  // namespace pt
