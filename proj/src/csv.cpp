#include "cpalab/csv.h"

#include "cpalab/error.h"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace cpalab {

namespace {

std::string escape(const std::string &s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split(const std::string &line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    for (auto &cell : cells) {
        const auto b = cell.find_first_not_of(" \t");
        const auto e = cell.find_last_not_of(" \t");
        cell = b == std::string::npos ? std::string() : cell.substr(b, e - b + 1);
    }
    return cells;
}

double parse_double(const std::string &s, std::size_t line, const std::string &column) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception &) {
        used = 0;
    }
    if (s.empty() || used != s.size() || !std::isfinite(v))
        throw ParseError(line, "column " + column + ": not a number: '" + s + "'");
    return v;
}

} // namespace

std::string format_number(double v) {
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (std::isnan(v))
        return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path &path, const std::vector<std::string> &header)
    : out_(path, std::ios::trunc), columns_(header.size()), path_(path) {
    if (!out_)
        throw Error("cannot write " + path.string());
    for (const auto &h : header)
        cell(h);
    end_row();
}

CsvWriter &CsvWriter::cell(const std::string &s) {
    if (in_row_++ > 0)
        out_ << ',';
    out_ << escape(s);
    return *this;
}

CsvWriter &CsvWriter::cell(double v) { return cell(format_number(v)); }
CsvWriter &CsvWriter::cell(long long v) { return cell(std::to_string(v)); }
CsvWriter &CsvWriter::cell(unsigned long long v) { return cell(std::to_string(v)); }

void CsvWriter::end_row() {
    if (in_row_ != columns_)
        throw DimensionError(path_.string() + ": row with " + std::to_string(in_row_) + " cells, header has " +
                             std::to_string(columns_));
    out_ << '\n';
    in_row_ = 0;
    if (!out_)
        throw Error("write to " + path_.string() + " failed");
}

std::optional<std::size_t> CsvTable::find_column(const std::string &name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return i;
    return std::nullopt;
}

std::size_t CsvTable::column(const std::string &name) const {
    if (const auto c = find_column(name))
        return *c;
    throw ParseError(1, "header has no column '" + name + "'");
}

double CsvTable::number(std::size_t row, std::size_t col) const {
    return parse_double(rows[row][col], lines[row], header[col]);
}

CsvTable read_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open " + path.string());
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        auto cells = split(line);
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size())
            throw ParseError(line_no, "expected " + std::to_string(table.header.size()) + " fields, got " +
                                          std::to_string(cells.size()));
        table.rows.push_back(std::move(cells));
        table.lines.push_back(line_no);
    }
    if (table.header.empty())
        throw ParameterError(path.string() + ": empty file, expected a header row");
    if (table.rows.empty())
        throw ParameterError(path.string() + ": no data rows after the header");
    return table;
}

std::vector<DecayPoint> read_curve_csv(const std::filesystem::path &path) {
    const auto table = read_csv(path);
    const auto cn = table.column("n_pe"), cr = table.column("rho");
    std::vector<DecayPoint> points;
    for (std::size_t r = 0; r < table.rows.size(); ++r)
        points.push_back({table.number(r, cn), table.number(r, cr), {}});
    return points;
}

std::vector<SuccessPoint> read_success_csv(const std::filesystem::path &path, std::size_t tau) {
    const auto table = read_csv(path);
    const auto cn = table.column("n_pe"), cr = table.column("rho"), ci = table.column("best_incorrect");
    const auto cse = table.find_column("se"), csi = table.find_column("se_incorrect");
    std::vector<SuccessPoint> points;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        SuccessPoint p;
        const double n = table.number(r, cn);
        if (n < 1 || n != std::floor(n))
            throw ParseError(table.lines[r], "n_pe must be a positive integer");
        p.n_pe = static_cast<unsigned>(n);
        p.tau = tau;
        p.mean_correct = table.number(r, cr);
        p.mean_incorrect = table.number(r, ci);
        if (cse)
            p.se_correct = table.number(r, *cse);
        if (csi)
            p.se_incorrect = table.number(r, *csi);
        points.push_back(p);
    }
    return points;
}

} // namespace cpalab
