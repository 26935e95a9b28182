#pragma once

#include "cpalab/fitting.h"

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace cpalab {

/// Comma-separated output with a header row. Numbers are written with
/// "%.10g" so reruns produce identical bytes.
class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path &path, const std::vector<std::string> &header);

    CsvWriter &cell(const std::string &s);
    CsvWriter &cell(const char *s) { return cell(std::string(s)); }
    CsvWriter &cell(double v);
    CsvWriter &cell(long long v);
    CsvWriter &cell(unsigned long long v);
    CsvWriter &cell(int v) { return cell(static_cast<long long>(v)); }
    CsvWriter &cell(unsigned v) { return cell(static_cast<unsigned long long>(v)); }
    CsvWriter &cell(unsigned long v) { return cell(static_cast<unsigned long long>(v)); }
    CsvWriter &cell(bool v) { return cell(static_cast<long long>(v ? 1 : 0)); }
    void end_row();

  private:
    std::ofstream out_;
    std::size_t columns_;
    std::size_t in_row_ = 0;
    std::filesystem::path path_;
};

std::string format_number(double v);

/// A parsed CSV file: header plus rows of equal width. Each row remembers its
/// 1-based line number for error messages.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> lines;

    /// Index of a header column, or throws ParseError naming it.
    std::size_t column(const std::string &name) const;
    std::optional<std::size_t> find_column(const std::string &name) const;
    double number(std::size_t row, std::size_t col) const;
};

CsvTable read_csv(const std::filesystem::path &path);

/// Parse a curve CSV with a header naming at least the columns n_pe and rho.
/// Malformed rows raise ParseError with the line number; a file without
/// data rows raises ParameterError.
std::vector<DecayPoint> read_curve_csv(const std::filesystem::path &path);

/// Parse a success-curve CSV with columns n_pe, rho and best_incorrect (se
/// and se_incorrect are read when present). All rows share the step \p tau.
std::vector<SuccessPoint> read_success_csv(const std::filesystem::path &path, std::size_t tau = 0);

} // namespace cpalab
