#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gaussperc::csv {

/// Shortest decimal that round-trips to `v`; "inf", "-inf" and "nan" for
/// non-finite values.
std::string format_double(double v);

using Cell = std::variant<std::string, double, std::int64_t, std::uint64_t, bool>;

std::string format_cell(const Cell& cell);

/// RFC 4180 record: fields quoted when needed, CRLF terminated.
std::string format_row(const std::vector<std::string>& fields);

/// Appends rows to a CSV file; the header is written on open.
class Writer {
 public:
  Writer(const std::filesystem::path& path, std::vector<std::string> header);

  void row(const std::vector<Cell>& cells);
  void flush();
  const std::filesystem::path& path() const noexcept { return path_; }
  const std::vector<std::string>& header() const noexcept { return header_; }

 private:
  std::filesystem::path path_;
  std::vector<std::string> header_;
  std::ofstream out_;
};

/// Parsed CSV with a header row.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name`, or -1.
  std::ptrdiff_t find(std::string_view name) const noexcept;
  /// Column parsed as doubles ("inf" allowed); throws ValidationError("columns") when absent.
  std::vector<double> numbers(std::string_view name) const;
};

Table parse(std::string_view text);
Table read(const std::filesystem::path& path);

}  // namespace gaussperc::csv
