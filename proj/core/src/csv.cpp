#include "gaussperc/csv.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "gaussperc/error.hpp"

namespace gaussperc::csv {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_cell(const Cell& cell) {
  struct Visitor {
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(std::uint64_t v) const { return std::to_string(v); }
    std::string operator()(bool v) const { return v ? "1" : "0"; }
  };
  return std::visit(Visitor{}, cell);
}

std::string format_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
      out += f;
      continue;
    }
    out += '"';
    for (char c : f) {
      if (c == '"') out += '"';
      out += c;
    }
    out += '"';
  }
  out += "\r\n";
  return out;
}

Writer::Writer(const std::filesystem::path& path, std::vector<std::string> header)
    : path_(path), header_(std::move(header)), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out_ << format_row(header_);
}

void Writer::row(const std::vector<Cell>& cells) {
  if (cells.size() != header_.size())
    throw std::logic_error("csv row has " + std::to_string(cells.size()) + " cells, header has " +
                           std::to_string(header_.size()));
  std::vector<std::string> fields;
  fields.reserve(cells.size());
  for (const auto& c : cells) fields.push_back(format_cell(c));
  out_ << format_row(fields);
}

void Writer::flush() {
  out_.flush();
  if (!out_) throw std::runtime_error("write to " + path_.string() + " failed");
}

std::ptrdiff_t Table::find(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<std::ptrdiff_t>(i);
  return -1;
}

std::vector<double> Table::numbers(std::string_view name) const {
  const std::ptrdiff_t idx = find(name);
  if (idx < 0) throw ValidationError("columns", "missing column '" + std::string(name) + "'");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    const std::string& s = r.at(static_cast<std::size_t>(idx));
    if (s == "inf") {
      out.push_back(INFINITY);
    } else if (s == "-inf") {
      out.push_back(-INFINITY);
    } else if (s == "nan" || s.empty()) {
      out.push_back(NAN);
    } else {
      double v = 0.0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ValidationError("columns", "column '" + std::string(name) + "' has non-numeric value '" + s + "'");
      out.push_back(v);
    }
  }
  return out;
}

Table parse(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      record.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(record));
      record.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw ValidationError("table", "unterminated quoted field");
  if (any || !field.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  Table t;
  if (records.empty()) throw ValidationError("table", "missing header row");
  t.columns = std::move(records.front());
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != t.columns.size())
      throw ValidationError("table", "row " + std::to_string(i) + " has the wrong number of fields");
    t.rows.push_back(std::move(records[i]));
  }
  return t;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("table", "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse(s.str());
}

}  // namespace gaussperc::csv
