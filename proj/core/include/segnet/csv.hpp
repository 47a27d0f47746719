#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace segnet {

// Raised for unreadable or malformed input files; what() carries file:line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::filesystem::path& file, std::size_t line, const std::string& message);

  const std::filesystem::path& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::filesystem::path file_;
  std::size_t line_;
};

struct CsvRow {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<CsvRow> rows;
};

// Splits one CSV record. Double-quoted fields may contain commas and doubled
// quotes; embedded newlines are not supported.
std::vector<std::string> split_csv_line(std::string_view line);

// Reads a whole CSV file. Blank lines and lines starting with '#' are skipped.
// When `has_header` is set, the first record becomes the header and every
// following record must have the same width.
CsvTable read_csv(const std::filesystem::path& file, bool has_header = true);

std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Shortest decimal that round-trips the value; "nan"/"inf" for non-finite.
std::string format_double(double value);

}  // namespace segnet
