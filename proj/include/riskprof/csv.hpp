#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace riskprof::csv {

/// A parsed comma-separated table. Fields are not quoted in any of our formats.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position by name; throws ValidationError when absent.
  std::size_t column(const std::string& name) const;
};

std::vector<std::string> split_line(const std::string& line, char sep = ',');

/// Reads a header-bearing table. Blank lines are skipped; rows with the wrong
/// number of fields are reported by 1-based data row number.
Table read(std::istream& in);
Table read_file(const std::filesystem::path& path);

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
};

}  // namespace riskprof::csv
