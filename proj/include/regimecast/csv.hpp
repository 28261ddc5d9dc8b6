#pragma once

#include <string>
#include <vector>

#include "regimecast/types.hpp"

namespace regimecast {

/// Parsed CSV contents: one header row plus data rows of string cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position by name; throws if absent.
  std::size_t column(const std::string& name) const;
};

/// Read a comma-separated file with a header row. Handles CRLF endings and
/// double-quoted cells containing commas.
CsvTable read_csv(const std::string& path);

/// Split one CSV line into cells.
std::vector<std::string> split_csv_line(const std::string& line);

/// Format a scalar with enough digits to round-trip deterministically.
std::string format_number(Scalar value);

/// Write rows of preformatted cells with a header. Overwrites the file.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace regimecast
