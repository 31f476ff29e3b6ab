#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace semrel::csv {

struct Record {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

// RFC 4180 reader: quoted fields may contain separators, quotes ("") and
// line breaks. A trailing CR before LF is dropped. Blank lines are skipped.
std::vector<Record> parse(std::string_view bytes, char separator = ',');

// Quotes a field when it contains the separator, a quote or a line break.
std::string escape(std::string_view field, char separator = ',');

}  // namespace semrel::csv
