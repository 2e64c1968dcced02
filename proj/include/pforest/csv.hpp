#pragma once

// Minimal RFC-4180 CSV: comma separated, optional double-quote quoting with
// "" escapes, CRLF or LF row ends, UTF-8 passthrough, '.' decimal separator.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pforest/numeric.hpp"

namespace pforest::csv {

inline std::vector<std::string> split_line(const std::string& line, const std::string& where) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted) throw DataError("csv: unterminated quote at " + where);
  fields.push_back(cur);
  return fields;
}

// Reads all rows; strips a trailing '\r' per line. Empty trailing lines are
// ignored. Multiline quoted fields are not supported (no use for them here).
inline std::vector<std::vector<std::string>> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    rows.push_back(split_line(line, path + ":" + std::to_string(lineno)));
  }
  return rows;
}

inline bool needs_quoting(const std::string& field) {
  return field.find_first_of(",\"\n\r") != std::string::npos;
}

inline std::string quote(const std::string& field) {
  if (!needs_quoting(field)) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

inline std::string row_string(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += quote(fields[i]);
  }
  return out;
}

inline void write_row(std::ostream& os, const std::vector<std::string>& fields) {
  os << row_string(fields);
  os.put('\n');
}

}  // namespace pforest::csv
