#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace rdsnet::csv {

/// Reads one CSV record (RFC 4180 quoting, CRLF tolerant). Returns false at EOF.
inline bool read_row(std::istream& in, std::vector<std::string>& out) {
  out.clear();
  int c = in.get();
  if (c == EOF) return false;
  std::string field;
  bool quoted = false;
  while (true) {
    if (quoted) {
      if (c == EOF) break;  // unterminated quote: accept what we have
      if (c == '"') {
        int next = in.peek();
        if (next == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        field.push_back(static_cast<char>(c));
      }
    } else {
      if (c == EOF || c == '\n') break;
      if (c == '\r') {
        if (in.peek() == '\n') in.get();
        break;
      }
      if (c == '"' && field.empty()) {
        quoted = true;
      } else if (c == ',') {
        out.push_back(std::move(field));
        field.clear();
      } else {
        field.push_back(static_cast<char>(c));
      }
    }
    c = in.get();
  }
  out.push_back(std::move(field));
  return true;
}

inline std::string escape(const std::string& s) {
  bool needs_quote = s.find_first_of(",\"\n\r") != std::string::npos;
  if (!needs_quote) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += "\"\"";
    else q.push_back(c);
  }
  q.push_back('"');
  return q;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.put(',');
    out << escape(fields[i]);
  }
  out.put('\n');
}

}  // namespace rdsnet::csv
