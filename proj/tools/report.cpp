#include "report.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <ostream>

namespace ulvm::cli {

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

bool numeric(const std::string& s) {
  if (s.empty() || s == "-") return true;
  std::size_t i = s[0] == '-' ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '%' || c == 'e' ||
          c == '+' || c == '-')) {
      return false;
    }
  }
  return true;
}

void emit_text(std::ostream& os, const Table& t) {
  std::vector<std::size_t> width(t.header.size(), 0);
  std::vector<bool> right(t.header.size(), true);
  for (const auto& r : t.rows)
    for (std::size_t i = 0; i < r.size() && i < right.size(); ++i)
      right[i] = right[i] && numeric(r[i]);
  auto widen = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i)
      width[i] = std::max(width[i], r[i].size());
  };
  widen(t.header);
  for (const auto& r : t.rows) widen(r);
  auto line = [&](const std::vector<std::string>& r) {
    std::string s;
    for (std::size_t i = 0; i < r.size(); ++i) {
      // numeric columns right-aligned, text columns left-aligned
      const std::size_t pad = width[i] - std::min(width[i], r[i].size());
      if (i > 0) s += "  ";
      s += right[i] ? std::string(pad, ' ') + r[i] : r[i] + std::string(pad, ' ');
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    os << s << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

void emit_csv(std::ostream& os, const Table& t) {
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_cell(r[i]);
    os << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

}  // namespace

void emit(std::ostream& os, const Report& r, Format f) {
  switch (f) {
    case Format::kText:
      emit_text(os, r.table);
      break;
    case Format::kCsv:
      emit_csv(os, r.table);
      break;
    case Format::kJson:
      os << r.doc.dump(2) << '\n';
      break;
  }
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace ulvm::cli
