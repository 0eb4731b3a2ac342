#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace ulvm::cli {

enum class Format { kText, kJson, kCsv };

/// Rows of already formatted cells, printed as aligned text or CSV.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  Table& row(std::vector<std::string> cells) {
    rows.push_back(std::move(cells));
    return *this;
  }
};

/// One command result: a table for text/csv and a document for json.
struct Report {
  Table table;
  nlohmann::ordered_json doc;
};

void emit(std::ostream& os, const Report& r, Format f);

std::string fixed(double v, int decimals);

}  // namespace ulvm::cli
