#pragma once

#include <json.hpp>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace bcle::cli {

using Json = nlohmann::ordered_json;

// JSON text with doubles at 17 significant digits, non-finite as null,
// two-space indent
void write_json(std::ostream& os, const Json& j);

using Cell = std::variant<std::string, double, long, bool>;

struct Table {
  explicit Table(std::vector<std::string> cols) : columns(std::move(cols)) {}
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
  void write_csv(std::ostream& os) const;
  Json to_json() const;  // array of row objects
};

std::vector<std::vector<std::string>> read_csv(std::istream& is);

}  // namespace bcle::cli
