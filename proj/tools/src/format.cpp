#include "format.hpp"

#include <cmath>
#include <cstdio>
#include <istream>

#include "bcle/cli.hpp"

namespace bcle::cli {

std::string fmt17(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

void write_value(std::ostream& os, const Json& j, int depth) {
  const std::string pad(std::size_t(2 * (depth + 1)), ' '), end(std::size_t(2 * depth), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        os << (first ? "" : ",\n") << pad << Json(it.key()).dump() << ": ";
        write_value(os, it.value(), depth + 1);
        first = false;
      }
      os << "\n" << end << "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      // short arrays of scalars stay on one line
      bool flat = j.size() <= 8;
      for (const auto& v : j) flat = flat && !v.is_structured();
      os << (flat ? "[" : "[\n");
      bool first = true;
      for (const auto& v : j) {
        os << (first ? "" : flat ? ", " : ",\n") << (flat ? "" : pad);
        write_value(os, v, depth + 1);
        first = false;
      }
      os << (flat ? "]" : "\n" + end + "]");
      return;
    }
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      if (!std::isfinite(x)) {
        os << "null";
        return;
      }
      std::string s = fmt17(x);
      // keep it a float on re-read
      if (s.find_first_of(".eE") == std::string::npos) s += ".0";
      os << s;
      return;
    }
    default:
      os << j.dump();
  }
}

std::string cell_text(const Cell& c) {
  struct V {
    std::string operator()(const std::string& s) const {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      return q + "\"";
    }
    std::string operator()(double x) const { return fmt17(x); }
    std::string operator()(long x) const { return std::to_string(x); }
    std::string operator()(bool x) const { return x ? "true" : "false"; }
  };
  return std::visit(V{}, c);
}

}  // namespace

void write_json(std::ostream& os, const Json& j) {
  write_value(os, j, 0);
  os << "\n";
}

void Table::write_csv(std::ostream& os) const {
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << cell_text(r[i]);
    os << "\n";
  }
}

Json Table::to_json() const {
  Json a = Json::array();
  for (const auto& r : rows) {
    Json o = Json::object();
    for (std::size_t i = 0; i < r.size() && i < columns.size(); ++i)
      std::visit([&](const auto& v) { o[columns[i]] = v; }, r[i]);
    a.push_back(std::move(o));
  }
  return a;
}

// no quoted fields with embedded newlines; enough for the files written here
std::vector<std::vector<std::string>> read_csv(std::istream& is) {
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char ch = line[i];
      if (quoted) {
        if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          f.back() += '"';
          ++i;
        } else if (ch == '"') {
          quoted = false;
        } else {
          f.back() += ch;
        }
      } else if (ch == '"') {
        quoted = true;
      } else if (ch == ',') {
        f.emplace_back();
      } else {
        f.back() += ch;
      }
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace bcle::cli
