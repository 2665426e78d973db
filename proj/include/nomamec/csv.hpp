#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nomamec/sysmodel.hpp"

namespace nomamec {
namespace csv {

// Minimal CSV support for the result files: no quoting, fixed 12 significant
// digits so reruns are byte-identical.
class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path) {
    if (!out_) throw ConfigError("csv: cannot open '" + path + "' for write");
    out_.precision(12);
  }

  template <typename... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((out_ << (first ? "" : ","), first = false, out_ << fields), ...);
    out_ << '\n';
  }

  std::ofstream& stream() { return out_; }

 private:
  std::ofstream out_;
};

inline std::vector<std::vector<std::string>> read_rows(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("csv: cannot open '" + path + "' for read");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace csv
}  // namespace nomamec
