#pragma once

// CSV serialization of a LatticePMF:
//
//   # lattice_pmf offset=<offset> min_index=<min_index>
//   index,position,prob
//   <min_index + k>,<position>,<prob>
//
// Values are written with max_digits10 so a read-back is bit-exact.

#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "steinbin/lattice_dist.hpp"

namespace steinbin {

inline void write_pmf_csv(std::ostream& os, const LatticePMF& p) {
  std::ostringstream buf;
  buf << std::setprecision(std::numeric_limits<double>::max_digits10);
  buf << "# lattice_pmf offset=" << p.offset() << " min_index=" << p.min_index() << '\n';
  buf << "index,position,prob\n";
  for (std::size_t k = 0; k < p.size(); ++k)
    buf << p.min_index() + static_cast<std::int64_t>(k) << ',' << p.position(k) << ','
        << p.probs()[k] << '\n';
  os << buf.str();
}

inline LatticePMF read_pmf_csv(std::istream& is) {
  std::string line;
  double offset = 0.0;
  std::int64_t min_index = 0;
  bool have_header = false;
  bool have_columns = false;
  std::int64_t expect = 0;
  std::vector<double> probs;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream h(line.substr(1));
      std::string tag, tok;
      h >> tag;
      if (tag != "lattice_pmf") continue;
      while (h >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "offset") offset = std::stod(val);
        if (key == "min_index") min_index = std::stoll(val);
      }
      have_header = true;
      expect = min_index;
      continue;
    }
    if (!have_columns) {
      if (line != "index,position,prob")
        throw std::invalid_argument("read_pmf_csv: unexpected column header '" + line + "'");
      have_columns = true;
      continue;
    }
    std::istringstream row(line);
    std::string idx, pos, prob;
    if (!std::getline(row, idx, ',') || !std::getline(row, pos, ',') || !std::getline(row, prob))
      throw std::invalid_argument("read_pmf_csv: malformed row '" + line + "'");
    if (std::stoll(idx) != expect)
      throw std::invalid_argument("read_pmf_csv: indices must be consecutive");
    ++expect;
    probs.push_back(std::stod(prob));
  }
  if (!have_header || !have_columns) throw std::invalid_argument("read_pmf_csv: missing header");
  return LatticePMF::from_probs(std::move(probs), min_index, offset);
}

}  // namespace steinbin
