#pragma once

// CSV input and output: data profiles `x,u1..un`, boundary traces
// `t,side,u1..un`. Parse errors carry the file name and line number.

#include "sonicctl/pipeline.hpp"
#include "sonicctl/types.hpp"

#include <boost/math/interpolators/barycentric_rational.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace sonicctl {

struct DataTable {
  std::vector<double> x;
  std::vector<Vec> u;
};

struct TraceTable {
  std::string side;
  std::vector<double> t;
  std::vector<Vec> u;
};

namespace csv_detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline Error bad(const std::string& name, int line, const std::string& what) {
  return Error(ErrorKind::Validation, name + " line " + std::to_string(line) + ": " + what);
}

inline double number(const std::string& cell, const std::string& name, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (cell.empty() || used != cell.size() || !std::isfinite(v)) throw bad(name, line, "'" + cell + "' is not a finite number");
  return v;
}

inline std::vector<std::string> expected_header(const std::string& first, const std::string& second, int n) {
  std::vector<std::string> h{first};
  if (!second.empty()) h.push_back(second);
  for (int k = 1; k <= n; ++k) h.push_back("u" + std::to_string(k));
  return h;
}

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& c : v) s += (s.empty() ? "" : ",") + c;
  return s;
}

/// Calls row(cells, line) for every non-blank line after the header.
template <class Row>
void read_rows(std::istream& in, const std::string& name, const std::vector<std::string>& header, Row row) {
  std::string line;
  int number_of_line = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++number_of_line;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (!seen_header) {
      if (cells != header) throw bad(name, number_of_line, "expected header " + join(header));
      seen_header = true;
      continue;
    }
    if (cells.size() != header.size()) {
      throw bad(name, number_of_line,
                "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()));
    }
    row(cells, number_of_line);
  }
  if (!seen_header) throw bad(name, number_of_line, "missing header " + join(header));
}

inline std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot open " + path);
  return in;
}

}  // namespace csv_detail

inline DataTable read_data_csv(std::istream& in, int n, const std::string& name = "data") {
  using namespace csv_detail;
  DataTable d;
  read_rows(in, name, expected_header("x", "", n), [&](const std::vector<std::string>& cells, int line) {
    const double x = number(cells[0], name, line);
    if (!d.x.empty() && !(x > d.x.back())) throw bad(name, line, "x must increase strictly");
    Vec u(n);
    for (int k = 0; k < n; ++k) u(k) = number(cells[static_cast<std::size_t>(k) + 1], name, line);
    d.x.push_back(x);
    d.u.push_back(u);
  });
  if (d.x.size() < 4) throw Error(ErrorKind::Validation, name + ": at least 4 data rows are needed");
  return d;
}

inline DataTable read_data_file(const std::string& path, int n) {
  auto in = csv_detail::open(path);
  return read_data_csv(in, n, path);
}

/// Smooth interpolant of tabulated data on [0, L] (barycentric rational,
/// order 3), evaluated at the nodes themselves without rounding.
inline Profile make_profile(const DataTable& d, double L, const std::string& name = "data") {
  const double slack = 1e-9 * std::max(1.0, L);
  if (d.x.front() > slack || d.x.back() < L - slack) {
    std::ostringstream os;
    os << name << ": x covers [" << d.x.front() << ", " << d.x.back() << "], not [0, " << L << "]";
    throw Error(ErrorKind::Validation, os.str());
  }
  using Interp = boost::math::barycentric_rational<double>;
  const int n = static_cast<int>(d.u.front().size());
  auto parts = std::make_shared<std::vector<Interp>>();
  for (int k = 0; k < n; ++k) {
    std::vector<double> xs = d.x, ys;
    for (const auto& u : d.u) ys.push_back(u(k));
    parts->emplace_back(std::move(xs), std::move(ys), 3);
  }
  auto table = std::make_shared<const DataTable>(d);
  return [parts, table, n](double x) {
    const auto it = std::lower_bound(table->x.begin(), table->x.end(), x);
    if (it != table->x.end() && *it == x) return table->u[static_cast<std::size_t>(it - table->x.begin())];
    Vec u(n);
    for (int k = 0; k < n; ++k) u(k) = (*parts)[static_cast<std::size_t>(k)](x);
    return u;
  };
}

inline void write_data_csv(std::ostream& os, const std::vector<double>& x, const std::vector<Vec>& u) {
  const int n = u.empty() ? 0 : static_cast<int>(u.front().size());
  os << csv_detail::join(csv_detail::expected_header("x", "", n)) << '\n';
  char buf[40];
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", x[i]);
    os << buf;
    for (int k = 0; k < n; ++k) {
      std::snprintf(buf, sizeof buf, ",%.17g", u[i](k));
      os << buf;
    }
    os << '\n';
  }
}

inline void write_trace_csv(std::ostream& os, const std::string& side, const std::vector<double>& t,
                            const std::vector<Vec>& u) {
  const int n = u.empty() ? 0 : static_cast<int>(u.front().size());
  os << csv_detail::join(csv_detail::expected_header("t", "side", n)) << '\n';
  char buf[40];
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", t[i]);
    os << buf << ',' << side;
    for (int k = 0; k < n; ++k) {
      std::snprintf(buf, sizeof buf, ",%.17g", u[i](k));
      os << buf;
    }
    os << '\n';
  }
}

inline TraceTable read_trace_csv(std::istream& in, int n, const std::string& name = "trace") {
  using namespace csv_detail;
  TraceTable tr;
  read_rows(in, name, expected_header("t", "side", n), [&](const std::vector<std::string>& cells, int line) {
    if (cells[1] != "left" && cells[1] != "right") throw bad(name, line, "side must be left or right");
    if (tr.side.empty()) tr.side = cells[1];
    if (cells[1] != tr.side) throw bad(name, line, "mixed sides in one trace file");
    const double t = number(cells[0], name, line);
    if (!tr.t.empty() && t < tr.t.back()) throw bad(name, line, "t must not decrease");
    Vec u(n);
    for (int k = 0; k < n; ++k) u(k) = number(cells[static_cast<std::size_t>(k) + 2], name, line);
    tr.t.push_back(t);
    tr.u.push_back(u);
  });
  if (tr.t.empty()) throw Error(ErrorKind::Validation, name + ": no trace rows");
  return tr;
}

inline TraceTable read_trace_file(const std::string& path, int n) {
  auto in = csv_detail::open(path);
  return read_trace_csv(in, n, path);
}

}  // namespace sonicctl
