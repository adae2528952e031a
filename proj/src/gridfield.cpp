#include "pde_embed/gridfield.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pde_embed/util.hpp"

namespace pde_embed {

void GridField::validate() const {
  if (nx < 1 || ny < 1 || nt < 1) throw std::invalid_argument("grid dims must be positive");
  if (dx <= 0 || dy <= 0 || dt <= 0) throw std::invalid_argument("grid spacing must be positive");
  if (values.size() != size()) throw std::invalid_argument("grid value count mismatch");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("grid holds a non-finite value");
}

void write_field_csv(const std::string& path, const GridField& f) {
  f.validate();
  std::ostringstream out;
  const bool two_d = f.ny > 1;
  out << (two_d ? "x,y,t,value\n" : "x,t,value\n");
  for (int it = 0; it < f.nt; ++it)
    for (int iy = 0; iy < f.ny; ++iy)
      for (int ix = 0; ix < f.nx; ++ix) {
        out << fmt_g17(f.x(ix)) << ',';
        if (two_d) out << fmt_g17(f.y(iy)) << ',';
        out << fmt_g17(f.t(it)) << ',' << fmt_g17(f.at(ix, iy, it)) << '\n';
      }
  atomic_write_file(path, out.str());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double axis_spacing(const std::set<double>& vals) {
  if (vals.size() < 2) return 1.0;
  auto it = vals.begin();
  double first = *it++;
  return *it - first;
}

} // namespace

GridField read_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty field file '" + path + "'");
  std::vector<std::string> header = split_csv_line(line);
  bool two_d;
  if (header.size() == 3 && header[0] == "x" && header[1] == "t")
    two_d = false;
  else if (header.size() == 4 && header[0] == "x" && header[1] == "y" && header[2] == "t")
    two_d = true;
  else
    throw std::runtime_error("unrecognized field header in '" + path + "'");

  struct Row {
    double x, y, t, v;
  };
  std::vector<Row> rows;
  std::set<double> xs, ys, ts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> c = split_csv_line(line);
    if (c.size() != header.size())
      throw std::runtime_error("ragged row in '" + path + "'");
    Row r{};
    std::size_t k = 0;
    r.x = std::stod(c[k++]);
    r.y = two_d ? std::stod(c[k++]) : 0.0;
    r.t = std::stod(c[k++]);
    r.v = std::stod(c[k]);
    xs.insert(r.x);
    if (two_d) ys.insert(r.y);
    ts.insert(r.t);
    rows.push_back(r);
  }
  if (rows.empty()) throw std::runtime_error("no data rows in '" + path + "'");

  GridField f = GridField::make(int(xs.size()), two_d ? int(ys.size()) : 1, int(ts.size()));
  f.x0 = *xs.begin();
  f.y0 = two_d ? *ys.begin() : 0.0;
  f.t0 = *ts.begin();
  f.dx = axis_spacing(xs);
  f.dy = two_d ? axis_spacing(ys) : 1.0;
  f.dt = axis_spacing(ts);
  if (rows.size() != f.size())
    throw std::runtime_error("field rows do not fill the grid in '" + path + "'");
  auto idx_of = [](double v, double v0, double dv) { return int(std::lround((v - v0) / dv)); };
  for (const Row& r : rows)
    f.at(idx_of(r.x, f.x0, f.dx), two_d ? idx_of(r.y, f.y0, f.dy) : 0, idx_of(r.t, f.t0, f.dt)) =
        r.v;
  return f;
}

std::vector<double> read_csv_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  std::vector<double> out;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> c = split_csv_line(line);
    if (first) {
      first = false;
      // header row: skip if the last column is not numeric
      try {
        std::size_t pos = 0;
        std::stod(c.back(), &pos);
        if (pos == c.back().size()) out.push_back(std::stod(c.back()));
      } catch (const std::exception&) {
      }
      continue;
    }
    out.push_back(std::stod(c.back()));
  }
  return out;
}

} // namespace pde_embed
