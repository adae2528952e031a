#pragma once

#include <string>
#include <vector>

namespace pde_embed {

// Values on a regular grid, optionally stacked along a time axis. 1D fields
// use ny = 1, static fields use nt = 1. Storage order: t outermost, then y,
// then x.
struct GridField {
  int nx = 1, ny = 1, nt = 1;
  double x0 = 0.0, y0 = 0.0, t0 = 0.0;
  double dx = 1.0, dy = 1.0, dt = 1.0;
  std::vector<double> values;

  static GridField make(int nx, int ny, int nt) {
    GridField f;
    f.nx = nx;
    f.ny = ny;
    f.nt = nt;
    f.values.assign(std::size_t(nx) * ny * nt, 0.0);
    return f;
  }

  std::size_t size() const { return std::size_t(nx) * ny * nt; }
  std::size_t index(int ix, int iy, int it) const {
    return (std::size_t(it) * ny + iy) * nx + ix;
  }
  double& at(int ix, int iy = 0, int it = 0) { return values[index(ix, iy, it)]; }
  double at(int ix, int iy = 0, int it = 0) const { return values[index(ix, iy, it)]; }

  double x(int ix) const { return x0 + ix * dx; }
  double y(int iy) const { return y0 + iy * dy; }
  double t(int it) const { return t0 + it * dt; }

  void validate() const;
};

// CSV schema: header "x,t,value" (1D) or "x,y,t,value" (2D), one row per
// sample, t outermost then y then x, numbers round-tripping doubles.
void write_field_csv(const std::string& path, const GridField& f);
GridField read_field_csv(const std::string& path);

// Column-aligned value extraction used by the eval subcommand: returns the
// last column of every data row.
std::vector<double> read_csv_values(const std::string& path);

} // namespace pde_embed
