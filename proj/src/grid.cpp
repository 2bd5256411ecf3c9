#include "wkam/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "wkam/error.hpp"

namespace wkam {

void GridSpec::validate() const {
  if (dim != 1 && dim != 2)
    throw ArgumentError("grid dimension must be 1 or 2, got " +
                        std::to_string(dim));
  if (n < 8)
    throw ArgumentError("grid needs at least 8 points per axis, got " +
                        std::to_string(n));
  if (!(length > 0.0) || !std::isfinite(length))
    throw ArgumentError("grid length must be positive and finite");
}

Vec2 GridSpec::point(int idx) const {
  auto c = coords(idx);
  return {c[0] * h(), dim == 1 ? 0.0 : c[1] * h()};
}

Vec2 GridSpec::midpoint(int y, int di, int dj) const {
  auto c = coords(y);
  const int twice_n = 2 * n;
  auto half = [&](int i, int d) {
    const int m = ((2 * i + d) % twice_n + twice_n) % twice_n;
    return m * (0.5 * h());
  };
  return {half(c[0], di), dim == 1 ? 0.0 : half(c[1], dj)};
}

Vec2 GridSpec::displacement(Vec2 a, Vec2 b) const {
  auto fold = [&](double d) {
    d = std::fmod(d, length);
    if (d > 0.5 * length)
      d -= length;
    else if (d < -0.5 * length)
      d += length;
    return d;
  };
  return {fold(b.x - a.x), dim == 1 ? 0.0 : fold(b.y - a.y)};
}

GridFn::GridFn(GridSpec g, std::vector<double> v)
    : grid(g), values(std::move(v)) {
  if (static_cast<int>(values.size()) != grid.size())
    throw ArgumentError("GridFn value count does not match the grid");
}

GridFn GridFn::sample(GridSpec g, const std::function<double(Vec2)> &f) {
  GridFn out(g);
  for (int i = 0; i < out.size(); ++i)
    out[i] = f(g.point(i));
  return out;
}

double GridFn::sup() const {
  return *std::max_element(values.begin(), values.end());
}

double GridFn::inf() const {
  return *std::min_element(values.begin(), values.end());
}

bool GridFn::finite() const {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

Vec2 GridFn::gradient(int idx) const {
  const double h2 = 2.0 * grid.h();
  Vec2 g{((*this)[grid.shift(idx, 1)] - (*this)[grid.shift(idx, -1)]) / h2,
         0.0};
  if (grid.dim == 2)
    g.y = ((*this)[grid.shift(idx, 0, 1)] - (*this)[grid.shift(idx, 0, -1)]) /
          h2;
  return g;
}

double GridFn::lipschitz() const {
  double lip = 0.0;
  for (int i = 0; i < size(); ++i) {
    lip = std::max(lip, std::abs((*this)[grid.shift(i, 1)] - (*this)[i]));
    if (grid.dim == 2)
      lip = std::max(lip, std::abs((*this)[grid.shift(i, 0, 1)] - (*this)[i]));
  }
  return lip / grid.h();
}

namespace {

void require_same_grid(const GridFn &a, const GridFn &b) {
  if (!(a.grid == b.grid))
    throw ArgumentError("grid functions live on different grids");
}

} // namespace

GridFn operator+(const GridFn &a, const GridFn &b) {
  require_same_grid(a, b);
  GridFn out(a.grid);
  for (int i = 0; i < out.size(); ++i)
    out[i] = a[i] + b[i];
  return out;
}

GridFn operator-(const GridFn &a, const GridFn &b) {
  require_same_grid(a, b);
  GridFn out(a.grid);
  for (int i = 0; i < out.size(); ++i)
    out[i] = a[i] - b[i];
  return out;
}

GridFn operator-(const GridFn &a) {
  GridFn out(a.grid);
  for (int i = 0; i < out.size(); ++i)
    out[i] = -a[i];
  return out;
}

GridFn operator*(double s, const GridFn &a) {
  GridFn out(a.grid);
  for (int i = 0; i < out.size(); ++i)
    out[i] = s * a[i];
  return out;
}

GridFn operator+(const GridFn &a, double c) {
  GridFn out(a.grid);
  for (int i = 0; i < out.size(); ++i)
    out[i] = a[i] + c;
  return out;
}

double sup_norm(const GridFn &a) {
  double m = 0.0;
  for (double v : a.values)
    m = std::max(m, std::abs(v));
  return m;
}

double sup_distance(const GridFn &a, const GridFn &b) {
  require_same_grid(a, b);
  double m = 0.0;
  for (int i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void write_csv(const std::string &path, const GridFn &f,
               const std::string &provenance) {
  std::ofstream out(path);
  if (!out)
    throw Error("cannot open " + path + " for writing");
  out << "# grid dim=" << f.grid.dim << " n=" << f.grid.n << " length=";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", f.grid.length);
  out << buf << "\n# provenance: " << provenance << "\n";
  out << (f.grid.dim == 1 ? "index,x,value\n" : "index,x,y,value\n");
  for (int i = 0; i < f.size(); ++i) {
    const Vec2 p = f.grid.point(i);
    if (f.grid.dim == 1)
      std::snprintf(buf, sizeof buf, "%.10g", p.x);
    else
      std::snprintf(buf, sizeof buf, "%.10g,%.10g", p.x, p.y);
    char val[40];
    std::snprintf(val, sizeof val, "%.17g", f[i]);
    out << i << ',' << buf << ',' << val << '\n';
  }
}

GridFn read_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  GridSpec g;
  if (std::sscanf(line.c_str(), "# grid dim=%d n=%d length=%lf", &g.dim, &g.n,
                  &g.length) != 3)
    throw Error(path + ": malformed grid header");
  g.validate();
  std::getline(in, line); // provenance
  std::getline(in, line); // column names
  GridFn f(g);
  int count = 0;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    const auto pos = line.rfind(',');
    const int idx = std::stoi(line.substr(0, line.find(',')));
    if (idx < 0 || idx >= f.size())
      throw Error(path + ": index out of range");
    f[idx] = std::stod(line.substr(pos + 1));
    ++count;
  }
  if (count != f.size())
    throw Error(path + ": expected " + std::to_string(f.size()) + " rows");
  return f;
}

} // namespace wkam
