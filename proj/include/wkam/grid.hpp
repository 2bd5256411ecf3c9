#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "wkam/vec.hpp"

namespace wkam {

// Uniform periodic grid on the cell [0, length)^dim. The default unit cell is
// the period cell; larger lengths are used for periodized random boxes.
struct GridSpec {
  int dim = 1;
  int n = 64;
  double length = 1.0;

  double h() const { return length / n; }
  int size() const { return dim == 1 ? n : n * n; }

  // Throws ArgumentError unless dim is 1 or 2, n >= 8 and length > 0.
  void validate() const;

  std::array<int, 2> coords(int idx) const {
    return dim == 1 ? std::array<int, 2>{idx, 0}
                    : std::array<int, 2>{idx % n, idx / n};
  }
  int wrap(int i) const { return ((i % n) + n) % n; }
  int index(int i, int j = 0) const {
    return dim == 1 ? wrap(i) : wrap(i) + n * wrap(j);
  }
  int shift(int idx, int di, int dj = 0) const {
    auto c = coords(idx);
    return index(c[0] + di, c[1] + dj);
  }

  Vec2 point(int idx) const;
  // Midpoint of the segment from grid point y to y + (di, dj) cells, wrapped
  // into the cell. Computed from integers so that the segment and its reverse
  // share the same bit pattern.
  Vec2 midpoint(int y, int di, int dj = 0) const;
  // Shortest periodic displacement b - a.
  Vec2 displacement(Vec2 a, Vec2 b) const;
  double distance(Vec2 a, Vec2 b) const { return norm(displacement(a, b)); }
  double distance(int a, int b) const { return distance(point(a), point(b)); }

  bool operator==(const GridSpec &) const = default;
};

// Real values on a GridSpec, the discrete carrier of u(., omega).
struct GridFn {
  GridSpec grid;
  std::vector<double> values;

  GridFn() = default;
  explicit GridFn(GridSpec g, double fill = 0.0)
      : grid(g), values(static_cast<size_t>(g.size()), fill) {}
  GridFn(GridSpec g, std::vector<double> v);

  static GridFn sample(GridSpec g, const std::function<double(Vec2)> &f);

  int size() const { return static_cast<int>(values.size()); }
  double &operator[](int i) { return values[static_cast<size_t>(i)]; }
  double operator[](int i) const { return values[static_cast<size_t>(i)]; }

  double sup() const;
  double inf() const;
  bool finite() const;
  // Central-difference gradient at a grid index.
  Vec2 gradient(int idx) const;
  // Largest one-sided difference quotient along the axes.
  double lipschitz() const;
};

GridFn operator+(const GridFn &a, const GridFn &b);
GridFn operator-(const GridFn &a, const GridFn &b);
GridFn operator-(const GridFn &a);
GridFn operator*(double s, const GridFn &a);
GridFn operator+(const GridFn &a, double c);
double sup_norm(const GridFn &a);
double sup_distance(const GridFn &a, const GridFn &b);

// CSV with a two-line header: grid spec, then provenance.
void write_csv(const std::string &path, const GridFn &f,
               const std::string &provenance);
GridFn read_csv(const std::string &path);

} // namespace wkam
