#include "wkam/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "wkam/error.hpp"

namespace wkam {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::mt19937_64 stream_for(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32), 0x5eedu};
  return std::mt19937_64(seq);
}

double uniform01(std::mt19937_64 &rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Frequencies freq1, freq2, ... in order; stops at the first gap.
std::vector<double> indexed_params(const EnvSpec &spec, const std::string &stem) {
  std::vector<double> out;
  for (int j = 1;; ++j) {
    auto it = spec.params.find(stem + std::to_string(j));
    if (it == spec.params.end())
      break;
    out.push_back(it->second);
  }
  return out;
}

// Smooth compactly supported bump profile (1 - s^2)^2 and its derivative.
double bump(double s) { return s < 1.0 ? (1 - s * s) * (1 - s * s) : 0.0; }

} // namespace

EnvKind parse_env_kind(const std::string &name) {
  if (name == "Periodic")
    return EnvKind::Periodic;
  if (name == "QuasiPeriodic")
    return EnvKind::QuasiPeriodic;
  if (name == "RandomFourier")
    return EnvKind::RandomFourier;
  if (name == "PoissonBumps")
    return EnvKind::PoissonBumps;
  throw ConfigError("unknown environment kind '" + name + "'");
}

std::string to_string(EnvKind kind) {
  switch (kind) {
  case EnvKind::Periodic:
    return "Periodic";
  case EnvKind::QuasiPeriodic:
    return "QuasiPeriodic";
  case EnvKind::RandomFourier:
    return "RandomFourier";
  case EnvKind::PoissonBumps:
    return "PoissonBumps";
  }
  return "?";
}

double EnvSpec::param(const std::string &key, double fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void EnvSpec::validate() const {
  if (dimension != 1 && dimension != 2)
    throw ConfigError("environment dimension must be 1 or 2");
  for (const auto &[key, value] : params)
    if (!std::isfinite(value))
      throw ConfigError("environment parameter '" + key + "' is not finite");
  switch (kind) {
  case EnvKind::Periodic: {
    const double f = param("frequency", 1.0);
    if (f != std::round(f) || f < 0)
      throw ConfigError("Periodic frequency must be a nonnegative integer");
    break;
  }
  case EnvKind::QuasiPeriodic:
    if (param("freq2", std::numbers::sqrt2) <= 0)
      throw ConfigError("QuasiPeriodic freq2 must be positive");
    break;
  case EnvKind::RandomFourier:
    if (indexed_params(*this, "freq").empty())
      throw ConfigError("RandomFourier needs a nonempty frequency list "
                        "(freq1, freq2, ...)");
    break;
  case EnvKind::PoissonBumps:
    if (param("radius", 0.1) <= 0)
      throw ConfigError("PoissonBumps radius must be positive");
    if (param("intensity", 4.0) < 0)
      throw ConfigError("PoissonBumps intensity must be nonnegative");
    if (param("box", 1.0) <= 0)
      throw ConfigError("PoissonBumps box must be positive");
    break;
  }
}

EnvRealization sample_realization(const EnvSpec &spec, std::uint64_t index) {
  spec.validate();
  EnvRealization r;
  r.spec_ = spec;
  r.index_ = index;
  r.offset_ = spec.param("offset", 0.0);
  auto rng = stream_for(spec.seed, index);
  const bool two_d = spec.dimension == 2;

  switch (spec.kind) {
  case EnvKind::Periodic: {
    const double a = spec.param("amplitude", 1.0);
    const double f = spec.param("frequency", 1.0);
    Vec2 shift{spec.param("shift", 0.0), two_d ? spec.param("shift", 0.0) : 0.0};
    if (spec.param("random_shift", 0.0) != 0.0) {
      shift.x += uniform01(rng);
      if (two_d)
        shift.y += uniform01(rng);
    }
    if (two_d) {
      r.modes_.push_back({{f, 0.0}, 0.5 * a, kTwoPi * f * shift.x});
      r.modes_.push_back({{0.0, f}, 0.5 * a, kTwoPi * f * shift.y});
    } else {
      r.modes_.push_back({{f, 0.0}, a, kTwoPi * f * shift.x});
    }
    break;
  }
  case EnvKind::QuasiPeriodic: {
    const double a = spec.param("amplitude", 1.0);
    const double f2 = spec.param("freq2", std::numbers::sqrt2);
    const int axes = two_d ? 2 : 1;
    const double each = a / (2.0 * axes);
    for (int axis = 0; axis < axes; ++axis)
      for (double f : {1.0, f2}) {
        Vec2 k = axis == 0 ? Vec2{f, 0.0} : Vec2{0.0, f};
        r.modes_.push_back({k, each, kTwoPi * uniform01(rng)});
      }
    break;
  }
  case EnvKind::RandomFourier: {
    const auto freqs = indexed_params(spec, "freq");
    const double a = spec.param("amplitude", 1.0);
    const int m = static_cast<int>(freqs.size());
    for (int j = 0; j < m; ++j) {
      const std::string idx = std::to_string(j + 1);
      const double amp = spec.param("amp" + idx, a / m);
      Vec2 k{freqs[j], 0.0};
      if (two_d) {
        const double angle =
            spec.param("angle" + idx, std::numbers::pi * (j + 0.5) / m);
        k = {freqs[j] * std::cos(angle), freqs[j] * std::sin(angle)};
      }
      r.modes_.push_back({k, amp, kTwoPi * uniform01(rng)});
    }
    break;
  }
  case EnvKind::PoissonBumps: {
    const double lambda = spec.param("intensity", 4.0);
    r.bump_radius_ = spec.param("radius", 0.1);
    r.bump_amplitude_ = spec.param("amplitude", 1.0);
    const double box = spec.param("box", 1.0);
    const double side = box + 2.0 * r.bump_radius_;
    const double volume = two_d ? side * side : side;
    std::poisson_distribution<int> count(lambda * volume);
    const int k = count(rng);
    for (int i = 0; i < k; ++i) {
      Vec2 p{-r.bump_radius_ + side * uniform01(rng), 0.0};
      if (two_d)
        p.y = -r.bump_radius_ + side * uniform01(rng);
      r.points_.push_back(p);
    }
    for (const auto &p : r.points_) {
      int near = 0;
      for (const auto &q : r.points_)
        if (norm(p - q) < 2.0 * r.bump_radius_)
          ++near;
      r.max_overlap_ = std::max(r.max_overlap_, near);
    }
    break;
  }
  }
  return r;
}

double EnvRealization::value(Vec2 x) const {
  if (spec_.kind == EnvKind::PoissonBumps) {
    const Vec2 z = x + shift_;
    double s = 0.0;
    for (const auto &p : points_)
      s += bump(norm(z - p) / bump_radius_);
    return offset_ - bump_amplitude_ * std::tanh(s);
  }
  double v = offset_;
  for (const auto &m : modes_)
    v += m.amplitude * std::cos(kTwoPi * dot(m.k, x) + m.phase);
  return v;
}

Vec2 EnvRealization::gradient(Vec2 x) const {
  if (spec_.kind == EnvKind::PoissonBumps) {
    const Vec2 z = x + shift_;
    double s = 0.0;
    Vec2 ds;
    const double r2 = bump_radius_ * bump_radius_;
    for (const auto &p : points_) {
      const Vec2 d = z - p;
      const double rho = norm(d) / bump_radius_;
      if (rho >= 1.0)
        continue;
      s += bump(rho);
      ds += (-4.0 * (1.0 - rho * rho) / r2) * d;
    }
    const double t = std::tanh(s);
    return (-bump_amplitude_ * (1.0 - t * t)) * ds;
  }
  Vec2 g;
  for (const auto &m : modes_)
    g += (-m.amplitude * kTwoPi *
          std::sin(kTwoPi * dot(m.k, x) + m.phase)) *
         m.k;
  return g;
}

ValueBounds EnvRealization::bounds() const {
  if (spec_.kind == EnvKind::PoissonBumps)
    return {offset_ - bump_amplitude_, offset_};
  double s = 0.0;
  for (const auto &m : modes_)
    s += std::abs(m.amplitude);
  return {offset_ - s, offset_ + s};
}

double EnvRealization::gradient_bound() const {
  if (spec_.kind == EnvKind::PoissonBumps) {
    // |grad bump| <= 8 / (3 sqrt 3 r) per overlapping centre.
    return bump_amplitude_ * max_overlap_ * 8.0 /
           (3.0 * std::sqrt(3.0) * bump_radius_);
  }
  double s = 0.0;
  for (const auto &m : modes_)
    s += std::abs(m.amplitude) * kTwoPi * norm(m.k);
  return s;
}

double EnvRealization::hessian_bound() const {
  if (spec_.kind == EnvKind::PoissonBumps) {
    const double r2 = bump_radius_ * bump_radius_;
    const double g = max_overlap_ * 8.0 / (3.0 * std::sqrt(3.0) * bump_radius_);
    return bump_amplitude_ * (max_overlap_ * 8.0 / r2 + g * g);
  }
  double s = 0.0;
  for (const auto &m : modes_) {
    const double w = kTwoPi * norm(m.k);
    s += std::abs(m.amplitude) * w * w;
  }
  return s;
}

EnvRealization EnvRealization::translate(Vec2 z) const {
  EnvRealization out = *this;
  if (spec_.kind == EnvKind::PoissonBumps) {
    out.shift_ += z;
    return out;
  }
  for (auto &m : out.modes_)
    m.phase += kTwoPi * dot(m.k, z);
  return out;
}

std::string EnvRealization::dump() const {
  std::ostringstream out;
  char buf[160];
  out << "wkam-realization v1\n";
  out << "kind " << to_string(spec_.kind) << "\n";
  out << "dimension " << spec_.dimension << "\n";
  out << "seed " << spec_.seed << "\n";
  out << "index " << index_ << "\n";
  std::snprintf(buf, sizeof buf, "offset %.17g\n", offset_);
  out << buf;
  for (const auto &m : modes_) {
    std::snprintf(buf, sizeof buf, "mode %.17g %.17g %.17g %.17g\n", m.k.x,
                  m.k.y, m.amplitude, m.phase);
    out << buf;
  }
  if (spec_.kind == EnvKind::PoissonBumps) {
    std::snprintf(buf, sizeof buf, "bump %.17g %.17g\n", bump_amplitude_,
                  bump_radius_);
    out << buf;
    std::snprintf(buf, sizeof buf, "shift %.17g %.17g\n", shift_.x, shift_.y);
    out << buf;
    for (const auto &p : points_) {
      std::snprintf(buf, sizeof buf, "point %.17g %.17g\n", p.x, p.y);
      out << buf;
    }
  }
  return out.str();
}

double metric_d_from_norms(const std::vector<double> &ball_sups) {
  if (ball_sups.empty())
    throw ArgumentError("metric_d needs n_max >= 1");
  double d = 0.0;
  double weight = 1.0;
  for (double m : ball_sups) {
    weight *= 0.5;
    d += weight * m / (m + 1.0);
  }
  return d;
}

double metric_d(const GridFn &f, const GridFn &g, int n_max) {
  if (n_max < 1)
    throw ArgumentError("metric_d needs n_max >= 1");
  if (!(f.grid == g.grid))
    throw ArgumentError("metric_d: functions live on different grids");
  std::vector<double> sups(static_cast<size_t>(n_max), 0.0);
  const Vec2 origin;
  for (int i = 0; i < f.size(); ++i) {
    const double r = f.grid.distance(origin, f.grid.point(i));
    const double diff = std::abs(f[i] - g[i]);
    for (int n = 1; n <= n_max; ++n)
      if (r <= n)
        sups[n - 1] = std::max(sups[n - 1], diff);
  }
  return metric_d_from_norms(sups);
}

double ky_fan_from_distances(std::vector<double> d) {
  if (d.empty())
    throw ArgumentError("ky_fan_distance needs at least one sample");
  std::sort(d.begin(), d.end());
  const double n = static_cast<double>(d.size());
  // Fraction of samples strictly above eps.
  auto tail = [&](double eps) {
    auto it = std::upper_bound(d.begin(), d.end(), eps);
    return static_cast<double>(d.end() - it) / n;
  };
  // The infimum is attained at 0, a sample value, or a level k/n.
  std::vector<double> candidates{0.0};
  candidates.insert(candidates.end(), d.begin(), d.end());
  for (size_t k = 0; k <= d.size(); ++k)
    candidates.push_back(static_cast<double>(k) / n);
  double best = 1.0;
  for (double eps : candidates)
    if (eps >= 0.0 && tail(eps) <= eps)
      best = std::min(best, eps);
  return best;
}

double ky_fan_distance(const EnvSpec &spec, const RandomGridFn &f,
                       const RandomGridFn &g, int n_samples, int n_max) {
  if (n_samples < 1)
    throw ArgumentError("ky_fan_distance needs n_samples >= 1");
  std::vector<double> d(static_cast<size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    const auto omega = sample_realization(spec, static_cast<std::uint64_t>(i));
    d[static_cast<size_t>(i)] = metric_d(f(omega), g(omega), n_max);
  }
  return ky_fan_from_distances(std::move(d));
}

SublinearityReport check_sublinearity(const std::function<double(Vec2)> &v,
                                      const std::vector<double> &radii,
                                      int dimension, double threshold) {
  if (radii.size() < 2)
    throw ArgumentError("check_sublinearity needs at least two radii");
  SublinearityReport rep;
  rep.radii = radii;
  const int directions = dimension == 1 ? 2 : 64;
  for (double R : radii) {
    if (!(R > 0))
      throw ArgumentError("sublinearity radii must be positive");
    double m = 0.0;
    for (int k = 0; k < directions; ++k) {
      Vec2 x = dimension == 1
                   ? Vec2{k == 0 ? R : -R, 0.0}
                   : Vec2{R * std::cos(kTwoPi * k / directions),
                          R * std::sin(kTwoPi * k / directions)};
      m = std::max(m, std::abs(v(x)));
    }
    rep.ratios.push_back(m / R);
  }
  for (size_t i = 1; i < rep.ratios.size(); ++i)
    if (rep.ratios[i] > rep.ratios[i - 1] + 1e-12)
      rep.nonincreasing = false;
  rep.pass = rep.ratios.back() <= threshold;
  return rep;
}

} // namespace wkam
