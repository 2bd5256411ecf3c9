#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "wkam/grid.hpp"
#include "wkam/vec.hpp"

namespace wkam {

enum class EnvKind { Periodic, QuasiPeriodic, RandomFourier, PoissonBumps };

EnvKind parse_env_kind(const std::string &name);
std::string to_string(EnvKind kind);

// Description of a stationary environment. Parameters by kind:
//   Periodic       amplitude, frequency (integer), offset, shift, random_shift
//   QuasiPeriodic  amplitude, freq2 (default sqrt 2), offset
//   RandomFourier  freq1..freqM, amp1..ampM (default amplitude/M),
//                  angle1..angleM (2-d only), offset
//   PoissonBumps   intensity, radius, amplitude, box, offset
struct EnvSpec {
  EnvKind kind = EnvKind::Periodic;
  std::map<std::string, double> params;
  int dimension = 1;
  std::uint64_t seed = 0;

  double param(const std::string &key, double fallback) const;
  // Throws ConfigError on invalid parameter combinations.
  void validate() const;
};

struct ValueBounds {
  double min = 0.0;
  double max = 0.0;
};

// One sampled omega: a potential field V(x) with the translation action.
class EnvRealization {
public:
  struct Mode {
    Vec2 k; // wave vector, V contains a*cos(2 pi <k,x> + phase)
    double amplitude;
    double phase;
  };

  const EnvSpec &spec() const { return spec_; }
  std::uint64_t index() const { return index_; }

  double value(Vec2 x) const;
  Vec2 gradient(Vec2 x) const;

  // Bounds valid for this realization; for the Fourier kinds they hold for
  // every realization of the spec.
  ValueBounds bounds() const;
  double gradient_bound() const;
  double hessian_bound() const;

  // The action tau_z: translate(z).value(x) == value(x + z).
  EnvRealization translate(Vec2 z) const;

  // Versioned text dump, one coefficient per line.
  std::string dump() const;

  const std::vector<Mode> &modes() const { return modes_; }
  const std::vector<Vec2> &points() const { return points_; }

private:
  friend EnvRealization sample_realization(const EnvSpec &, std::uint64_t);

  EnvSpec spec_;
  std::uint64_t index_ = 0;
  double offset_ = 0.0;
  std::vector<Mode> modes_;
  // Poisson bumps: centres are stored untranslated; shift_ carries tau_z.
  std::vector<Vec2> points_;
  Vec2 shift_;
  double bump_amplitude_ = 0.0;
  double bump_radius_ = 1.0;
  int max_overlap_ = 0;
};

// Deterministic in (spec.seed, index); distinct indices use independent
// streams, so concurrent sampling matches sequential sampling.
EnvRealization sample_realization(const EnvSpec &spec, std::uint64_t index);

// Truncated function-space metric sum_{n <= n_max} 2^-n m_n / (m_n + 1),
// where m_n is the sup of |f - g| on the ball of radius n.
double metric_d_from_norms(const std::vector<double> &ball_sups);
// Same metric for two periodic grid functions (balls centred at the origin
// of the periodic extension).
double metric_d(const GridFn &f, const GridFn &g, int n_max);

// Empirical Ky Fan distance inf{eps >= 0 : #{d_i > eps}/n <= eps}, computed
// exactly on the sorted sample.
double ky_fan_from_distances(std::vector<double> distances);

using RandomGridFn = std::function<GridFn(const EnvRealization &)>;
double ky_fan_distance(const EnvSpec &spec, const RandomGridFn &f,
                       const RandomGridFn &g, int n_samples, int n_max = 10);

struct SublinearityReport {
  std::vector<double> radii;
  std::vector<double> ratios; // max_{|x| = R} |v(x)| / R
  bool nonincreasing = true;
  bool pass = false; // last ratio <= threshold
};

SublinearityReport check_sublinearity(const std::function<double(Vec2)> &v,
                                      const std::vector<double> &radii,
                                      int dimension, double threshold);

} // namespace wkam
