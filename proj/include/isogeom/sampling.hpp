#pragma once

// Random polynomial generation. Coefficient streams come from a Philox4x32-10
// counter generator keyed by (master_seed, trial_index, draw_index), so a
// trial's sample is bit-identical no matter which thread runs it or in what
// order trials execute.

#include <array>
#include <cstdint>
#include <vector>

#include "isogeom/closedform.hpp"
#include "isogeom/manifold.hpp"

namespace isogeom {

struct SeedPolicy {
  std::uint64_t master_seed = 0;
  std::uint64_t trial_index = 0;
};

// Counter-based stream: key = master seed, counter = (block, stream).
class CounterRng {
public:
  CounterRng(std::uint64_t master_seed, std::uint64_t stream);
  std::uint32_t next_u32();
  std::uint64_t next_u64();
  double uniform01();    // [0, 1), 53-bit
  double uniform_open(); // (0, 1)
  double normal();       // standard normal (Box-Muller)

private:
  void refill();
  std::uint32_t key_[2];
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::uint32_t buf_[4];
  int buf_pos_ = 4;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

struct PolynomialSample {
  const EigenspaceSpec* spec = nullptr;
  std::vector<double> coeffs; // in the orthonormal basis
  double norm = 0.0;          // |coeffs|

  double evaluate(const Point& p) const;
  // value + gradient in the orthonormal tangent frame
  double evaluate_with_gradient(const Point& p,
                                std::array<double, 2>& grad) const;
};

// Uniform on the unit sphere of E (Gaussian vector, normalized).
PolynomialSample sample_uniform_sphere(const EigenspaceSpec& spec,
                                       CounterRng& rng);
PolynomialSample sample_uniform_sphere(const EigenspaceSpec& spec,
                                       const SeedPolicy& seed);

// Gaussian law with density proportional to e^{-|x|^2 / sigma^2}; each
// coordinate is centered Gaussian with variance sigma^2 / 2.
PolynomialSample sample_gaussian(const EigenspaceSpec& spec, double sigma,
                                 CounterRng& rng);
PolynomialSample sample_gaussian(const EigenspaceSpec& spec, double sigma,
                                 const SeedPolicy& seed);

// General radial law: uniform direction, radius from the density
// r^d alpha(r) / a_d via an inverse-CDF table (1e-6 CDF tolerance).
class RadialSampler {
public:
  RadialSampler(const EigenspaceSpec& spec, const RadialDensity& density);
  PolynomialSample sample(CounterRng& rng) const;
  PolynomialSample sample(const SeedPolicy& seed) const;
  double median_radius() const;

private:
  const EigenspaceSpec* spec_;
  std::vector<double> radii_; // CDF grid
  std::vector<double> cdf_;
  double draw_radius(double u) const;
};

} // namespace isogeom
