#include "isogeom/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace isogeom {

namespace {
// Philox4x32 constants (Salmon et al., SC 2011).
constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::uint32_t ctr[4], const std::uint32_t key[2]) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  const std::uint32_t r0 = hi1 ^ ctr[1] ^ key[0];
  const std::uint32_t r1 = lo1;
  const std::uint32_t r2 = hi0 ^ ctr[3] ^ key[1];
  const std::uint32_t r3 = lo0;
  ctr[0] = r0;
  ctr[1] = r1;
  ctr[2] = r2;
  ctr[3] = r3;
}
} // namespace

CounterRng::CounterRng(std::uint64_t master_seed, std::uint64_t stream)
    : stream_(stream) {
  key_[0] = static_cast<std::uint32_t>(master_seed);
  key_[1] = static_cast<std::uint32_t>(master_seed >> 32);
}

void CounterRng::refill() {
  std::uint32_t ctr[4] = {static_cast<std::uint32_t>(block_),
                          static_cast<std::uint32_t>(block_ >> 32),
                          static_cast<std::uint32_t>(stream_),
                          static_cast<std::uint32_t>(stream_ >> 32)};
  std::uint32_t key[2] = {key_[0], key_[1]};
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    philox_round(ctr, key);
  }
  buf_[0] = ctr[0];
  buf_[1] = ctr[1];
  buf_[2] = ctr[2];
  buf_[3] = ctr[3];
  buf_pos_ = 0;
  ++block_;
}

std::uint32_t CounterRng::next_u32() {
  if (buf_pos_ >= 4) refill();
  return buf_[buf_pos_++];
}

std::uint64_t CounterRng::next_u64() {
  const std::uint64_t lo = next_u32();
  const std::uint64_t hi = next_u32();
  return lo | (hi << 32);
}

double CounterRng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::uniform_open() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = uniform_open();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(phi);
  has_cached_normal_ = true;
  return r * std::cos(phi);
}

double PolynomialSample::evaluate(const Point& p) const {
  thread_local std::vector<double> vals;
  vals.resize(coeffs.size());
  spec->eval_basis(p, vals);
  double sum = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) sum += coeffs[i] * vals[i];
  return sum;
}

double PolynomialSample::evaluate_with_gradient(
    const Point& p, std::array<double, 2>& grad) const {
  thread_local std::vector<double> vals;
  thread_local std::vector<std::array<double, 2>> grads;
  vals.resize(coeffs.size());
  grads.resize(coeffs.size());
  spec->eval_basis_gradient(p, vals, grads);
  double sum = 0.0, ga = 0.0, gb = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    sum += coeffs[i] * vals[i];
    ga += coeffs[i] * grads[i][0];
    gb += coeffs[i] * grads[i][1];
  }
  grad = {ga, gb};
  return sum;
}

PolynomialSample sample_uniform_sphere(const EigenspaceSpec& spec,
                                       CounterRng& rng) {
  PolynomialSample smp;
  smp.spec = &spec;
  smp.coeffs.resize(spec.dim_e);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& ci : smp.coeffs) {
      ci = rng.normal();
      norm2 += ci * ci;
    }
  } while (norm2 < 1e-280); // regenerate on (astronomically unlikely) underflow
  const double inv = 1.0 / std::sqrt(norm2);
  double check = 0.0;
  for (auto& ci : smp.coeffs) {
    ci *= inv;
    check += ci * ci;
  }
  smp.norm = std::sqrt(check);
  return smp;
}

PolynomialSample sample_uniform_sphere(const EigenspaceSpec& spec,
                                       const SeedPolicy& seed) {
  CounterRng rng(seed.master_seed, seed.trial_index);
  return sample_uniform_sphere(spec, rng);
}

PolynomialSample sample_gaussian(const EigenspaceSpec& spec, double sigma,
                                 CounterRng& rng) {
  if (!(sigma > 0.0))
    throw std::domain_error("sample_gaussian: sigma must be > 0");
  PolynomialSample smp;
  smp.spec = &spec;
  smp.coeffs.resize(spec.dim_e);
  const double scale = sigma / M_SQRT2; // coordinate variance sigma^2 / 2
  double norm2 = 0.0;
  for (auto& ci : smp.coeffs) {
    ci = scale * rng.normal();
    norm2 += ci * ci;
  }
  smp.norm = std::sqrt(norm2);
  return smp;
}

PolynomialSample sample_gaussian(const EigenspaceSpec& spec, double sigma,
                                 const SeedPolicy& seed) {
  CounterRng rng(seed.master_seed, seed.trial_index);
  return sample_gaussian(spec, sigma, rng);
}

RadialSampler::RadialSampler(const EigenspaceSpec& spec,
                             const RadialDensity& density)
    : spec_(&spec) {
  // Tabulate the CDF of the radius density r^d alpha(r) / a_d by composite
  // Simpson; refine until the half-resolution check is below 1e-6.
  const double lo = density.support_lo();
  const double hi = density.support_hi();
  const int d = spec.d;
  auto rho = [&](double r) { return std::pow(r, d) * density.alpha(r); };
  int n = 1 << 12;
  for (int attempt = 0; attempt < 6; ++attempt, n *= 4) {
    radii_.assign(n + 1, 0.0);
    cdf_.assign(n + 1, 0.0);
    const double h = (hi - lo) / n;
    double acc = 0.0;
    radii_[0] = lo;
    for (int i = 1; i <= n; ++i) {
      const double r0 = lo + (i - 1) * h, r1 = lo + i * h;
      acc += h / 6.0 * (rho(r0) + 4.0 * rho(0.5 * (r0 + r1)) + rho(r1));
      radii_[i] = r1;
      cdf_[i] = acc;
    }
    if (!(acc > 0.0)) continue;
    for (auto& v : cdf_) v /= acc;
    // coarse/fine agreement as the tolerance certificate
    double worst = 0.0;
    double acc2 = 0.0;
    for (int i = 2; i <= n; i += 2) {
      const double r0 = radii_[i - 2], r1 = radii_[i];
      acc2 += (r1 - r0) / 6.0 *
              (rho(r0) + 4.0 * rho(0.5 * (r0 + r1)) + rho(r1));
      worst = std::max(worst, std::fabs(acc2 / acc - cdf_[i]));
    }
    if (worst < 1e-6) return;
  }
  throw std::runtime_error("RadialSampler: CDF table did not reach 1e-6");
}

double RadialSampler::draw_radius(double u) const {
  auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.begin()) return radii_.front();
  if (it == cdf_.end()) return radii_.back();
  const std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
  const double c0 = cdf_[i - 1], c1 = cdf_[i];
  const double f = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
  return radii_[i - 1] + f * (radii_[i] - radii_[i - 1]);
}

double RadialSampler::median_radius() const { return draw_radius(0.5); }

PolynomialSample RadialSampler::sample(CounterRng& rng) const {
  PolynomialSample smp = sample_uniform_sphere(*spec_, rng);
  const double r = draw_radius(rng.uniform01());
  for (auto& ci : smp.coeffs) ci *= r;
  smp.norm *= r;
  return smp;
}

PolynomialSample RadialSampler::sample(const SeedPolicy& seed) const {
  CounterRng rng(seed.master_seed, seed.trial_index);
  return sample(rng);
}

} // namespace isogeom
