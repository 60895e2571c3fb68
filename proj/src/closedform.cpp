#include "isogeom/closedform.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "isogeom/quadrature.hpp"
#include "isogeom/specfun.hpp"

namespace isogeom {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;
constexpr double kSqrt2Pi = 2.5066282746310005024;

double vol_ratio(int j, int k) { // varpi_j / varpi_k, log-space
  return std::exp(log_sphere_volume(j) - log_sphere_volume(k));
}

// kappa_d(t) / varpi_d without forming either volume (stable for huge d).
double excursion_ratio(int d, double t) {
  if (t <= -1.0) return 1.0;
  if (t >= 1.0) return 0.0;
  if (t < 0.0) return 1.0 - excursion_ratio(d, -t);
  return 0.5 * (1.0 - incomplete_beta_reg(0.5, 0.5 * d, t * t));
}

double intersection_measure_value(double subset_measure, int m, int l,
                                  std::span<const double> s_list,
                                  std::span<const int> d_list,
                                  std::span<const double> t_list) {
  double prod = vol_ratio(m - l, m) * subset_measure;
  for (int i = 0; i < l; ++i)
    prod *= s_list[i] * std::pow(1.0 - t_list[i] * t_list[i],
                                 0.5 * (d_list[i] - 1));
  return prod;
}

double intersection_excursion_value(double subset_measure,
                                    std::span<const int> d_list,
                                    std::span<const double> t_list) {
  double prod = subset_measure;
  for (std::size_t i = 0; i < d_list.size(); ++i)
    prod *= excursion_ratio(d_list[i], t_list[i]);
  return prod;
}

double leray_value(double total_volume, int d, double c, double t) {
  const double one_mt2 = 1.0 - t * t;
  const double ratio = std::exp(log_sphere_volume(d - 1) - log_sphere_volume(d));
  if (one_mt2 <= 0.0) {
    if (d > 2) return 0.0;
    if (d == 2) return total_volume * ratio / c;
    return std::numeric_limits<double>::infinity();
  }
  return total_volume * ratio / c * std::pow(one_mt2, 0.5 * d - 1.0);
}

double gauss_level_value(int m, double total_volume, double s, double sigma,
                         double t) {
  return total_volume * vol_ratio(m - 1, m) * s *
         std::exp(-t * t / (sigma * sigma));
}
double gauss_excursion_value(double total_volume, double sigma, double t) {
  return total_volume / kSqrtPi * gauss_tail(t / sigma);
}
double gauss_leray_value(double total_volume, double c, double sigma,
                         double t) {
  return total_volume / (c * sigma * kSqrtPi) *
         std::exp(-t * t / (sigma * sigma));
}

FormulaInputs base_inputs(const EigenspaceSpec& spec, double t_scaled) {
  FormulaInputs in;
  in.m = spec.manifold->m;
  in.total_volume = spec.manifold->total_volume;
  in.d = spec.d;
  in.c = spec.c;
  in.s = spec.s;
  in.t_scaled = t_scaled;
  return in;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* formula_name(FormulaId id) {
  switch (id) {
    case FormulaId::LevelMeasure: return "level_measure";
    case FormulaId::ExcursionVolume: return "excursion_volume";
    case FormulaId::IntersectionMeasure: return "intersection_measure";
    case FormulaId::IntersectionExcursion: return "intersection_excursion";
    case FormulaId::Leray: return "leray";
    case FormulaId::IntegralFunctional: return "integral_functional";
    case FormulaId::Moment: return "moment";
    case FormulaId::GaussLevel: return "gauss_level";
    case FormulaId::GaussExcursion: return "gauss_excursion";
    case FormulaId::GaussLeray: return "gauss_leray";
    case FormulaId::RadialLevel: return "radial_level";
    case FormulaId::RadialExcursion: return "radial_excursion";
    case FormulaId::RadialLeray: return "radial_leray";
    case FormulaId::LpBound: return "lp_bound";
    case FormulaId::SupBoundC: return "sup_bound_c";
  }
  return "?";
}

} // namespace

std::string ClosedForm::to_json() const {
  std::ostringstream os;
  os << "{\"formula\":\"" << formula_name(id) << "\""
     << ",\"m\":" << inputs.m << ",\"total_volume\":"
     << fmt_double(inputs.total_volume) << ",\"d\":" << inputs.d
     << ",\"c\":" << fmt_double(inputs.c) << ",\"s\":" << fmt_double(inputs.s)
     << ",\"t_scaled\":" << fmt_double(inputs.t_scaled);
  if (inputs.sigma != 0.0) os << ",\"sigma\":" << fmt_double(inputs.sigma);
  if (inputs.a != 0.0) os << ",\"a\":" << fmt_double(inputs.a);
  if (inputs.l != 0) os << ",\"l\":" << inputs.l;
  os << ",\"value\":" << fmt_double(value) << "}";
  return os.str();
}

std::string ClosedForm::to_csv_row() const {
  std::ostringstream os;
  os << formula_name(id) << "," << inputs.m << ","
     << fmt_double(inputs.total_volume) << "," << inputs.d << ","
     << fmt_double(inputs.c) << "," << fmt_double(inputs.s) << ","
     << fmt_double(inputs.t_scaled) << "," << fmt_double(value);
  return os.str();
}

bool recomputable(FormulaId id) {
  switch (id) {
    case FormulaId::IntegralFunctional:
    case FormulaId::RadialLevel:
    case FormulaId::RadialExcursion:
    case FormulaId::RadialLeray:
      return false;
    default:
      return true;
  }
}

double recompute(const ClosedForm& cf) {
  const FormulaInputs& in = cf.inputs;
  switch (cf.id) {
    case FormulaId::LevelMeasure:
    case FormulaId::IntersectionMeasure:
      return intersection_measure_value(in.subset_measure, in.m, in.l,
                                        in.s_list, in.d_list, in.t_list);
    case FormulaId::ExcursionVolume:
      return in.total_volume * excursion_ratio(in.d, in.t_scaled);
    case FormulaId::IntersectionExcursion:
      return intersection_excursion_value(in.subset_measure, in.d_list,
                                          in.t_list);
    case FormulaId::Leray:
      return leray_value(in.total_volume, in.d, in.c, in.t_scaled);
    case FormulaId::Moment:
      return moment_formula(in.a, in.d);
    case FormulaId::GaussLevel:
      return gauss_level_value(in.m, in.total_volume, in.s, in.sigma,
                               in.t_scaled);
    case FormulaId::GaussExcursion:
      return gauss_excursion_value(in.total_volume, in.sigma, in.t_scaled);
    case FormulaId::GaussLeray:
      return gauss_leray_value(in.total_volume, in.c, in.sigma, in.t_scaled);
    case FormulaId::LpBound:
      return std::sqrt((in.a + 1.0) / M_E);
    case FormulaId::SupBoundC:
      return in.c;
    default:
      throw std::invalid_argument("recompute: formula is quadrature-backed");
  }
}

ClosedForm expected_intersection_measure(
    std::span<const EigenspaceSpec* const> specs,
    std::span<const double> t_scaled) {
  if (specs.empty() || specs.size() != t_scaled.size())
    throw std::invalid_argument("intersection: need matching specs/levels");
  const ManifoldModel* model = specs[0]->manifold;
  const int l = static_cast<int>(specs.size());
  if (l > model->m)
    throw std::invalid_argument("intersection: more fields than dim M");
  ClosedForm cf;
  cf.id = l == 1 ? FormulaId::LevelMeasure : FormulaId::IntersectionMeasure;
  cf.inputs = base_inputs(*specs[0], t_scaled[0]);
  cf.inputs.l = l;
  cf.inputs.subset_measure = model->total_volume;
  for (int i = 0; i < l; ++i) {
    if (specs[i]->manifold != model)
      throw std::invalid_argument("intersection: mixed manifolds");
    if (std::fabs(t_scaled[i]) > 1.0)
      throw std::invalid_argument("intersection: |t_scaled| must be <= 1");
    cf.inputs.s_list.push_back(specs[i]->s);
    cf.inputs.d_list.push_back(specs[i]->d);
    cf.inputs.t_list.push_back(t_scaled[i]);
  }
  cf.value = intersection_measure_value(cf.inputs.subset_measure, model->m, l,
                                        cf.inputs.s_list, cf.inputs.d_list,
                                        cf.inputs.t_list);
  return cf;
}

ClosedForm expected_level_measure(const EigenspaceSpec& spec, double t_scaled) {
  const EigenspaceSpec* one[1] = {&spec};
  const double t[1] = {t_scaled};
  return expected_intersection_measure(one, t);
}

ClosedForm expected_excursion_volume(const EigenspaceSpec& spec,
                                     double t_scaled) {
  ClosedForm cf;
  cf.id = FormulaId::ExcursionVolume;
  cf.inputs = base_inputs(spec, t_scaled);
  cf.value = cf.inputs.total_volume * excursion_ratio(spec.d, t_scaled);
  return cf;
}

ClosedForm expected_intersection_excursion(
    std::span<const EigenspaceSpec* const> specs,
    std::span<const double> t_scaled) {
  if (specs.empty() || specs.size() != t_scaled.size())
    throw std::invalid_argument("intersection: need matching specs/levels");
  const ManifoldModel* model = specs[0]->manifold;
  ClosedForm cf;
  cf.id = FormulaId::IntersectionExcursion;
  cf.inputs = base_inputs(*specs[0], t_scaled[0]);
  cf.inputs.l = static_cast<int>(specs.size());
  cf.inputs.subset_measure = model->total_volume;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i]->manifold != model)
      throw std::invalid_argument("intersection: mixed manifolds");
    cf.inputs.d_list.push_back(specs[i]->d);
    cf.inputs.t_list.push_back(t_scaled[i]);
    cf.inputs.s_list.push_back(specs[i]->s);
  }
  cf.value = intersection_excursion_value(cf.inputs.subset_measure,
                                          cf.inputs.d_list, cf.inputs.t_list);
  return cf;
}

ClosedForm expected_leray(const EigenspaceSpec& spec, double t_scaled) {
  if (std::fabs(t_scaled) > 1.0)
    throw std::invalid_argument("leray: |t_scaled| must be <= 1");
  ClosedForm cf;
  cf.id = FormulaId::Leray;
  cf.inputs = base_inputs(spec, t_scaled);
  cf.value = leray_value(cf.inputs.total_volume, spec.d, spec.c, t_scaled);
  return cf;
}

ClosedForm expected_integral_functional(const EigenspaceSpec& spec,
                                        const std::function<double(double)>& f,
                                        double rel_tol) {
  // M(I_f) = (varpi_{d-1}/(c varpi_d)) int_{-c}^{c} f(t) (1-(t/c)^2)^{d/2-1} dt
  // with the probability-measure convention (f == 1 integrates to 1).
  // Substituting t = c sin(psi) removes the d < 2 endpoint singularity.
  const int d = spec.d;
  const double c = spec.c;
  const double ratio = std::exp(log_sphere_volume(d - 1) - log_sphere_volume(d));
  auto g = [&](double psi) {
    return f(c * std::sin(psi)) * std::pow(std::cos(psi), d - 1);
  };
  std::vector<double> pts = {-M_PI_2, 0.0, M_PI_2};
  if (d > 30) { // weight concentrates like exp(-d psi^2 / 2)
    const double w = 6.0 / std::sqrt(static_cast<double>(d));
    pts = {-M_PI_2, -w, 0.0, w, M_PI_2};
  }
  ClosedForm cf;
  cf.id = FormulaId::IntegralFunctional;
  cf.inputs = base_inputs(spec, 0.0);
  cf.value = ratio * integrate_adaptive_pts(g, pts, rel_tol);
  return cf;
}

double moment_formula(double a, int d) {
  if (!(a > -1.0)) throw std::domain_error("moment_formula: a must be > -1");
  if (d < 1) throw std::domain_error("moment_formula: d must be >= 1");
  return std::exp(log_gamma(0.5 * (a + 1.0)) + log_gamma(0.5 * (d + 1.0)) +
                  0.5 * a * std::log(d + 1.0) - std::log(kSqrtPi) -
                  log_gamma(0.5 * (a + d + 1.0)));
}

double moment_limit(double a) {
  if (!(a > -1.0)) throw std::domain_error("moment_limit: a must be > -1");
  return std::exp(0.5 * a * M_LN2 + log_gamma(0.5 * (a + 1.0))) / kSqrtPi;
}

LpBounds lp_mean_bound(double a) {
  if (!(a >= 1.0)) throw std::domain_error("lp_mean_bound: a must be >= 1");
  LpBounds b;
  b.universal = std::sqrt((a + 1.0) / M_E);
  b.asymptotic = std::pow(moment_limit(a), 1.0 / a);
  if (!(b.asymptotic < b.universal))
    throw std::logic_error("lp_mean_bound: asymptotic >= universal");
  return b;
}

SupBound sup_mean_bound(const EigenspaceSpec& spec, double epsilon) {
  SupBound b;
  b.trivial_c = spec.c;
  if (spec.kappa <= 1.0) {
    b.log_bound = std::numeric_limits<double>::quiet_NaN();
    b.informative = false;
    return b;
  }
  b.log_bound = (std::exp(spec.manifold->m - 0.5) + epsilon) *
                std::sqrt(std::log(spec.kappa));
  b.informative = b.log_bound < b.trivial_c;
  return b;
}

// ---- radial laws --------------------------------------------------------

RadialDensity::RadialDensity(std::function<double(double)> alpha,
                             double support_hint)
    : fn_(std::move(alpha)) {
  // Locate [lo, hi] where alpha is non-negligible: geometric probe for the
  // scale, then a fine linear scan (catches spike densities).
  double scale = support_hint;
  double amax = 0.0;
  if (scale <= 0.0) {
    double last_mass = 0.0;
    for (double r = 1.0 / 1024; r <= 1.0e9; r *= 2.0) {
      for (int i = 1; i <= 16; ++i) {
        const double v = fn_(r * i / 16.0);
        if (v > amax) amax = v;
        if (v > 0.0) last_mass = r * i / 16.0;
      }
      if (amax > 0.0 && r > 64.0 * std::max(last_mass, 1.0)) break;
      scale = r;
    }
    scale = std::max(2.0 * last_mass, 1.0);
  }
  const int n_scan = 200000;
  const double step = scale / n_scan;
  double lo = scale, hi = 0.0;
  amax = 0.0;
  std::vector<double> vals(n_scan + 1);
  for (int i = 0; i <= n_scan; ++i) {
    vals[i] = fn_(step * i);
    if (vals[i] > amax) amax = vals[i];
  }
  if (amax <= 0.0)
    throw std::invalid_argument("RadialDensity: alpha vanishes identically");
  const double floor = amax * 1e-18;
  for (int i = 0; i <= n_scan; ++i)
    if (vals[i] > floor) {
      lo = std::min(lo, step * i);
      hi = std::max(hi, step * i);
    }
  const double pad = 2.0 * step;
  lo_ = std::max(0.0, lo - pad);
  hi_ = hi + pad;
  // record jump features so panel edges land on them
  const double jump = 1e-4 * amax;
  bool in_run = false;
  for (int i = 1; i <= n_scan; ++i) {
    if (std::fabs(vals[i] - vals[i - 1]) > jump) {
      if (!in_run) features_.push_back(std::max(lo_, step * (i - 1) - pad));
      in_run = true;
    } else if (in_run) {
      features_.push_back(std::min(hi_, step * i + pad));
      in_run = false;
    }
  }
  if (in_run) features_.push_back(hi_);
  if (features_.size() > 512) { // wildly oscillatory: fall back to uniform
    features_.clear();
    for (int i = 1; i < 512; ++i)
      features_.push_back(lo_ + (hi_ - lo_) * i / 512.0);
  }
}

double RadialDensity::moment(int k) const {
  if (k < 0) throw std::domain_error("RadialDensity::moment: k >= 0");
  if (moment_cache_.size() > static_cast<std::size_t>(k) &&
      moment_cache_[k] > 0.0)
    return moment_cache_[k];
  std::vector<double> pts(features_);
  for (int i = 0; i <= 16; ++i) pts.push_back(lo_ + (hi_ - lo_) * i / 16.0);
  const double v = integrate_adaptive_pts(
      [&](double r) { return std::pow(r, k) * fn_(r); }, pts, 1e-12, 1e-300,
      8000);
  if (!(v > 0.0) || !std::isfinite(v))
    throw std::runtime_error("RadialDensity: non-convergent moment integral");
  if (moment_cache_.size() <= static_cast<std::size_t>(k))
    moment_cache_.resize(k + 1, 0.0);
  moment_cache_[k] = v;
  return v;
}

double RadialDensity::tail_integral(double p, double t) const {
  if (t >= hi_) return 0.0;
  const double r_from = std::max(lo_, t);
  const double w_hi = std::sqrt(hi_ * hi_ - t * t);
  std::vector<double> pts;
  pts.push_back(0.0);
  for (int i = 0; i <= 16; ++i) {
    const double r = r_from + (hi_ - r_from) * i / 16.0;
    const double w2 = r * r - t * t;
    if (w2 > 0.0) pts.push_back(std::sqrt(w2));
  }
  for (double r : features_) {
    const double w2 = r * r - t * t;
    if (w2 > 0.0) pts.push_back(std::sqrt(w2));
  }
  pts.push_back(w_hi);
  return integrate_adaptive_pts(
      [&](double w) {
        return std::pow(w, p) * fn_(std::sqrt(t * t + w * w));
      },
      pts, 1e-12, 1e-300, 8000);
}

RadialExpectations radial_expectations(const EigenspaceSpec& spec,
                                       const RadialDensity& density,
                                       double t_scaled) {
  // Negative levels via the u <-> -u symmetry of radial laws: the level and
  // Leray expectations are even in t, the excursion complements to varpi.
  const double t = std::fabs(t_scaled);
  const int d = spec.d;
  const double vol = spec.manifold->total_volume;
  const double a_d = density.moment(d);
  const double ratio_d = std::exp(log_sphere_volume(d - 1) - log_sphere_volume(d));

  RadialExpectations r;
  r.level.id = FormulaId::RadialLevel;
  r.level.inputs = base_inputs(spec, t_scaled);
  r.level.value = vol * vol_ratio(spec.manifold->m - 1, spec.manifold->m) *
                  spec.s / a_d * density.tail_integral(d, t);

  r.leray.id = FormulaId::RadialLeray;
  r.leray.inputs = base_inputs(spec, t_scaled);
  r.leray.value =
      vol * ratio_d / (spec.c * a_d) * density.tail_integral(d - 1, t);

  r.excursion.id = FormulaId::RadialExcursion;
  r.excursion.inputs = base_inputs(spec, t_scaled);
  double exc = 0.0;
  if (t < density.support_hi()) {
    // the double integral of the tail collapses against the exact cap:
    // int_t^inf tail(d-1, xi) dxi = int_t^inf r^d alpha(r) kappa_d(t/r) dr
    //                               / varpi_{d-1}
    std::vector<double> pts;
    for (int i = 0; i <= 16; ++i)
      pts.push_back(t + (density.support_hi() - t) * i / 16.0);
    for (double rf : density.feature_radii())
      if (rf > t) pts.push_back(rf);
    const double integral = integrate_adaptive_pts(
        [&](double rr) {
          return std::pow(rr, d) * density.alpha(rr) *
                 cap_volume(d, rr > 0.0 ? t / rr : 1.0);
        },
        pts, 1e-11, 1e-300, 8000);
    exc = vol / (a_d * sphere_volume(d)) * integral;
  }
  r.excursion.value = t_scaled >= 0.0 ? exc : vol - exc;
  return r;
}

RadialExpectations gaussian_expectations(const EigenspaceSpec& spec,
                                         double sigma, double t_scaled) {
  if (!(sigma > 0.0))
    throw std::domain_error("gaussian_expectations: sigma must be > 0");
  RadialExpectations r;
  r.level.id = FormulaId::GaussLevel;
  r.level.inputs = base_inputs(spec, t_scaled);
  r.level.inputs.sigma = sigma;
  r.level.value = gauss_level_value(spec.manifold->m,
                                    spec.manifold->total_volume, spec.s, sigma,
                                    t_scaled);
  r.excursion.id = FormulaId::GaussExcursion;
  r.excursion.inputs = r.level.inputs;
  r.excursion.value =
      gauss_excursion_value(spec.manifold->total_volume, sigma, t_scaled);
  r.leray.id = FormulaId::GaussLeray;
  r.leray.inputs = r.level.inputs;
  r.leray.value = gauss_leray_value(spec.manifold->total_volume, spec.c, sigma,
                                    t_scaled);
  return r;
}

AsymptoticLimits asymptotic_limits(double t, const ManifoldModel& model) {
  AsymptoticLimits lim;
  const double gauss = std::exp(-0.5 * t * t);
  lim.level_per_s = vol_ratio(model.m - 1, model.m) * model.total_volume * gauss;
  lim.excursion = model.total_volume / kSqrtPi * gauss_tail(t / M_SQRT2);
  lim.leray = model.total_volume / kSqrt2Pi * gauss;
  return lim;
}

double asymptotic_functional(const std::function<double(double)>& f,
                             double rel_tol) {
  const double pts[3] = {-40.0, 0.0, 40.0};
  return integrate_adaptive_pts(
             [&](double t) { return f(t) * std::exp(-0.5 * t * t); }, pts,
             rel_tol) /
         kSqrt2Pi;
}

} // namespace isogeom
