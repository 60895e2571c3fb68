#include "isogeom/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include "isogeom/selfcheck.hpp"
#include "isogeom/specfun.hpp"

namespace isogeom {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// json-safe number (null for non-finite values such as the d < 2 Leray pole)
std::string fmt_json_number(double v) {
  if (!std::isfinite(v)) return "null";
  return fmt_double(v);
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

long parse_long(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long r = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for '" + key + "': " + v);
  }
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for '" + key + "': " + v);
  }
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const std::uint64_t r = std::stoull(v, &pos, 0);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad seed for '" + key + "': " + v);
  }
}

// "(1,0);(1,-1)" -> generator list
std::vector<std::array<int, 2>> parse_torus_spectrum(const std::string& v) {
  std::vector<std::array<int, 2>> gens;
  for (const auto& part : split(v, ';')) {
    if (part.empty()) continue;
    if (part.front() != '(' || part.back() != ')')
      throw ConfigError("config: torus generator must look like (k1,k2): " + part);
    const auto inner = split(part.substr(1, part.size() - 2), ',');
    if (inner.size() != 2)
      throw ConfigError("config: torus generator must have 2 components: " + part);
    gens.push_back({static_cast<int>(parse_long(inner[0], "spectrum")),
                    static_cast<int>(parse_long(inner[1], "spectrum"))});
  }
  if (gens.empty()) throw ConfigError("config: empty torus spectrum");
  return gens;
}

} // namespace

const char* quantity_name(Quantity q) {
  switch (q) {
    case Quantity::Zeros: return "zeros";
    case Quantity::LevelMeasure: return "level_measure";
    case Quantity::Excursion: return "excursion";
    case Quantity::LerayShell: return "leray_shell";
    case Quantity::LerayCoarea: return "leray_coarea";
    case Quantity::Lp: return "lp";
    case Quantity::IntAbsPow: return "int_abs_pow";
    case Quantity::Sup: return "sup";
    case Quantity::CommonZeros: return "common_zeros";
  }
  return "?";
}

const char* distribution_name(Distribution d) {
  switch (d) {
    case Distribution::UniformSphere: return "uniform_sphere";
    case Distribution::Gaussian: return "gaussian";
    case Distribution::GaussianNormalized: return "gaussian_normalized";
    case Distribution::Radial: return "radial";
  }
  return "?";
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

ExperimentConfig ExperimentConfig::from_string(const std::string& text) {
  ExperimentConfig cfg;
  std::string spectrum;
  bool have_manifold = false, have_quantity = false;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected 'key = value', got: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "manifold") {
      if (val == "circle") cfg.manifold = ManifoldId::Circle;
      else if (val == "torus2") cfg.manifold = ManifoldId::Torus2;
      else if (val == "sphere2") cfg.manifold = ManifoldId::Sphere2;
      else throw ConfigError("config: unknown manifold: " + val);
      have_manifold = true;
    } else if (key == "spectrum") {
      spectrum = val;
    } else if (key == "distribution") {
      const auto colon = val.find(':');
      const std::string head = colon == std::string::npos ? val : val.substr(0, colon);
      const std::string arg = colon == std::string::npos ? "" : trim(val.substr(colon + 1));
      if (head == "uniform_sphere") cfg.distribution = Distribution::UniformSphere;
      else if (head == "gaussian") {
        cfg.distribution = Distribution::Gaussian;
        if (arg.empty()) throw ConfigError("config: gaussian needs gaussian:SIGMA");
        cfg.sigma = parse_double(arg, "sigma");
      } else if (head == "gaussian_normalized") {
        cfg.distribution = Distribution::GaussianNormalized;
      } else if (head == "radial") {
        cfg.distribution = Distribution::Radial;
        if (arg.empty()) throw ConfigError("config: radial needs radial:TABLE.csv");
        cfg.radial_table = arg;
      } else {
        throw ConfigError("config: unknown distribution: " + val);
      }
    } else if (key == "quantity") {
      const auto colon = val.find(':');
      const std::string head = colon == std::string::npos ? val : val.substr(0, colon);
      const std::string arg = colon == std::string::npos ? "" : trim(val.substr(colon + 1));
      if (head == "zeros") cfg.quantity = Quantity::Zeros;
      else if (head == "level_measure") cfg.quantity = Quantity::LevelMeasure;
      else if (head == "excursion") cfg.quantity = Quantity::Excursion;
      else if (head == "leray_shell") cfg.quantity = Quantity::LerayShell;
      else if (head == "leray_coarea") cfg.quantity = Quantity::LerayCoarea;
      else if (head == "sup") cfg.quantity = Quantity::Sup;
      else if (head == "common_zeros") cfg.quantity = Quantity::CommonZeros;
      else if (head == "lp" || head == "int_abs_pow") {
        cfg.quantity = head == "lp" ? Quantity::Lp : Quantity::IntAbsPow;
        if (arg.empty())
          throw ConfigError("config: " + head + " needs " + head + ":A");
        cfg.power_a = parse_double(arg, "a");
      } else {
        throw ConfigError("config: unknown quantity: " + val);
      }
      have_quantity = true;
    } else if (key == "levels") {
      cfg.levels.clear();
      for (const auto& part : split(val, ','))
        if (!part.empty()) cfg.levels.push_back(parse_double(part, "levels"));
      if (cfg.levels.empty()) throw ConfigError("config: empty level list");
    } else if (key == "samples") {
      cfg.samples = parse_long(val, key);
    } else if (key == "resolution") {
      cfg.resolution = static_cast<int>(parse_long(val, key));
    } else if (key == "master_seed") {
      cfg.master_seed = parse_u64(val, key);
    } else if (key == "epsilon") {
      cfg.epsilon = parse_double(val, key);
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(parse_long(val, key));
    } else if (key == "output") {
      cfg.output = val;
    } else if (key == "format") {
      cfg.format = val;
    } else {
      throw ConfigError("config: unknown key: " + key);
    }
  }
  if (!have_manifold) throw ConfigError("config: missing 'manifold'");
  if (!have_quantity) throw ConfigError("config: missing 'quantity'");
  if (spectrum.empty()) throw ConfigError("config: missing 'spectrum'");
  switch (cfg.manifold) {
    case ManifoldId::Circle:
      for (const auto& part : split(spectrum, ','))
        if (!part.empty())
          cfg.circle_spectrum.push_back(
              static_cast<int>(parse_long(part, "spectrum")));
      break;
    case ManifoldId::Torus2:
      cfg.torus_generators = parse_torus_spectrum(spectrum);
      break;
    case ManifoldId::Sphere2:
      for (const auto& part : split(spectrum, ','))
        if (!part.empty())
          cfg.sphere_degrees.push_back(
              static_cast<int>(parse_long(part, "spectrum")));
      break;
  }
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  if (samples < 2) throw ConfigError("config: samples must be >= 2");
  if (resolution < 8) throw ConfigError("config: resolution must be >= 8");
  if (!(epsilon > 0.0)) throw ConfigError("config: epsilon must be > 0");
  if (format != "json" && format != "csv")
    throw ConfigError("config: format must be json or csv");
  if (quantity == Quantity::Zeros && manifold != ManifoldId::Circle)
    throw ConfigError("config: quantity 'zeros' requires the circle");
  if (quantity == Quantity::CommonZeros && manifold == ManifoldId::Circle)
    throw ConfigError("config: 'common_zeros' needs a 2-manifold");
  if (quantity == Quantity::Lp && !(power_a >= 1.0))
    throw ConfigError("config: lp order must be >= 1");
  if (quantity == Quantity::IntAbsPow && !(power_a > -1.0))
    throw ConfigError("config: int_abs_pow order must be > -1");
  if (distribution == Distribution::Gaussian && !(sigma > 0.0))
    throw ConfigError("config: sigma must be > 0");
  const bool level_quantity =
      quantity == Quantity::Zeros || quantity == Quantity::LevelMeasure ||
      quantity == Quantity::Excursion || quantity == Quantity::LerayShell ||
      quantity == Quantity::LerayCoarea || quantity == Quantity::CommonZeros;
  if (!level_quantity && distribution != Distribution::UniformSphere)
    throw ConfigError(
        "config: norm quantities have closed forms only for uniform_sphere");
  if (distribution == Distribution::UniformSphere && level_quantity)
    for (double t : levels)
      if (std::fabs(t) > 1.0)
        throw ConfigError(
            "config: |t_scaled| <= 1 under the uniform-sphere law (levels are "
            "in units of c)");
}

EigenspaceSpec ExperimentConfig::build_space() const {
  try {
    switch (manifold) {
      case ManifoldId::Circle: return make_circle_space(circle_spectrum);
      case ManifoldId::Torus2: return make_torus_space(torus_generators);
      case ManifoldId::Sphere2: return make_sphere_space(sphere_degrees);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  throw ConfigError("config: bad manifold");
}

std::string ExperimentConfig::canonical_string() const {
  std::ostringstream os;
  os << "manifold=";
  switch (manifold) {
    case ManifoldId::Circle: os << "circle"; break;
    case ManifoldId::Torus2: os << "torus2"; break;
    case ManifoldId::Sphere2: os << "sphere2"; break;
  }
  os << ";spectrum=";
  switch (manifold) {
    case ManifoldId::Circle:
      for (std::size_t i = 0; i < circle_spectrum.size(); ++i)
        os << (i ? "," : "") << circle_spectrum[i];
      break;
    case ManifoldId::Torus2:
      for (std::size_t i = 0; i < torus_generators.size(); ++i)
        os << (i ? ";" : "") << "(" << torus_generators[i][0] << ","
           << torus_generators[i][1] << ")";
      break;
    case ManifoldId::Sphere2:
      for (std::size_t i = 0; i < sphere_degrees.size(); ++i)
        os << (i ? "," : "") << sphere_degrees[i];
      break;
  }
  os << ";distribution=" << distribution_name(distribution);
  if (distribution == Distribution::Gaussian) os << ":" << fmt_double(sigma);
  if (distribution == Distribution::Radial) os << ":" << radial_table;
  os << ";quantity=" << quantity_name(quantity);
  if (quantity == Quantity::Lp || quantity == Quantity::IntAbsPow)
    os << ":" << fmt_double(power_a);
  os << ";levels=";
  for (std::size_t i = 0; i < levels.size(); ++i)
    os << (i ? "," : "") << fmt_double(levels[i]);
  os << ";samples=" << samples << ";resolution=" << resolution
     << ";master_seed=" << master_seed << ";epsilon=" << fmt_double(epsilon);
  return os.str();
}

std::uint64_t ExperimentConfig::config_hash() const {
  const std::string s = canonical_string();
  std::uint64_t h = 1469598103934665603ull; // FNV-1a 64
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

int resolve_threads(const ExperimentConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  if (const char* env = std::getenv("ISOGEOM_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return t;
  }
  return omp_get_max_threads();
}

// ---- aggregation ------------------------------------------------------------

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

McEstimate aggregate(std::span<const double> values, std::uint64_t seed) {
  McEstimate est;
  est.master_seed = seed;
  std::vector<double> ok;
  ok.reserve(values.size());
  for (double v : values) {
    if (std::isnan(v)) ++est.failed;
    else ok.push_back(v);
  }
  est.n = static_cast<long>(ok.size());
  if (est.n == 0) return est;
  est.mean = pairwise_sum(ok) / static_cast<double>(est.n);
  if (est.n > 1) {
    std::vector<double> sq(ok.size());
    for (std::size_t i = 0; i < ok.size(); ++i) {
      const double dlt = ok[i] - est.mean;
      sq[i] = dlt * dlt;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(est.n - 1);
    est.stderr_val = std::sqrt(var / static_cast<double>(est.n));
  }
  return est;
}

// ---- trial evaluation --------------------------------------------------------

namespace {

RadialDensity load_radial_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open radial table " + path);
  auto rs = std::make_shared<std::vector<double>>();
  auto as = std::make_shared<std::vector<double>>();
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto parts = split(line, ',');
    if (parts.size() != 2)
      throw ConfigError("config: radial table rows must be r,alpha");
    rs->push_back(parse_double(parts[0], "radial r"));
    as->push_back(parse_double(parts[1], "radial alpha"));
  }
  if (rs->size() < 2) throw ConfigError("config: radial table too short");
  for (std::size_t i = 1; i < rs->size(); ++i)
    if ((*rs)[i] <= (*rs)[i - 1])
      throw ConfigError("config: radial table radii must increase");
  auto fn = [rs, as](double r) {
    if (r <= rs->front() || r >= rs->back()) return 0.0;
    const auto it = std::upper_bound(rs->begin(), rs->end(), r);
    const std::size_t i = static_cast<std::size_t>(it - rs->begin());
    const double f = (r - (*rs)[i - 1]) / ((*rs)[i] - (*rs)[i - 1]);
    return (*as)[i - 1] + f * ((*as)[i] - (*as)[i - 1]);
  };
  return RadialDensity(fn, rs->back());
}

struct TrialEvaluator {
  const ExperimentConfig& cfg;
  const EigenspaceSpec& spec;
  const EstimatorContext& ctx;
  double t_abs;
  std::optional<RadialDensity> density;
  std::optional<RadialSampler> radial;

  TrialEvaluator(const ExperimentConfig& cfg_, const EigenspaceSpec& spec_,
                 const EstimatorContext& ctx_, double t_scaled)
      : cfg(cfg_), spec(spec_), ctx(ctx_), t_abs(absolute_level(spec_, t_scaled)) {
    if (cfg.distribution == Distribution::Radial) {
      density.emplace(load_radial_table(cfg.radial_table));
      radial.emplace(spec, *density);
    }
  }

  PolynomialSample draw(CounterRng& rng) const {
    switch (cfg.distribution) {
      case Distribution::UniformSphere:
        return sample_uniform_sphere(spec, rng);
      case Distribution::Gaussian:
        return sample_gaussian(spec, cfg.sigma, rng);
      case Distribution::GaussianNormalized:
        return sample_gaussian(spec, M_SQRT2 / spec.c, rng);
      case Distribution::Radial:
        return radial->sample(rng);
    }
    return {};
  }

  double operator()(std::uint64_t trial) const {
    CounterRng rng(cfg.master_seed, trial);
    PolynomialSample u = draw(rng);
    switch (cfg.quantity) {
      case Quantity::Zeros:
        return count_zeros_circle(u, t_abs, ctx.zeros_grid_n);
      case Quantity::LevelMeasure:
        if (spec.manifold->m == 1)
          return count_zeros_circle(u, t_abs, ctx.zeros_grid_n);
        return nodal_length_2d(u, t_abs, *ctx.mesh).total_length;
      case Quantity::Excursion:
        return excursion_volume(u, t_abs, *ctx.quad).value;
      case Quantity::LerayShell:
        return leray_eps_shell(u, t_abs, cfg.epsilon, *ctx.quad).value;
      case Quantity::LerayCoarea:
        return leray_coarea(u, t_abs, ctx).value;
      case Quantity::Lp:
        return lp_norm(u, cfg.power_a, ctx);
      case Quantity::IntAbsPow:
        return integral_abs_power(u, cfg.power_a, ctx);
      case Quantity::Sup:
        return sup_norm(u, ctx).refined_max;
      case Quantity::CommonZeros: {
        PolynomialSample v = draw(rng); // second field from the same stream
        return common_level_count(u, t_abs, v, t_abs, *ctx.mesh);
      }
    }
    return 0.0;
  }
};

struct Comparison {
  ClosedForm cf;
  ComparisonKind kind;
};

LevelQuery make_level_query(const ExperimentConfig& cfg,
                            const EigenspaceSpec& spec, double t_scaled) {
  LevelQuery q;
  q.t_scaled = t_scaled;
  switch (cfg.distribution) {
    case Distribution::UniformSphere:
      q.law = LevelQuery::Law::UniformSphere;
      break;
    case Distribution::Gaussian:
      q.law = LevelQuery::Law::Gaussian;
      q.sigma = cfg.sigma;
      break;
    case Distribution::GaussianNormalized:
      q.law = LevelQuery::Law::Gaussian;
      q.sigma = M_SQRT2 / spec.c;
      break;
    case Distribution::Radial:
      q.law = LevelQuery::Law::Radial;
      break;
  }
  return q;
}

Comparison closed_form_for(const ExperimentConfig& cfg,
                           const EigenspaceSpec& spec,
                           const RadialDensity* density, double t_scaled) {
  const LevelQuery q = make_level_query(cfg, spec, t_scaled);
  const bool uniform = q.law == LevelQuery::Law::UniformSphere;
  switch (cfg.quantity) {
    case Quantity::Zeros:
    case Quantity::LevelMeasure:
      if (uniform) return {expected_level_measure(spec, q.t_scaled), ComparisonKind::Exact};
      if (q.law == LevelQuery::Law::Radial)
        return {radial_expectations(spec, *density, q.t_scaled).level,
                ComparisonKind::Exact};
      return {gaussian_expectations(spec, q.sigma, q.t_scaled).level,
              ComparisonKind::Exact};
    case Quantity::Excursion:
      if (uniform)
        return {expected_excursion_volume(spec, q.t_scaled), ComparisonKind::Exact};
      if (q.law == LevelQuery::Law::Radial)
        return {radial_expectations(spec, *density, q.t_scaled).excursion,
                ComparisonKind::Exact};
      return {gaussian_expectations(spec, q.sigma, q.t_scaled).excursion,
              ComparisonKind::Exact};
    case Quantity::LerayShell:
    case Quantity::LerayCoarea:
      if (uniform) return {expected_leray(spec, q.t_scaled), ComparisonKind::Exact};
      if (q.law == LevelQuery::Law::Radial)
        return {radial_expectations(spec, *density, q.t_scaled).leray,
                ComparisonKind::Exact};
      return {gaussian_expectations(spec, q.sigma, q.t_scaled).leray,
              ComparisonKind::Exact};
    case Quantity::IntAbsPow: {
      ClosedForm cf;
      cf.id = FormulaId::Moment;
      cf.inputs.m = spec.manifold->m;
      cf.inputs.total_volume = spec.manifold->total_volume;
      cf.inputs.d = spec.d;
      cf.inputs.c = spec.c;
      cf.inputs.s = spec.s;
      cf.inputs.a = cfg.power_a;
      cf.value = moment_formula(cfg.power_a, spec.d);
      return {cf, ComparisonKind::Exact};
    }
    case Quantity::Lp: {
      if (cfg.power_a == 1.0) {
        ClosedForm cf;
        cf.id = FormulaId::Moment;
        cf.inputs.m = spec.manifold->m;
        cf.inputs.d = spec.d;
        cf.inputs.c = spec.c;
        cf.inputs.s = spec.s;
        cf.inputs.a = 1.0;
        cf.value = moment_formula(1.0, spec.d);
        return {cf, ComparisonKind::Exact};
      }
      ClosedForm cf;
      cf.id = FormulaId::LpBound;
      cf.inputs.d = spec.d;
      cf.inputs.a = cfg.power_a;
      cf.value = std::sqrt((cfg.power_a + 1.0) / M_E);
      // the universal bound is proven for a >= 2; in (1,2) it is empirical
      return {cf, cfg.power_a >= 2.0 ? ComparisonKind::UpperBound
                                     : ComparisonKind::EmpiricalOnly};
    }
    case Quantity::Sup: {
      ClosedForm cf;
      cf.id = FormulaId::SupBoundC;
      cf.inputs.d = spec.d;
      cf.inputs.c = spec.c;
      cf.inputs.s = spec.s;
      cf.value = spec.c; // sharp pointwise bound, attained on u = iota(q)
      return {cf, ComparisonKind::UpperBound};
    }
    case Quantity::CommonZeros: {
      const EigenspaceSpec* pair[2] = {&spec, &spec};
      const double ts[2] = {t_scaled, t_scaled};
      return {expected_intersection_measure(pair, ts), ComparisonKind::Exact};
    }
  }
  throw ConfigError("config: unsupported quantity");
}

} // namespace

std::vector<double> run_trials(const ExperimentConfig& cfg,
                               const EigenspaceSpec& spec,
                               const EstimatorContext& ctx, double t_scaled,
                               long n, std::uint64_t trial0, bool parallel) {
  const TrialEvaluator eval(cfg, spec, ctx, t_scaled);
  auto guarded = [&eval](std::uint64_t trial) {
    try {
      return eval(trial);
    } catch (const std::exception&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  std::vector<double> out(static_cast<std::size_t>(n));
  if (!parallel) {
    for (long i = 0; i < n; ++i) out[i] = guarded(trial0 + i);
    return out;
  }
  const int threads = resolve_threads(cfg);
#pragma omp parallel for schedule(dynamic, 8) num_threads(threads)
  for (long i = 0; i < n; ++i) out[i] = guarded(trial0 + i);
  return out;
}

namespace {

void judge(ComparisonReport& rep) {
  const double mean = rep.estimate.mean;
  const double se = rep.estimate.stderr_val;
  const double ref = rep.closed_form.value;
  switch (rep.kind) {
    case ComparisonKind::Exact: {
      const double diff = std::fabs(mean - ref);
      // absolute floor protects zero-variance cells (integer counts at d=1)
      rep.pass = diff <= std::max(3.0 * se, 1e-9 * std::max(1.0, std::fabs(ref)));
      rep.z = se > 0.0 ? (mean - ref) / se : (rep.pass ? 0.0 : 1e15);
      break;
    }
    case ComparisonKind::UpperBound:
      rep.pass = mean < ref;
      rep.z = se > 0.0 ? (mean - ref) / se : (rep.pass ? 0.0 : 1e15);
      break;
    case ComparisonKind::EmpiricalOnly:
      rep.pass = true;
      rep.z = 0.0;
      break;
  }
  if (std::fabs(rep.z) > 1e15) rep.z = std::copysign(1e15, rep.z);
}

} // namespace

std::vector<ComparisonReport> cmd_simulate(const ExperimentConfig& cfg) {
  cfg.validate();
  const EigenspaceSpec spec = cfg.build_space();
  const EstimatorContext ctx(spec, cfg.resolution);
  std::optional<RadialDensity> density;
  if (cfg.distribution == Distribution::Radial)
    density.emplace(load_radial_table(cfg.radial_table));

  std::vector<ComparisonReport> reports;
  for (double t : cfg.levels) {
    ComparisonReport rep;
    rep.quantity = cfg.quantity;
    rep.t_scaled = t;
    const Comparison cmp =
        closed_form_for(cfg, spec, density ? &*density : nullptr, t);
    rep.closed_form = cmp.cf;
    rep.kind = cmp.kind;
    const double t_start = omp_get_wtime();
    auto values = run_trials(cfg, spec, ctx, t, cfg.samples, 0, true);
    rep.estimate = aggregate(values, cfg.master_seed);
    if (rep.estimate.failed * 100 > cfg.samples) {
      std::ostringstream os;
      os << "simulate: " << rep.estimate.failed << "/" << cfg.samples
         << " trials failed at t_scaled=" << fmt_double(t)
         << " (quantity " << quantity_name(cfg.quantity) << ")";
      throw std::runtime_error(os.str());
    }
    judge(rep);
    if (!rep.pass && rep.kind != ComparisonKind::EmpiricalOnly) {
      // two-stage rule: one rerun at 4x N on fresh trial indices
      values = run_trials(cfg, spec, ctx, t, 4 * cfg.samples, cfg.samples, true);
      rep.estimate = aggregate(values, cfg.master_seed);
      rep.retried = true;
      judge(rep);
    }
    rep.runtime_seconds = omp_get_wtime() - t_start;
    reports.push_back(std::move(rep));
  }
  return reports;
}

std::vector<ExpectRow> cmd_expect(const ExperimentConfig& cfg) {
  const EigenspaceSpec spec = cfg.build_space();
  std::optional<RadialDensity> density;
  if (cfg.distribution == Distribution::Radial)
    density.emplace(load_radial_table(cfg.radial_table));
  const double sigma_eff = cfg.distribution == Distribution::GaussianNormalized
                               ? M_SQRT2 / spec.c
                               : cfg.sigma;
  std::vector<ExpectRow> rows;
  for (double t : cfg.levels) {
    const double t_abs = t * spec.c;
    const AsymptoticLimits lim = asymptotic_limits(t_abs, *spec.manifold);
    switch (cfg.distribution) {
      case Distribution::UniformSphere: {
        rows.push_back({"level_measure", t,
                        expected_level_measure(spec, t).value,
                        spec.s * lim.level_per_s});
        rows.push_back({"excursion_volume", t,
                        expected_excursion_volume(spec, t).value,
                        lim.excursion});
        rows.push_back(
            {"leray", t, expected_leray(spec, t).value, lim.leray});
        break;
      }
      case Distribution::Gaussian:
      case Distribution::GaussianNormalized: {
        const auto g = gaussian_expectations(spec, sigma_eff, t);
        rows.push_back({"gauss_level", t, g.level.value, spec.s * lim.level_per_s});
        rows.push_back({"gauss_excursion", t, g.excursion.value, lim.excursion});
        rows.push_back({"gauss_leray", t, g.leray.value, lim.leray});
        break;
      }
      case Distribution::Radial: {
        const auto r = radial_expectations(spec, *density, t);
        rows.push_back({"radial_level", t, r.level.value, spec.s * lim.level_per_s});
        rows.push_back({"radial_excursion", t, r.excursion.value, lim.excursion});
        rows.push_back({"radial_leray", t, r.leray.value, lim.leray});
        break;
      }
    }
  }
  if (cfg.quantity == Quantity::Lp || cfg.quantity == Quantity::IntAbsPow)
    rows.push_back({"moment", 0.0, moment_formula(cfg.power_a, spec.d),
                    moment_limit(cfg.power_a)});
  return rows;
}

// ---- bounds -----------------------------------------------------------------

std::string cmd_bounds(const ExperimentConfig& cfg, bool& all_pass) {
  cfg.validate();
  const EigenspaceSpec spec = cfg.build_space();
  const EstimatorContext ctx(spec, cfg.resolution);
  std::ostringstream os;
  all_pass = true;
  auto verdict = [&](bool ok) {
    all_pass = all_pass && ok;
    return ok ? "PASS" : "FAIL";
  };
  os << "bounds report: manifold=" << spec.manifold->name()
     << " spectrum=" << spec.spectrum_string() << " dim=" << spec.dim_e
     << " kappa=" << fmt_double(spec.kappa) << " N=" << cfg.samples << "\n";

  // universal L^p-mean bound on empirical means, a in {2, 4, 8}
  for (double a : {2.0, 4.0, 8.0}) {
    ExperimentConfig sub = cfg;
    sub.quantity = Quantity::Lp;
    sub.power_a = a;
    const auto values = run_trials(sub, spec, ctx, 0.0, cfg.samples, 0, true);
    const auto est = aggregate(values, cfg.master_seed);
    const auto b = lp_mean_bound(a);
    const bool ok = est.mean < b.universal;
    os << "  lp a=" << a << ": M||u||_a = " << fmt_double(est.mean)
       << " (se " << fmt_double(est.stderr_val) << ")"
       << " < sqrt((a+1)/e) = " << fmt_double(b.universal)
       << "  margin=" << fmt_double(b.universal - est.mean) << "  "
       << verdict(ok) << "\n";
    // Gamma-ratio chain: lower < asymptotic < universal
    const double lower = std::pow(2.0 / M_E, 0.5 / a) * b.universal;
    const bool chain = lower < b.asymptotic && b.asymptotic < b.universal;
    os << "    gamma-ratio chain: " << fmt_double(lower) << " < "
       << fmt_double(b.asymptotic) << " < " << fmt_double(b.universal) << "  "
       << verdict(chain) << "\n";
  }
  os << "  note: for p in [1,2) the universal bound is proven only for large "
        "dim E (reported empirical only)\n";

  // strict Stirling sandwich on (1/2, 200]
  {
    bool ok = true;
    for (double t = 0.5005; t <= 200.0; t += 0.0625) {
      const double mid = std::exp(stirling_defect(t)) / std::sqrt(M_PI);
      if (!(1.0 > mid && mid > std::sqrt(2.0 / M_E))) ok = false;
    }
    os << "  stirling sandwich strict on (0.5, 200]: " << verdict(ok) << "\n";
  }

  // sample-wise Lipschitz-ball inequality
  {
    const auto& ball = spec.manifold->ball;
    const double r = std::min(0.5 * ball.r0, 1.0 / spec.kappa);
    const long n_check = std::min<long>(cfg.samples, 200);
    double worst_margin = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (long i = 0; i < n_check; ++i) {
      const auto u = sample_uniform_sphere(
          spec, SeedPolicy{cfg.master_seed, static_cast<std::uint64_t>(i)});
      const double sup = sup_norm(u, ctx).refined_max;
      for (double a : {2.0, 4.0}) {
        const double na = lp_norm(u, a, ctx);
        const double rhs = std::pow(ball.b, -1.0 / a) *
                               std::pow(r, -spec.manifold->m / a) * na +
                           spec.kappa * r;
        worst_margin = std::min(worst_margin, rhs - sup);
        if (!(sup <= rhs)) ok = false;
      }
    }
    os << "  lipschitz-ball (a in {2,4}, r=" << fmt_double(r) << ", b=" << ball.b
       << ", r0=" << ball.r0 << "): min margin=" << fmt_double(worst_margin)
       << " over " << n_check << " samples  " << verdict(ok) << "\n";
  }

  // sup-norm bounds: certain bound c, log-bound as a diagnostic
  {
    ExperimentConfig sub = cfg;
    sub.quantity = Quantity::Sup;
    const auto values = run_trials(sub, spec, ctx, 0.0, cfg.samples, 0, true);
    const auto est = aggregate(values, cfg.master_seed);
    const auto sb = sup_mean_bound(spec, 0.1);
    const bool ok = est.mean < sb.trivial_c;
    os << "  sup: M||u||_inf = " << fmt_double(est.mean) << " < c = "
       << fmt_double(sb.trivial_c) << " (attained on u = iota(q))  "
       << verdict(ok) << "\n";
    if (std::isnan(sb.log_bound)) {
      os << "    log-bound: kappa <= 1, uninformative\n";
    } else {
      os << "    log-bound (e^{m-1/2}+0.1) sqrt(ln kappa) = "
         << fmt_double(sb.log_bound)
         << (sb.informative ? "" : "  [uninformative: exceeds c]") << "\n";
    }
  }
  return os.str();
}

int cmd_selftest(std::ostream& os) {
  bool ok = true;
  for (const auto& suite : selfcheck::run_all()) {
    os << "[" << (suite.ok() ? "PASS" : "FAIL") << "] " << suite.name << ": "
       << (suite.checks - suite.failures) << "/" << suite.checks << " checks\n";
    for (const auto& m : suite.messages) os << "    " << m << "\n";
    ok = ok && suite.ok();
  }
  // parallel determinism: identical reports at 1, 4, 16 threads
  {
    ExperimentConfig cfg;
    cfg.manifold = ManifoldId::Torus2;
    cfg.torus_generators = {{1, 0}};
    cfg.quantity = Quantity::Excursion;
    cfg.levels = {0.0, 0.4};
    cfg.samples = 96;
    cfg.resolution = 48;
    cfg.master_seed = 20240817;
    std::string first;
    bool same = true;
    for (int threads : {1, 4, 16}) {
      cfg.threads = threads;
      const auto reports = cmd_simulate(cfg);
      const std::string json = reports_to_json(reports, cfg, false);
      if (first.empty()) first = json;
      else same = same && (json == first);
    }
    os << "[" << (same ? "PASS" : "FAIL")
       << "] harness: byte-identical reports at 1/4/16 threads\n";
    ok = ok && same;
  }
  return ok ? 0 : 1;
}

// ---- serialization -----------------------------------------------------------

namespace {
const char* kind_name(ComparisonKind k) {
  switch (k) {
    case ComparisonKind::Exact: return "exact";
    case ComparisonKind::UpperBound: return "upper_bound";
    case ComparisonKind::EmpiricalOnly: return "empirical_only";
  }
  return "?";
}
} // namespace

std::string reports_to_json(std::span<const ComparisonReport> reports,
                            const ExperimentConfig& cfg, bool include_runtime) {
  std::ostringstream os;
  char hash[24];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(cfg.config_hash()));
  os << "{\n  \"config_hash\": \"" << hash << "\",\n  \"config\": \""
     << cfg.canonical_string() << "\",\n  \"results\": [\n";
  bool all_pass = true;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    all_pass = all_pass && r.pass;
    os << "    {\"quantity\": \"" << quantity_name(r.quantity)
       << "\", \"t_scaled\": " << fmt_json_number(r.t_scaled)
       << ", \"n\": " << r.estimate.n
       << ", \"mean\": " << fmt_json_number(r.estimate.mean)
       << ", \"stderr\": " << fmt_json_number(r.estimate.stderr_val)
       << ", \"closed_form\": " << fmt_json_number(r.closed_form.value)
       << ", \"comparison\": \"" << kind_name(r.kind)
       << "\", \"z\": " << fmt_json_number(r.z)
       << ", \"failed_trials\": " << r.estimate.failed
       << ", \"pass\": " << (r.pass ? "true" : "false")
       << ", \"retried\": " << (r.retried ? "true" : "false");
    if (include_runtime)
      os << ", \"runtime_seconds\": " << fmt_json_number(r.runtime_seconds);
    os << "}" << (i + 1 < reports.size() ? "," : "") << "\n";
  }
  os << "  ],\n  \"all_pass\": " << (all_pass ? "true" : "false") << "\n}\n";
  return os.str();
}

std::string reports_to_csv(std::span<const ComparisonReport> reports,
                           const ExperimentConfig& cfg) {
  std::ostringstream os;
  char hash[24];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(cfg.config_hash()));
  os << "config_hash,quantity,t_scaled,N,mean,stderr,closed_form,z,verdict\n";
  for (const auto& r : reports) {
    os << hash << "," << quantity_name(r.quantity) << ","
       << fmt_double(r.t_scaled) << "," << r.estimate.n << ","
       << fmt_double(r.estimate.mean) << "," << fmt_double(r.estimate.stderr_val)
       << "," << fmt_double(r.closed_form.value) << "," << fmt_double(r.z)
       << "," << (r.pass ? "pass" : "fail") << "\n";
  }
  return os.str();
}

std::string expect_to_text(std::span<const ExpectRow> rows) {
  std::ostringstream os;
  os << "formula                 t_scaled      value             dim->inf\n";
  for (const auto& r : rows) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-22s %9.4f   %-17.10g %-17.10g\n",
                  r.formula.c_str(), r.t_scaled, r.value, r.asymptotic);
    os << line;
  }
  return os.str();
}

std::string expect_to_json(std::span<const ExpectRow> rows) {
  std::ostringstream os;
  os << "[\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    os << "  {\"formula\": \"" << rows[i].formula
       << "\", \"t_scaled\": " << fmt_json_number(rows[i].t_scaled)
       << ", \"value\": " << fmt_json_number(rows[i].value)
       << ", \"dim_inf_limit\": " << fmt_json_number(rows[i].asymptotic) << "}"
       << (i + 1 < rows.size() ? "," : "") << "\n";
  }
  os << "]\n";
  return os.str();
}

std::string expect_to_csv(std::span<const ExpectRow> rows) {
  std::ostringstream os;
  os << "formula,t_scaled,value,dim_inf_limit\n";
  for (const auto& r : rows)
    os << r.formula << "," << fmt_double(r.t_scaled) << ","
       << fmt_double(r.value) << "," << fmt_double(r.asymptotic) << "\n";
  return os.str();
}

} // namespace isogeom
