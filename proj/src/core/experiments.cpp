#include "pathctl/experiments.hpp"

#include "pathctl/bshjb.hpp"
#include "pathctl/control.hpp"
#include "pathctl/error.hpp"
#include "pathctl/expr.hpp"
#include "pathctl/funcalc.hpp"
#include "pathctl/gauge.hpp"
#include "pathctl/phjb.hpp"
#include "pathctl/presets.hpp"
#include "pathctl/varprinciple.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <unordered_map>

namespace pathctl {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string Report::csv() const {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

std::string Report::summary_text() const {
  std::string out = "experiment: " + experiment + "\n";
  out += "rows: " + std::to_string(rows.size()) + "\n";
  for (const auto& s : summary) out += s + "\n";
  out += std::string("status: ") + (passed ? "PASS" : "FAIL") + "\n";
  return out;
}

namespace {

using json = nlohmann::json;

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
  fail(ErrorKind::Config, "config key '" + key + "': " + what);
}

std::string join_key(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

// Copies `user` onto `defaults`. Every user key must exist in the defaults
// with a compatible type; "problem" is free-form and validated later.
void merge(json& defaults, const json& user, const std::string& where) {
  if (!user.is_object()) config_error(where.empty() ? "<root>" : where, "expected an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = join_key(where, it.key());
    if (!defaults.contains(it.key())) config_error(key, "unknown key");
    json& slot = defaults[it.key()];
    const json& v = it.value();
    if (it.key() == "problem") {
      if (!v.is_string() && !v.is_object()) config_error(key, "expected a preset name or an object");
      slot = v;
    } else if (slot.is_object()) {
      merge(slot, v, key);
    } else if (slot.is_number_integer()) {
      if (!v.is_number_integer()) config_error(key, "expected an integer");
      slot = v;
    } else if (slot.is_number()) {
      if (!v.is_number()) config_error(key, "expected a number");
      slot = v;
    } else if (slot.is_string()) {
      if (!v.is_string()) config_error(key, "expected a string");
      slot = v;
    } else if (slot.is_boolean()) {
      if (!v.is_boolean()) config_error(key, "expected true or false");
      slot = v;
    } else if (slot.is_array()) {
      if (!v.is_array() || v.empty()) config_error(key, "expected a nonempty list");
      const json& proto = slot.front();
      for (const auto& e : v)
        if ((proto.is_number_integer() && !e.is_number_integer()) || (proto.is_number() && !e.is_number()))
          config_error(key, proto.is_number_integer() ? "expected a list of integers" : "expected a list of numbers");
      slot = v;
    }
  }
}

void apply_override(json& cfg, const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) fail(ErrorKind::Config, "override '" + text + "': expected key=value");
  const std::string path = text.substr(0, eq);
  const std::string raw = text.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* node = &cfg;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) fail(ErrorKind::Config, "override '" + text + "': empty key component");
    if (!node->is_object()) fail(ErrorKind::Config, "override '" + text + "': '" + part + "' is not inside an object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

// Typed access to a merged config section with range checks naming the key.
class Cfg {
 public:
  Cfg(const json& j, std::string where) : j_(j), where_(std::move(where)) {}

  std::size_t count(const char* key, std::size_t lo = 1,
                    std::size_t hi = std::numeric_limits<std::size_t>::max()) const {
    return checked_count(at(key), key, lo, hi);
  }
  std::uint64_t seed() const {
    const json& v = at("seed");
    if (!v.is_number_unsigned()) config_error(name("seed"), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
  double real(const char* key, double lo = -std::numeric_limits<double>::infinity(),
              double hi = std::numeric_limits<double>::infinity()) const {
    return checked_real(at(key), key, lo, hi);
  }
  double positive(const char* key) const {
    const double v = real(key);
    if (!(v > 0.0)) config_error(name(key), "must be positive");
    return v;
  }
  std::string text(const char* key) const { return at(key).get<std::string>(); }
  bool flag(const char* key) const { return at(key).get<bool>(); }
  std::vector<double> reals(const char* key, double lo = -std::numeric_limits<double>::infinity()) const {
    std::vector<double> out;
    for (const auto& e : at(key)) out.push_back(checked_real(e, key, lo, std::numeric_limits<double>::infinity()));
    return out;
  }
  std::vector<std::size_t> counts(const char* key, std::size_t lo, std::size_t hi) const {
    std::vector<std::size_t> out;
    for (const auto& e : at(key)) out.push_back(checked_count(e, key, lo, hi));
    return out;
  }
  Cfg sub(const char* key) const { return Cfg(at(key), name(key)); }
  const json& raw(const char* key) const { return at(key); }
  std::string name(const char* key) const { return join_key(where_, key); }

 private:
  const json& at(const char* key) const {
    if (!j_.contains(key)) config_error(name(key), "missing");
    return j_.at(key);
  }
  std::size_t checked_count(const json& v, const char* key, std::size_t lo, std::size_t hi) const {
    if (!v.is_number_unsigned()) config_error(name(key), "expected a non-negative integer");
    const auto n = v.get<std::uint64_t>();
    if (n < lo || n > hi)
      config_error(name(key), "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<std::size_t>(n);
  }
  double checked_real(const json& v, const char* key, double lo, double hi) const {
    const double x = v.get<double>();
    if (!std::isfinite(x)) config_error(name(key), "must be finite");
    if (x < lo || x > hi) config_error(name(key), "must lie in [" + format_double(lo) + ", " + format_double(hi) + "]");
    return x;
  }

  const json& j_;
  std::string where_;
};

GridConfig grid_from(const Cfg& c) {
  const Cfg g = c.sub("grid");
  GridConfig out;
  out.steps = g.count("steps", 1, 24);
  out.horizon = g.positive("horizon");
  out.dim = g.count("dim", 1, 4);
  out.noise_dim = g.count("noise_dim", 1, 4);
  return out;
}

GaugeParams gauge_from(const Cfg& c) {
  const Cfg g = c.sub("gauge");
  GaugeParams out;
  out.m = static_cast<int>(g.count("m", 1, GaugeParams::kMaxM));
  out.M = g.real("M", 3.0);
  return out;
}

std::vector<std::string> strings(const json& v, const std::string& key) {
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) config_error(key, "expected a string or a list of strings");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) config_error(key, "expected strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

// A preset name, or an object starting from a preset or random instance with
// any coefficient replaced inline. The experiment's grid always applies.
ProblemSpec spec_from(const Cfg& c, const GridConfig& grid) {
  const json& p = c.raw("problem");
  const std::string where = c.name("problem");
  ProblemSpec spec;
  if (p.is_string()) {
    spec = preset(p.get<std::string>());
  } else {
    static const char* known[] = {"preset",     "random_seed", "random_linear_seed", "controls",
                                  "drift",      "diffusion",   "generator",          "terminal"};
    for (auto it = p.begin(); it != p.end(); ++it)
      if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known))
        config_error(join_key(where, it.key()), "unknown key");
    const int bases = int(p.contains("preset")) + int(p.contains("random_seed")) + int(p.contains("random_linear_seed"));
    if (bases > 1) config_error(where, "preset, random_seed and random_linear_seed are exclusive");
    if (p.contains("random_seed")) {
      if (!p["random_seed"].is_number_unsigned()) config_error(where + ".random_seed", "expected a non-negative integer");
      spec = random_spec(p["random_seed"].get<std::uint64_t>());
    } else if (p.contains("random_linear_seed")) {
      if (!p["random_linear_seed"].is_number_unsigned())
        config_error(where + ".random_linear_seed", "expected a non-negative integer");
      spec = random_linear_spec(p["random_linear_seed"].get<std::uint64_t>());
    } else if (p.contains("preset")) {
      if (!p["preset"].is_string()) config_error(where + ".preset", "expected a string");
      spec = preset(p["preset"].get<std::string>());
    } else {
      spec = preset("lq");
      spec.name = "inline";
    }
    if (p.contains("controls")) {
      const json& u = p["controls"];
      if (!u.is_array() || u.empty()) config_error(where + ".controls", "expected a nonempty list of numbers");
      spec.controls.clear();
      for (const auto& e : u) {
        if (!e.is_number()) config_error(where + ".controls", "expected numbers");
        spec.controls.push_back(e.get<double>());
      }
    }
    if (p.contains("drift")) spec.drift = strings(p["drift"], where + ".drift");
    if (p.contains("diffusion")) {
      const json& s = p["diffusion"];
      spec.diffusion.clear();
      if (s.is_string()) {
        spec.diffusion = {{s.get<std::string>()}};
      } else if (s.is_array()) {
        for (const auto& row : s) spec.diffusion.push_back(strings(row, where + ".diffusion"));
      } else {
        config_error(where + ".diffusion", "expected a string or a list of rows");
      }
    }
    if (p.contains("generator")) spec.generator = strings(p["generator"], where + ".generator").at(0);
    if (p.contains("terminal")) spec.terminal = strings(p["terminal"], where + ".terminal").at(0);
  }
  spec.grid = grid;
  return spec;
}

ControlProblem problem_from(const Cfg& c) { return build_problem(spec_from(c, grid_from(c))); }

Path random_walk(std::mt19937_64& rng, std::size_t d, std::size_t k, double dt, double scale) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Matrix v(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k + 1));
  for (Eigen::Index i = 0; i < v.rows(); ++i) v(i, 0) = scale * uniform(rng);
  for (Eigen::Index j = 1; j < v.cols(); ++j)
    for (Eigen::Index i = 0; i < v.rows(); ++i) v(i, j) = v(i, j - 1) + scale * std::sqrt(dt) * normal(rng);
  return Path(std::move(v), dt);
}

std::string fmt(double v) { return format_double(v); }
std::string fmt(std::size_t v) { return std::to_string(v); }

// ---------------------------------------------------------------------------

Report gauge_suite(const Cfg& c) {
  const std::uint64_t seed = c.seed();
  const std::size_t pairs = c.count("pairs");
  const auto ms = c.counts("m", 1, GaugeParams::kMaxM);
  const auto Ms = c.reals("M", 3.0);
  const std::size_t dim = c.count("dim", 1, 8);
  const std::size_t max_steps = c.count("max_steps", 0, 64);
  const double dt = c.positive("dt");
  const double tol = c.real("tolerance", 0.0);

  Report r;
  r.header = {"pair_id", "m", "M", "s0_lower_slack", "s0_upper_slack", "subadd_gap"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(0, max_steps);
  double worst_lower = INFINITY, worst_upper = INFINITY, worst_gap = INFINITY;
  std::size_t id = 0;
  for (std::size_t m : ms) {
    for (double M : Ms) {
      const GaugeParams g{static_cast<int>(m), M};
      const double weight = std::pow(2.0, 2.0 * static_cast<double>(m) - 1.0);
      for (std::size_t i = 0; i < pairs; ++i) {
        const Path p = random_walk(rng, dim, len(rng), dt, 1.0);
        const Path q = random_walk(rng, dim, len(rng), dt, 1.0);
        const std::size_t k = len(rng);
        const Path a = random_walk(rng, dim, k, dt, 1.0);
        const Path b = random_walk(rng, dim, k, dt, 1.0);
        const double n2m = std::pow(sup_distance(p, q), 2.0 * static_cast<double>(m));
        const double u = upsilon(p, q, g);
        // Scaled so that one tolerance covers every path magnitude.
        const double lower = (u - n2m) / (1.0 + n2m);
        const double upper = (M * n2m - u) / (1.0 + n2m);
        const double gap = subadditivity_gap(a, b, g) / (1.0 + weight * (upsilon_norm(a, g) + upsilon_norm(b, g)));
        worst_lower = std::min(worst_lower, lower);
        worst_upper = std::min(worst_upper, upper);
        worst_gap = std::min(worst_gap, gap);
        r.rows.push_back({fmt(id++), fmt(m), fmt(M), fmt(lower), fmt(upper), fmt(gap)});
      }
    }
  }
  r.passed = worst_lower >= -tol && worst_upper >= -tol && worst_gap >= -tol;
  r.summary = {"min s0_lower_slack: " + fmt(worst_lower), "min s0_upper_slack: " + fmt(worst_upper),
               "min subadd_gap: " + fmt(worst_gap), "tolerance: -" + fmt(tol)};
  return r;
}

Report ito_suite(const Cfg& c) {
  const std::uint64_t seed = c.seed();
  const std::size_t paths = c.count("paths");
  const std::size_t levels = c.count("levels", 2, 8);
  const std::size_t steps0 = c.count("steps", 1, 1 << 12);
  const double horizon = c.positive("horizon");
  const double x0 = c.real("x0");
  const double target = c.positive("ratio_target");
  const double band = c.real("ratio_tolerance", 0.0, 1.0);
  const double affine_tol = c.real("affine_tolerance", 0.0);
  const Expression drift = Expression::parse(c.text("drift"), 1, 1);
  const Expression diffusion = Expression::parse(c.text("diffusion"), 1, 1);

  const DriftField b = [drift, horizon](const Path& p) { return Vector::Constant(1, drift({&p, horizon})).eval(); };
  const DiffusionField s = [diffusion, horizon](const Path& p) {
    return Matrix::Constant(1, 1, diffusion({&p, horizon})).eval();
  };

  PathFunctional square;
  square.eval = [](const Path& p) { return p.endpoint().squaredNorm(); };
  square.analytic_dt = [](const Path&) { return 0.0; };
  square.analytic_dx = [](const Path& p) { return Vector(2.0 * p.endpoint()); };
  square.analytic_dxx = [](const Path&) { return Matrix::Constant(1, 1, 2.0).eval(); };
  PathFunctional affine;
  affine.eval = [](const Path& p) { return 0.7 * p.endpoint()(0) - 0.3; };
  affine.analytic_dt = [](const Path&) { return 0.0; };
  affine.analytic_dx = [](const Path&) { return Vector::Constant(1, 0.7).eval(); };
  affine.analytic_dxx = [](const Path&) { return Matrix::Zero(1, 1).eval(); };

  Report r;
  r.header = {"level", "steps", "dt", "functional", "mean_abs_residual", "mean_sq_residual", "max_abs_residual"};
  std::vector<ItoReport> sq;
  double affine_max = 0.0;
  for (std::size_t l = 0; l < levels; ++l) {
    const std::size_t steps = steps0 << l;
    const double dt = horizon / static_cast<double>(steps);
    const Path p0 = Path::constant(Vector::Constant(1, x0), 0, dt);
    const ItoReport a = ito_check(square, b, s, p0, steps, paths, seed);
    const ItoReport e = ito_check(affine, b, s, p0, steps, paths, seed);
    sq.push_back(a);
    affine_max = std::max(affine_max, e.max_abs_residual);
    r.rows.push_back({fmt(l), fmt(steps), fmt(dt), "square", fmt(a.mean_abs_residual), fmt(a.mean_sq_residual),
                      fmt(a.max_abs_residual)});
    r.rows.push_back({fmt(l), fmt(steps), fmt(dt), "affine", fmt(e.mean_abs_residual), fmt(e.mean_sq_residual),
                      fmt(e.max_abs_residual)});
  }
  bool ratios_ok = true;
  for (std::size_t l = 1; l < levels; ++l) {
    const double abs_ratio = sq[l].mean_abs_residual / sq[l - 1].mean_abs_residual;
    const double sq_ratio = sq[l].mean_sq_residual / sq[l - 1].mean_sq_residual;
    ratios_ok = ratios_ok && std::abs(abs_ratio - target) <= band * target;
    r.summary.push_back("level " + fmt(l) + " square mean_abs ratio: " + fmt(abs_ratio) +
                        ", mean_sq ratio: " + fmt(sq_ratio));
  }
  r.summary.push_back("required mean_abs ratio: " + fmt(target) + " +- " + fmt(band * target));
  r.summary.push_back("affine max residual: " + fmt(affine_max) + " (tolerance " + fmt(affine_tol) + ")");
  r.passed = ratios_ok && affine_max <= affine_tol;
  return r;
}

Report bp_suite(const Cfg& c) {
  const std::uint64_t seed = c.seed();
  const std::size_t objectives = c.count("objectives");
  const std::size_t candidates = c.count("candidates");
  const std::size_t min_steps = c.count("min_steps", 0, 64);
  const std::size_t spread = c.count("spread", 0, 64);
  const double dt = c.positive("dt");
  const double scale = c.positive("scale");
  const double eps = c.positive("eps");
  const GaugeParams g = gauge_from(c);
  BPOptions opts;
  opts.deltas.base = c.positive("delta_base");
  opts.deltas.ratio = c.real("delta_ratio", 1e-3, 0.999);
  const std::string rule = c.text("rule");
  if (rule == "exact") {
    opts.rule = SelectionRule::Exact;
  } else if (rule != "earliest") {
    config_error(c.name("rule"), "expected 'earliest' or 'exact'");
  }
  const GaugeFunction rho = [g](const Path& a, const Path& b) { return upsilon_bar(a, b, g); };

  Report r;
  r.header = {"objective_id", "start_index", "optimum_index", "rounds", "perturbation_value", "verified"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(min_steps, min_steps + spread);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::size_t verified = 0;
  for (std::size_t i = 0; i < objectives; ++i) {
    std::vector<Path> items;
    for (std::size_t j = 0; j < candidates; ++j) items.push_back(random_walk(rng, 1, len(rng), dt, scale));
    const CandidateSet domain(std::move(items));
    const double a = coef(rng), b = 0.5 + 0.5 * coef(rng), w = coef(rng), e = coef(rng);
    const Objective f = [=](const Path& p) {
      const double x = p.endpoint()(0);
      return a * x - b * x * x + 0.3 * w * std::sin(3.0 * sup_norm(p)) + 0.2 * e * p.time();
    };
    const std::size_t start = pick_start(f, domain, eps);
    const BPResult res = borwein_preiss(f, rho, eps, domain[start], domain, opts);
    const bool ok = verify_bp(res, f, rho, opts.deltas, eps, domain[start], domain);
    verified += ok ? 1 : 0;
    std::size_t opt = 0;
    while (opt < domain.size() && !(domain[opt] == res.optimum)) ++opt;
    r.rows.push_back({fmt(i), fmt(start), fmt(opt), fmt(res.trajectory.size() - 1), fmt(res.perturbation_value),
                      ok ? "1" : "0"});
  }
  r.passed = verified == objectives;
  r.summary = {"verified: " + fmt(verified) + " of " + fmt(objectives)};
  return r;
}

// b + eps, sigma + eps, q + eps, phi + eps.
ControlProblem shifted(const ControlProblem& cp, double eps) {
  ControlProblem out = cp;
  out.drift = [d = cp.drift, eps](const Path& p, Control u) { return Vector(d(p, u).array() + eps); };
  out.diffusion = [s = cp.diffusion, eps](const Path& p, Control u) { return Matrix(s(p, u).array() + eps); };
  out.generator = [q = cp.generator, eps](const Path& p, double y, const Vector& z, Control u) {
    return q(p, y, z, u) + eps;
  };
  out.terminal = [phi = cp.terminal, eps](const Path& p) { return phi(p) + eps; };
  return out;
}

Report value_suite(const Cfg& c) {
  const std::uint64_t seed = c.seed();
  const ControlProblem cp = problem_from(c);
  const std::size_t paths = c.count("paths");
  const std::size_t max_t = c.count("max_t_index", 0, cp.grid.steps - 1);
  const std::size_t budget = c.count("leaf_budget");
  const double tol = c.real("tolerance", 0.0);
  const std::string mode = c.text("mode");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> tdraw(0, max_t);
  std::vector<Path> starts;
  for (std::size_t i = 0; i < paths; ++i) {
    const std::size_t k = tdraw(rng);
    starts.push_back(random_history(cp.grid, k, rng()));
  }

  Report r;
  if (mode == "oracle") {
    const bool equal = c.flag("open_loop_equal");
    r.header = {"path_id", "t_index", "value", "open_loop_max", "open_loop_count", "gap"};
    double worst = INFINITY, widest = 0.0;
    for (std::size_t i = 0; i < paths; ++i) {
      const double v = value(cp, starts[i], budget);
      const auto costs = enumerate_open_loop(cp, starts[i]);
      double best = -INFINITY;
      for (const auto& oc : costs) best = std::max(best, oc.cost);
      worst = std::min(worst, v - best);
      widest = std::max(widest, std::abs(v - best));
      r.rows.push_back({fmt(i), fmt(starts[i].t_index()), fmt(v), fmt(best), fmt(costs.size()), fmt(v - best)});
    }
    r.passed = worst >= -tol && (!equal || widest <= tol);
    r.summary = {"min value - open-loop max: " + fmt(worst), "max |value - open-loop max|: " + fmt(widest),
                 std::string("open-loop equality required: ") + (equal ? "yes" : "no")};
  } else if (mode == "stability") {
    const auto epsilons = c.reals("epsilons", 0.0);
    const double band = c.real("stability_tolerance", 0.0);
    for (double e : epsilons)
      if (!(e > 0.0)) config_error(c.name("epsilons"), "entries must be positive");
    std::vector<double> base;
    for (const Path& p : starts) base.push_back(value(cp, p, budget));
    std::vector<double> fitted;
    for (double e : epsilons) {
      const ControlProblem pert = shifted(cp, e);
      double sup = 0.0;
      for (std::size_t i = 0; i < paths; ++i) sup = std::max(sup, std::abs(value(pert, starts[i], budget) - base[i]));
      fitted.push_back(sup / e);
    }
    const std::size_t smallest = static_cast<std::size_t>(
        std::min_element(epsilons.begin(), epsilons.end()) - epsilons.begin());
    r.header = {"epsilon", "sup_abs_change", "fitted_c", "relative_to_smallest"};
    bool ok = true;
    for (std::size_t j = 0; j < epsilons.size(); ++j) {
      const double rel = fitted[j] / fitted[smallest] - 1.0;
      ok = ok && std::abs(rel) <= band;
      r.rows.push_back({fmt(epsilons[j]), fmt(fitted[j] * epsilons[j]), fmt(fitted[j]), fmt(rel)});
    }
    r.passed = ok;
    r.summary = {"fitted C at smallest epsilon: " + fmt(fitted[smallest]),
                 "allowed relative spread: " + fmt(band)};
  } else {
    config_error(c.name("mode"), "expected 'oracle' or 'stability'");
  }
  return r;
}

Report dpp_suite(const Cfg& c) {
  const std::uint64_t seed = c.seed();
  const ControlProblem cp = problem_from(c);
  const std::size_t paths = c.count("paths");
  const std::size_t t_index = c.count("t_index", 0, cp.grid.steps);
  const std::size_t budget = c.count("leaf_budget");
  const double tol = c.real("tolerance", 0.0);
  if (cp.grid.steps - t_index < 2) config_error(c.name("t_index"), "leaves no intermediate time");

  Report r;
  r.header = {"path_id", "t_index", "value", "max_residual", "worst_delta"};
  double worst = 0.0;
  for (std::size_t i = 0; i < paths; ++i) {
    const Path p = random_history(cp.grid, t_index, seed + i);
    double res = 0.0;
    std::size_t at = 1;
    for (std::size_t delta = 1; delta < cp.grid.steps - t_index; ++delta) {
      const double d = dpp_check(cp, p, delta, budget);
      if (d > res) {
        res = d;
        at = delta;
      }
    }
    worst = std::max(worst, res);
    r.rows.push_back({fmt(i), fmt(t_index), fmt(value(cp, p, budget)), fmt(res), fmt(at)});
  }
  r.passed = worst <= tol;
  r.summary = {"max residual: " + fmt(worst) + " (tolerance " + fmt(tol) + ")"};
  return r;
}

Report markov_suite(const Cfg& c) {
  const auto steps = c.counts("steps", 1, 24);
  const auto dxs = c.reals("dx", 0.0);
  if (steps.size() != dxs.size()) config_error(c.name("dx"), "needs one entry per entry of steps");
  const double horizon = c.positive("horizon");
  MarkovGridSpec grid;
  grid.x_min = c.real("x_min");
  grid.x_max = c.real("x_max");
  grid.substeps = c.count("substeps", 0);
  if (!(grid.x_max > grid.x_min)) config_error(c.name("x_max"), "must exceed x_min");
  const double fraction = c.real("time_fraction", 0.0, 1.0);
  const double history = c.real("history");
  const double endpoint = c.real("endpoint");
  const std::size_t budget = c.count("leaf_budget");

  Report r;
  r.header = {"level",  "steps", "dx", "tree_value", "fd_value", "residual", "bound", "interpolation_error",
              "fd_error", "tree_error"};
  double prev = INFINITY;
  bool bounded = true, decreasing = true;
  for (std::size_t l = 0; l < steps.size(); ++l) {
    if (!(dxs[l] > 0.0)) config_error(c.name("dx"), "entries must be positive");
    GridConfig g;
    g.steps = steps[l];
    g.horizon = horizon;
    const ControlProblem cp = build_problem(spec_from(c, g));
    const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(steps[l])));
    if (k >= steps[l]) config_error(c.name("time_fraction"), "must leave at least one step");
    Matrix v = Matrix::Constant(1, static_cast<Eigen::Index>(k + 1), history);
    v(0, static_cast<Eigen::Index>(k)) = endpoint;
    grid.dx = dxs[l];
    const MarkovConsistency mc = markov_consistency(cp, Path(v, cp.dt()), grid, budget);
    bounded = bounded && mc.residual <= mc.bound;
    decreasing = decreasing && mc.residual < prev;
    prev = mc.residual;
    r.rows.push_back({fmt(l), fmt(steps[l]), fmt(dxs[l]), fmt(mc.tree_value), fmt(mc.fd_value), fmt(mc.residual),
                      fmt(mc.bound), fmt(mc.interpolation_error), fmt(mc.fd_error), fmt(mc.tree_error)});
  }
  r.passed = bounded && decreasing;
  r.summary = {std::string("residual within bound on every level: ") + (bounded ? "yes" : "no"),
               std::string("residual strictly decreasing: ") + (decreasing ? "yes" : "no")};
  return r;
}

PathFunctional tree_value(const ControlProblem& cp, std::size_t budget) {
  PathFunctional w;
  w.eval = [cp, budget](const Path& q) { return value(cp, q, budget); };
  return w;
}

Report viscosity_suite(const Cfg& c) {
  const std::uint64_t seed = c.seed();
  const GridConfig grid = grid_from(c);
  const std::size_t paths = c.count("paths");
  const Cfg cc = c.sub("cloud");
  CloudSpec cloud;
  cloud.size = cc.count("size");
  cloud.max_radius = cc.positive("max_radius");
  cloud.min_radius = cc.positive("min_radius");
  if (cloud.min_radius > cloud.max_radius) config_error(cc.name("min_radius"), "must not exceed max_radius");
  const double tol = c.real("tolerance", 0.0);
  const std::string mode = c.text("mode");

  Report r;
  r.header = {"case", "path_id", "t_index", "check", "value", "touch"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> tdraw(0, grid.steps - 1);
  bool ok = true;
  double worst_residual = 0.0, worst_sub = INFINITY, worst_super = -INFINITY;
  auto probe_row = [&](const std::string& name, std::size_t i, const Path& p, const char* check,
                       const ViscosityProbe& v, bool sub) {
    ok = ok && v.is_touch_point && (sub ? v.residual >= -tol : v.residual <= tol);
    if (sub) worst_sub = std::min(worst_sub, v.residual);
    else worst_super = std::max(worst_super, v.residual);
    r.rows.push_back({name, fmt(i), fmt(p.t_index()), check, fmt(v.residual), v.is_touch_point ? "1" : "0"});
  };

  if (mode == "classical") {
    for (const auto& sol : classical_solutions(grid.steps, grid.horizon)) {
      for (std::size_t i = 0; i < paths; ++i) {
        const Path p = random_history(sol.problem.grid, tdraw(rng), rng());
        const double res = phjb_residual(sol.problem, sol.solution, p);
        ok = ok && std::abs(res) <= tol;
        worst_residual = std::max(worst_residual, std::abs(res));
        r.rows.push_back({sol.name, fmt(i), fmt(p.t_index()), "residual", fmt(res), ""});
      }
      const Path p = random_history(sol.problem.grid, tdraw(rng), rng());
      cloud.seed = rng();
      probe_row(sol.name, 0, p, "subsolution", subsolution_probe(sol.problem, sol.solution, sol.solution, p, cloud),
                true);
      probe_row(sol.name, 0, p, "supersolution",
                supersolution_probe(sol.problem, sol.solution, negated(sol.solution), p, cloud), false);
    }
  } else if (mode == "fitted") {
    const ControlProblem cp = problem_from(c);
    const double kappa = c.real("kappa", 0.0);
    const PathFunctional w = tree_value(cp, c.count("leaf_budget"));
    const std::string name = spec_from(c, grid).name;
    for (std::size_t i = 0; i < paths; ++i) {
      const Path p = random_history(cp.grid, tdraw(rng), rng());
      cloud.seed = rng();
      const PathFunctional up = fitted_test_functional(w, p, kappa, 1, cp.final_index());
      probe_row(name, i, p, "subsolution", subsolution_probe(cp, w, up, p, cloud), true);
      const PathFunctional down = fitted_test_functional(w, p, kappa, -1, cp.final_index());
      probe_row(name, i, p, "supersolution", supersolution_probe(cp, w, negated(down), p, cloud), false);
    }
  } else {
    config_error(c.name("mode"), "expected 'classical' or 'fitted'");
  }
  r.passed = ok;
  if (mode == "classical") r.summary.push_back("max |residual|: " + fmt(worst_residual));
  r.summary.push_back("min subsolution residual: " + fmt(worst_sub));
  r.summary.push_back("max supersolution residual: " + fmt(worst_super));
  r.summary.push_back("tolerance: " + fmt(tol));
  return r;
}

Report bshjb_suite(const Cfg& c) {
  const std::uint64_t seed = c.seed();
  const std::size_t instances = c.count("instances");
  const std::size_t steps = c.count("steps", 1, 8);
  const double tol = c.real("tolerance", 0.0);

  Report r;
  r.header = {"instance_id", "d", "m", "t_index", "bsde_value", "augmented_value", "residual"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> tdraw(0, steps - 1);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < instances; ++i) {
    const AugmentedProblem ap = random_augmented(seed + i, steps);
    const Path omega = random_walk(rng, ap.grid.dim, tdraw(rng), ap.grid.dt(), 1.0);
    Vector x(static_cast<Eigen::Index>(ap.state_dim));
    for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = uniform(rng);
    const Remark64Result res = remark64_check(ap, omega, x);
    worst = std::max(worst, res.residual);
    r.rows.push_back({fmt(i), fmt(ap.grid.dim), fmt(ap.state_dim), fmt(omega.t_index()), fmt(res.bsde_value),
                      fmt(res.augmented_value), fmt(res.residual)});
  }
  r.passed = worst <= tol;
  r.summary = {"max residual: " + fmt(worst) + " (tolerance " + fmt(tol) + ")"};
  return r;
}

// Path values and time as a byte key for memoizing functionals on a fixed candidate set.
std::string path_key(const Path& p) {
  std::string key(reinterpret_cast<const char*>(p.values().data()), sizeof(double) * p.values().size());
  key += std::to_string(p.dim());
  return key;
}

PathFunctional memoized(PathFunctional f) {
  auto cache = std::make_shared<std::unordered_map<std::string, double>>();
  PathFunctional out;
  out.eval = [f = std::move(f), cache](const Path& p) {
    const std::string key = path_key(p);
    const auto it = cache->find(key);
    if (it != cache->end()) return it->second;
    const double v = f(p);
    cache->emplace(key, v);
    return v;
  };
  return out;
}

Report comparison_suite(const Cfg& c) {
  const std::uint64_t seed = c.seed();
  const ControlProblem cp = problem_from(c);
  const std::size_t pairs = c.count("pairs");
  const auto betas = c.reals("betas", 0.0);
  const double eps = c.positive("eps");
  const double nu = c.real("nu", 1.0);
  if (!(nu > 1.0)) config_error(c.name("nu"), "must exceed 1");
  const double offset = c.real("offset", 0.0);
  const double r_min = c.positive("min_radius");
  const double r_max = c.positive("max_radius");
  if (r_min > r_max) config_error(c.name("min_radius"), "must not exceed max_radius");
  const GaugeParams g = gauge_from(c);
  const Cfg bc = c.sub("bp");
  const double bp_eps = bc.positive("eps");
  BPOptions opts;
  opts.deltas.base = bc.positive("delta_base");
  opts.deltas.ratio = bc.real("delta_ratio", 1e-3, 0.999);
  const double tol = c.real("tolerance", 0.0);
  for (double b : betas)
    if (!(b > 0.0)) config_error(c.name("betas"), "entries must be positive");

  // W2 = V and W1 = V - offset, both from the tree value.
  const PathFunctional w2 = memoized(tree_value(cp, c.count("leaf_budget")));
  PathFunctional w1;
  w1.eval = [w2, offset](const Path& p) { return w2(p) - offset; };

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> tdraw(0, cp.grid.steps - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> logr(std::log(r_min), std::log(r_max));
  std::vector<Path> items;
  for (std::size_t i = 0; i < pairs; ++i) {
    const Path eta = random_history(cp.grid, tdraw(rng), rng());
    Matrix dir(eta.values().rows(), eta.values().cols());
    for (Eigen::Index j = 0; j < dir.size(); ++j) dir(j) = normal(rng);
    const double n = dir.colwise().norm().maxCoeff();
    const Path gamma(eta.values() + std::exp(logr(rng)) / std::max(n, 1e-300) * dir, cp.dt());
    items.push_back(pack_pair(gamma, eta));
  }
  const CandidateSet domain(std::move(items));
  const GaugeFunction rho = [g](const Path& a, const Path& b) { return pair_gauge(a, b, g); };

  Report r;
  r.header = {"beta", "optimum_index", "beta_upsilon", "upsilon", "sup_distance", "psi", "rounds"};
  double prev = INFINITY;
  bool monotone = true;
  for (double beta : betas) {
    const Objective f = [&](const Path& packed) {
      const auto [gamma, eta] = unpack_pair(packed);
      return comparison_psi(w1, w2, gamma, eta, beta, eps, nu, cp.grid.horizon, g);
    };
    const std::size_t start = pick_start(f, domain, bp_eps);
    const BPResult res = borwein_preiss(f, rho, bp_eps, domain[start], domain, opts);
    const auto [gamma, eta] = unpack_pair(res.optimum);
    const double u = upsilon(gamma, eta, g);
    std::size_t opt = 0;
    while (opt < domain.size() && !(domain[opt] == res.optimum)) ++opt;
    monotone = monotone && beta * u <= prev + tol;
    prev = beta * u;
    r.rows.push_back({fmt(beta), fmt(opt), fmt(beta * u), fmt(u), fmt(sup_distance(gamma, eta)), fmt(f(res.optimum)),
                      fmt(res.trajectory.size() - 1)});
  }
  r.passed = monotone;
  r.summary = {std::string("beta * Upsilon non-increasing along the ladder: ") + (monotone ? "yes" : "no")};
  return r;
}

// ---------------------------------------------------------------------------

struct Entry {
  ExperimentInfo info;
  std::function<Report(const Cfg&)> run;
};

const char* const kGrid = R"("grid": {"steps": 4, "horizon": 1.0, "dim": 1, "noise_dim": 1})";

std::string with_grid(const std::string& body) { return "{" + std::string(kGrid) + ", " + body + "}"; }

const std::vector<Entry>& registry() {
  static const std::vector<Entry> all = {
      {{"gauge-suite",
        "Random path pairs per (m, M): slacks of ||g-e||^2m <= Upsilon <= M ||g-e||^2m and the subadditivity gap, "
        "each divided by 1 + the size of the compared terms. Passes when every column is >= -tolerance.",
        R"({"seed": 1, "pairs": 1000, "m": [1, 2, 3], "M": [3.0, 5.0], "dim": 2, "max_steps": 6, "dt": 0.125,
            "tolerance": 1e-12})"},
       gauge_suite},
      {{"ito-check",
        "Monte Carlo functional Ito residual of f = x(t)^2 and of an endpoint-affine f on Euler paths of "
        "dX = drift dt + diffusion dW, with the step count doubled at each level. Passes when the mean |residual| "
        "of the square ratios to ratio_target within ratio_tolerance (relative) between levels and the affine "
        "residual stays below affine_tolerance.",
        R"j({"seed": 1, "paths": 10000, "levels": 3, "steps": 8, "horizon": 1.0, "x0": 0.0,
            "drift": "0.3*sin(m1) - 0.2*x1", "diffusion": "1 + 0.2*cos(x1)", "ratio_target": 0.5,
            "ratio_tolerance": 0.3, "affine_tolerance": 1e-10})j"},
       ito_suite},
      {{"bp-demo",
        "Borwein-Preiss on random objectives over random candidate sets with rho = Upsilon-bar; each result is "
        "checked by an exhaustive scan of the distance bounds, the value inequality and strict maximality.",
        R"({"seed": 1, "objectives": 100, "candidates": 200, "min_steps": 1, "spread": 4, "dt": 0.25, "scale": 0.6,
            "eps": 0.1, "delta_base": 1.0, "delta_ratio": 0.5, "rule": "earliest", "gauge": {"m": 3, "M": 3.0}})"},
       bp_suite},
      {{"value",
        "Tree value functional at random histories. mode 'oracle' compares with every open-loop control sequence "
        "(value >= each cost; equal within tolerance when open_loop_equal). mode 'stability' shifts b, sigma, q "
        "and phi by each epsilon and fits C = sup |dV| / epsilon; passes when every C is within "
        "stability_tolerance (relative) of C at the smallest epsilon.",
        with_grid(R"("seed": 1, "problem": "lq", "mode": "oracle", "paths": 5, "max_t_index": 0,
                     "open_loop_equal": false, "tolerance": 1e-10, "epsilons": [0.1, 0.01, 0.001],
                     "stability_tolerance": 0.2, "leaf_budget": 4194304)")},
       value_suite},
      {{"dpp",
        "Dynamic programming residual |V - sup G[V]| over every intermediate horizon; one row per start path with "
        "the largest residual.",
        with_grid(R"("seed": 1, "problem": "lq", "paths": 1, "t_index": 0, "tolerance": 1e-10,
                     "leaf_budget": 4194304)")},
       dpp_suite},
      {{"markov-compare",
        "Tree value against the explicit finite-difference solution of the state-dependent HJB equation "
        "(d = 1) along a (steps, dx) ladder; the start path is constant at 'history' with its last value at "
        "'endpoint' and time time_fraction * horizon. Passes when each residual is within the reported bound and "
        "the residuals strictly decrease.",
        R"({"problem": "heat", "horizon": 1.0, "steps": [4, 8, 16], "dx": [0.1, 0.05, 0.025], "x_min": -8.0,
            "x_max": 8.0, "substeps": 0, "time_fraction": 0.5, "history": 0.7, "endpoint": 0.3333333333333333,
            "leaf_budget": 4194304})"},
       markov_suite},
      {{"viscosity-probe",
        "mode 'classical': PHJB residuals of the endpoint, integral and heat solutions at random paths, plus sub- "
        "and supersolution probes with the solution as test functional. mode 'fitted': probes of the tree value "
        "of 'problem' with fitted test functionals touching from above and below.",
        with_grid(R"("seed": 1, "mode": "classical", "problem": "lq", "paths": 100,
                     "cloud": {"size": 1000, "max_radius": 1.0, "min_radius": 0.001}, "kappa": 1.0,
                     "tolerance": 1e-8, "leaf_budget": 4194304)")},
       viscosity_suite},
      {{"bshjb-check",
        "Reduced BSDE in the noise path against the value of the augmented problem on random instances whose "
        "generator and terminal data ignore the state and the control.",
        R"({"seed": 1, "instances": 20, "steps": 4, "tolerance": 1e-10})"},
       bshjb_suite},
      {{"comparison-demo",
        "Borwein-Preiss maximization of the doubled-variable functional Psi over a fixed candidate set of path "
        "pairs, with W2 the tree value and W1 = W2 - offset, for each beta. Passes when beta Upsilon at the optimum "
        "does not increase along the ladder.",
        with_grid(R"("seed": 1, "problem": "lq", "pairs": 500, "betas": [10.0, 100.0, 1000.0], "eps": 0.1,
                     "nu": 2.0, "offset": 0.1, "min_radius": 0.01, "max_radius": 1.0, "tolerance": 1e-12,
                     "gauge": {"m": 3, "M": 3.0}, "bp": {"eps": 0.01, "delta_base": 1.0, "delta_ratio": 0.5},
                     "leaf_budget": 4194304)")},
       comparison_suite},
  };
  return all;
}

const Entry& find(const std::string& name) {
  for (const auto& e : registry())
    if (e.info.name == name) return e;
  std::string known;
  for (const auto& e : registry()) known += (known.empty() ? "" : ", ") + e.info.name;
  fail(ErrorKind::Config, "unknown experiment '" + name + "' (known: " + known + ")");
}

}  // namespace

const std::vector<ExperimentInfo>& experiments() {
  static const std::vector<ExperimentInfo> all = [] {
    std::vector<ExperimentInfo> out;
    for (const auto& e : registry()) {
      ExperimentInfo info = e.info;
      info.preset = json::parse(info.preset).dump();
      out.push_back(std::move(info));
    }
    return out;
  }();
  return all;
}

Report run_experiment(const std::string& name, const std::string& config_json,
                      const std::vector<std::string>& overrides) {
  const Entry& entry = find(name);
  if (config_json.find_first_not_of(" \t\r\n") == std::string::npos) fail(ErrorKind::Config, "config is empty");
  json user = json::parse(config_json, nullptr, false);
  if (user.is_discarded()) fail(ErrorKind::Config, "config is not valid JSON");
  if (!user.is_object()) fail(ErrorKind::Config, "config must be a JSON object");
  for (const auto& o : overrides) apply_override(user, o);

  json cfg = json::parse(entry.info.preset);
  merge(cfg, user, "");
  Report r = entry.run(Cfg(cfg, ""));
  r.experiment = name;
  return r;
}

}  // namespace pathctl
