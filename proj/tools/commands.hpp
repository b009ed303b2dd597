#pragma once

// Subcommands of steinbin_cli, kept apart from main() so the tests can drive
// them with in-memory streams.
//
// Every command writes one CSV table: '#'-prefixed header lines carrying the
// schema tag and the full config echo, then a column row, then data rows.
// Nothing is written unless the command succeeds.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "steinbin/steinbin.hpp"

namespace steinbin::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kInapplicable = 2, kInternal = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Subcommand { bound, exact, rscan, matern, rates };

inline const char* to_string(Subcommand s) {
  switch (s) {
    case Subcommand::bound: return "bound";
    case Subcommand::exact: return "exact";
    case Subcommand::rscan: return "rscan";
    case Subcommand::matern: return "matern";
    default: return "rates";
  }
}

inline Subcommand parse_subcommand(const std::string& s) {
  for (Subcommand c : {Subcommand::bound, Subcommand::exact, Subcommand::rscan, Subcommand::matern,
                       Subcommand::rates})
    if (s == to_string(c)) return c;
  throw UsageError("unknown subcommand '" + s + "'");
}

inline constexpr std::uint64_t kDefaultSeed = 20240601;

struct RunConfig {
  Subcommand cmd = Subcommand::bound;
  std::map<std::string, std::string> params;  // flat key=value, as given
};

// Keys accepted per subcommand. seed/out/workers are common.
inline const std::set<std::string>& allowed_keys(Subcommand c) {
  static const std::set<std::string> bound{"spec", "metric", "out"};
  static const std::set<std::string> exact{"kind", "n", "p", "probs", "route", "out"};
  static const std::set<std::string> rscan{"n", "r", "a", "dist", "rate", "reps", "seed", "workers", "out"};
  static const std::set<std::string> matern{"d", "lambda", "r", "a", "reps", "seed", "workers", "out"};
  static const std::set<std::string> rates{"app",  "scales", "metric", "r",       "a",   "dist",  "rate",
                                           "d",    "reps",   "seed",   "workers", "out", "plot"};
  switch (c) {
    case Subcommand::bound: return bound;
    case Subcommand::exact: return exact;
    case Subcommand::rscan: return rscan;
    case Subcommand::matern: return matern;
    default: return rates;
  }
}

inline void validate(const RunConfig& cfg) {
  const auto& ok = allowed_keys(cfg.cmd);
  for (const auto& [k, v] : cfg.params)
    if (!ok.count(k)) throw UsageError(std::string(to_string(cfg.cmd)) + ": unknown key '" + k + "'");
  if (cfg.params.count("plot") && !cfg.params.count("out")) throw UsageError("plot: requires out");
}

// key=value lines; blank lines and '#' comments are skipped.
inline std::map<std::string, std::string> read_config(std::istream& is) {
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
    std::string k = trim(line.substr(0, eq));
    if (k.empty()) throw UsageError("config line " + std::to_string(lineno) + ": empty key");
    out[k] = trim(line.substr(eq + 1));
  }
  return out;
}

namespace detail {

class Params {
 public:
  explicit Params(const std::map<std::string, std::string>& m) : m_(m) {}

  bool has(const std::string& k) const { return m_.count(k) > 0; }

  std::string str(const std::string& k, std::optional<std::string> dflt = std::nullopt) const {
    auto it = m_.find(k);
    if (it != m_.end()) return it->second;
    if (dflt) return *dflt;
    throw UsageError("missing required key '" + k + "'");
  }

  double real(const std::string& k, std::optional<double> dflt = std::nullopt) const {
    if (!has(k)) {
      if (dflt) return *dflt;
      throw UsageError("missing required key '" + k + "'");
    }
    return to_real(k, m_.at(k));
  }

  std::int64_t integer(const std::string& k, std::optional<std::int64_t> dflt = std::nullopt) const {
    if (!has(k)) {
      if (dflt) return *dflt;
      throw UsageError("missing required key '" + k + "'");
    }
    const std::string& v = m_.at(k);
    std::size_t used = 0;
    long long x = 0;
    try {
      x = std::stoll(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size()) throw UsageError(k + ": expected an integer, got '" + v + "'");
    return x;
  }

  std::vector<double> reals(const std::string& k) const {
    std::vector<double> out;
    std::stringstream ss(str(k));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_real(k, item));
    return out;
  }

 private:
  static double to_real(const std::string& k, const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size() || !std::isfinite(x))
      throw UsageError(k + ": expected a number, got '" + v + "'");
    return x;
  }

  const std::map<std::string, std::string>& m_;
};

inline void header(std::ostream& os, const char* schema, const RunConfig& cfg,
                   const std::vector<std::pair<std::string, std::string>>& resolved = {}) {
  os << "# schema=" << schema << "/v1\n# command=" << to_string(cfg.cmd) << '\n';
  for (const auto& [k, v] : cfg.params) os << "# " << k << '=' << v << '\n';
  for (const auto& [k, v] : resolved) os << "# resolved." << k << '=' << v << '\n';
}

// shortest text that reads back to the same double
inline std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::optional<Metric> metric_of(const Params& p) {
  if (!p.has("metric")) return std::nullopt;
  const std::string m = p.str("metric");
  if (m == "tv") return Metric::tv;
  if (m == "loc") return Metric::loc;
  throw UsageError("metric: expected tv or loc, got '" + m + "'");
}

inline unsigned workers_of(const Params& p) {
  const auto w = p.integer("workers", default_workers());
  if (w < 1) throw UsageError("workers: must be >= 1");
  return static_cast<unsigned>(w);
}

inline std::uint64_t seed_of(const Params& p) {
  const auto s = p.integer("seed", static_cast<std::int64_t>(kDefaultSeed));
  if (s < 0) throw UsageError("seed: must be >= 0");
  return static_cast<std::uint64_t>(s);
}

inline std::int64_t reps_of(const Params& p, std::int64_t dflt) {
  const auto r = p.integer("reps", dflt);
  if (r < 2) throw UsageError("reps: must be >= 2");
  return r;
}

inline RScanConfig rscan_config(const Params& p, std::int64_t n) {
  RScanConfig c;
  c.n = n;
  c.r = static_cast<int>(p.integer("r", 2));
  c.a = p.real("a", 1.0);
  const std::string dist = p.str("dist", std::string("exponential"));
  if (dist == "exponential") c.base = BaseDist::exponential;
  else if (dist == "uniform") c.base = BaseDist::uniform01;
  else throw UsageError("dist: expected exponential or uniform, got '" + dist + "'");
  c.rate = p.real("rate", 1.0);
  return c;
}

inline MaternConfig matern_config(const Params& p, double lam) {
  const int d = static_cast<int>(p.integer("d", 1));
  if (p.has("r") && p.has("a")) throw UsageError("matern: give r or a, not both");
  if (p.has("r")) return MaternConfig{d, lam, p.real("r")};
  return MaternConfig::from_a(d, lam, p.real("a", 1.0));
}

// ---- bound -------------------------------------------------------------------

inline void cmd_bound(const RunConfig& cfg, std::ostream& os) {
  Params p(cfg.params);
  const std::string path = p.str("spec");
  std::ifstream in(path);
  if (!in) throw UsageError("spec: cannot open '" + path + "'");
  const AnySpec spec = read_spec(in);
  const auto only = metric_of(p);
  header(os, "bound", cfg, {{"kind", spec_kind(spec)}});
  os << "kind,metric,l,bound,sigma2,theta_sum,constant,binom_n,t\n";
  for (int l : {1, 2}) {
    const Metric m = l == 1 ? Metric::tv : Metric::loc;
    if (only && *only != m) continue;
    const BoundReport r = bound_for(spec, l);
    os << spec_kind(spec) << ',' << to_string(m) << ',' << l << ',' << num(r.bound) << ',' << num(r.sigma2)
       << ',' << num(r.theta_sum) << ',' << num(r.constant) << ',' << r.params.n << ',' << num(r.params.t)
       << '\n';
  }
}

// ---- exact -------------------------------------------------------------------

inline void cmd_exact(const RunConfig& cfg, std::ostream& os) {
  Params p(cfg.params);
  const std::string kind = p.str("kind");
  double tv = 0, loc = 0, sigma2 = 0, b1 = 0, b2 = 0;
  double alt1 = std::nan(""), alt2 = std::nan("");
  std::string alt_name;
  std::int64_t n = 0;
  if (kind == "poisson-binomial") {
    std::vector<double> probs;
    if (p.has("probs")) {
      if (p.has("n") || p.has("p")) throw UsageError("exact: give probs, or n and p");
      probs = p.reals("probs");
    } else {
      const auto nn = p.integer("n");
      if (nn < 1) throw UsageError("n: must be >= 1");
      probs.assign(static_cast<std::size_t>(nn), p.real("p"));
    }
    if (p.has("route")) throw UsageError("route: only used by two-runs");
    IndependentSummandSpec spec;
    std::vector<LatticePMF> raw;
    for (double q : probs) {
      if (!(q > 0.0 && q < 1.0)) throw UsageError("p: must lie in (0, 1)");
      raw.push_back(LatticePMF::from_probs({1.0 - q, q}));
      spec.summands.push_back(LatticePMF::from_probs({1.0 - q, q}, 0, -q));
    }
    n = static_cast<std::int64_t>(probs.size());
    const LatticePMF w = exact_sum_pmf(spec.summands);
    const auto rep = exact_distance_report(w);
    tv = rep.tv;
    loc = rep.loc;
    sigma2 = w.variance();
    b1 = bound_theorem_2_1(spec, 1).bound;
    b2 = bound_theorem_2_1(spec, 2).bound;
    alt_name = "integer_summands";
    try {
      alt1 = bound_corollary_2_3(raw, Metric::tv).bound;
    } catch (const InapplicableError&) {
    }
    try {
      alt2 = bound_corollary_2_3(raw, Metric::loc).bound;
    } catch (const InapplicableError&) {
    }
  } else if (kind == "two-runs") {
    if (p.has("probs")) throw UsageError("probs: only used by poisson-binomial");
    const std::string route_s = p.str("route", std::string("smoothing"));
    SmoothnessRoute route;
    if (route_s == "smoothing") route = SmoothnessRoute::smoothing;
    else if (route_s == "exact") route = SmoothnessRoute::exact;
    else throw UsageError("route: expected smoothing or exact, got '" + route_s + "'");
    const TwoRunsModel m(p.integer("n"), p.real("p"));
    n = m.n;
    const LatticePMF w = two_runs_centered_pmf(m);
    const auto rep = exact_distance_report(w);
    tv = rep.tv;
    loc = rep.loc;
    sigma2 = w.variance();
    const auto local = two_runs_local_spec(m, route);
    b1 = bound_theorem_3_1(local, 1).bound;
    b2 = bound_theorem_3_1(local, 2).bound;
    const auto dec = two_runs_decomposition(m, route);
    alt_name = "decomposition";
    alt1 = bound_theorem_6_1(dec, 1).bound;
    alt2 = bound_theorem_6_1(dec, 2).bound;
  } else {
    throw UsageError("kind: expected poisson-binomial or two-runs, got '" + kind + "'");
  }
  auto le = [](double x, double b) { return std::isnan(b) || x <= b; };
  const bool pass = tv <= b1 && loc <= b2 && le(tv, alt1) && le(loc, alt2);
  header(os, "exact", cfg, {{"alt_bound", alt_name}});
  os << "kind,n,sigma2,exact_tv,exact_loc,bound_l1,bound_l2,alt_bound_l1,alt_bound_l2,verdict\n";
  os << kind << ',' << n << ',' << num(sigma2) << ',' << num(tv) << ',' << num(loc) << ',' << num(b1) << ','
     << num(b2) << ',' << num(alt1) << ',' << num(alt2) << ',' << (pass ? "PASS" : "FAIL") << '\n';
}

// ---- simulations ----------------------------------------------------------------

inline const char* kRscanColumns =
    "n,r,a,reps,sigma2,bound_l1,bound_l2,emp_tv,emp_tv_lo,emp_tv_hi,emp_loc,emp_loc_lo,emp_loc_hi,"
    "tv_floor,loc_floor,mean,variance,seed,wall_time";

inline std::string rscan_row(const RScanConfig& c, const ExperimentResult& r) {
  std::ostringstream os;
  os << c.n << ',' << c.r << ',' << num(c.a) << ',' << r.reps << ',' << num(r.sigma2_used) << ','
     << num(r.bound_l1) << ',' << num(r.bound_l2) << ',' << num(r.tv) << ',' << num(r.tv_ci.lo) << ','
     << num(r.tv_ci.hi) << ',' << num(r.loc) << ',' << num(r.loc_ci.lo) << ',' << num(r.loc_ci.hi) << ','
     << num(r.tv_floor) << ',' << num(r.loc_floor) << ',' << num(r.sample_mean()) << ','
     << num(r.sample_variance()) << ',' << r.seed << ',' << num(r.wall_time);
  return os.str();
}

inline const char* kMaternColumns =
    "d,lambda,r,a,reps,mean_formula,sigma2,sigma2_lower,bound_l1,bound_l2,emp_tv,emp_tv_lo,emp_tv_hi,emp_loc,"
    "emp_loc_lo,emp_loc_hi,tv_floor,loc_floor,mean,variance,seed,wall_time";

inline std::string matern_row(const MaternConfig& c, const ExperimentResult& r) {
  const auto v = variance_total(c);
  std::ostringstream os;
  os << c.d << ',' << num(c.lam) << ',' << num(c.r) << ',' << num(c.a()) << ',' << r.reps << ','
     << num(mean_total(c)) << ',' << num(r.sigma2_used) << ',' << num(v.lower_bound) << ','
     << num(r.bound_l1) << ',' << num(r.bound_l2) << ',' << num(r.tv) << ',' << num(r.tv_ci.lo) << ','
     << num(r.tv_ci.hi) << ',' << num(r.loc) << ',' << num(r.loc_ci.lo) << ',' << num(r.loc_ci.hi) << ','
     << num(r.tv_floor) << ',' << num(r.loc_floor) << ',' << num(r.sample_mean()) << ','
     << num(r.sample_variance()) << ',' << r.seed << ',' << num(r.wall_time);
  return os.str();
}

inline void cmd_rscan(const RunConfig& cfg, std::ostream& os) {
  Params p(cfg.params);
  const RScanConfig c = rscan_config(p, p.integer("n"));
  const auto r = rscan_empirical_distance(c, reps_of(p, 100000), seed_of(p), workers_of(p));
  header(os, "rscan", cfg);
  os << kRscanColumns << '\n' << rscan_row(c, r) << '\n';
}

inline void cmd_matern(const RunConfig& cfg, std::ostream& os) {
  Params p(cfg.params);
  const MaternConfig c = matern_config(p, p.real("lambda"));
  const auto r = matern_empirical_distance(c, reps_of(p, 100000), seed_of(p), workers_of(p));
  header(os, "matern", cfg);
  os << kMaternColumns << '\n' << matern_row(c, r) << '\n';
}

// ---- rates ------------------------------------------------------------------------

// Per-scale rows, then a "# fit ..." footer. The fit uses the points whose
// distance clears 3x the noise floor; when fewer than 3 do, the raw fit is
// reported and flagged.
inline void cmd_rates(const RunConfig& cfg, std::ostream& os) {
  Params p(cfg.params);
  const std::string app = p.str("app");
  if (app != "rscan" && app != "matern") throw UsageError("app: expected rscan or matern, got '" + app + "'");
  const std::vector<double> scales = p.reals("scales");
  if (scales.size() < 3) throw UsageError("scales: need at least 3 scales");
  for (std::size_t k = 1; k < scales.size(); ++k)
    if (!(scales[k] > scales[k - 1])) throw UsageError("scales: must be strictly increasing");
  const Metric metric = metric_of(p).value_or(Metric::tv);
  const auto reps = reps_of(p, 100000);
  const auto seed = seed_of(p);
  const auto workers = workers_of(p);
  if (app == "rscan") {
    for (const char* k : {"d"})
      if (p.has(k)) throw UsageError(std::string(k) + ": not an rscan key");
  } else {
    for (const char* k : {"dist", "rate"})
      if (p.has(k)) throw UsageError(std::string(k) + ": not a matern key");
  }

  std::ostringstream rows;
  std::vector<RatePoint> pts;
  for (std::size_t k = 0; k < scales.size(); ++k) {
    const std::uint64_t s = seed + k;
    ExperimentResult r;
    if (app == "rscan") {
      const double x = scales[k];
      if (x != std::floor(x)) throw UsageError("scales: rscan scales are integers n");
      const RScanConfig c = rscan_config(p, static_cast<std::int64_t>(x));
      r = rscan_empirical_distance(c, reps, s, workers);
      rows << num(x) << ',' << rscan_row(c, r) << '\n';
    } else {
      const MaternConfig c = matern_config(p, scales[k]);
      r = matern_empirical_distance(c, reps, s, workers);
      rows << num(scales[k]) << ',' << matern_row(c, r) << '\n';
    }
    pts.push_back({scales[k], r.distance(metric), r.floor(metric)});
  }
  RateFit fit;
  bool filtered = true;
  try {
    fit = fit_rate_filtered(pts);
  } catch (const std::invalid_argument&) {
    fit = fit_rate(pts);
    filtered = false;
  }
  header(os, "rates", cfg);
  os << "scale," << (app == "rscan" ? kRscanColumns : kMaternColumns) << '\n' << rows.str();
  os << "# fit metric=" << to_string(metric) << " slope=" << num(fit.slope) << " slope_lo=" << num(fit.slope_ci.lo)
     << " slope_hi=" << num(fit.slope_ci.hi) << " points=" << fit.xs.size()
     << " above_floor=" << (filtered ? "yes" : "no") << '\n';
}

inline void write_plot_script(std::ostream& os, const std::string& csv_path, const std::string& app,
                              const std::string& metric) {
  // emp_tv / emp_loc columns of the rates table
  int col = app == "rscan" ? 9 : 12;
  if (metric == "loc") col += 3;
  os << "# gnuplot script for a rates table\n"
     << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set logscale xy\n"
     << "set xlabel 'scale'\nset ylabel 'empirical " << metric << "'\n"
     << "plot '" << csv_path << "' using 1:" << col << " with linespoints\n";
}

}  // namespace detail

// Runs one command. On success the table goes to `out` (or to the file named
// by the "out" key); diagnostics go to `err`. Returns an ExitCode.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::ostringstream buf;
  try {
    validate(cfg);
    switch (cfg.cmd) {
      case Subcommand::bound: detail::cmd_bound(cfg, buf); break;
      case Subcommand::exact: detail::cmd_exact(cfg, buf); break;
      case Subcommand::rscan: detail::cmd_rscan(cfg, buf); break;
      case Subcommand::matern: detail::cmd_matern(cfg, buf); break;
      case Subcommand::rates: detail::cmd_rates(cfg, buf); break;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const InapplicableError& e) {
    err << "inapplicable: " << e.what() << '\n';
    return kInapplicable;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  auto it = cfg.params.find("out");
  if (it == cfg.params.end()) {
    out << buf.str();
  } else {
    std::ofstream f(it->second);
    if (!f) {
      err << "error: cannot write '" << it->second << "'\n";
      return kUsage;
    }
    f << buf.str();
    auto plot = cfg.params.find("plot");
    if (plot != cfg.params.end()) {
      std::ofstream g(plot->second);
      if (!g) {
        err << "error: cannot write '" << plot->second << "'\n";
        return kUsage;
      }
      auto m = cfg.params.find("metric");
      detail::write_plot_script(g, it->second, cfg.params.at("app"), m == cfg.params.end() ? "tv" : m->second);
    }
  }
  return kOk;
}

}  // namespace steinbin::cli
