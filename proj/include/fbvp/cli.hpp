#pragma once

// Config-driven front end: problem definition from an INI file and the
// el | nbc | prolong | solve | local-family | verify commands.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fbvp/beam.hpp"
#include "fbvp/geodesic.hpp"
#include "fbvp/oracle.hpp"

namespace fbvp::cli {

inline constexpr const char* kCsvVersion = "fbvp-csv v1";

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct SolverSettings {
  int seeds = 20;
  std::uint64_t seed = 1;
  double tol = 1e-10;
  int grid = 12;
  ChartKind chart = ChartKind::Tubular;
  std::size_t anchor_piece = 0;
  double anchor = 0.3;
  double box = 5.0;
  double step = 0.05;
  int samples = 200;
};

struct VerifySettings {
  int n = 2000;
  double epsilon = 1e-6;
  int pairs = 20;
};

/// Everything a command needs, parsed and validated.
struct ProblemConfig {
  std::string density;
  int order = 0;
  Lagrangian lagrangian;
  std::map<std::string, double> parameters;
  std::map<std::string, std::string> functions;  ///< name -> expression text in x
  Bindings bindings;
  ParseContext context;
  std::optional<Domain> domain;
  bool interval = false;
  double a = 0.0, b = 1.0;
  std::optional<std::pair<std::string, std::string>> transformation;  ///< (xbar, ubar) text
  JetPoint jet;  ///< p, q, r for chart evaluations
  SolverSettings solver;
  VerifySettings verify;

  static ProblemConfig load(const std::string& path) {
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::ini_parser::read_ini(path, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(std::string("cannot read config: ") + e.what());
    }
    return from_tree(tree);
  }

  static ProblemConfig from_string(const std::string& text) {
    std::istringstream in(text);
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(std::string("cannot read config: ") + e.what());
    }
    return from_tree(tree);
  }

  static ProblemConfig from_tree(const boost::property_tree::ptree& tree) {
    ProblemConfig cfg;
    auto number = [&](const std::string& key, double fallback) {
      const auto v = tree.get_optional<std::string>(key);
      if (!v) return fallback;
      try {
        std::size_t used = 0;
        const double d = std::stod(*v, &used);
        if (used != v->size()) throw std::invalid_argument(*v);
        return d;
      } catch (const std::exception&) {
        throw ConfigError("invalid number for " + key + ": " + *v);
      }
    };
    auto integer = [&](const std::string& key, long fallback) {
      const double d = number(key, static_cast<double>(fallback));
      if (d != std::floor(d)) throw ConfigError("expected an integer for " + key);
      return static_cast<long>(d);
    };

    const auto density = tree.get_optional<std::string>("lagrangian.density");
    if (!density) throw ConfigError("missing lagrangian.density");
    cfg.density = *density;
    cfg.order = static_cast<int>(integer("lagrangian.order", 0));
    if (cfg.order != 1 && cfg.order != 2) throw ConfigError("lagrangian.order must be 1 or 2");

    if (const auto params = tree.get_child_optional("parameters")) {
      for (const auto& [name, node] : *params) {
        cfg.parameters[name] = number("parameters." + name, 0.0);
        cfg.context.parameter(name);
        cfg.bindings.set(name, cfg.parameters[name]);
      }
    }
    if (const auto fns = tree.get_child_optional("functions")) {
      for (const auto& [name, node] : *fns) {
        cfg.functions[name] = node.get_value<std::string>();
        cfg.context.function(name);
      }
    }
    ParseContext fn_ctx;
    for (const auto& [name, v] : cfg.parameters) fn_ctx.parameter(name);
    for (const auto& [name, text] : cfg.functions) {
      Expr body;
      try {
        body = parse_expression(text, fn_ctx);
      } catch (const Error& e) {
        throw ConfigError("function " + name + ": " + e.what());
      }
      for (const auto& s : free_symbols(body)) {
        if (s != "x" && !cfg.parameters.count(s)) throw ConfigError("function " + name + ": unknown identifier " + s);
      }
      cfg.bindings.define(name, function_from_expr(body, "x", 8, cfg.bindings));
    }
    try {
      cfg.lagrangian = Lagrangian::parse(cfg.density, cfg.order, cfg.context);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }

    const std::string kind = tree.get<std::string>("domain.kind", "");
    if (kind == "interval") {
      cfg.interval = true;
      cfg.a = number("domain.a", 0.0);
      cfg.b = number("domain.b", 1.0);
      if (!(cfg.b > cfg.a)) throw ConfigError("domain.b must exceed domain.a");
      cfg.domain = Domain::strip(cfg.a, cfg.b, number("domain.height", 10.0));
    } else if (kind == "curve") {
      const auto X = tree.get_optional<std::string>("domain.X");
      const auto U = tree.get_optional<std::string>("domain.U");
      if (!X || !U) throw ConfigError("curve domain needs domain.X and domain.U");
      const double period = number("domain.period", 0.0);
      if (!(period > 0)) throw ConfigError("curve domain needs a positive domain.period");
      const std::string side = tree.get<std::string>("domain.interior", "left");
      if (side != "left" && side != "right") throw ConfigError("domain.interior must be left or right");
      ParseContext cctx;
      for (const auto& [name, v] : cfg.parameters) cctx.parameter(name);
      try {
        BoundaryCurve g = BoundaryCurve::parse(*X, *U, period, side == "left", {0.0, 0.0}, cctx, cfg.bindings);
        g.validate();
        cfg.domain = Domain::enclosed_by(std::move(g));
      } catch (const Error& e) {
        throw ConfigError(std::string("domain: ") + e.what());
      }
    } else if (!kind.empty()) {
      throw ConfigError("domain.kind must be interval or curve");
    }

    const auto xb = tree.get_optional<std::string>("transformation.xbar");
    const auto ub = tree.get_optional<std::string>("transformation.ubar");
    if (xb.has_value() != ub.has_value()) throw ConfigError("transformation needs both xbar and ubar");
    if (xb) cfg.transformation = std::make_pair(*xb, *ub);

    cfg.jet.p = number("jet.p", 0.0);
    cfg.jet.q = number("jet.q", 0.0);
    cfg.jet.r = number("jet.r", 0.0);

    SolverSettings& s = cfg.solver;
    s.seeds = static_cast<int>(integer("solver.seeds", s.seeds));
    s.seed = static_cast<std::uint64_t>(integer("solver.seed", static_cast<long>(s.seed)));
    s.tol = number("solver.tol", s.tol);
    s.grid = static_cast<int>(integer("solver.grid", s.grid));
    const std::string chart = tree.get<std::string>("solver.chart", "tubular");
    s.chart = parse_chart(chart);
    s.anchor_piece = static_cast<std::size_t>(integer("solver.anchor_piece", 0));
    s.anchor = number("solver.anchor", s.anchor);
    s.box = number("solver.box", s.box);
    s.step = number("solver.step", s.step);
    s.samples = static_cast<int>(integer("solver.samples", s.samples));
    if (s.seeds < 1 || s.grid < 1 || s.samples < 2) throw ConfigError("solver counts must be positive");
    if (!(s.tol > 0) || !(s.box > 0) || !(s.step > 0)) throw ConfigError("solver tolerances must be positive");

    cfg.verify.n = static_cast<int>(integer("verify.n", cfg.verify.n));
    cfg.verify.epsilon = number("verify.epsilon", cfg.verify.epsilon);
    cfg.verify.pairs = static_cast<int>(integer("verify.pairs", cfg.verify.pairs));
    try {
      DiscreteActionConfig{cfg.verify.n, cfg.verify.epsilon}.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("verify: ") + e.what());
    }
    return cfg;
  }

  static ChartKind parse_chart(const std::string& s) {
    if (s == "affine") return ChartKind::Affine;
    if (s == "tubular") return ChartKind::Tubular;
    throw ConfigError("chart must be affine or tubular, got " + s);
  }

  const Domain& require_domain() const {
    if (!domain) throw ConfigError("this command needs a [domain] section");
    return *domain;
  }

  /// True when the density is kappa q^2 / 2 - rho(x) u for the declared kappa and rho.
  bool is_beam() const {
    if (order != 2 || !parameters.count("kappa") || !functions.count("rho")) return false;
    SamplingOptions opt;
    opt.functions = bindings.functions;
    for (const auto& [k, v] : parameters) opt.fixed[k] = v;
    return exprs_equal_numeric(lagrangian.density(), beam_lagrangian().density(), 40, 1e-12, opt);
  }
};

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<ChartKind> chart;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string pass(bool ok) { return ok ? "PASS" : "FAIL"; }

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& columns) : out_(path) {
    if (!out_) throw Error("cannot write " + path.string());
    out_ << "# " << kCsvVersion << "\n" << columns << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }
  void comment(const std::string& text) { out_ << "# " << text << "\n"; }

 private:
  std::ofstream out_;
};

inline void write_polyline(const std::filesystem::path& path, const std::vector<Vec2>& pts) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "# " << kCsvVersion << "\nx,u\n";
  for (const Vec2& p : pts) out << num(p.x()) << "," << num(p.y()) << "\n";
}

/// Random smooth function: cubic plus two sines, with exact derivatives.
inline NamedFunction random_smooth(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::array<double, 4> c{};
  for (double& v : c) v = scale * U(rng);
  std::array<double, 6> s{};
  for (int j = 0; j < 2; ++j) {
    s[static_cast<std::size_t>(3 * j)] = scale * 0.5 * U(rng);
    s[static_cast<std::size_t>(3 * j + 1)] = 1.75 + 1.25 * U(rng);
    s[static_cast<std::size_t>(3 * j + 2)] = 3.14 + 3.14 * U(rng);
  }
  return [c, s](double x, int k) {
    double v = 0.0;
    for (int i = k; i < 4; ++i) {
      double coef = c[static_cast<std::size_t>(i)];
      for (int m = 0; m < k; ++m) coef *= i - m;
      v += coef * std::pow(x, i - k);
    }
    for (std::size_t j = 0; j < 2; ++j) {
      const double a = s[3 * j], w = s[3 * j + 1], ph = s[3 * j + 2];
      v += a * std::pow(w, k) * std::sin(w * x + ph + k * M_PI / 2);
    }
    return v;
  };
}

inline std::array<double, 4> random_matrix(std::mt19937_64& rng, double min_det) {
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  std::array<double, 4> a{};
  do {
    for (double& v : a) v = U(rng);
  } while (std::abs(a[0] * a[3] - a[1] * a[2]) < min_det);
  return a;
}

/// Random invertible map: affine composed with two shears, inverses explicit.
inline PointTransformation random_chart(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const auto a = random_matrix(rng, 0.3);
  PointTransformation t = PointTransformation::affine(a, {U(rng), U(rng)});
  const Expr x = var("x"), u = var("u");
  const double e1 = 0.3 * U(rng), w = 1.25 + 0.75 * U(rng), e2 = 0.2 * U(rng);
  PointTransformation s1{x, u + e1 * sin(w * x), std::make_pair(x, u - e1 * sin(w * x))};
  PointTransformation s2{x + e2 * u * u, u, std::make_pair(x - e2 * u * u, u)};
  return compose(t, compose(s2, s1));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Checks shared by nbc and verify

struct CheckResult {
  bool pass = false;
  double worst = 0.0;
  int count = 0;
};

/// Compares the chart conditions of the beam Lagrangian under random linear
/// charts with their closed forms: J^5 first = kappa q det^2 and
/// 2 J^6 second = kappa det^2 (b (5 q^2 - 2 p r) - 2 r a) - 2 U b rho(X) J^6,
/// where the chart is (a xb + b ub + x0, c xb + d ub + u0), J = a + p b and
/// det = c b - d a.
inline CheckResult linear_chart_self_test(double kappa, const NamedFunction& rho, std::uint64_t seed, int charts = 20,
                                          int points = 10) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  CheckResult res;
  const Lagrangian beam = beam_lagrangian();
  for (int c = 0; c < charts; ++c) {
    const auto m = detail::random_matrix(rng, 0.2);
    const double a = m[0], b = m[1], cc = m[2], d = m[3];
    const double x0 = U(rng), u0 = U(rng);
    const PointTransformation chart{a * var("x") + b * var("u") + x0, cc * var("x") + d * var("u") + u0, std::nullopt};
    const NbcPair nbc = nbc_in_chart(beam, chart);
    const Program prog(std::vector<Expr>{nbc.first, nbc.second});
    for (int i = 0; i < points; ++i) {
      const double xb = 0.5 * U(rng), ub = 0.5 * U(rng), p = U(rng), q = U(rng), r = U(rng);
      const double X = a * xb + b * ub + x0, Uv = cc * xb + d * ub + u0;
      const double J = a + p * b, det = cc * b - d * a;
      Bindings bind;
      bind.set("x", xb).set("u", ub).set("p", p).set("q", q).set("r", r).set("kappa", kappa).define("rho", rho);
      const auto v = prog.evaluate(bind);
      const double first = kappa * q * det * det;
      const double second =
          kappa * det * det * (b * (5 * q * q - 2 * p * r) - 2 * r * a) - 2 * Uv * b * rho(X, 0) * std::pow(J, 6);
      const double e1 = std::abs(v[0] * std::pow(J, 5) - first) / std::max(1.0, std::abs(first));
      const double e2 = std::abs(2 * v[1] * std::pow(J, 6) - second) / std::max(1.0, std::abs(second));
      res.worst = std::max({res.worst, e1, e2});
      ++res.count;
    }
  }
  res.pass = res.worst <= 1e-9;
  return res;
}

/// Variation decomposition for `pairs` random (u, v) on [a, b].
inline CheckResult decomposition_check(const Lagrangian& lag, const Bindings& fixed, double a, double b,
                                       const VerifySettings& vs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CheckResult res;
  for (int i = 0; i < vs.pairs; ++i) {
    const NamedFunction u = detail::random_smooth(rng, 0.5), v = detail::random_smooth(rng, 1.0);
    const VariationReport rep =
        check_variation_decomposition(lag, SampledCurve::graph(u, a, b, vs.n), SampledCurve::graph(v, a, b, vs.n),
                                      {vs.n, vs.epsilon}, fixed);
    res.worst = std::max(res.worst, rep.relative_error);
    ++res.count;
  }
  res.pass = res.worst <= 1e-4;
  return res;
}

/// Functoriality of the lift and vanishing contact residuals on random charts.
inline CheckResult prolongation_check(std::uint64_t seed, int charts = 20, int points = 50) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  CheckResult res;
  for (int c = 0; c < charts; ++c) {
    const PointTransformation phi = detail::random_chart(rng), psi = detail::random_chart(rng);
    const ProlongedTransformation composite = prolong(compose(phi, psi)), outer = prolong(phi), inner = prolong(psi);
    const auto [c1, c2] = contact_residual(outer);
    const auto [h1, h2] = higher_contact_residuals(outer);
    const Program contact(std::vector<Expr>{c1, c2, h1, h2, outer.F, outer.G, outer.H});
    for (int i = 0; i < points; ++i) {
      const JetPoint j{U(rng), U(rng), U(rng), U(rng), U(rng), U(rng)};
      try {
        const JetPoint direct = composite.apply(j);
        const JetPoint stepwise = outer.apply(inner.apply(j));
        double e = std::max({std::abs(direct.x - stepwise.x), std::abs(direct.u - stepwise.u),
                             std::abs(direct.p - stepwise.p) / (1 + std::abs(direct.p)),
                             std::abs(direct.q - stepwise.q) / (1 + std::abs(direct.q)),
                             std::abs(direct.r - stepwise.r) / (1 + std::abs(direct.r))});
        Bindings b;
        j.bind(b);
        // Contact residuals relative to the size of the lifts.
        const auto cv = contact.evaluate(b);
        const double scale = 1 + std::max({std::abs(cv[4]), std::abs(cv[5]), std::abs(cv[6])});
        for (std::size_t k = 0; k < 4; ++k) e = std::max(e, std::abs(cv[k]) / scale);
        res.worst = std::max(res.worst, e);
        ++res.count;
      } catch (const ChartUnsuitable&) {
      } catch (const DomainError&) {
      }
    }
  }
  res.pass = res.count > 0 && res.worst <= 1e-8;
  return res;
}

/// Flat-strip beam solutions (rho = 0) mapped by random affine maps solve the
/// mapped problems.
inline CheckResult invariance_check(double a, double b, std::uint64_t seed, int maps = 10) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  CheckResult res;
  const BeamModel model(BeamProblem(1.0, constant(0.0), Domain::strip(a, b, 10.0)));
  const BeamSolveReport rep = solve_free_sliding_beam(model, default_beam_seeds(model, 4, seed));
  if (rep.solutions.empty()) return res;
  const Lagrangian beam = beam_lagrangian();
  int attempts = 0;
  while (res.count < maps && attempts++ < 100 * maps) {
    const auto m = detail::random_matrix(rng, 0.3);
    const std::array<double, 2> shift{U(rng), U(rng)};
    const auto& sol = rep.solutions[static_cast<std::size_t>(res.count) % rep.solutions.size()];
    const double c0 = sol.coeffs.c0, c1 = sol.coeffs.c1;
    const double alpha = m[0] + m[1] * c1, beta = m[1] * c0 + shift[0];
    const double gamma = m[2] + m[3] * c1, delta = m[3] * c0 + shift[1];
    if (std::abs(alpha) < 0.2) continue;
    const NamedFunction image = [=](double x, int k) {
      if (k == 0) return gamma * (x - beta) / alpha + delta;
      return k == 1 ? gamma / alpha : 0.0;
    };
    Eigen::Matrix2d A;
    A << m[0], m[1], m[2], m[3];
    const Domain dom = model.problem().domain.affine_image(A, Vec2(shift[0], shift[1]));
    const Lagrangian pushed = pullback_lagrangian(beam, prolong(PointTransformation::affine(m, shift).inverted()));
    double worst = 0.0;
    try {
      for (ChartKind kind : {ChartKind::Affine, ChartKind::Tubular}) {
        worst = std::max(worst, stationarity_residuals(pushed, dom, image, sol.a, sol.b, kind, model.bindings()).max());
      }
    } catch (const ChartUnsuitable&) {
      worst = std::numeric_limits<double>::infinity();
    }
    res.worst = std::max(res.worst, worst);
    ++res.count;
  }
  res.pass = res.count == maps && res.worst <= 1e-8;
  return res;
}

// ---------------------------------------------------------------------------
// Commands

inline int cmd_el(const ProblemConfig& cfg, std::ostream& out) {
  out << to_string(euler_lagrange(cfg.lagrangian)) << "\n";
  return 0;
}

inline int cmd_nbc(const ProblemConfig& cfg, const Options& opt, std::ostream& out) {
  const NbcPair nbc = natural_boundary_conditions(cfg.lagrangian);
  out << "first: " << to_string(nbc.first) << "\n";
  out << "second: " << to_string(nbc.second) << "\n";
  if (!opt.chart) return 0;
  if (*opt.chart == ChartKind::Affine && cfg.is_beam()) {
    const CheckResult r = linear_chart_self_test(cfg.parameters.at("kappa"), cfg.bindings.functions.at("rho"),
                                                 opt.seed.value_or(cfg.solver.seed));
    out << "linear chart self-test: " << detail::pass(r.pass) << " (" << r.count
        << " points, max relative error " << detail::num(r.worst) << ")\n";
  }
  if (cfg.domain) {
    const Domain& dom = *cfg.domain;
    if (cfg.solver.anchor_piece >= dom.pieces.size()) throw ConfigError("solver.anchor_piece out of range");
    const BoundaryCurve& g = dom.pieces[cfg.solver.anchor_piece];
    const Vec2 P = g.point(cfg.solver.anchor);
    JetPoint j = cfg.jet;
    j.x = P.x();
    j.u = P.y();
    const ChartNbc chart(cfg.lagrangian, *opt.chart);
    const ChartNbc::Value v = chart.at(g, cfg.solver.anchor, j, cfg.bindings);
    out << to_string(*opt.chart) << " chart at t = " << detail::num(cfg.solver.anchor) << ": first "
        << detail::num(v.first) << ", second " << detail::num(v.second) << ", normalised (" << detail::num(v.first_normalized)
        << ", " << detail::num(v.second_normalized) << ")\n";
  }
  return 0;
}

inline int cmd_prolong(const ProblemConfig& cfg, std::ostream& out) {
  if (!cfg.transformation) throw ConfigError("prolong needs a [transformation] section");
  ParseContext ctx;
  for (const auto& [name, v] : cfg.parameters) ctx.parameter(name);
  PointTransformation phi;
  try {
    phi = PointTransformation{parse_expression(cfg.transformation->first, ctx),
                              parse_expression(cfg.transformation->second, ctx), std::nullopt};
  } catch (const Error& e) {
    throw ConfigError(std::string("transformation: ") + e.what());
  }
  const ProlongedTransformation pt = prolong(phi);
  out << "F: " << to_string(pt.F) << "\n";
  out << "G: " << to_string(pt.G) << "\n";
  out << "H: " << to_string(pt.H) << "\n";
  const auto [c1, c2] = contact_residual(pt);
  const auto [h1, h2] = higher_contact_residuals(pt);
  SamplingOptions so;
  for (const auto& [k, v] : cfg.parameters) so.fixed[k] = v;
  so.default_range = {-0.5, 0.5};
  bool ok = true;
  for (const Expr& e : {c1, c2, h1, h2}) ok = ok && exprs_equal_numeric(e, constant(0.0), 50, 1e-8, so);
  out << "contact residual: " << detail::pass(ok) << "\n";
  return 0;
}

inline int solve_beam(const ProblemConfig& cfg, const Options& opt, std::ostream& out) {
  const std::filesystem::path dir(opt.out);
  std::filesystem::create_directories(dir);
  BeamOptions bo;
  bo.chart = opt.chart.value_or(cfg.solver.chart);
  bo.tol = opt.tol.value_or(cfg.solver.tol);
  Expr rho;
  {
    ParseContext ctx;
    for (const auto& [name, v] : cfg.parameters) ctx.parameter(name);
    std::map<std::string, Expr> values;
    for (const auto& [name, v] : cfg.parameters) values[name] = constant(v);
    rho = substitute(parse_expression(cfg.functions.at("rho"), ctx), values);
  }
  const BeamModel model(BeamProblem(cfg.parameters.at("kappa"), rho, cfg.require_domain()), bo);
  const BeamSolveReport rep =
      solve_free_sliding_beam(model, default_beam_seeds(model, cfg.solver.seeds, opt.seed.value_or(cfg.solver.seed)));
  detail::CsvWriter csv(dir / "solutions.csv", "piece_a,t_a,piece_b,t_b,c0,c1,c2,c3,residual_a,residual_b,nullity");
  if (rep.solutions.empty()) {
    csv.comment("no solutions found");
    out << "no solutions found";
    if (rep.empty_certificate) out << " (residual norm bounded below by " << detail::num(*rep.empty_certificate) << ")";
    out << "\n";
    return 0;
  }
  std::size_t k = 0;
  for (const auto& s : rep.solutions) {
    csv.row({std::to_string(s.a.piece), detail::num(s.a.t), std::to_string(s.b.piece), detail::num(s.b.t),
             detail::num(s.coeffs.c0), detail::num(s.coeffs.c1), detail::num(s.coeffs.c2), detail::num(s.coeffs.c3),
             detail::num(s.residual_a), detail::num(s.residual_b), std::to_string(s.nullity)});
    const NamedFunction u = beam_solution(model.particular(), s.coeffs);
    const double xa = model.problem().domain.point(s.a).x(), xb = model.problem().domain.point(s.b).x();
    std::vector<Vec2> pts;
    for (int i = 0; i <= cfg.solver.samples; ++i) {
      const double x = xa + (xb - xa) * i / cfg.solver.samples;
      pts.emplace_back(x, u(x, 0));
    }
    detail::write_polyline(dir / ("curve_" + std::to_string(k++) + ".csv"), pts);
  }
  out << rep.solutions.size() << " solutions written to " << (dir / "solutions.csv").string() << "\n";
  return 0;
}

inline int solve_chords_cmd(const ProblemConfig& cfg, const Options& opt, std::ostream& out) {
  const std::filesystem::path dir(opt.out);
  std::filesystem::create_directories(dir);
  const ChordProblem prob(cfg.lagrangian, cfg.require_domain(), cfg.bindings);
  ChordOptions co;
  if (opt.tol) co.tol = *opt.tol;
  const ChordReport rep = solve_chords(prob, grid_chord_seeds(prob.domain(), cfg.solver.grid), co);
  detail::CsvWriter csv(dir / "solutions.csv", "piece_a,t_a,piece_b,t_b,x_a,u_a,x_b,u_b,residual,nullity");
  if (rep.solutions.empty()) {
    csv.comment("no solutions found");
    out << "no solutions found\n";
    return 0;
  }
  std::size_t k = 0;
  for (const auto& s : rep.solutions) {
    const Vec2 A = prob.domain().point(s.a), B = prob.domain().point(s.b);
    csv.row({std::to_string(s.a.piece), detail::num(s.a.t), std::to_string(s.b.piece), detail::num(s.b.t),
             detail::num(A.x()), detail::num(A.y()), detail::num(B.x()), detail::num(B.y()), detail::num(s.residual),
             std::to_string(s.nullity)});
    detail::write_polyline(dir / ("curve_" + std::to_string(k++) + ".csv"), {A, B});
  }
  out << rep.solutions.size() << " solutions written to " << (dir / "solutions.csv").string() << "\n";
  for (const auto& s : rep.solutions) {
    if (s.nullity != 1 || s.a.piece != s.b.piece || !prob.domain().pieces[s.a.piece].closed()) continue;
    const ChordFamily fam = trace_chord_family(prob, s.a.piece, s.a.t, s.b.t, cfg.solver.step);
    detail::CsvWriter fcsv(dir / "family.csv", "t_a,t_b,x_a,u_a,x_b,u_b");
    const BoundaryCurve& g = prob.domain().pieces[s.a.piece];
    for (const Vector& x : fam.path.points) {
      const Vec2 A = g.point(x[0]), B = g.point(x[1]);
      fcsv.row({detail::num(x[0]), detail::num(x[1]), detail::num(A.x()), detail::num(A.y()), detail::num(B.x()),
                detail::num(B.y())});
    }
    out << "family: " << fam.path.points.size() << " points, " << to_string(fam.path.termination)
        << ", max residual " << detail::num(fam.max_residual) << "\n";
    break;
  }
  return 0;
}

inline int cmd_solve(const ProblemConfig& cfg, const Options& opt, std::ostream& out) {
  if (cfg.order == 1) return solve_chords_cmd(cfg, opt, out);
  if (!cfg.is_beam()) throw ConfigError("order-2 solve supports the beam density kappa*q^2/2 - rho(x)*u");
  return solve_beam(cfg, opt, out);
}

inline int cmd_local_family(const ProblemConfig& cfg, const Options& opt, std::ostream& out) {
  if (!cfg.is_beam()) throw ConfigError("local-family needs the beam density kappa*q^2/2 - rho(x)*u");
  const Domain& dom = cfg.require_domain();
  if (cfg.solver.anchor_piece >= dom.pieces.size()) throw ConfigError("solver.anchor_piece out of range");
  ParseContext ctx;
  std::map<std::string, Expr> values;
  for (const auto& [name, v] : cfg.parameters) {
    ctx.parameter(name);
    values[name] = constant(v);
  }
  const Expr rho = substitute(parse_expression(cfg.functions.at("rho"), ctx), values);
  const BeamModel model(BeamProblem(cfg.parameters.at("kappa"), rho, dom));
  LocalFamilyOptions lo;
  lo.chart = opt.chart.value_or(cfg.solver.chart);
  lo.box = cfg.solver.box;
  lo.step = cfg.solver.step;
  const LocalFamily fam = local_solution_family(model, dom.pieces[cfg.solver.anchor_piece], cfg.solver.anchor, lo);
  const std::filesystem::path dir(opt.out);
  std::filesystem::create_directories(dir);
  detail::CsvWriter csv(dir / "local_family.csv", "c0,c1,c2,c3");
  if (fam.empty()) {
    csv.comment("no solutions found");
    out << "no solutions found\n";
    return 0;
  }
  for (const auto& c : fam.coefficients) {
    csv.row({detail::num(c.c0), detail::num(c.c1), detail::num(c.c2), detail::num(c.c3)});
  }
  out << "local family: " << fam.points.size() << " points, " << to_string(fam.termination)
      << ", max residual " << detail::num(fam.max_unreduced_residual) << ", nullity " << fam.min_nullity;
  if (fam.max_nullity != fam.min_nullity) out << ".." << fam.max_nullity;
  out << "\n";
  return 0;
}

inline int cmd_verify(const ProblemConfig& cfg, const Options& opt, std::ostream& out) {
  const std::uint64_t seed = opt.seed.value_or(cfg.solver.seed);
  const double a = cfg.interval ? cfg.a : 0.0, b = cfg.interval ? cfg.b : 1.0;
  const CheckResult d = decomposition_check(cfg.lagrangian, cfg.bindings, a, b, cfg.verify, seed);
  out << "decomposition: " << detail::pass(d.pass) << " (" << d.count << " pairs, max relative error "
      << detail::num(d.worst) << ")\n";
  const CheckResult p = prolongation_check(seed);
  out << "prolongation-composition: " << detail::pass(p.pass) << " (" << p.count << " jets, max error "
      << detail::num(p.worst) << ")\n";
  const CheckResult i = invariance_check(a, b, seed);
  out << "invariance: " << detail::pass(i.pass) << " (" << i.count << " maps, max residual " << detail::num(i.worst)
      << ")\n";
  return 0;
}

/// Runs `command`; returns the exit code (0 ran, 1 config error, 2 numeric failure).
inline int run(const std::string& command, const Options& opt, std::ostream& out, std::ostream& err) {
  try {
    const ProblemConfig cfg = ProblemConfig::load(opt.config);
    if (command == "el") return cmd_el(cfg, out);
    if (command == "nbc") return cmd_nbc(cfg, opt, out);
    if (command == "prolong") return cmd_prolong(cfg, out);
    if (command == "solve") return cmd_solve(cfg, opt, out);
    if (command == "local-family") return cmd_local_family(cfg, opt, out);
    if (command == "verify") return cmd_verify(cfg, opt, out);
    throw ConfigError("unknown command " + command);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace fbvp::cli
