#pragma once

// The csqfi command-line tool. Kept in a header so tests can drive it
// in-process through run().

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "csqfi/errors.hpp"
#include "csqfi/metrology.hpp"
#include "csqfi/optimize.hpp"
#include "csqfi/response.hpp"

#ifndef CSQFI_VERSION
#define CSQFI_VERSION "unknown"
#endif

namespace csqfi::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDomain = 3;
inline constexpr int kExitConvergence = 4;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Shortest representation that reads back to the same double.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline double parse_real(std::string_view s) {
  if (s == "pi") return std::numbers::pi;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw UsageError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

inline std::size_t parse_count(std::string_view s) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw UsageError("not a point count: '" + std::string(s) + "'");
  }
  return v;
}

// [var:]lo:hi[:count[:linear|log]]. A missing count or spacing falls back to
// the variable's default axis when count_required is false; with
// count_required the spacing defaults to linear.
inline optimize::Axis parse_axis(std::string_view text, std::optional<optimize::Variable> default_var,
                                 bool count_required) {
  auto tok = split(text, ':');
  optimize::Axis axis;
  if (auto v = optimize::parse_variable(tok.front())) {
    axis.var = *v;
    tok.erase(tok.begin());
  } else if (default_var) {
    axis.var = *default_var;
  } else {
    throw UsageError("axis '" + std::string(text) + "' must start with tau, theta, r or nu");
  }
  if (tok.size() < 2 || tok.size() > 4 || (count_required && tok.size() < 3)) {
    throw UsageError("malformed axis '" + std::string(text) + "'");
  }
  const auto defaults = optimize::default_axis(axis.var);
  axis.lo = parse_real(tok[0]);
  axis.hi = parse_real(tok[1]);
  axis.count = tok.size() >= 3 ? parse_count(tok[2]) : defaults.count;
  axis.spacing = count_required ? optimize::Spacing::linear : defaults.spacing;
  if (tok.size() == 4) {
    if (tok[3] == "log") {
      axis.spacing = optimize::Spacing::log;
    } else if (tok[3] == "linear" || tok[3] == "lin") {
      axis.spacing = optimize::Spacing::linear;
    } else {
      throw UsageError("unknown spacing '" + std::string(tok[3]) + "'");
    }
  }
  try {
    axis.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return axis;
}

inline response::Polarization parse_pol(std::string_view s) {
  if (auto c = response::parse_component(s)) return response::Polarization::pure(*c);
  const auto tok = split(s, ':');
  if (tok.size() != 3) {
    throw UsageError("polarization must be radial, tangential, parallel or zr:za:zz");
  }
  return response::Polarization::make(parse_real(tok[0]), parse_real(tok[1]), parse_real(tok[2]));
}

inline std::string pol_label(const response::Polarization& p) {
  if (auto c = p.pure_component()) return std::string(response::component_name(*c));
  return fmt(p.zeta_r) + ":" + fmt(p.zeta_alpha) + ":" + fmt(p.zeta_z);
}

// The invocation as recorded in output headers. Options that only affect
// where results go or how fast they are produced are left out, so runs with
// and without a cache produce identical files.
inline std::string recorded_command(const std::vector<std::string>& args) {
  static const std::vector<std::string> skip = {"--cache", "--jobs", "-j", "--output", "-o",
                                                "--out"};
  std::string out = "csqfi";
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    bool dropped = false;
    for (const auto& s : skip) {
      if (a == s) {
        ++i;
        dropped = true;
        break;
      }
      if (a.rfind(s + "=", 0) == 0) {
        dropped = true;
        break;
      }
    }
    if (dropped) continue;
    out += ' ';
    if (a.find_first_of(" \t\"") != std::string::npos) {
      out += '"' + a + '"';
    } else {
      out += a;
    }
  }
  return out;
}

inline void write_header(std::ostream& os, const std::string& command) {
  os << "# csqfi " << CSQFI_VERSION << "\n"
     << "# command: " << command << "\n"
     << "# scheme: " << response::kSchemeVersion << "\n"
     << "# rates: transverse decay gamma_total/2, longitudinal decay gamma_total,"
        " gamma_total = f (units of gamma0)\n"
     << "# units: r_tilde in c/omega0, tau in 1/gamma0, fisher dimensionless\n";
}

inline constexpr std::string_view kQfiColumns = "pol,r_tilde,nu,tau,theta,fisher,crlb_single";

inline void write_qfi_row(std::ostream& os, const std::string& label, const optimize::ScanCell& c) {
  const auto& p = c.result.point;
  os << label << ',' << fmt(p.r_tilde) << ',' << fmt(p.nu) << ',' << fmt(p.tau_tilde) << ','
     << fmt(p.theta) << ',' << fmt(c.result.fisher) << ',' << fmt(c.result.crlb_single) << '\n';
}

struct Context {
  std::string command;
  unsigned jobs = 1;
  std::string output;
  response::ResponseCache* cache = nullptr;
  std::ostream& out;
  std::ostream& err;

  void emit(const std::string& text) const {
    if (output.empty() || output == "-") {
      out << text;
      return;
    }
    std::ofstream f(output, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + output);
    f << text;
  }
};

// Exit status for a table with failed cells; reports the first failure.
inline int table_status(const optimize::ScanTable& t, const Context& ctx) {
  std::size_t failed = 0;
  const optimize::ScanCell* first = nullptr;
  for (const auto& c : t.cells) {
    if (c.ok()) continue;
    ++failed;
    if (!first) first = &c;
  }
  if (!first) return kExitOk;
  ctx.err << "csqfi: " << failed << " of " << t.cells.size()
          << " points failed; first: " << first->error << "\n";
  return first->status == optimize::CellStatus::convergence_error ? kExitConvergence : kExitDomain;
}

// Values for tau, theta, r, nu given either as flags or as scan axes.
struct PointArgs {
  std::optional<double> r, nu, tau, theta;
  double phi = 0.0;

  void add_to(CLI::App* sub) {
    sub->add_option("--r", r, "distance from the string, units of c/omega0");
    sub->add_option("--nu", nu, "deficit parameter");
    sub->add_option("--tau", tau, "evolution time, units of 1/gamma0");
    sub->add_option("--theta", theta, "initial state polar angle in [0, pi]");
    sub->add_option("--phi", phi, "initial state phase");
  }

  optimize::ScanGrid grid(const response::Polarization& pol,
                          const std::vector<optimize::Axis>& axes) const {
    optimize::ScanGrid g;
    g.axes = axes;
    g.fixed.pol = pol;
    g.fixed.phi = phi;
    auto bind = [&](optimize::Variable v, const std::optional<double>& value) {
      bool swept = false;
      for (const auto& a : axes) swept = swept || a.var == v;
      const std::string name(optimize::variable_name(v));
      if (swept && value) throw UsageError(name + " given both as a value and as an axis");
      if (!swept && !value) throw UsageError("missing --" + name);
      if (value) optimize::set(g.fixed, v, *value);
    };
    bind(optimize::Variable::r, r);
    bind(optimize::Variable::nu, nu);
    bind(optimize::Variable::tau, tau);
    bind(optimize::Variable::theta, theta);
    if (!std::isfinite(phi)) throw DomainError("phi must be finite");
    try {
      g.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return g;
  }
};

// ---- response ------------------------------------------------------------

struct ResponseArgs {
  std::string component;
  std::optional<double> r, nu;
  std::string sweep;
};

inline int cmd_response(const ResponseArgs& a, const Context& ctx) {
  const auto comp = response::parse_component(a.component);
  if (!comp) throw UsageError("unknown component '" + a.component + "'");

  std::vector<std::pair<double, double>> points;  // (r, nu)
  if (a.sweep.empty()) {
    if (!a.r || !a.nu) throw UsageError("response needs --r and --nu, or --sweep");
    points.emplace_back(*a.r, *a.nu);
  } else {
    const auto axis = parse_axis(a.sweep, optimize::Variable::r, true);
    if (axis.var != optimize::Variable::r && axis.var != optimize::Variable::nu) {
      throw UsageError("response sweeps r or nu");
    }
    const bool over_r = axis.var == optimize::Variable::r;
    const auto& other = over_r ? a.nu : a.r;
    if (!other) throw UsageError(over_r ? "missing --nu" : "missing --r");
    if (over_r ? a.r.has_value() : a.nu.has_value()) {
      throw UsageError("swept variable also given as a value");
    }
    for (std::size_t i = 0; i < axis.count; ++i) {
      points.emplace_back(over_r ? axis.at(i) : *other, over_r ? *other : axis.at(i));
    }
  }

  std::ostringstream os;
  write_header(os, ctx.command);
  os << "component,r_tilde,nu,f,df_dnu,trunc_error,quad_error\n";
  for (const auto& [r, nu] : points) {
    const auto v = response::response_f(*comp, r, response::DeficitParam(nu),
                                        {.with_derivative = true, .cache = ctx.cache});
    os << response::component_name(*comp) << ',' << fmt(r) << ',' << fmt(nu) << ','
       << fmt(v.value) << ',' << fmt(v.dvalue_dnu) << ',' << fmt(v.trunc_error) << ','
       << fmt(v.quad_error) << '\n';
  }
  ctx.emit(os.str());
  return kExitOk;
}

// ---- qfi -----------------------------------------------------------------

struct QfiArgs {
  std::string pol;
  PointArgs point;
  std::vector<std::string> sweeps;
};

inline int cmd_qfi(const QfiArgs& a, const Context& ctx) {
  const auto pol = parse_pol(a.pol);
  std::vector<optimize::Axis> axes;
  for (const auto& s : a.sweeps) axes.push_back(parse_axis(s, std::nullopt, true));
  const auto grid = a.point.grid(pol, axes);
  const auto table = optimize::scan(grid, {.jobs = ctx.jobs, .cache = ctx.cache});

  std::ostringstream os;
  write_header(os, ctx.command);
  os << kQfiColumns << '\n';
  const auto label = pol_label(pol);
  for (const auto& c : table.cells) write_qfi_row(os, label, c);
  ctx.emit(os.str());
  return table_status(table, ctx);
}

// ---- figure --------------------------------------------------------------

struct FigureSpec {
  std::string name;
  std::vector<optimize::Axis> axes;
  metrology::DetectorConfig fixed;
  std::vector<double> curves_nu;  // one scan per value when non-empty
};

inline FigureSpec figure_spec(const std::string& name) {
  using optimize::Variable;
  using optimize::default_axis;
  FigureSpec f;
  f.name = name;
  if (name == "fig3") {
    f.axes = {default_axis(Variable::tau), default_axis(Variable::theta)};
    f.fixed.r_tilde = 0.1;
    f.fixed.nu = 1.5;
  } else if (name == "fig4") {
    f.axes = {default_axis(Variable::tau), default_axis(Variable::r)};
    f.fixed.nu = 1.5;
    f.fixed.theta = 0.0;
  } else if (name == "fig5") {
    f.axes = {default_axis(Variable::r)};
    f.fixed.tau_tilde = 4.0;
    f.fixed.theta = 0.0;
    f.curves_nu = {1.5, 1.8, 2.0};
  } else if (name == "fig6") {
    f.axes = {default_axis(Variable::nu), default_axis(Variable::tau)};
    f.fixed.r_tilde = 0.1;
    f.fixed.theta = 0.0;
  } else {
    throw UsageError("unknown figure '" + name + "' (fig3, fig4, fig5, fig6)");
  }
  return f;
}

struct FigureArgs {
  std::string name;
  std::string out_dir = "figures";
  std::optional<std::size_t> density;
};

inline std::string axis_text(const optimize::Axis& a) {
  return std::string(optimize::variable_name(a.var)) + ":" + fmt(a.lo) + ":" + fmt(a.hi) + ":" +
         std::to_string(a.count) + ":" + (a.spacing == optimize::Spacing::log ? "log" : "linear");
}

inline int cmd_figure(const FigureArgs& a, const Context& ctx) {
  auto spec = figure_spec(a.name);
  if (a.density) {
    if (*a.density < 2) throw UsageError("--density must be >= 2");
    for (auto& ax : spec.axes) ax.count = *a.density;
  }
  std::filesystem::create_directories(a.out_dir);

  std::ostringstream manifest;
  manifest << "figure=" << spec.name << "\n"
           << "version=" << CSQFI_VERSION << "\n"
           << "scheme=" << response::kSchemeVersion << "\n"
           << "command=" << ctx.command << "\n"
           << "rates=transverse gamma_total/2, longitudinal gamma_total, gamma_total = f\n"
           << "units=r_tilde c/omega0, tau 1/gamma0, fisher dimensionless\n";
  for (std::size_t k = 0; k < spec.axes.size(); ++k) {
    manifest << "axis." << k << "=" << axis_text(spec.axes[k]) << "\n";
  }
  for (auto v : {optimize::Variable::r, optimize::Variable::nu, optimize::Variable::tau,
                 optimize::Variable::theta}) {
    bool swept = false;
    for (const auto& ax : spec.axes) swept = swept || ax.var == v;
    if (!swept && !(v == optimize::Variable::nu && !spec.curves_nu.empty())) {
      manifest << "fixed." << optimize::variable_name(v) << "=" << fmt(optimize::get(spec.fixed, v))
               << "\n";
    }
  }
  manifest << "fixed.phi=" << fmt(spec.fixed.phi) << "\n";
  if (!spec.curves_nu.empty()) {
    manifest << "curves.nu=";
    for (std::size_t i = 0; i < spec.curves_nu.size(); ++i) {
      manifest << (i ? "," : "") << fmt(spec.curves_nu[i]);
    }
    manifest << "\n";
  }

  int status = kExitOk;
  for (auto comp : response::kAllComponents) {
    const auto pol = response::Polarization::pure(comp);
    const std::string label(response::component_name(comp));
    std::ostringstream os;
    write_header(os, ctx.command);
    os << kQfiColumns << '\n';
    std::vector<double> nus = spec.curves_nu;
    if (nus.empty()) nus.push_back(spec.fixed.nu);
    for (double nu : nus) {
      optimize::ScanGrid g{spec.axes, spec.fixed};
      g.fixed.pol = pol;
      g.fixed.nu = nu;
      const auto table = optimize::scan(g, {.jobs = ctx.jobs, .cache = ctx.cache});
      for (const auto& c : table.cells) write_qfi_row(os, label, c);
      const int s = table_status(table, ctx);
      if (status == kExitOk) status = s;
    }
    const std::string file = spec.name + "_" + label + ".csv";
    std::ofstream f(std::filesystem::path(a.out_dir) / file, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + file);
    f << os.str();
    manifest << "file=" << file << "\n";
  }
  std::ofstream m(std::filesystem::path(a.out_dir) / (spec.name + "_manifest.txt"), std::ios::binary);
  if (!m) throw std::runtime_error("cannot write " + spec.name + "_manifest.txt");
  m << manifest.str();
  return status;
}

// ---- maximize ------------------------------------------------------------

struct MaximizeArgs {
  std::string pol;
  PointArgs point;
  std::vector<std::string> axes;
  double tol = 1e-6;
};

inline int cmd_maximize(const MaximizeArgs& a, const Context& ctx) {
  const auto pol = parse_pol(a.pol);
  if (a.axes.empty() || a.axes.size() > 2) throw UsageError("maximize needs one or two --axis");
  if (!(a.tol > 0.0)) throw UsageError("--tol must be > 0");
  std::vector<optimize::Axis> axes;
  for (const auto& s : a.axes) axes.push_back(parse_axis(s, std::nullopt, false));
  const auto grid = a.point.grid(pol, axes);
  const auto res = optimize::maximize(grid, a.tol, {.jobs = ctx.jobs, .cache = ctx.cache});

  const auto& p = res.best.point;
  std::ostringstream os;
  os << "# maximum of fisher for pol=" << pol_label(pol) << " over";
  for (const auto& ax : axes) {
    os << ' ' << optimize::variable_name(ax.var) << " in [" << fmt(ax.lo) << ", " << fmt(ax.hi)
       << "] (" << ax.count << (ax.spacing == optimize::Spacing::log ? " log" : "") << " points)";
  }
  os << "\n#   at r_tilde=" << fmt(p.r_tilde) << " nu=" << fmt(p.nu) << " tau=" << fmt(p.tau_tilde)
     << " theta=" << fmt(p.theta) << "\n"
     << "#   fisher " << fmt(res.best.fisher) << ", single-shot variance bound "
     << fmt(res.best.crlb_single) << "\n"
     << "#   refinement " << (res.converged ? "converged" : "did not converge") << " after "
     << res.history.size() << " evaluations, final width " << fmt(res.tolerance_achieved) << "\n";
  os << "pol=" << pol_label(pol) << "\n"
     << "r_tilde=" << fmt(p.r_tilde) << "\n"
     << "nu=" << fmt(p.nu) << "\n"
     << "tau=" << fmt(p.tau_tilde) << "\n"
     << "theta=" << fmt(p.theta) << "\n"
     << "fisher=" << fmt(res.best.fisher) << "\n"
     << "crlb_single=" << fmt(res.best.crlb_single) << "\n"
     << "converged=" << (res.converged ? "true" : "false") << "\n"
     << "tolerance_achieved=" << fmt(res.tolerance_achieved) << "\n"
     << "evaluations=" << res.history.size() << "\n";
  ctx.emit(os.str());
  if (!res.converged) {
    ctx.err << "csqfi: refinement did not reach tolerance " << fmt(a.tol) << "\n";
    return kExitConvergence;
  }
  return kExitOk;
}

// ---- entry point ---------------------------------------------------------

// args excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum Fisher information of a two-level detector near a cosmic string"};
  app.name("csqfi");
  app.set_version_flag("--version", CSQFI_VERSION);
  app.set_config("--config", "", "read options from a key=value file; command-line flags win");
  app.require_subcommand(1);
  app.fallthrough();

  std::string cache_path, output;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--cache", cache_path, "response cache file, created if missing");
  app.add_option("-j,--jobs", jobs, "worker threads for scans")->check(CLI::PositiveNumber);
  app.add_option("-o,--output", output, "output file for response, qfi and maximize (default stdout)");

  ResponseArgs ra;
  auto* resp = app.add_subcommand("response", "response function f and df/dnu");
  resp->add_option("--component", ra.component, "radial|tangential|parallel (r, a, z)")->required();
  resp->add_option("--r", ra.r, "distance from the string, units of c/omega0");
  resp->add_option("--nu", ra.nu, "deficit parameter");
  resp->add_option("--sweep", ra.sweep, "[r|nu:]lo:hi:count[:log]");

  QfiArgs qa;
  auto* qfi = app.add_subcommand("qfi", "quantum Fisher information at a point or over a grid");
  qfi->add_option("--pol", qa.pol, "radial|tangential|parallel or zr:za:zz")->required();
  qa.point.add_to(qfi);
  qfi->add_option("--sweep", qa.sweeps, "var:lo:hi:count[:log], repeatable");

  FigureArgs fa;
  auto* fig = app.add_subcommand("figure", "write the QFI surfaces fig3..fig6 as CSV");
  fig->add_option("name", fa.name, "fig3|fig4|fig5|fig6")->required();
  fig->add_option("--out", fa.out_dir, "output directory")->capture_default_str();
  fig->add_option("--density", fa.density, "points per axis, overriding the defaults");

  MaximizeArgs ma;
  auto* mx = app.add_subcommand("maximize", "maximize the QFI over one or two axes");
  mx->add_option("--pol", ma.pol, "radial|tangential|parallel or zr:za:zz")->required();
  ma.point.add_to(mx);
  mx->add_option("--axis", ma.axes, "var:lo:hi[:count[:spacing]], once or twice");
  mx->add_option("--tol", ma.tol, "parameter tolerance")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    response::ResponseCache cache;
    if (!cache_path.empty()) cache.load(cache_path);
    Context ctx{recorded_command(args), jobs, output, &cache, out, err};
    int status = kExitOk;
    if (resp->parsed()) {
      status = cmd_response(ra, ctx);
    } else if (qfi->parsed()) {
      status = cmd_qfi(qa, ctx);
    } else if (fig->parsed()) {
      status = cmd_figure(fa, ctx);
    } else {
      status = cmd_maximize(ma, ctx);
    }
    if (!cache_path.empty()) cache.save(cache_path);
    return status;
  } catch (const std::invalid_argument& e) {
    err << "csqfi: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConvergenceError& e) {
    err << "csqfi: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const std::domain_error& e) {
    err << "csqfi: " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    err << "csqfi: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace csqfi::cli
