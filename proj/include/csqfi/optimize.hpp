#pragma once

// Grid scans of the QFI over (tau, theta, r, nu) and local refinement of the
// best cell: golden section on one free axis, Nelder-Mead on two.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "csqfi/metrology.hpp"
#include "csqfi/response.hpp"

namespace csqfi::optimize {

inline constexpr std::size_t kMaxCells = 10'000'000;

enum class Variable { tau, theta, r, nu };
enum class Spacing { linear, log };

inline constexpr std::string_view variable_name(Variable v) {
  switch (v) {
    case Variable::tau: return "tau";
    case Variable::theta: return "theta";
    case Variable::r: return "r";
    case Variable::nu: return "nu";
  }
  return "?";
}

inline std::optional<Variable> parse_variable(std::string_view s) {
  if (s == "tau" || s == "tau_tilde") return Variable::tau;
  if (s == "theta") return Variable::theta;
  if (s == "r" || s == "r_tilde") return Variable::r;
  if (s == "nu") return Variable::nu;
  return std::nullopt;
}

inline double get(const metrology::DetectorConfig& c, Variable v) {
  switch (v) {
    case Variable::tau: return c.tau_tilde;
    case Variable::theta: return c.theta;
    case Variable::r: return c.r_tilde;
    case Variable::nu: return c.nu;
  }
  return 0.0;
}

inline void set(metrology::DetectorConfig& c, Variable v, double x) {
  switch (v) {
    case Variable::tau: c.tau_tilde = x; break;
    case Variable::theta: c.theta = x; break;
    case Variable::r: c.r_tilde = x; break;
    case Variable::nu: c.nu = x; break;
  }
}

struct Axis {
  Variable var = Variable::r;
  double lo = 0.0;
  double hi = 1.0;
  std::size_t count = 2;
  Spacing spacing = Spacing::linear;

  void validate() const {
    const std::string name(variable_name(var));
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
      throw std::invalid_argument("axis " + name + ": need finite lo < hi");
    }
    if (count < 2) throw std::invalid_argument("axis " + name + ": count must be >= 2");
    if (spacing == Spacing::log && !(lo > 0.0)) {
      throw std::invalid_argument("axis " + name + ": log spacing needs lo > 0");
    }
  }

  // Endpoints are returned exactly.
  double at(std::size_t i) const {
    if (i == 0) return lo;
    if (i + 1 >= count) return hi;
    const double t = static_cast<double>(i) / static_cast<double>(count - 1);
    if (spacing == Spacing::log) return lo * std::exp(t * std::log(hi / lo));
    return lo + t * (hi - lo);
  }

  double to_unit(double x) const { return spacing == Spacing::log ? std::log(x) : x; }
  double from_unit(double u) const { return spacing == Spacing::log ? std::exp(u) : u; }
};

// Ranges used when a variable is scanned without explicit bounds.
inline Axis default_axis(Variable v) {
  switch (v) {
    case Variable::tau: return {v, 0.0, 20.0, 101, Spacing::linear};
    case Variable::theta: return {v, 0.0, std::numbers::pi, 61, Spacing::linear};
    case Variable::r: return {v, 0.01, 10.0, 400, Spacing::log};
    case Variable::nu: return {v, 1.0, 2.5, 61, Spacing::linear};
  }
  return {};
}

// Free axes plus fixed values for everything else. Cells are ordered
// row-major: the last axis varies fastest. No axes means a single cell.
struct ScanGrid {
  std::vector<Axis> axes;
  metrology::DetectorConfig fixed;

  void validate() const {
    for (std::size_t i = 0; i < axes.size(); ++i) {
      axes[i].validate();
      for (std::size_t j = 0; j < i; ++j) {
        if (axes[j].var == axes[i].var) {
          throw std::invalid_argument("variable " + std::string(variable_name(axes[i].var)) +
                                      " appears on two axes");
        }
      }
    }
    double n = 1.0;
    for (const auto& a : axes) n *= static_cast<double>(a.count);
    if (n > static_cast<double>(kMaxCells)) {
      throw std::invalid_argument("grid has more than 1e7 cells");
    }
  }

  std::size_t size() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.count;
    return n;
  }

  std::vector<std::size_t> indices(std::size_t idx) const {
    std::vector<std::size_t> out(axes.size());
    for (std::size_t k = axes.size(); k-- > 0;) {
      out[k] = idx % axes[k].count;
      idx /= axes[k].count;
    }
    return out;
  }

  metrology::DetectorConfig point(std::size_t idx) const {
    auto c = fixed;
    const auto ix = indices(idx);
    for (std::size_t k = 0; k < axes.size(); ++k) set(c, axes[k].var, axes[k].at(ix[k]));
    return c;
  }
};

enum class CellStatus { ok, domain_error, convergence_error };

struct ScanCell {
  metrology::QfiResult result;  // fisher is NaN when error is set
  std::string error;
  CellStatus status = CellStatus::ok;

  bool ok() const { return error.empty(); }
};

struct ScanTable {
  ScanGrid grid;
  std::vector<ScanCell> cells;
};

struct ScanOptions {
  unsigned jobs = 1;
  response::ResponseCache* cache = nullptr;  // an internal cache is used when null
};

namespace detail {

inline ScanCell evaluate_cell(const metrology::DetectorConfig& c, response::ResponseCache* cache) {
  ScanCell cell;
  try {
    cell.result = metrology::qfi_at(c, cache);
  } catch (const std::exception& e) {
    cell.result = {};
    cell.result.point = c;
    cell.result.fisher = std::numeric_limits<double>::quiet_NaN();
    cell.error = e.what();
    cell.status = dynamic_cast<const ConvergenceError*>(&e) ? CellStatus::convergence_error
                                                            : CellStatus::domain_error;
  }
  return cell;
}

}  // namespace detail

inline ScanTable scan(const ScanGrid& grid, const ScanOptions& options = {}) {
  grid.validate();
  response::ResponseCache local;
  response::ResponseCache* cache = options.cache ? options.cache : &local;

  ScanTable table{grid, std::vector<ScanCell>(grid.size())};
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < table.cells.size(); i = next++) {
      table.cells[i] = detail::evaluate_cell(grid.point(i), cache);
    }
  };
  const std::size_t jobs =
      std::min<std::size_t>(std::max(1u, options.jobs), table.cells.size());
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  return table;
}

struct HistoryEntry {
  metrology::DetectorConfig point;
  double fisher = 0.0;
};

struct MaxResult {
  metrology::QfiResult best;
  std::vector<HistoryEntry> history;  // refinement evaluations in order
  bool converged = false;
  double tolerance_achieved = std::numeric_limits<double>::infinity();
};

inline constexpr int kGoldenMaxIter = 200;
inline constexpr int kSimplexMaxIter = 500;

namespace detail {

// Objective over the free axes in unit coordinates (log for log axes).
class Objective {
 public:
  Objective(const ScanGrid& grid, response::ResponseCache* cache, MaxResult& out)
      : grid_(grid), cache_(cache), out_(out) {}

  double operator()(const std::vector<double>& u) {
    auto c = grid_.fixed;
    for (std::size_t k = 0; k < grid_.axes.size(); ++k) {
      const auto& a = grid_.axes[k];
      set(c, a.var, std::clamp(a.from_unit(u[k]), a.lo, a.hi));
    }
    double v = -std::numeric_limits<double>::infinity();
    try {
      const auto res = metrology::qfi_at(c, cache_);
      v = res.fisher;
      if (v > out_.best.fisher) out_.best = res;
    } catch (const std::exception&) {
    }
    out_.history.push_back({c, v});
    return v;
  }

 private:
  const ScanGrid& grid_;
  response::ResponseCache* cache_;
  MaxResult& out_;
};

inline void golden_section(const ScanGrid& grid, std::size_t best_idx, double tol, Objective& f,
                           MaxResult& out) {
  const Axis& ax = grid.axes[0];
  const std::size_t i = best_idx;
  double a = ax.to_unit(ax.at(i == 0 ? 0 : i - 1));
  double b = ax.to_unit(ax.at(std::min(i + 1, ax.count - 1)));
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;

  auto width = [&] { return std::abs(ax.from_unit(b) - ax.from_unit(a)); };
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f({c});
  double fd = f({d});
  for (int it = 0; it < kGoldenMaxIter && width() > tol; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f({c});
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f({d});
    }
  }
  out.tolerance_achieved = width();
  out.converged = out.tolerance_achieved <= tol;
}

inline void nelder_mead(const ScanGrid& grid, std::size_t best_idx, double tol, Objective& f,
                        MaxResult& out) {
  const auto ix = grid.indices(best_idx);
  std::vector<double> lo(2), hi(2);
  std::vector<double> p0(2);
  std::vector<std::vector<double>> simplex(3, std::vector<double>(2));
  for (int k = 0; k < 2; ++k) {
    const Axis& ax = grid.axes[k];
    lo[k] = ax.to_unit(ax.lo);
    hi[k] = ax.to_unit(ax.hi);
    p0[k] = ax.to_unit(ax.at(ix[k]));
  }
  simplex[0] = p0;
  for (int k = 0; k < 2; ++k) {
    const Axis& ax = grid.axes[k];
    auto p = p0;
    // One grid step towards the interior.
    p[k] = ix[k] + 1 < ax.count ? ax.to_unit(ax.at(ix[k] + 1)) : ax.to_unit(ax.at(ix[k] - 1));
    simplex[k + 1] = p;
  }

  auto clamp = [&](std::vector<double> p) {
    for (int k = 0; k < 2; ++k) p[k] = std::clamp(p[k], lo[k], hi[k]);
    return p;
  };
  auto extent = [&] {
    double m = 0.0;
    for (int k = 0; k < 2; ++k) {
      const Axis& ax = grid.axes[k];
      double mn = simplex[0][k], mx = simplex[0][k];
      for (const auto& p : simplex) {
        mn = std::min(mn, p[k]);
        mx = std::max(mx, p[k]);
      }
      m = std::max(m, std::abs(ax.from_unit(mx) - ax.from_unit(mn)));
    }
    return m;
  };

  std::vector<double> fv(3);
  for (int j = 0; j < 3; ++j) fv[j] = f(simplex[j]);

  for (int it = 0; it < kSimplexMaxIter && extent() > tol; ++it) {
    // Order by descending value; stable so ties keep their position.
    std::vector<int> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return fv[x] > fv[y]; });
    std::vector<std::vector<double>> s2;
    std::vector<double> f2;
    for (int j : order) {
      s2.push_back(simplex[j]);
      f2.push_back(fv[j]);
    }
    simplex = s2;
    fv = f2;

    std::vector<double> centroid(2);
    for (int k = 0; k < 2; ++k) centroid[k] = 0.5 * (simplex[0][k] + simplex[1][k]);
    auto along = [&](double t) {
      std::vector<double> p(2);
      for (int k = 0; k < 2; ++k) p[k] = centroid[k] + t * (simplex[2][k] - centroid[k]);
      return clamp(p);
    };

    const auto xr = along(-1.0);
    const double fr = f(xr);
    if (fr > fv[0]) {
      const auto xe = along(-2.0);
      const double fe = f(xe);
      if (fe > fr) {
        simplex[2] = xe;
        fv[2] = fe;
      } else {
        simplex[2] = xr;
        fv[2] = fr;
      }
    } else if (fr > fv[1]) {
      simplex[2] = xr;
      fv[2] = fr;
    } else {
      const auto xc = fr > fv[2] ? along(-0.5) : along(0.5);
      const double fc = f(xc);
      if (fc > std::max(fr, fv[2])) {
        simplex[2] = xc;
        fv[2] = fc;
      } else {
        for (int j = 1; j < 3; ++j) {
          for (int k = 0; k < 2; ++k) simplex[j][k] = simplex[0][k] + 0.5 * (simplex[j][k] - simplex[0][k]);
          fv[j] = f(simplex[j]);
        }
      }
    }
  }
  out.tolerance_achieved = extent();
  out.converged = out.tolerance_achieved <= tol;
}

}  // namespace detail

// Coarse scan followed by local refinement around the best cell. The
// result is never worse than the best grid sample.
inline MaxResult maximize(const ScanGrid& grid, double tol, const ScanOptions& options = {}) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  if (grid.axes.empty() || grid.axes.size() > 2) {
    throw std::invalid_argument("maximize needs one or two free axes");
  }
  response::ResponseCache local;
  ScanOptions opts = options;
  if (!opts.cache) opts.cache = &local;

  const ScanTable table = scan(grid, opts);
  std::optional<std::size_t> best_idx;
  for (std::size_t i = 0; i < table.cells.size(); ++i) {
    const auto& cell = table.cells[i];
    if (!cell.ok()) continue;
    if (!best_idx || cell.result.fisher > table.cells[*best_idx].result.fisher) best_idx = i;
  }
  if (!best_idx) throw DomainError("no grid cell could be evaluated");

  MaxResult out;
  out.best = table.cells[*best_idx].result;
  detail::Objective f(grid, opts.cache, out);
  if (grid.axes.size() == 1) {
    detail::golden_section(grid, *best_idx, tol, f, out);
  } else {
    detail::nelder_mead(grid, *best_idx, tol, f, out);
  }
  return out;
}

}  // namespace csqfi::optimize
