#pragma once

// Dataset builders for the variance sweeps, the kurtosis runs and the
// kurtosis table, plus the calibration of the unpublished initial fourth
// moments.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "qbo/admissibility.hpp"
#include "qbo/closed_form.hpp"
#include "qbo/error.hpp"
#include "qbo/model.hpp"
#include "qbo/moment_dynamics.hpp"

namespace qbo {

/// Columnar numeric table with free-form metadata for the file header.
struct Dataset {
  std::string name;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::vector<double> column(std::string_view col) const {
    const auto it = std::find(columns.begin(), columns.end(), col);
    if (it == columns.end()) throw Error(ErrorCode::InvalidSpec, "no column " + std::string(col));
    const auto idx = static_cast<std::size_t>(it - columns.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[idx]);
    return out;
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------- sweeps

enum class Curve { ExactQuantum, Classical, DecoherenceLimit };
enum class Panel { Left, Middle, Right };

inline std::string to_string(Curve c) {
  switch (c) {
    case Curve::ExactQuantum: return "var_quantum";
    case Curve::Classical: return "var_classical";
    case Curve::DecoherenceLimit: return "var_decoherence";
  }
  return "?";
}

inline std::string to_string(Panel p) {
  switch (p) {
    case Panel::Left: return "left";
    case Panel::Middle: return "middle";
    case Panel::Right: return "right";
  }
  return "?";
}

struct SweepConfig {
  std::string panel_id;
  ParamMap fixed;
  std::string swept;
  double lo = 1.0;
  double hi = 10.0;
  std::size_t points = 200;
  double t = 10.0;
  std::vector<Curve> curves;
  QuadraticState init{};

  void validate() const {
    if (std::find(kParamNames.begin(), kParamNames.end(), swept) == kParamNames.end())
      throw Error(ErrorCode::InvalidSpec, "unknown swept parameter '" + swept + "'");
    if (fixed.contains(swept)) throw Error(ErrorCode::InvalidSpec, "swept parameter '" + swept + "' is also fixed");
    if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi))
      throw Error(ErrorCode::InvalidSpec, "sweep range must satisfy 0 < lo < hi");
    if (points < 2) throw Error(ErrorCode::InvalidSpec, "a sweep needs at least 2 points");
    if (!(t >= 0.0)) throw Error(ErrorCode::NegativeTime, "evaluation time must be >= 0");
    if (curves.empty()) throw Error(ErrorCode::InvalidSpec, "no curves requested");
  }

  std::vector<double> grid() const {
    std::vector<double> g(points);
    const double span = std::log(hi / lo);
    for (std::size_t i = 0; i < points; ++i)
      g[i] = lo * std::exp(span * static_cast<double>(i) / static_cast<double>(points - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
  }
};

/// Initial state of the variance sweeps.
inline QuadraticState sweep_initial_state() { return {0.0, 0.0, 1e-7, 1e7, 0.01}; }

inline SweepConfig figure1_config(Panel panel) {
  SweepConfig c;
  c.panel_id = "figure1-" + to_string(panel);
  c.curves = {Curve::ExactQuantum, Curve::Classical};
  c.init = sweep_initial_state();
  switch (panel) {
    case Panel::Left:
      c.fixed = {{"omega", 0.1}, {"m", 0.1}, {"gamma", 10.0}, {"hbar", 1.0}};
      c.swept = "kbt";
      c.lo = 1e-7;
      c.hi = 1e7;
      break;
    case Panel::Middle:
      c.fixed = {{"omega", 10.0}, {"m", 10.0}, {"kbt", 0.1}, {"hbar", 1.0}};
      c.swept = "gamma";
      c.lo = 1e-2;
      c.hi = 1e7;
      break;
    case Panel::Right:
      c.fixed = {{"m", 10.0}, {"gamma", 1.0}, {"kbt", 0.1}, {"hbar", 1.0}};
      c.swept = "omega";
      c.lo = 1e-2;
      c.hi = 1e2;
      break;
  }
  return c;
}

/// Same panels with the mass replaced by 1000 and the decoherence-limit curve.
inline SweepConfig figure2_config(Panel panel) {
  SweepConfig c = figure1_config(panel);
  c.panel_id = "figure2-" + to_string(panel);
  c.fixed["m"] = 1000.0;
  c.curves = {Curve::DecoherenceLimit, Curve::Classical};
  return c;
}

inline double evaluate_curve(Curve curve, const OscillatorParams& p, const QuadraticState& init, double t) {
  switch (curve) {
    case Curve::ExactQuantum: return exact_variance(p, init, t);
    case Curve::Classical: return classical_variance(p, t);
    case Curve::DecoherenceLimit: return decoherence_variance(p, init, t);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

inline Dataset run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  Dataset d;
  d.name = cfg.panel_id;
  d.columns.push_back(cfg.swept);
  for (Curve c : cfg.curves) d.columns.push_back(to_string(c));
  for (const auto& [k, v] : cfg.fixed) d.meta.emplace_back(k, detail::format_double(v));
  d.meta.emplace_back("swept", cfg.swept);
  d.meta.emplace_back("range", detail::format_double(cfg.lo) + ":" + detail::format_double(cfg.hi));
  d.meta.emplace_back("points", std::to_string(cfg.points));
  d.meta.emplace_back("t", detail::format_double(cfg.t));
  d.meta.emplace_back("init", detail::format_double(cfg.init.var_x) + "," + detail::format_double(cfg.init.var_p) +
                                  "," + detail::format_double(cfg.init.sigma));
  for (double v : cfg.grid()) {
    ParamMap raw = cfg.fixed;
    raw[cfg.swept] = v;
    const OscillatorParams p = validate_params(raw);
    std::vector<double> row{v};
    for (Curve c : cfg.curves) row.push_back(evaluate_curve(c, p, cfg.init, cfg.t));
    d.rows.push_back(std::move(row));
  }
  return d;
}

inline Dataset run_figure1(Panel panel) { return run_sweep(figure1_config(panel)); }
inline Dataset run_figure2(Panel panel) { return run_sweep(figure2_config(panel)); }

// -------------------------------------------------------------- kurtosis

enum class KurtosisModel { Free, Harmonic };

inline std::string to_string(KurtosisModel m) { return m == KurtosisModel::Free ? "free" : "harmonic"; }

/// Oscillator parameters of the kurtosis runs; time unit one minute.
inline OscillatorParams kurtosis_params() { return {20.0, 0.001, 0.018, 0.38, 1.0}; }

/// Initial second moments of the kurtosis runs.
inline QuadraticState kurtosis_initial_state() { return {0.0, 0.0, 0.5, 0.5, 0.0}; }

/// Initial fourth moments of the kurtosis runs. x4 = 50 is prescribed; the
/// other four are the calibrated values (see `calibrate_fourth_moments`).
inline FourthMomentVector kurtosis_initial_fourth() {
  return {50.0, 18.99295116, -20.49615516, 0.43323568, 20.28232556};
}

struct KurtosisRunConfig {
  OscillatorParams params = kurtosis_params();
  QuadraticState init = kurtosis_initial_state();
  FourthMomentVector fourth = kurtosis_initial_fourth();
  std::vector<double> times = linear_grid(0.0, 200.0, 400);
  KurtosisModel model = KurtosisModel::Harmonic;
  TrajectoryOptions options{};

  /// Free runs ignore omega.
  OscillatorParams effective_params() const {
    OscillatorParams p = params;
    if (model == KurtosisModel::Free) p.omega = 0.0;
    return p;
  }

  MomentState initial_state() const { return {times.empty() ? 0.0 : times.front(), init, fourth}; }
};

/// Gaussian completion of `init` with selected fourth moments overridden
/// (NaN entries keep the completed value).
inline FourthMomentVector completed_fourth(const QuadraticState& init, const FourthMomentVector& overrides,
                                           double hbar = 1.0) {
  FourthMomentVector out = gaussian_fourth_moments(init, hbar);
  auto a = out.as_array();
  const auto o = overrides.as_array();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!std::isnan(o[i])) a[i] = o[i];
  return FourthMomentVector::from_array(a);
}

inline MomentSeries run_kurtosis(const KurtosisRunConfig& cfg) {
  return integrate(cfg.effective_params(), cfg.initial_state(), cfg.times, cfg.options);
}

struct Figure3Result {
  MomentSeries harmonic;
  MomentSeries free;
  FourthMomentVector fourth;
};

inline Figure3Result run_figure3(const KurtosisRunConfig& base = {}) {
  KurtosisRunConfig h = base;
  h.model = KurtosisModel::Harmonic;
  KurtosisRunConfig f = base;
  f.model = KurtosisModel::Free;
  return {run_kurtosis(h), run_kurtosis(f), base.fourth};
}

inline Dataset figure3_dataset(const Figure3Result& r) {
  Dataset d;
  d.name = "figure3";
  d.columns = {"t", "kappa_harmonic", "kappa_free"};
  const auto f = r.fourth.as_array();
  static constexpr std::array<const char*, 5> names = {"x4", "x3p", "x2p2", "xp3", "p4"};
  for (std::size_t i = 0; i < f.size(); ++i) d.meta.emplace_back(std::string("init.") + names[i], detail::format_double(f[i]));
  for (std::size_t i = 0; i < r.harmonic.times.size(); ++i)
    d.rows.push_back({r.harmonic.times[i], r.harmonic.kurtosis[i], r.free.kurtosis[i]});
  return d;
}

// ----------------------------------------------------------------- table

struct KurtosisTable {
  std::array<double, 4> times{40.0, 60.0, 80.0, 100.0};
  std::array<double, 4> free{};
  std::array<double, 4> harmonic{};
};

/// Printed reference rows of the kurtosis table (data only).
struct KurtosisReference {
  static constexpr std::array<double, 4> times{40.0, 60.0, 80.0, 100.0};
  static constexpr std::array<double, 4> free{14.4, 13.61, 11.8, 10.0};
  static constexpr std::array<double, 4> harmonic{15.3, 13.65, 9.8, 6.4};
  static constexpr std::array<double, 4> evidence{12.0, 11.0, 7.0, 7.0};
};

inline KurtosisTable run_table1(const KurtosisRunConfig& base = {}) {
  KurtosisRunConfig cfg = base;
  cfg.times.assign(1, 0.0);
  for (double t : KurtosisReference::times) cfg.times.push_back(t);
  KurtosisTable table;
  cfg.model = KurtosisModel::Harmonic;
  const MomentSeries h = run_kurtosis(cfg);
  cfg.model = KurtosisModel::Free;
  const MomentSeries f = run_kurtosis(cfg);
  for (std::size_t i = 0; i < 4; ++i) {
    table.harmonic[i] = h.kurtosis[i + 1];
    table.free[i] = f.kurtosis[i + 1];
  }
  return table;
}

inline Dataset table1_dataset(const KurtosisTable& table, const FourthMomentVector& fourth,
                              const MomentState& init_state, double hbar = 1.0) {
  Dataset d;
  d.name = "table1";
  d.columns = {"t", "kappa_free", "kappa_harmonic", "ref_free", "ref_harmonic", "ref_evidence"};
  const auto f = fourth.as_array();
  static constexpr std::array<const char*, 5> names = {"x4", "x3p", "x2p2", "xp3", "p4"};
  for (std::size_t i = 0; i < f.size(); ++i) d.meta.emplace_back(std::string("init.") + names[i], detail::format_double(f[i]));
  d.meta.emplace_back("init.moment_bounds", satisfies_moment_bounds(init_state) ? "satisfied" : "violated");
  d.meta.emplace_back("init.quantum_gram_min_eigenvalue",
                      detail::format_double(quantum_positivity_margin(init_state, hbar)));
  double worst = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    d.rows.push_back({table.times[i], table.free[i], table.harmonic[i], KurtosisReference::free[i],
                      KurtosisReference::harmonic[i], KurtosisReference::evidence[i]});
    worst = std::max({worst, std::abs(table.free[i] / KurtosisReference::free[i] - 1.0),
                      std::abs(table.harmonic[i] / KurtosisReference::harmonic[i] - 1.0)});
  }
  d.meta.emplace_back("max_relative_deviation", detail::format_double(worst));
  return d;
}

// ----------------------------------------------------------- calibration

/// kappa(t) is affine in the initial fourth moments at fixed second moments:
/// kappa = base + sum_j slope[j] * theta_j with theta = (x3p, x2p2, xp3, p4).
struct KurtosisResponse {
  std::vector<double> times;
  std::vector<double> base;
  std::array<std::vector<double>, 4> slope;

  std::vector<double> evaluate(const std::array<double, 4>& theta) const {
    std::vector<double> k = base;
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t i = 0; i < k.size(); ++i) k[i] += slope[j][i] * theta[j];
    return k;
  }
};

inline KurtosisResponse kurtosis_response(KurtosisRunConfig cfg) {
  KurtosisResponse r;
  r.times = cfg.times;
  cfg.fourth = {cfg.fourth.x4, 0.0, 0.0, 0.0, 0.0};
  r.base = run_kurtosis(cfg).kurtosis;
  for (std::size_t j = 0; j < 4; ++j) {
    auto a = cfg.fourth.as_array();
    a = {a[0], 0.0, 0.0, 0.0, 0.0};
    a[j + 1] = 1.0;
    KurtosisRunConfig unit = cfg;
    unit.fourth = FourthMomentVector::from_array(a);
    const auto k = run_kurtosis(unit).kurtosis;
    r.slope[j].resize(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) r.slope[j][i] = k[i] - r.base[i];
  }
  return r;
}

struct CalibrationSettings {
  double flip_margin = 0.05;        ///< kappa gap required on each side of the ordering flip
  double settle_time = 150.0;       ///< harmonic kappa must be near 3 here
  double settle_tolerance = 0.25;
  double window_lo = 120.0;         ///< oscillation window
  double window_hi = 200.0;
  double oscillation_margin = 0.05; ///< |kappa - 3| at the alternating extremes
  int restarts = 12;
  int iterations = 4000;
};

struct CalibrationResult {
  FourthMomentVector fourth;
  KurtosisTable table;
  double max_relative_deviation = 0.0;
  double constraint_violation = 0.0;
  double kappa_at_settle = 0.0;
  int sign_changes = 0;
  bool ordering_flip = false;
  double quantum_margin = 0.0;
};

namespace detail {

inline std::size_t index_of(const std::vector<double>& times, double t) {
  for (std::size_t i = 0; i < times.size(); ++i)
    if (std::abs(times[i] - t) <= 1e-9 * std::max(1.0, t)) return i;
  throw Error(ErrorCode::InvalidGrid, "time " + std::to_string(t) + " is not on the calibration grid");
}

// Largest m such that kappa - 3 reaches s*m, -s*m, s*m at increasing times.
inline double alternation_margin(std::span<const double> excess) {
  double best = -std::numeric_limits<double>::infinity();
  for (double sign : {1.0, -1.0}) {
    double a = -std::numeric_limits<double>::infinity();
    double ab = a;
    double abc = a;
    for (double e : excess) {
      abc = std::max(abc, std::min(ab, sign * e));
      ab = std::max(ab, std::min(a, -sign * e));
      a = std::max(a, sign * e);
    }
    best = std::max(best, abc);
  }
  return best;
}

inline int count_sign_changes(std::span<const double> excess) {
  int changes = 0;
  int last = 0;
  for (double e : excess) {
    const int s = (e > 0.0) - (e < 0.0);
    if (s == 0) continue;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

/// Nelder-Mead minimization of f over R^4 from `start` with initial step `step`.
inline std::array<double, 4> nelder_mead(const std::function<double(const std::array<double, 4>&)>& f,
                                         std::array<double, 4> start, double step, int iterations) {
  using Point = std::array<double, 4>;
  std::array<Point, 5> simplex;
  std::array<double, 5> value{};
  simplex[0] = start;
  for (std::size_t i = 0; i < 4; ++i) {
    simplex[i + 1] = start;
    simplex[i + 1][i] += step;
  }
  for (std::size_t i = 0; i < 5; ++i) value[i] = f(simplex[i]);
  auto combine = [](const Point& a, const Point& b, double w) {
    Point r;
    for (std::size_t i = 0; i < 4; ++i) r[i] = a[i] + w * (b[i] - a[i]);
    return r;
  };
  for (int it = 0; it < iterations; ++it) {
    std::array<std::size_t, 5> order{0, 1, 2, 3, 4};
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
    const std::size_t best = order[0], worst = order[4], second = order[3];
    if (std::abs(value[worst] - value[best]) <= 1e-14 * (1.0 + std::abs(value[best]))) break;
    Point centroid{};
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t i = 0; i < 4; ++i) centroid[i] += simplex[order[k]][i] / 4.0;
    const Point reflected = combine(centroid, simplex[worst], -1.0);
    const double fr = f(reflected);
    if (fr < value[best]) {
      const Point expanded = combine(centroid, simplex[worst], -2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        value[worst] = fe;
      } else {
        simplex[worst] = reflected;
        value[worst] = fr;
      }
    } else if (fr < value[second]) {
      simplex[worst] = reflected;
      value[worst] = fr;
    } else {
      const bool outside = fr < value[worst];
      const Point contracted = combine(centroid, outside ? reflected : simplex[worst], 0.5);
      const double fc = f(contracted);
      if (fc < std::min(fr, value[worst])) {
        simplex[worst] = contracted;
        value[worst] = fc;
      } else {
        for (std::size_t k = 1; k < 5; ++k) {
          simplex[order[k]] = combine(simplex[best], simplex[order[k]], 0.5);
          value[order[k]] = f(simplex[order[k]]);
        }
      }
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(value.begin(), value.end()) - value.begin());
  return simplex[best];
}

}  // namespace detail

/// Calibrates (x3p, x2p2, xp3, p4) with x4 and the second moments fixed.
/// Minimizes the largest relative deviation from the printed harmonic and
/// free kurtosis rows subject to: p4 >= var_p^2, the harmonic/free ordering
/// flip between t = 60 and t = 80, |kappa_h - 3| within tolerance at the
/// settle time, and kappa_h - 3 alternating in sign (+-+ or -+-) inside the
/// oscillation window. Constraints enter as exact penalties.
inline CalibrationResult calibrate_fourth_moments(const KurtosisRunConfig& base = {},
                                                  const CalibrationSettings& s = {}) {
  KurtosisRunConfig cfg = base;
  cfg.times = linear_grid(0.0, s.window_hi, static_cast<std::size_t>(std::lround(s.window_hi)));
  cfg.model = KurtosisModel::Harmonic;
  const KurtosisResponse h = kurtosis_response(cfg);
  cfg.model = KurtosisModel::Free;
  const KurtosisResponse f = kurtosis_response(cfg);

  std::array<std::size_t, 4> at{};
  for (std::size_t i = 0; i < 4; ++i) at[i] = detail::index_of(cfg.times, KurtosisReference::times[i]);
  const std::size_t i60 = detail::index_of(cfg.times, 60.0), i80 = detail::index_of(cfg.times, 80.0);
  const std::size_t i_settle = detail::index_of(cfg.times, s.settle_time);
  const std::size_t w_lo = detail::index_of(cfg.times, s.window_lo);
  const double vp2 = cfg.init.var_p * cfg.init.var_p;

  struct Score {
    double deviation, violation;
  };
  auto score = [&](const std::array<double, 4>& theta) {
    const auto kh = h.evaluate(theta);
    const auto kf = f.evaluate(theta);
    Score sc{0.0, 0.0};
    for (std::size_t i = 0; i < 4; ++i)
      sc.deviation = std::max({sc.deviation, std::abs(kh[at[i]] / KurtosisReference::harmonic[i] - 1.0),
                               std::abs(kf[at[i]] / KurtosisReference::free[i] - 1.0)});
    std::vector<double> excess;
    for (std::size_t i = w_lo; i < kh.size(); ++i) excess.push_back(kh[i] - 3.0);
    sc.violation += std::max(0.0, s.flip_margin - (kh[i60] - kf[i60]));
    sc.violation += std::max(0.0, s.flip_margin - (kf[i80] - kh[i80]));
    sc.violation += std::max(0.0, std::abs(kh[i_settle] - 3.0) - s.settle_tolerance);
    sc.violation += std::max(0.0, vp2 - theta[3]);
    sc.violation += std::max(0.0, s.oscillation_margin - detail::alternation_margin(excess));
    return sc;
  };
  auto objective = [&](const std::array<double, 4>& theta) {
    const Score sc = score(theta);
    return sc.deviation + 100.0 * sc.violation;
  };

  // Restarts from the Gaussian completion with shrinking steps.
  const FourthMomentVector gauss = gaussian_fourth_moments(cfg.init, cfg.params.hbar);
  std::array<double, 4> theta{gauss.x3p, gauss.x2p2, gauss.xp3, gauss.p4};
  double step = 10.0;
  for (int r = 0; r < s.restarts; ++r) {
    theta = detail::nelder_mead(objective, theta, step, s.iterations);
    step = std::max(step * 0.5, 1e-3);
  }

  CalibrationResult out;
  out.fourth = {cfg.fourth.x4, theta[0], theta[1], theta[2], theta[3]};
  const Score sc = score(theta);
  out.max_relative_deviation = sc.deviation;
  out.constraint_violation = sc.violation;
  const auto kh = h.evaluate(theta);
  const auto kf = f.evaluate(theta);
  for (std::size_t i = 0; i < 4; ++i) {
    out.table.harmonic[i] = kh[at[i]];
    out.table.free[i] = kf[at[i]];
  }
  std::vector<double> excess;
  for (std::size_t i = w_lo; i < kh.size(); ++i) excess.push_back(kh[i] - 3.0);
  out.sign_changes = detail::count_sign_changes(excess);
  out.kappa_at_settle = kh[i_settle];
  out.ordering_flip = kh[i60] > kf[i60] && kh[i80] < kf[i80];
  out.quantum_margin = quantum_positivity_margin({0.0, cfg.init, out.fourth}, cfg.params.hbar);
  return out;
}

}  // namespace qbo
