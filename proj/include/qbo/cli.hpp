#pragma once

// Command-line front end. `run_cli` is the whole program; tools/qbo_main.cpp
// only forwards argv and the standard streams.
//
// Exit codes: 0 success, 1 validation or runtime failure, 2 usage error.

#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <CLI11.hpp>

#include "qbo/closed_form.hpp"
#include "qbo/error.hpp"
#include "qbo/experiments.hpp"
#include "qbo/io/csv.hpp"
#include "qbo/io/svg_plot.hpp"
#include "qbo/moment_ode.hpp"
#include "qbo/stochastic.hpp"
#include "qbo/validation.hpp"

namespace qbo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Bad flag combination or value detected after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat key=value configuration. Lines starting with '#' are comments,
/// except `# config: key=value`, which is how output manifests record the
/// resolved configuration; an output file can therefore be passed back in.
inline std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("--config: cannot open '" + path + "'");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  bool manifest = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    line = line.substr(first);
    static const std::string marker = "# config: ";
    if (line.rfind(marker, 0) == 0) {
      line = line.substr(marker.size());
      manifest = true;
    } else if (line[0] == '#') {
      if (line.rfind("# command:", 0) == 0) manifest = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (manifest) break;  // CSV body after a manifest
      throw UsageError("--config: line " + std::to_string(lineno) + " of '" + path + "' is not key=value");
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    for (char& c : key)
      if (c == '_') c = '-';
    entries.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return entries;
}

/// Inserts config-file entries as `--key=value` after the subcommand name,
/// skipping keys already given on the command line (flags win).
inline std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path) return args;
  std::size_t sub = 1;
  while (sub < args.size() && args[sub].rfind("-", 0) == 0) ++sub;
  if (sub >= args.size()) return args;
  std::vector<std::string> extra;
  for (const auto& [key, value] : read_config(*path)) {
    if (key == "config") continue;
    bool given = false;
    for (std::size_t i = sub + 1; i < args.size(); ++i)
      if (args[i] == "--" + key || args[i].rfind("--" + key + "=", 0) == 0) given = true;
    if (!given) extra.push_back("--" + key + "=" + value);
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub) + 1, extra.begin(), extra.end());
  return args;
}

/// Thread cap from QBO_THREADS (positive integer); 0 means no cap.
inline unsigned thread_cap() {
  const char* env = std::getenv("QBO_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 4096)
    throw UsageError(std::string("QBO_THREADS must be a positive integer, got '") + env + "'");
  return static_cast<unsigned>(v);
}

namespace detail {

/// add_option with floating-point defaults recorded in round-trip form.
template <class T>
CLI::Option* opt(CLI::App* sub, const std::string& name, T& value, const std::string& desc) {
  CLI::Option* o = sub->add_option(name, value, desc);
  if constexpr (std::is_floating_point_v<T>) o->default_str(io::format_shortest(value));
  return o;
}

inline CLI::Validator positive() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        double v = 0.0;
        if (!CLI::detail::lexical_cast(s, v) || !(v > 0.0) || !std::isfinite(v))
          return "value " + s + " out of range; valid range is (0, inf)";
        return {};
      },
      "(0, inf)");
}

inline CLI::Validator non_negative() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        double v = 0.0;
        if (!CLI::detail::lexical_cast(s, v) || !(v >= 0.0) || !std::isfinite(v))
          return "value " + s + " out of range; valid range is [0, inf)";
        return {};
      },
      "[0, inf)");
}

inline CLI::Validator finite() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        double v = 0.0;
        if (!CLI::detail::lexical_cast(s, v) || !std::isfinite(v)) return "value " + s + " is not a finite number";
        return {};
      },
      "finite");
}

struct ParamFlags {
  double m, gamma, omega, kbt, hbar;
  OscillatorParams value() const { return {m, gamma, omega, kbt, hbar}; }
};

inline void add_params(CLI::App* sub, ParamFlags& p) {
  opt(sub, "--m", p.m, "mass")->check(positive());
  detail::opt(sub, "--gamma", p.gamma, "damping rate")->check(non_negative());
  detail::opt(sub, "--omega", p.omega, "angular frequency")->check(non_negative());
  detail::opt(sub, "--kbt", p.kbt, "bath temperature times k_B")->check(non_negative());
  detail::opt(sub, "--hbar", p.hbar, "reduced Planck constant")->check(positive());
}

struct InitFlags {
  double mean_x = 0.0, mean_p = 0.0, var_x = 0.0, var_p = 0.0, sigma = 0.0;
};

inline void add_init(CLI::App* sub, InitFlags& i, bool means) {
  if (means) {
    detail::opt(sub, "--init-meanx", i.mean_x, "initial <x>")->check(finite());
    detail::opt(sub, "--init-meanp", i.mean_p, "initial <p>")->check(finite());
  }
  detail::opt(sub, "--init-varx", i.var_x, "initial position variance")->check(non_negative());
  detail::opt(sub, "--init-varp", i.var_p, "initial momentum variance")->check(non_negative());
  detail::opt(sub, "--init-sigma", i.sigma, "initial <xp+px> - 2<x><p>")->check(finite());
}

/// "t0:t1:n" with n intervals, or a comma-separated list.
inline std::vector<double> parse_grid(const std::string& flag, const std::string& text) {
  std::vector<double> g;
  auto number = [&](const std::string& s) {
    double v = 0.0;
    if (!CLI::detail::lexical_cast(s, v) || !std::isfinite(v))
      throw UsageError(flag + ": '" + s + "' is not a number");
    return v;
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    if (parts.size() != 3) throw UsageError(flag + ": expected t0:t1:n, got '" + text + "'");
    const double t0 = number(parts[0]);
    const double t1 = number(parts[1]);
    const double n = number(parts[2]);
    if (!(t1 > t0) || n < 1 || n != std::floor(n) || n > 1e7)
      throw UsageError(flag + ": need t0 < t1 and 1 <= n <= 1e7 intervals, got '" + text + "'");
    return linear_grid(t0, t1, static_cast<std::size_t>(n));
  }
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) g.push_back(number(part));
  if (g.empty()) throw UsageError(flag + ": empty grid");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] < 0.0) throw UsageError(flag + ": times must be >= 0");
    if (i > 0 && !(g[i] > g[i - 1])) throw UsageError(flag + ": times must be strictly increasing");
  }
  return g;
}

inline std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

/// Every option of `sub` with its effective value, defaults included.
inline std::vector<std::pair<std::string, std::string>> resolved_config(const CLI::App* sub) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config" || name == "out" || name == "plot") continue;
    std::string value;
    if (opt->count() > 0) {
      value = opt->get_type_size() == 0 ? "true" : join(opt->results(), ",");
    } else {
      value = opt->get_default_str();
      if (value.empty() && opt->get_type_size() == 0) value = "false";
    }
    if (value.empty()) continue;
    out.emplace_back(name, value);
  }
  return out;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  using detail::ParamFlags;

  CLI::App app{"Moment dynamics of the quantum Brownian oscillator: closed-form variances, "
               "kurtosis runs, parameter sweeps, a Langevin ensemble and a validation suite."};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string(io::kToolVersion));

  std::string out_path, plot_path, config_path;
  auto add_output = [&](CLI::App* sub, bool plot) {
    detail::opt(sub, "--out", out_path, "write CSV here instead of stdout");
    if (plot) detail::opt(sub, "--plot", plot_path, "also write an SVG plot here");
    detail::opt(sub, "--config", config_path, "key=value file; command-line flags take precedence");
  };

  // variance
  auto* variance = app.add_subcommand("variance", "closed-form position variance");
  std::string var_model = "exact";
  ParamFlags var_p{1.0, 1.0, 1.0, 1.0, 1.0};
  detail::InitFlags var_init;
  std::optional<double> var_t;
  std::string var_grid;
  detail::opt(variance, "--model", var_model, "formula")
      ->check(CLI::IsMember({"exact", "classical", "decoherence", "free"}));
  detail::add_params(variance, var_p);
  detail::add_init(variance, var_init, false);
  auto* var_t_opt = detail::opt(variance, "--t", var_t, "evaluation time")->check(detail::non_negative());
  auto* var_grid_opt = detail::opt(variance, "--t-grid", var_grid, "t0:t1:n or a comma-separated list");
  var_t_opt->excludes(var_grid_opt);
  add_output(variance, false);

  // kurtosis
  auto* kurt = app.add_subcommand("kurtosis", "fourth-moment run and kurtosis series");
  const OscillatorParams kdef = kurtosis_params();
  ParamFlags kurt_p{kdef.m, kdef.gamma, kdef.omega, kdef.kbt, kdef.hbar};
  const QuadraticState kinit = kurtosis_initial_state();
  detail::InitFlags kurt_init{0.0, 0.0, kinit.var_x, kinit.var_p, kinit.sigma};
  const FourthMomentVector kfourth = kurtosis_initial_fourth();
  std::array<double, 5> kurt_fourth = kfourth.as_array();
  std::string kurt_model = "harmonic", kurt_method = "rk", kurt_grid = "0:200:400", kurt_fourth_mode = "calibrated";
  double kurt_rtol = 1e-10, kurt_atol = 1e-12;
  detail::opt(kurt, "--model", kurt_model, "free ignores omega")->check(CLI::IsMember({"free", "harmonic"}));
  detail::opt(kurt, "--method", kurt_method, "propagation method")->check(CLI::IsMember({"rk", "semianalytic"}));
  detail::add_params(kurt, kurt_p);
  detail::add_init(kurt, kurt_init, false);
  detail::opt(kurt, "--fourth", kurt_fourth_mode,
                   "initial fourth moments: calibrated defaults, or Gaussian completion of the second moments; "
                   "--init-x4 and friends override either")
      ->check(CLI::IsMember({"calibrated", "gaussian"}));
  static constexpr std::array<const char*, 5> fourth_names = {"x4", "x3p", "x2p2", "xp3", "p4"};
  std::array<CLI::Option*, 5> fourth_opts{};
  for (std::size_t i = 0; i < 5; ++i)
    fourth_opts[i] = detail::opt(kurt, std::string("--init-") + fourth_names[i], kurt_fourth[i],
                                      std::string("initial symmetrized <") + fourth_names[i] + ">")
                         ->check(detail::finite());
  detail::opt(kurt, "--t-grid", kurt_grid, "t0:t1:n or a comma-separated list starting at 0");
  detail::opt(kurt, "--rtol", kurt_rtol, "relative tolerance (rk)")->check(CLI::Range(1e-14, 1e-2));
  detail::opt(kurt, "--atol", kurt_atol, "absolute tolerance (rk)")->check(detail::positive());
  add_output(kurt, true);

  // figure3
  auto* fig3 = app.add_subcommand("figure3", "harmonic and free kurtosis over 0..200 with the default setup");
  std::string fig3_grid = "0:200:400";
  detail::opt(fig3, "--t-grid", fig3_grid, "t0:t1:n or a comma-separated list starting at 0");
  add_output(fig3, true);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "variance versus one parameter on a log grid");
  int sweep_figure = 0;
  std::string sweep_panel = "left", sweep_swept, sweep_curves = "quantum,classical";
  double sweep_lo = 1e-2, sweep_hi = 1e2, sweep_t = 10.0;
  std::size_t sweep_points = 200;
  ParamFlags sweep_p{1.0, 1.0, 1.0, 1.0, 1.0};
  const QuadraticState sinit = sweep_initial_state();
  detail::InitFlags sweep_init{0.0, 0.0, sinit.var_x, sinit.var_p, sinit.sigma};
  auto* fig_opt = detail::opt(sweep, "--figure", sweep_figure, "preset sweep: 1 or 2")->check(CLI::IsMember({1, 2}));
  detail::opt(sweep, "--panel", sweep_panel, "preset panel")->check(CLI::IsMember({"left", "middle", "right"}));
  std::vector<CLI::Option*> custom_opts;
  custom_opts.push_back(detail::opt(sweep, "--swept", sweep_swept, "parameter to sweep")
                            ->check(CLI::IsMember({"m", "gamma", "omega", "kbt", "hbar"})));
  custom_opts.push_back(detail::opt(sweep, "--lo", sweep_lo, "lower end of the sweep")->check(detail::positive()));
  custom_opts.push_back(detail::opt(sweep, "--hi", sweep_hi, "upper end of the sweep")->check(detail::positive()));
  custom_opts.push_back(detail::opt(sweep, "--points", sweep_points, "number of log-spaced points")
                            ->check(CLI::Range(std::size_t{2}, std::size_t{1000000})));
  custom_opts.push_back(detail::opt(sweep, "--t", sweep_t, "evaluation time")->check(detail::non_negative()));
  custom_opts.push_back(detail::opt(sweep, "--curves", sweep_curves, "comma list of quantum, classical, decoherence"));
  {
    detail::add_params(sweep, sweep_p);
    detail::add_init(sweep, sweep_init, false);
    for (const char* name : {"--m", "--gamma", "--omega", "--kbt", "--hbar", "--init-varx", "--init-varp",
                             "--init-sigma"})
      custom_opts.push_back(sweep->get_option(name));
  }
  for (CLI::Option* o : custom_opts) o->excludes(fig_opt);
  add_output(sweep, true);

  // table1
  auto* table = app.add_subcommand("table1", "kurtosis at t = 40, 60, 80, 100 next to the printed rows");
  add_output(table, false);

  // montecarlo
  auto* mc = app.add_subcommand("montecarlo", "Euler-Maruyama Langevin ensemble");
  ParamFlags mc_p{1.0, 0.5, 1.0, 1.0, 1.0};
  detail::InitFlags mc_init;
  std::uint64_t mc_seed = 1;
  long mc_n = 100'000;
  double mc_dt = 1e-3, mc_tend = 10.0;
  std::string mc_samples = "1,3,10";
  bool mc_large_dt = false;
  detail::add_params(mc, mc_p);
  detail::add_init(mc, mc_init, true);
  detail::opt(mc, "--seed", mc_seed, "64-bit seed");
  detail::opt(mc, "--n-traj", mc_n, "number of trajectories")->check(CLI::Range(1L, 1'000'000'000L));
  detail::opt(mc, "--dt", mc_dt, "time step")->check(detail::positive());
  detail::opt(mc, "--t-end", mc_tend, "final time")->check(detail::non_negative());
  detail::opt(mc, "--samples", mc_samples, "sample times: comma list or t0:t1:n");
  mc->add_flag("--allow-large-dt", mc_large_dt, "accept dt above 0.05 min(1/gamma, 1/omega) with a warning");
  add_output(mc, false);

  // validate
  auto* validate = app.add_subcommand("validate", "run the cross-method consistency suite");
  ValidationOptions vopt;
  detail::opt(validate, "--mc-trajectories", vopt.mc_trajectories, "ensemble size of the Langevin check")
      ->check(CLI::Range(100L, 100'000'000L));
  detail::opt(validate, "--seed", vopt.mc_seed, "seed of the Langevin check");

  // derive
  auto* derive = app.add_subcommand("derive", "print the derived moment equations");
  int derive_order = 4;
  detail::opt(derive, "--order", derive_order, "moment order")->check(CLI::IsMember({1, 2, 4}));

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "recompute the calibrated initial fourth moments");

  std::vector<std::string> args(argv, argv + argc);
  try {
    args = merge_config(std::move(args));
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  std::vector<const char*> cargs;
  for (const auto& a : args) cargs.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << io::kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  auto manifest_for = [&](const CLI::App* sub, std::vector<std::uint64_t> seeds = {}) {
    io::RunManifest m;
    m.command = sub->get_name();
    m.config = detail::resolved_config(sub);
    m.timestamp = io::utc_timestamp();
    m.seeds = std::move(seeds);
    return m;
  };
  auto emit = [&](const Dataset& d, const io::RunManifest& m) {
    if (out_path.empty()) {
      io::write_csv(out, d, m);
    } else {
      io::emit_csv(d, out_path, m);
    }
  };

  try {
    if (*variance) {
      OscillatorParams p = var_p.value();
      if (var_model == "free") p.omega = 0.0;
      validate_params(to_map(p));
      const QuadraticState init =
          make_quadratic_state(0.0, 0.0, var_init.var_x, var_init.var_p, var_init.sigma, StateMode::Quantum,
                               p.hbar, nullptr);
      if (var_model != "free" && !(p.omega > 0.0))
        throw UsageError("--omega: the " + var_model + " formula needs omega > 0; use --model free for omega = 0");
      if (var_model == "free" && !(p.gamma > 0.0)) throw UsageError("--gamma: the free formula needs gamma > 0");
      auto value = [&](double t) {
        if (var_model == "exact") return exact_variance(p, init, t);
        if (var_model == "classical") return classical_variance(p, t);
        if (var_model == "decoherence") return decoherence_variance(p, init, t);
        return free_particle_variance(p, init, t);
      };
      if (var_grid.empty()) {
        const double t = var_t.value_or(0.0);
        if (out_path.empty()) {
          out << io::format_shortest(value(t)) << '\n';
          return kExitOk;
        }
        Dataset d{"variance", {}, {"t", "var_x"}, {{t, value(t)}}};
        emit(d, manifest_for(variance));
        return kExitOk;
      }
      Dataset d{"variance", {}, {"t", "var_x"}, {}};
      for (double t : detail::parse_grid("--t-grid", var_grid)) d.rows.push_back({t, value(t)});
      emit(d, manifest_for(variance));
      return kExitOk;
    }

    if (*kurt) {
      KurtosisRunConfig cfg;
      cfg.params = kurt_p.value();
      validate_params(to_map(cfg.params));
      cfg.init = make_quadratic_state(0.0, 0.0, kurt_init.var_x, kurt_init.var_p, kurt_init.sigma,
                                      StateMode::Quantum, cfg.params.hbar, nullptr);
      std::array<double, 5> fourth = kurt_fourth_mode == "gaussian"
                                         ? gaussian_fourth_moments(cfg.init, cfg.params.hbar).as_array()
                                         : kurtosis_initial_fourth().as_array();
      for (std::size_t i = 0; i < 5; ++i)
        if (fourth_opts[i]->count() > 0) fourth[i] = kurt_fourth[i];
      cfg.fourth = FourthMomentVector::from_array(fourth);
      cfg.times = detail::parse_grid("--t-grid", kurt_grid);
      if (cfg.times.front() != 0.0) throw UsageError("--t-grid: the grid must start at 0");
      cfg.model = kurt_model == "free" ? KurtosisModel::Free : KurtosisModel::Harmonic;
      cfg.options.method = kurt_method == "rk" ? PropagationMethod::AdaptiveRK : PropagationMethod::Semianalytic;
      cfg.options.rel_tol = kurt_rtol;
      cfg.options.abs_tol = kurt_atol;
      const MomentSeries s = run_kurtosis(cfg);
      Dataset d;
      d.name = "kurtosis-" + kurt_model;
      d.columns = {"t", "kappa", "var_x", "x4", "x3p", "x2p2", "xp3", "p4"};
      for (std::size_t i = 0; i < fourth_names.size(); ++i)
        d.meta.emplace_back(std::string("init.") + fourth_names[i], io::format_value(fourth[i]));
      for (std::size_t i = 0; i < s.times.size(); ++i) {
        const auto& st = s.states[i];
        d.rows.push_back({s.times[i], s.kurtosis[i], st.quad.var_x, st.fourth.x4, st.fourth.x3p, st.fourth.x2p2,
                          st.fourth.xp3, st.fourth.p4});
      }
      io::RunManifest m = manifest_for(kurt);
      for (auto& [key, value] : m.config)
        for (std::size_t i = 0; i < fourth_names.size(); ++i)
          if (key == std::string("init-") + fourth_names[i]) value = io::format_shortest(fourth[i]);
      emit(d, m);
      if (!plot_path.empty()) {
        Dataset plot{d.name, {}, {"t", "kappa"}, {}};
        for (const auto& r : d.rows) plot.rows.push_back({r[0], r[1]});
        io::emit_plot(plot, plot_path, {io::Axes::Linear, "kurtosis (" + kurt_model + ")", 3.0});
      }
      return kExitOk;
    }

    if (*fig3) {
      KurtosisRunConfig cfg;
      cfg.times = detail::parse_grid("--t-grid", fig3_grid);
      if (cfg.times.front() != 0.0) throw UsageError("--t-grid: the grid must start at 0");
      const Dataset d = figure3_dataset(run_figure3(cfg));
      emit(d, manifest_for(fig3));
      if (!plot_path.empty()) io::emit_plot(d, plot_path, {io::Axes::Linear, "kurtosis", 3.0});
      return kExitOk;
    }

    if (*sweep) {
      SweepConfig cfg;
      if (fig_opt->count() > 0) {
        const Panel panel = sweep_panel == "left" ? Panel::Left : sweep_panel == "middle" ? Panel::Middle : Panel::Right;
        cfg = sweep_figure == 1 ? figure1_config(panel) : figure2_config(panel);
      } else {
        if (sweep_swept.empty()) throw UsageError("sweep: give --figure 1|2 or --swept <parameter>");
        cfg.panel_id = "custom";
        cfg.swept = sweep_swept;
        cfg.fixed = to_map(sweep_p.value());
        cfg.fixed.erase(sweep_swept);
        cfg.lo = sweep_lo;
        cfg.hi = sweep_hi;
        cfg.points = sweep_points;
        cfg.t = sweep_t;
        cfg.init = make_quadratic_state(0.0, 0.0, sweep_init.var_x, sweep_init.var_p, sweep_init.sigma,
                                        StateMode::Quantum, sweep_p.hbar, nullptr);
        std::stringstream ss(sweep_curves);
        std::string c;
        while (std::getline(ss, c, ',')) {
          if (c == "quantum") cfg.curves.push_back(Curve::ExactQuantum);
          else if (c == "classical") cfg.curves.push_back(Curve::Classical);
          else if (c == "decoherence") cfg.curves.push_back(Curve::DecoherenceLimit);
          else throw UsageError("--curves: unknown curve '" + c + "'; valid: quantum, classical, decoherence");
        }
        if (cfg.swept != "omega" && !(cfg.fixed["omega"] > 0.0))
          throw UsageError("--omega: the sweep formulas need omega > 0");
      }
      const Dataset d = run_sweep(cfg);
      io::RunManifest m = manifest_for(sweep);
      if (fig_opt->count() > 0)
        std::erase_if(m.config, [](const auto& kv) { return kv.first != "figure" && kv.first != "panel"; });
      emit(d, m);
      if (!plot_path.empty()) io::emit_plot(d, plot_path, {io::Axes::LogLog, cfg.panel_id, std::nullopt});
      return kExitOk;
    }

    if (*table) {
      const KurtosisRunConfig cfg;
      const Dataset d = table1_dataset(run_table1(cfg), cfg.fourth, cfg.initial_state(), cfg.params.hbar);
      if (out_path.empty()) {
        io::write_csv(out, d, manifest_for(table));
      } else {
        io::emit_csv(d, out_path, manifest_for(table));
        out << "t,kappa_free,kappa_harmonic,ref_free,ref_harmonic,ref_evidence\n";
        for (const auto& r : d.rows) {
          for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << io::format_shortest(r[i]);
          out << '\n';
        }
      }
      return kExitOk;
    }

    if (*mc) {
      const OscillatorParams p = mc_p.value();
      validate_params(to_map(p));
      EnsembleSpec spec;
      spec.n_traj = mc_n;
      spec.dt = mc_dt;
      spec.t_end = mc_tend;
      spec.seed = mc_seed;
      spec.allow_large_dt = mc_large_dt;
      spec.threads = thread_cap();
      spec.init = make_quadratic_state(mc_init.mean_x, mc_init.mean_p, mc_init.var_x, mc_init.var_p, mc_init.sigma,
                                       StateMode::Classical, p.hbar, nullptr);
      const auto samples = detail::parse_grid("--samples", mc_samples);
      const EnsembleResult r = simulate(p, spec, samples, &err);
      Dataset d;
      d.name = "montecarlo";
      d.columns = {"t",     "mean_x", "se_mean_x", "mean_p", "se_mean_p", "var_x",    "se_var_x",
                   "var_p", "se_var_p", "sigma",   "se_sigma", "x4",       "se_x4", "var_x_closed_form"};
      for (const auto& s : r.samples) {
        const double closed = closed_form_second_moments(p, spec.init, s.t).var_x;
        d.rows.push_back({s.t, s.mean_x, s.se_mean_x, s.mean_p, s.se_mean_p, s.var_x, s.se_var_x, s.var_p,
                          s.se_var_p, s.sigma, s.se_sigma, s.x4, s.se_x4, closed});
      }
      emit(d, manifest_for(mc, {mc_seed}));
      return kExitOk;
    }

    if (*validate) {
      vopt.threads = thread_cap();
      bool ok = true;
      for (const auto& c : run_validation(vopt)) {
        out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
        ok = ok && c.passed;
      }
      return ok ? kExitOk : kExitFailure;
    }

    if (*derive) {
      out << format_system(derive_symbolic(derive_order));
      return kExitOk;
    }

    if (*calibrate) {
      const CalibrationResult c = calibrate_fourth_moments();
      out << "x4=" << io::format_value(c.fourth.x4) << '\n'
          << "x3p=" << io::format_value(c.fourth.x3p) << '\n'
          << "x2p2=" << io::format_value(c.fourth.x2p2) << '\n'
          << "xp3=" << io::format_value(c.fourth.xp3) << '\n'
          << "p4=" << io::format_value(c.fourth.p4) << '\n'
          << "max_relative_deviation=" << io::format_value(c.max_relative_deviation) << '\n'
          << "constraint_violation=" << io::format_value(c.constraint_violation) << '\n'
          << "ordering_flip=" << (c.ordering_flip ? "true" : "false") << '\n'
          << "sign_changes=" << c.sign_changes << '\n'
          << "kappa_at_150=" << io::format_value(c.kappa_at_settle) << '\n'
          << "quantum_gram_min_eigenvalue=" << io::format_value(c.quantum_margin) << '\n';
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::NonPositiveMass:
      case ErrorCode::NegativeParameter:
      case ErrorCode::NonFinite:
      case ErrorCode::CovarianceBound:
      case ErrorCode::NonZeroMean:
      case ErrorCode::NegativeTime:
      case ErrorCode::ZeroFrequency:
      case ErrorCode::ZeroDamping:
      case ErrorCode::UnsupportedOrder:
      case ErrorCode::InvalidGrid:
      case ErrorCode::InvalidSpec:
        return kExitUsage;
      default:
        return kExitFailure;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace qbo::cli
