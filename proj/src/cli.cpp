#include "evodyn/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "evodyn/analysis.hpp"
#include "evodyn/errors.hpp"
#include "evodyn/sampling.hpp"

#ifndef EVODYN_BUNDLED_SCENARIO_DIR
#define EVODYN_BUNDLED_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;

namespace evodyn {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string vec(const Vector& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += num(v(i));
  }
  return out + "]";
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void write_text(const std::string& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

void apply_output_dir(ScenarioConfig& cfg, const std::string& dir) {
  if (dir.empty()) return;
  const fs::path d(dir);
  cfg.output.csv_dir = (d / "csv").string();
  cfg.output.svg_path = (d / "trajectories.svg").string();
  cfg.output.report_path = (d / "report.txt").string();
  cfg.output.certify_path = (d / "certify.txt").string();
}

template <typename Body>
int guarded(std::ostream& err, Body body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const IntegratorFailure& e) {
    err << "integrator failure: " << e.what() << "\n";
    return kExitIntegratorFailure;
  } catch (const DriftExceeded& e) {
    err << "integrator failure: " << e.what() << "\n";
    return kExitIntegratorFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

NashSet stationary_equilibria(const ScenarioConfig& cfg, std::ostream& err) {
  try {
    return nash_equilibria_affine(cfg.game_A, cfg.game_b);
  } catch (const TooManyStrategies& e) {
    err << "warning: " << e.what() << "; convergence distances are unavailable\n";
    return {};
  }
}

std::string ccw_verdict(double slope, double threshold, bool by_construction) {
  if (slope < -threshold) return "fail";
  return by_construction ? "certified-by-construction" : "inconclusive";
}

}  // namespace

std::string scenario_dir() {
  if (const char* env = std::getenv("EVODYN_SCENARIO_DIR"); env && *env) return env;
  return EVODYN_BUNDLED_SCENARIO_DIR;
}

std::string resolve_config(const std::string& arg) {
  if (fs::is_regular_file(arg)) return arg;
  const fs::path bundled = fs::path(scenario_dir()) / (arg + ".cfg");
  if (fs::is_regular_file(bundled)) return bundled.string();
  throw ConfigError("no config file or bundled scenario named '" + arg + "'");
}

std::pair<double, double> ternary_coordinates(const Vector& x) {
  if (x.size() != 3) throw InvalidParameter("ternary coordinates need exactly three strategies");
  return {x(1) + 0.5 * x(2), 0.5 * std::sqrt(3.0) * x(2)};
}

void write_ternary_svg(const std::vector<TernaryPath>& paths, const std::vector<std::string>& legend,
                       std::ostream& out) {
  static const char* kColours[] = {"#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#e377c2"};
  constexpr double kMargin = 40.0;
  constexpr double kSide = 520.0;
  const double h = 0.5 * std::sqrt(3.0);
  const double legend_height = 18.0 * static_cast<double>(legend.size());
  const double width = kSide + 2 * kMargin;
  const double height = kSide * h + 2 * kMargin + legend_height;
  auto px = [&](double u, double v) {
    return std::make_pair(kMargin + kSide * u, kMargin + kSide * (h - v));
  };
  auto colour = [&](std::size_t g) { return kColours[g % (sizeof kColours / sizeof *kColours)]; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width) << "\" height=\"" << fixed(height)
      << "\" viewBox=\"0 0 " << fixed(width) << " " << fixed(height) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const auto [ax, ay] = px(0.0, 0.0);
  const auto [bx, by] = px(1.0, 0.0);
  const auto [cx, cy] = px(0.5, h);
  out << "<polygon points=\"" << fixed(ax) << "," << fixed(ay) << " " << fixed(bx) << "," << fixed(by) << " "
      << fixed(cx) << "," << fixed(cy) << "\" fill=\"none\" stroke=\"#555555\" stroke-width=\"1\"/>\n";
  out << "<text x=\"" << fixed(ax - 14) << "\" y=\"" << fixed(ay + 14) << "\" font-size=\"14\">1</text>\n";
  out << "<text x=\"" << fixed(bx + 6) << "\" y=\"" << fixed(by + 14) << "\" font-size=\"14\">2</text>\n";
  out << "<text x=\"" << fixed(cx - 4) << "\" y=\"" << fixed(cy - 8) << "\" font-size=\"14\">3</text>\n";

  for (const auto& path : paths) {
    if (path.points.empty()) continue;
    const std::size_t stride = std::max<std::size_t>(1, path.points.size() / 1500);
    out << "<polyline fill=\"none\" stroke=\"" << colour(path.group) << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < path.points.size(); i += stride) {
      const auto [u, v] = ternary_coordinates(path.points[i]);
      const auto [x, y] = px(u, v);
      out << (i ? " " : "") << fixed(x) << "," << fixed(y);
    }
    const auto [ue, ve] = ternary_coordinates(path.points.back());
    const auto [xe, ye] = px(ue, ve);
    out << " " << fixed(xe) << "," << fixed(ye) << "\"><title>" << path.label << "</title></polyline>\n";
  }
  for (const auto& path : paths) {
    if (path.points.empty()) continue;
    const auto [u0, v0] = ternary_coordinates(path.points.front());
    const auto [x0, y0] = px(u0, v0);
    out << "<rect x=\"" << fixed(x0 - 4) << "\" y=\"" << fixed(y0 - 4)
        << "\" width=\"8.000\" height=\"8.000\" fill=\"red\"/>\n";
    const auto [u1, v1] = ternary_coordinates(path.points.back());
    const auto [x1, y1] = px(u1, v1);
    out << "<circle cx=\"" << fixed(x1) << "\" cy=\"" << fixed(y1) << "\" r=\"4.000\" fill=\"black\"/>\n";
  }
  for (std::size_t g = 0; g < legend.size(); ++g) {
    const double y = kMargin + kSide * h + 24.0 + 18.0 * static_cast<double>(g);
    out << "<line x1=\"" << fixed(kMargin) << "\" y1=\"" << fixed(y - 4) << "\" x2=\"" << fixed(kMargin + 24)
        << "\" y2=\"" << fixed(y - 4) << "\" stroke=\"" << colour(g) << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << fixed(kMargin + 30) << "\" y=\"" << fixed(y) << "\" font-size=\"12\">" << legend[g]
        << "</text>\n";
  }
  out << "</svg>\n";
}

std::string report_line(const std::string& property, const std::string& verdict, const std::string& witness) {
  std::string line = property + ": " + verdict;
  if (!witness.empty()) line += " " + witness;
  return line;
}

int cmd_simulate(const std::string& config, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ScenarioConfig cfg = load_scenario(resolve_config(config));
    apply_output_dir(cfg, opts.output_dir);
    const PayoffMechanism mech = build_mechanism(cfg);
    const std::vector<RuleSpec> specs = build_rules(cfg, opts.allow_pure_imitation);
    const std::vector<PopulationState> starts = build_initial_states(cfg);
    const NashSet ne = stationary_equilibria(cfg, err);
    const bool by_construction = ccw_by_construction(mech);
    const AnalysisConfig& ac = cfg.analysis;

    const auto runs = batch_simulate(specs, mech, starts, cfg.integrator);

    std::ostringstream report;
    report << "# simulate " << cfg.name << ": " << specs.size() << " rule(s) x " << starts.size()
           << " initial condition(s)\n";
    bool failed = false;
    std::vector<TernaryPath> paths;
    for (const auto& run : runs) {
      const std::string tag = cfg.rules[run.rule_index].name + "/" + cfg.initial[run.initial_index].first;
      if (!run.ok()) {
        failed = true;
        report << report_line("run[" + tag + "]", "fail", "error=\"" + run.error + "\"") << "\n";
        continue;
      }
      const TrajectoryRecord& rec = *run.record;

      const ConvergenceVerdict cv = convergence_verdict(rec, ne, ac.speed_tol, ac.dist_tol, ac.correlation_tol);
      report << report_line("convergence[" + tag + "]", cv.converged ? "pass" : "fail",
                            std::string(cv.converged ? "converged" : "not-converged") +
                                " t_final=" + num(rec.times.back()) + " final_speed=" + num(cv.final_speed) +
                                " final_ne_distance=" + num(cv.final_ne_distance) +
                                " correlation_tail=" + num(cv.correlation_tail) +
                                " x_final=" + vec(rec.states.back().vec()))
             << "\n";

      const double gap =
          (rec.payoffs.back().vec() - mech.base().evaluate(rec.states.back().vec())).lpNorm<Eigen::Infinity>();
      report << report_line("stationary_consistency[" + tag + "]", gap <= ac.dist_tol ? "pass" : "fail",
                            "payoff_gap=" + num(gap))
             << "\n";

      const double slope = drift_slope(rec);
      std::string ccw_witness = "drift_slope=" + num(slope) + " running_min=" + num(rec.ccw_ledger.running_min);
      if (!std::isnan(rec.ccw_ledger.bound_estimate)) ccw_witness += " envelope=" + num(rec.ccw_ledger.envelope());
      report << report_line("ccw[" + tag + "]", ccw_verdict(slope, ac.drift_threshold, by_construction),
                            ccw_witness)
             << "\n";

      const BarbalatDiagnostic bd = barbalat_diagnostic(rec);
      const bool tail_ok = bd.correlation_tail_max <= ac.correlation_tol;
      std::string bar_verdict;
      std::string bar_witness = "correlation_integral=" + num(bd.integral_of_correlation) +
                                " correlation_tail_max=" + num(bd.correlation_tail_max);
      if (mech.base().has_potential()) {
        const double bound = 2.0 * mech.payoff_bound() + rec.ccw_ledger.envelope();
        bar_verdict = tail_ok && bd.integral_of_correlation <= bound ? "pass" : "fail";
        bar_witness += " bound=" + num(bound);
      } else {
        bar_verdict = tail_ok ? "inconclusive" : "fail";
      }
      report << report_line("barbalat[" + tag + "]", bar_verdict, bar_witness) << "\n";

      if (!cfg.output.csv_dir.empty()) {
        const fs::path csv = fs::path(cfg.output.csv_dir) / (cfg.rules[run.rule_index].name + "_" +
                                                             cfg.initial[run.initial_index].first + ".csv");
        fs::create_directories(csv.parent_path());
        write_trajectory_csv(rec, csv.string());
      }
      if (cfg.n == 3) {
        TernaryPath path{tag, run.rule_index, {}};
        for (const auto& s : rec.states) path.points.push_back(s.vec());
        paths.push_back(std::move(path));
      }
    }

    if (!cfg.output.svg_path.empty()) {
      if (cfg.n == 3) {
        std::vector<std::string> legend;
        for (const auto& r : cfg.rules) legend.push_back(r.name);
        std::ostringstream svg;
        write_ternary_svg(paths, legend, svg);
        write_text(cfg.output.svg_path, svg.str());
      } else {
        err << "warning: ternary plot needs three strategies; skipping " << cfg.output.svg_path << "\n";
      }
    }
    if (!cfg.output.report_path.empty()) write_text(cfg.output.report_path, report.str());
    out << report.str();
    return failed ? kExitIntegratorFailure : kExitOk;
  });
}

int cmd_certify(const std::string& config, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ScenarioConfig cfg = load_scenario(resolve_config(config));
    apply_output_dir(cfg, opts.output_dir);
    // Certification reports on filters outside the certified class instead of
    // refusing them.
    const PayoffMechanism mech = build_mechanism(cfg, false);
    const std::vector<RuleSpec> specs = build_rules(cfg, opts.allow_pure_imitation);
    const std::vector<PopulationState> starts = build_initial_states(cfg);
    const AnalysisConfig& ac = cfg.analysis;

    std::ostringstream report;
    report << "# certify " << cfg.name << "\n";

    if (mech.is_dynamic()) {
      const LtiFilter& f = *mech.filter();
      const double top = f.max_eigenvalue_kA();
      report << report_line("filter_kA_nsd", top <= 1e-10 ? "pass" : "fail", "max_eigenvalue_kA=" + num(top)) << "\n";
      const auto grid = default_omega_grid(f.lambda);
      const NiReport ni = ni_frequency_test(f, grid, 1e-10);
      const double min_eig = *std::min_element(ni.min_eigenvalues.begin(), ni.min_eigenvalues.end());
      std::string witness = "grid=" + std::to_string(grid.size()) + " omega_range=[" + num(grid.front()) + "," +
                            num(grid.back()) + "] min_eigenvalue=" + num(min_eig) +
                            " closed_form_error=" + num(ni.max_closed_form_error);
      if (ni.witness_omega) witness += " omega_witness=" + num(*ni.witness_omega);
      const bool ok = ni.passed && ni.max_closed_form_error <= 1e-9;
      report << report_line("ni_frequency", ok ? "pass" : "fail", witness) << "\n";
    }

    const MemorylessGame& game = mech.base();
    report << report_line("potential_game", game.has_potential() ? "pass" : "fail",
                          "tangent_asymmetry=" + num(tangent_asymmetry(cfg.game_A)))
           << "\n";
    if (game.has_potential()) {
      // Piecewise-linear path through random states; trapezoid quadrature is
      // exact for affine payoffs, so any gap is a real defect.
      Rng rng(ac.seed);
      std::vector<PopulationState> path;
      Vector from = random_simplex_point(rng, cfg.n);
      for (int leg = 0; leg < 4; ++leg) {
        const Vector to = random_simplex_point(rng, cfg.n);
        for (int s = 0; s < 50; ++s) path.push_back(project_to_simplex(from + (to - from) * (s / 50.0)));
        from = to;
      }
      path.push_back(project_to_simplex(from));
      const double lhs = game.potential(path.back()) - game.potential(path.front());
      const double gap = std::abs(lhs - line_integral(game, path));
      report << report_line("potential_identity", verify_potential_identity(game, path, 1e-9) ? "pass" : "fail",
                            "path_samples=" + std::to_string(path.size()) + " error=" + num(gap))
             << "\n";
    }

    const double horizon = ac.ccw_horizon > 0.0 ? ac.ccw_horizon : cfg.integrator.t_max;
    for (std::size_t r = 0; r < specs.size(); ++r) {
      const std::string& name = cfg.rules[r].name;
      const CcwCertificate cert = certify_ccw(mech, specs[r], starts, horizon, ac.drift_threshold, cfg.integrator);
      std::string witness = "drift_slope=" + num(cert.search.drift_rate) + " horizon=" + num(horizon) +
                            " starts=" + std::to_string(starts.size());
      if (cert.search.witness) witness += " start=" + cfg.initial[cert.search.start_index].first;
      report << report_line("ccw[" + name + "]", to_string(cert.verdict), witness) << "\n";

      const auto pc = sample_positive_correlation(specs[r], cfg.n, ac.samples, ac.seed, ac.zero_tol);
      std::string pc_witness = "zero_tol=" + num(ac.zero_tol) + " samples=" + std::to_string(pc.samples) + " violations=" +
                               std::to_string(pc.violations) + " min_correlation=" + num(pc.min_correlation);
      if (pc.witness) {
        pc_witness += " x=" + vec(pc.witness->x) + " p=" + vec(pc.witness->p) +
                      " correlation=" + num(pc.witness->correlation) + " field_norm=" + num(pc.witness->field_norm);
      }
      report << report_line("positive_correlation[" + name + "]", pc.passed() ? "pass" : "fail", pc_witness) << "\n";

      const auto ns = sample_nash_stationarity(specs[r], cfg.n, ac.samples, ac.seed, ac.zero_tol);
      std::string ns_witness = "samples=" + std::to_string(ns.samples) + " violations=" + std::to_string(ns.violations);
      if (ns.witness) {
        ns_witness += " x=" + vec(ns.witness->x) + " p=" + vec(ns.witness->p) +
                      " correlation=" + num(ns.witness->correlation) +
                      " best_response=" + (ns.witness->best_response ? "yes" : "no");
      }
      report << report_line("nash_stationarity[" + name + "]", ns.passed() ? "pass" : "fail", ns_witness) << "\n";
    }

    if (!cfg.output.certify_path.empty()) write_text(cfg.output.certify_path, report.str());
    out << report.str();
    return kExitOk;
  });
}

int cmd_list_scenarios(bool verbose, std::ostream& out, std::ostream& err) {
  const fs::path dir = scenario_dir();
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    err << "scenario directory " << dir.string() << " does not exist\n";
    return kExitFailure;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".cfg") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    err << "no scenarios (*.cfg) found in " << dir.string() << "\n";
    return kExitFailure;
  }
  for (const auto& file : files) {
    ScenarioConfig cfg;
    try {
      cfg = load_scenario(file.string());
    } catch (const Error& e) {
      err << "skipping " << file.filename().string() << ": " << e.what() << "\n";
      continue;
    }
    out << file.stem().string() << "  " << cfg.description << "\n";
    if (!verbose) continue;
    out << "    n=" << cfg.n << " game=affine";
    try {
      out << " potential=" << (build_game(cfg).has_potential() ? "yes" : "no");
    } catch (const Error&) {
      out << " potential=?";
    }
    if (cfg.filter) out << " filter=lambda:" << num(cfg.filter->lambda) << ",k:" << num(cfg.filter->k);
    out << " rules=";
    for (std::size_t i = 0; i < cfg.rules.size(); ++i) out << (i ? "," : "") << cfg.rules[i].name;
    out << " initial=";
    for (std::size_t i = 0; i < cfg.initial.size(); ++i) out << (i ? "," : "") << cfg.initial[i].first;
    out << " method=" << (cfg.integrator.method == IntegratorMethod::Rk4Fixed ? "rk4" : "rk45")
        << " dt=" << num(cfg.integrator.dt) << " t_max=" << num(cfg.integrator.t_max) << "\n";
  }
  return kExitOk;
}

}  // namespace evodyn
