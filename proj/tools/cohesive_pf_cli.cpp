// cohesive-pf: runs one scenario and writes its report directory.
// Exit codes: 0 all targets met, 1 a target missed, 2 usage or runtime error.

#include <CLI11.hpp>

#include <cohesive_pf/config.hpp>
#include <cohesive_pf/experiments.hpp>
#include <cohesive_pf/io.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace cohesive_pf;

namespace {

struct Flags {
  std::string config;
  std::string variant;
  std::string preset;
  std::string out;
  std::optional<long long> seed;
  std::optional<Index> steps;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig load_config(Scenario scenario, const Flags& f) {
  std::optional<Preset> preset;
  if (!f.preset.empty()) preset = parse_preset(f.preset);
  RunConfig c = f.config.empty() ? default_config(scenario, preset.value_or(Preset::Full))
                                 : parse_config(read_file(f.config), scenario, preset);
  if (c.scenario != scenario)
    throw ConfigError("run.scenario", "config is for '" + to_string(c.scenario) + "', not '" + to_string(scenario) + "'");
  if (!f.variant.empty()) c.mesh.diag = parse_diagonal(f.variant);
  if (!f.out.empty()) c.out = f.out;
  if (f.seed) c.seed = *f.seed;
  if (f.steps) c.steps = *f.steps;
  validate_config(c);
  return c;
}

int print_checks(const std::vector<TargetCheck>& checks) {
  bool ok = true;
  for (const TargetCheck& c : checks) {
    std::printf("%s %s = %s", c.passed ? "PASS" : "FAIL", c.quantity.c_str(), format_number(c.value).c_str());
    if (!std::isnan(c.target)) std::printf(" target %s", format_number(c.target).c_str());
    std::printf(" [%s, %s]\n", format_number(c.lower).c_str(), format_number(c.upper).c_str());
    ok = ok && c.passed;
  }
  return ok ? 0 : 1;
}

/// Writes fields_XXXX.vtk every `stride` steps, at localization and at the last step.
/// The solver does not outlive the scenario call, so the last state is kept as arrays.
class Snapshots {
 public:
  Snapshots(fs::path dir, Index stride) : dir_(std::move(dir)), stride_(stride) {}

  StepHook hook() {
    return [this](const StepRecord& r, const StaggeredState& s, const StaggeredSolver& solver) {
      if (mesh_.num_elements() == 0) mesh_ = solver.mesh();
      last_ = snapshot_arrays(solver, s);
      last_step_ = r.step;
      if (r.localized || (stride_ > 0 && r.step % stride_ == 0)) {
        write(r.step);
        last_written_ = r.step;
      }
    };
  }

  void finish() {
    if (!last_.empty() && last_step_ != last_written_) write(last_step_);
  }

 private:
  void write(Index step) const {
    char name[32];
    std::snprintf(name, sizeof name, "fields_%04zu.vtk", static_cast<std::size_t>(step));
    write_vtk(dir_ / name, mesh_, last_);
  }

  fs::path dir_;
  Index stride_;
  Mesh mesh_;
  std::vector<VtkArray> last_;
  Index last_step_ = 0;
  Index last_written_ = static_cast<Index>(-1);
};

void write_common(const fs::path& dir, const RunConfig& c, const ExperimentReport& r) {
  auto cfg = open_output(dir / "config.cfg");
  cfg << serialize_config(c);
  write_trace_csv(dir / "trace.csv", r.trace);
  write_report_csv(dir / "report.csv", r);
  PlotSpec p{"Energy evolution", "step", "energy", {}, false};
  PlotSeries el{"elastic", {}, {}, "#1f77b4"}, di{"dissipation", {}, {}, "#2ca02c"}, fr{"fracture", {}, {}, "#d62728"},
      to{"total", {}, {}, "#000000"};
  for (const StepRecord& s : r.trace) {
    const double x = static_cast<double>(s.step);
    for (auto* ser : {&el, &di, &fr, &to}) ser->x.push_back(x);
    el.y.push_back(s.energy.elastic);
    di.y.push_back(s.energy.dissipation);
    fr.y.push_back(s.energy.fracture);
    to.y.push_back(s.energy.total);
  }
  p.series = {el, di, fr, to};
  if (!r.trace.empty()) write_svg_plot(dir / "plot_energy.svg", p);
}

int run_profile(const RunConfig& c) {
  const fs::path dir = c.out;
  CsvTable t({"j", "phi_analytic", "z0"});
  PlotSeries s{"phi", {}, {}, "#1f77b4"};
  for (Index k = 0; k < c.samples; ++k) {
    const double j = c.j_max * static_cast<double>(k) / static_cast<double>(c.samples - 1);
    const double phi = phi_analytic(j, c.material);
    t.row() << j << phi << optimal_profile(j, c.material).z0;
    s.x.push_back(j);
    s.y.push_back(phi);
  }
  t.write(dir / "phi.csv");
  write_svg_plot(dir / "plot_phi.svg", {"Cohesive law", "jump j", "phi(j)", {s}, false});
  std::printf("wrote %s (%lld samples, phi(j_max) = %s)\n", (dir / "phi.csv").string().c_str(),
              static_cast<long long>(c.samples), format_number(phi_analytic(c.j_max, c.material)).c_str());
  return 0;
}

int run_bar(const RunConfig& c) {
  const fs::path dir = c.out;
  Snapshots snaps(dir, c.stride);
  BarResult b = bar_1d(c, snaps.hook());
  snaps.finish();
  write_common(dir, c, b.report);
  CsvTable t({"j", "surface_energy", "phi_analytic", "relative_error"});
  PlotSeries num{"numerical", {}, {}, "#d62728", true}, ana{"analytic", {}, {}, "#000000"};
  for (const BarSample& s : b.samples) {
    t.row() << s.jump << s.surface_energy << s.phi << s.relative_error;
    num.x.push_back(s.jump);
    num.y.push_back(s.surface_energy);
  }
  for (Index k = 0; k <= 200; ++k) {
    const double j = c.u_max * static_cast<double>(k) / 200.0;
    ana.x.push_back(j);
    ana.y.push_back(phi_analytic(j, c.material));
  }
  t.write(dir / "bar.csv");
  write_svg_plot(dir / "plot_phi.svg", {"Surface energy vs jump", "jump j", "energy", {ana, num}, false});
  return print_checks(b.report.checks);
}

int run_recovery(const RunConfig& c) {
  const fs::path dir = c.out;
  RecoveryResult r = recovery_check(c);
  CsvTable t({"j", "h", "eps", "energy", "phi_analytic", "relative_gap"});
  std::vector<PlotSeries> series;
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  for (const RecoveryRow& row : r.rows) {
    t.row() << row.jump << row.h << row.eps << row.energy << row.phi << row.relative_gap;
    if (series.empty() || series.back().label != "j=" + format_number(row.jump))
      series.push_back({"j=" + format_number(row.jump), {}, {}, colors[series.size() % 5], true});
    series.back().x.push_back(std::log10(row.h));
    series.back().y.push_back(std::abs(row.relative_gap));
  }
  t.write(dir / "recovery.csv");
  write_report_csv(dir / "report.csv", r.report);
  write_svg_plot(dir / "plot_recovery.svg", {"Recovery sequence gap", "log10 h", "|F_h - phi| / phi", series, false});
  return print_checks(r.report.checks);
}

int run_2d(const RunConfig& c) {
  const fs::path dir = c.out;
  Snapshots snaps(dir, c.stride);
  ExperimentReport r = c.scenario == Scenario::Square2D ? square_test(c, snaps.hook()) : lshape_test(c, snaps.hook());
  snaps.finish();
  write_common(dir, c, r);
  if (r.localization_step)
    std::printf("localization at step %zu, load (%s, %s), fracture energy %s\n",
                static_cast<std::size_t>(*r.localization_step), format_number(r.localization_load_x).c_str(),
                format_number(r.localization_load_y).c_str(), format_number(r.fracture_energy_at_localization).c_str());
  else
    std::printf("no localization within %zu steps\n", r.trace.size());
  return print_checks(r.checks);
}

int run_domain(const RunConfig& c) {
  const fs::path dir = c.out;
  const auto boundary = elastic_domain_trace(c.material, c.samples);
  CsvTable t({"p", "t"});
  PlotSeries b{"strength surface", {}, {}, "#000000"};
  for (const auto& p : boundary) {
    t.row() << p.p << p.t;
    b.x.push_back(p.p);
    b.y.push_back(p.t);
  }
  t.write(dir / "domain.csv");
  const DomainRayPoint q = domain_ray_point(1.0, 0.5, c.material);
  const DomainRayPoint p = domain_ray_point(0.5, -0.45, c.material);
  CsvTable rays({"point", "ux", "uy", "angle_deg", "p", "t"});
  rays.row() << "Q" << 1.0 << 0.5 << q.angle_deg << q.point.p << q.point.t;
  rays.row() << "P" << 0.5 << -0.45 << p.angle_deg << p.point.p << p.point.t;
  rays.write(dir / "points.csv");
  PlotSeries pts{"P, Q", {p.point.p, q.point.p}, {p.point.t, q.point.t}, "#d62728", true};
  PlotSeries ray{"ray to Q", {0.0, q.point.p}, {0.0, q.point.t}, "#1f77b4", false, true};
  write_svg_plot(dir / "plot_domain.svg", {"Elastic domain", "p", "t", {b, ray, pts}, true});
  std::vector<TargetCheck> checks;
  checks.push_back(range_check("domain.Q_angle_deg", q.angle_deg, 22.0, 24.0, 23.0));
  checks.push_back(range_check("domain.first_point_p", boundary.front().p, c.material.p_c, c.material.p_c, c.material.p_c));
  return print_checks(checks);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-field cohesive fracture scenarios"};
  app.require_subcommand(1);
  Flags flags;
  std::vector<std::pair<CLI::App*, Scenario>> subs;
  for (const auto& [scenario, name] : scenario_names()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " scenario");
    sub->add_option("--config", flags.config, "flat section.key = value file");
    sub->add_option("--mesh-variant", flags.variant, "diagonal variant A or B")->check(CLI::IsMember({"A", "B", "a", "b"}));
    sub->add_option("--preset", flags.preset, "full or reduced")->check(CLI::IsMember({"full", "reduced"}));
    sub->add_option("--out", flags.out, "report directory");
    sub->add_option("--seed", flags.seed, "reserved");
    sub->add_option("--steps", flags.steps, "number of load steps")->check(CLI::PositiveNumber);
    subs.emplace_back(sub, scenario);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }
  try {
    for (const auto& [sub, scenario] : subs) {
      if (!sub->parsed()) continue;
      const RunConfig c = load_config(scenario, flags);
      switch (scenario) {
        case Scenario::Profile1D: return run_profile(c);
        case Scenario::Bar1D: return run_bar(c);
        case Scenario::RecoveryCheck: return run_recovery(c);
        case Scenario::Square2D:
        case Scenario::LShape2D: return run_2d(c);
        case Scenario::DomainTrace: return run_domain(c);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
