#include <cohesive_pf/config.hpp>
#include <cohesive_pf/io.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace cohesive_pf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string key_of_error(const std::string& text, Scenario s = Scenario::Square2D) {
  try {
    parse_config(text, s);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(COHESIVE_PF_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cohesive_pf_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Config, SquareDefaults) {
  const RunConfig c = parse_config("", Scenario::Square2D);
  EXPECT_EQ(c.material.E0, 1e3);
  EXPECT_EQ(c.material.nu, 0.3);
  EXPECT_EQ(c.material.G_c, 0.2);
  EXPECT_EQ(c.material.eps_h, 0.025);
  EXPECT_EQ(c.material.p_c, 10.0);
  EXPECT_EQ(c.material.tau_c, 10.0);
  EXPECT_EQ(c.mesh.h, 0.005);
  EXPECT_EQ(c.steps, 1000u);
  EXPECT_EQ(c.material.convention, TensorConvention::Full3D);
  EXPECT_NEAR(c.material.mu, 1e3 / 2.6, 1e-12);
  EXPECT_NEAR(c.material.kappa, 1e3 / 1.2, 1e-10);
}

TEST(Config, BarDefaults) {
  const RunConfig c = parse_config("run.scenario = bar-1d\n");
  EXPECT_EQ(c.scenario, Scenario::Bar1D);
  EXPECT_EQ(c.material.E0, 1e4);
  EXPECT_EQ(c.material.G_c, 1e-3);
  EXPECT_EQ(c.material.sigma_c, 5.0);
  EXPECT_EQ(c.material.eps_h, 0.4);
  EXPECT_EQ(c.steps, 50u);
  EXPECT_EQ(c.u_max, 5e-3);
  ASSERT_TRUE(c.mesh.refinement);
  EXPECT_NEAR(*c.mesh.refinement, 0.04, 1e-15);
}

TEST(Config, ReducedPreset) {
  const RunConfig c = parse_config("run.preset = reduced\n", Scenario::Square2D);
  EXPECT_EQ(c.preset, Preset::Reduced);
  EXPECT_EQ(c.mesh.h, 0.01);
  EXPECT_EQ(c.material.eps_h, 0.05);
  EXPECT_EQ(c.steps, 250u);
}

TEST(Config, Overrides) {
  const RunConfig c = parse_config(
      "# comment line\n"
      "run.scenario = square-2d\n"
      "mesh.variant = B   # trailing comment\n"
      "mesh.h = 0.01\n"
      "material.eps_h = 0.05\n"
      "material.convention = 2d\n"
      "load.ux = 1\n"
      "load.uy = 0.5\n"
      "solver.localization_measure = damage\n"
      "solver.localization_threshold = 0.9\n"
      "recovery.jumps = 1e-3, 2e-3\n");
  EXPECT_EQ(c.mesh.diag, Diagonal::B);
  EXPECT_EQ(c.material.h, 0.01);  // follows mesh.h
  EXPECT_EQ(c.material.convention, TensorConvention::Plane2D);
  EXPECT_NEAR(c.material.kappa, 1e3 / (2.0 * 1.3 * 0.4), 1e-9);
  EXPECT_EQ(c.load_x, 1.0);
  EXPECT_EQ(c.localization_measure, LocalizationMeasure::MaxDamage);
  EXPECT_EQ(c.recovery_jumps, (std::vector<double>{1e-3, 2e-3}));
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_EQ(key_of_error("material.eps_h = -1\n"), "material.eps_h");
  EXPECT_EQ(key_of_error("material.E0 = abc\n"), "material.E0");
  EXPECT_EQ(key_of_error("material.nu = 0.5\n"), "material.nu");
  EXPECT_EQ(key_of_error("material.bogus = 1\n"), "material.bogus");
  EXPECT_EQ(key_of_error("mesh.variant = C\n"), "mesh.variant");
  EXPECT_EQ(key_of_error("load.steps = -3\n"), "load.steps");
  EXPECT_EQ(key_of_error("solver.localization_measure = damage\n"), "solver.localization_threshold");
  EXPECT_EQ(key_of_error("material.eps_h = 0.006\n"), "material.eps_h");
  EXPECT_EQ(key_of_error("run.scenario = nope\n"), "run.scenario");
  EXPECT_THROW(parse_config(""), ConfigError);  // no scenario at all
  EXPECT_THROW(parse_config("just text\n", Scenario::Square2D), ConfigError);
}

namespace {

RunConfig shipped(const std::string& name) {
  std::ifstream in(std::filesystem::path(COHESIVE_PF_CONFIG_DIR) / name);
  EXPECT_TRUE(in.good()) << name;
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c = parse_config(ss.str());
  validate_config(c);
  return c;
}

}  // namespace

TEST(Config, ShippedFilesMatchDefaults) {
  auto same_except_out = [](RunConfig a, const RunConfig& b) {
    a.out = b.out;
    return a == b;
  };
  EXPECT_TRUE(same_except_out(shipped("bar_1d.cfg"), default_config(Scenario::Bar1D)));
  EXPECT_TRUE(same_except_out(shipped("recovery_check.cfg"), default_config(Scenario::RecoveryCheck)));
  EXPECT_TRUE(same_except_out(shipped("square_shear.cfg"), default_config(Scenario::Square2D)));
  EXPECT_TRUE(same_except_out(shipped("square_shear_reduced.cfg"), default_config(Scenario::Square2D, Preset::Reduced)));
  EXPECT_TRUE(same_except_out(shipped("lshape.cfg"), default_config(Scenario::LShape2D)));
  EXPECT_EQ(shipped("lshape_fine.cfg").steps, 60u);
  const RunConfig obl = shipped("square_oblique.cfg");
  EXPECT_EQ(obl.load_x, 1.0);
  EXPECT_EQ(obl.load_y, 0.5);
  EXPECT_EQ(shipped("profile_1d.cfg").scenario, Scenario::Profile1D);
  EXPECT_EQ(shipped("domain_trace.cfg").samples, 361u);
}

TEST(Config, RoundTrip) {
  for (const auto& [scenario, name] : scenario_names())
    for (Preset preset : {Preset::Full, Preset::Reduced}) {
      const RunConfig c = default_config(scenario, preset);
      const RunConfig back = parse_config(serialize_config(c));
      EXPECT_TRUE(back == c) << name;
      EXPECT_EQ(serialize_config(back), serialize_config(c));
    }
  RunConfig c = default_config(Scenario::LShape2D);
  c.material.E0 = 1234.56789012345678;
  c.material.nu = 0.1 + 0.2;
  c.material.set_moduli_from_young();
  c.mesh.diag = Diagonal::B;
  c.recovery_jumps = {1.0 / 3.0, 2e-7};
  c.steps_after_localization = -1;
  c.localization_measure = LocalizationMeasure::MaxDamage;
  c.localization_threshold = 0.9;
  c.out = "some/dir";
  c.stride = 7;
  const RunConfig back = parse_config(serialize_config(c));
  EXPECT_TRUE(back == c);
  EXPECT_EQ(back.material.E0, c.material.E0);
  EXPECT_EQ(back.recovery_jumps, c.recovery_jumps);
}

TEST(Io, NumberFormat) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_number(1e-20), "1e-20");
  EXPECT_EQ(format_number(-2.5), "-2.5");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(std::stod(format_number(9.6154e-4)), 9.6154e-4);
}

TEST(Io, CsvTable) {
  CsvTable t({"a", "b"});
  t.row() << 1.0 << "x";
  t.row() << 0.25 << 3.0;
  std::ostringstream out;
  t.write(out);
  EXPECT_EQ(out.str(), "a,b\n1,x\n0.25,3\n");
  CsvTable bad({"a", "b"});
  bad.row() << 1.0;
  std::ostringstream sink;
  EXPECT_THROW(bad.write(sink), std::logic_error);
}

TEST(Io, FieldCsv) {
  std::ostringstream out;
  write_field_csv(out, 2, {1.0, 2.0, 3.0, 4.5});
  EXPECT_EQ(out.str(), "index,comp0,comp1\n0,1,2\n1,3,4.5\n");
}

TEST(Io, VtkLegacy) {
  MeshSpec s;
  s.domain = DomainKind::Square;
  s.h = 0.5;
  const Mesh m = build_mesh(s);
  NodalField u(m, 2, 0.5);
  std::ostringstream out;
  write_vtk(out, m, {vtk_point_vectors("u", u), {"d", VtkLocation::Point, 1, std::vector<double>(9, 0.0)},
                     {"e", VtkLocation::Cell, 1, std::vector<double>(8, 1.0)}});
  const std::string v = out.str();
  EXPECT_EQ(v.rfind("# vtk DataFile Version 3.0\n", 0), 0u);
  EXPECT_NE(v.find("DATASET UNSTRUCTURED_GRID"), std::string::npos);
  EXPECT_NE(v.find("POINTS 9 double"), std::string::npos);
  EXPECT_NE(v.find("CELLS 8 32"), std::string::npos);
  EXPECT_NE(v.find("CELL_TYPES 8\n5\n"), std::string::npos);
  EXPECT_NE(v.find("POINT_DATA 9\nVECTORS u double\n0.5 0.5 0\n"), std::string::npos);
  EXPECT_NE(v.find("CELL_DATA 8\nSCALARS e double 1"), std::string::npos);
  std::ostringstream sink;
  EXPECT_THROW(write_vtk(sink, m, {{"bad", VtkLocation::Cell, 1, {1.0}}}), std::invalid_argument);

  MeshSpec line;
  line.domain = DomainKind::Interval;
  line.h = 0.5;
  std::ostringstream lo;
  write_vtk(lo, build_mesh(line), {});
  EXPECT_NE(lo.str().find("CELL_TYPES 2\n3\n3\n"), std::string::npos);
}

TEST(Io, SvgPlot) {
  std::ostringstream out;
  write_svg_plot(out, {"title <&>", "x", "y", {{"s", {0.0, 1.0}, {0.0, 2.0}, "#000000"}}, false});
  const std::string svg = out.str();
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("title &lt;&amp;&gt;"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Cli, ProfileWritesPhiCsv) {
  const fs::path dir = scratch("cli_profile");
  EXPECT_EQ(run_cli("profile-1d --out " + (dir / "r").string(), dir / "log.txt"), 0);
  std::ifstream in(dir / "r" / "phi.csv");
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header, "j,phi_analytic,z0");
  EXPECT_EQ(first, "0,0,0");
  EXPECT_TRUE(fs::exists(dir / "r" / "plot_phi.svg"));
  fs::remove_all(dir);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli_codes");
  EXPECT_EQ(run_cli("bogus-cmd", dir / "a.txt"), 2);
  EXPECT_NE(slurp(dir / "a.txt").find("Usage"), std::string::npos);
  EXPECT_EQ(run_cli("", dir / "b.txt"), 2);
  EXPECT_EQ(run_cli("square-2d --mesh-variant C", dir / "c.txt"), 2);
  EXPECT_EQ(run_cli("bar-1d --no-such-flag", dir / "d.txt"), 2);
  EXPECT_EQ(run_cli("bar-1d --config " + (dir / "missing.cfg").string(), dir / "e.txt"), 2);
  std::ofstream(dir / "bad.cfg") << "material.eps_h = -1\n";
  EXPECT_EQ(run_cli("square-2d --config " + (dir / "bad.cfg").string(), dir / "f.txt"), 2);
  EXPECT_NE(slurp(dir / "f.txt").find("material.eps_h"), std::string::npos);
  // A config for another scenario is a usage error too.
  std::ofstream(dir / "bar.cfg") << "run.scenario = bar-1d\n";
  EXPECT_EQ(run_cli("square-2d --config " + (dir / "bar.cfg").string(), dir / "g.txt"), 2);
  fs::remove_all(dir);
}

TEST(Cli, BarRunWritesReportAndPasses) {
  const fs::path dir = scratch("cli_bar");
  EXPECT_EQ(run_cli("bar-1d --out " + (dir / "r").string(), dir / "log.txt"), 0);
  for (const char* f : {"bar.csv", "trace.csv", "report.csv", "config.cfg", "plot_phi.svg", "plot_energy.svg"})
    EXPECT_TRUE(fs::exists(dir / "r" / f)) << f;
  bool vtk = false;
  for (const auto& e : fs::directory_iterator(dir / "r")) vtk = vtk || e.path().extension() == ".vtk";
  EXPECT_TRUE(vtk);
  EXPECT_NE(slurp(dir / "log.txt").find("PASS bar.max_relative_error"), std::string::npos);
  // Deterministic output: a second run gives identical files.
  EXPECT_EQ(run_cli("bar-1d --out " + (dir / "r2").string(), dir / "log2.txt"), 0);
  for (const char* f : {"bar.csv", "trace.csv", "report.csv"}) EXPECT_EQ(slurp(dir / "r" / f), slurp(dir / "r2" / f)) << f;
  // The written config reproduces the run.
  const RunConfig c = parse_config(slurp(dir / "r" / "config.cfg"));
  EXPECT_EQ(c.scenario, Scenario::Bar1D);
  fs::remove_all(dir);
}

TEST(Cli, TargetMissGivesExitOne) {
  // Two coarse levels leave the recovery gap far above 2%: a target miss, not an error.
  const fs::path dir = scratch("cli_miss");
  std::ofstream(dir / "cfg") << "run.scenario = recovery-check\nrecovery.levels = 2\nrecovery.h0 = 0.1\n";
  EXPECT_EQ(run_cli("recovery-check --config " + (dir / "cfg").string() + " --out " + (dir / "r").string(), dir / "log.txt"), 1);
  EXPECT_NE(slurp(dir / "log.txt").find("FAIL"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, DomainTrace) {
  const fs::path dir = scratch("cli_domain");
  EXPECT_EQ(run_cli("domain-trace --out " + (dir / "r").string(), dir / "log.txt"), 0);
  EXPECT_TRUE(fs::exists(dir / "r" / "domain.csv"));
  EXPECT_TRUE(fs::exists(dir / "r" / "points.csv"));
  EXPECT_TRUE(fs::exists(dir / "r" / "plot_domain.svg"));
  fs::remove_all(dir);
}
