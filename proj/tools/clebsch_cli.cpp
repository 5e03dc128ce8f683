// clebsch: solve | verify | export | fixtures-list
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "clebsch/config.hpp"
#include "clebsch/errors.hpp"
#include "clebsch/run.hpp"

using namespace clebsch;

namespace {

struct Common {
  std::string config;
  std::string fixture;
  std::string out;
  int grid = 0;
  int levels = 0;
  double tol = 0.0;
  std::string bc;
  bool serial = false;
  bool quiet = false;
};

void add_common(CLI::App* sub, Common& o) {
  sub->add_option("--config", o.config, "INI configuration file");
  sub->add_option("--fixture", o.fixture, "built-in fixture (see fixtures-list)");
  sub->add_option("--out", o.out, "output directory (overrides [output] dir)");
  sub->add_option("--grid", o.grid, "square grid size N (even, >= 8)");
  sub->add_option("--levels", o.levels, "number of levels over the configured psi range");
  sub->add_option("--tol", o.tol, "relative residual tolerance");
  sub->add_option("--bc", o.bc, "boundary mode")->check(CLI::IsMember({"periodic", "dirichlet"}));
  sub->add_flag("--serial", o.serial, "use the serial reference kernels");
  sub->add_flag("--quiet", o.quiet, "print only the status line");
}

RunConfig resolve(const Common& o, CLI::App* sub) {
  if (o.config.empty() == o.fixture.empty())
    throw ConfigError("give exactly one of --config or --fixture");
  RunConfig cfg = o.fixture.empty() ? load_config(o.config)
                                    : parse_config(fixture(o.fixture).ini, "fixture " + o.fixture);
  Overrides ov;
  if (sub->count("--out")) ov.out_dir = o.out;
  if (sub->count("--grid")) ov.grid = o.grid;
  if (sub->count("--levels")) ov.levels = o.levels;
  if (sub->count("--tol")) ov.tol = o.tol;
  if (sub->count("--bc")) ov.bc = boundary_mode_from_string(o.bc);
  apply_overrides(cfg, ov);
  return cfg;
}

void summarize(const RunResult& r, bool quiet) {
  const auto& rep = r.report;
  if (!quiet) {
    for (const auto& c : rep["checks"]) {
      const bool asserted = c["asserted"].get<bool>();
      const char* tag = !asserted ? "INFO" : c["passed"].get<bool>() ? "ok  " : "FAIL";
      std::cout << tag << "  " << c["name"].get<std::string>() << " = " << c["value"].dump();
      if (asserted)
        std::cout << " (" << c["relation"].get<std::string>() << " " << c["threshold"].dump() << ")";
      std::cout << "\n";
    }
    for (const auto& f : r.files) std::cout << "wrote " << f << "\n";
  }
  std::cout << rep["command"].get<std::string>() << " " << rep["name"].get<std::string>() << ": "
            << rep["status"].get<std::string>() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solenoidal fields tangent to nested toroidal surfaces"};
  app.require_subcommand(1);
  Common solve_o, verify_o, export_o;
  CLI::App* solve = app.add_subcommand("solve", "solve every level and write surface tables, field.vtk, report.json");
  CLI::App* verify = app.add_subcommand("verify", "re-import a solve (or evaluate an analytic field) and run the checks");
  CLI::App* exp = app.add_subcommand("export", "write surface_points.csv and modulus.csv on the export level");
  CLI::App* list = app.add_subcommand("fixtures-list", "list the built-in fixtures");
  add_common(solve, solve_o);
  add_common(verify, verify_o);
  add_common(exp, export_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (list->parsed()) {
      for (const auto& f : fixtures()) std::printf("%-7s %s\n", f.name.c_str(), f.description.c_str());
      return kExitPass;
    }
    CLI::App* sub = solve->parsed() ? solve : verify->parsed() ? verify : exp;
    const Common& o = solve->parsed() ? solve_o : verify->parsed() ? verify_o : export_o;
    const RunConfig cfg = resolve(o, sub);
    const Exec exec = o.serial ? Exec::serial : Exec::parallel;
    const RunResult r = solve->parsed()    ? cmd_solve(cfg, exec)
                        : verify->parsed() ? cmd_verify(cfg, exec)
                                           : cmd_export(cfg, exec);
    summarize(r, o.quiet);
    return r.exit_code;
  } catch (const std::exception& e) {
    const int rc = exit_code_for(e);
    std::cerr << (rc == kExitConfig ? "input error: " : "solver failure: ") << e.what()
              << "\n";
    return rc;
  }
}
