#include "clebsch/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "clebsch/errors.hpp"

namespace clebsch {

namespace pt = boost::property_tree;

namespace {

class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  bool has(const std::string& key) const { return tree_ && tree_->find(key) != tree_->not_found(); }

  std::string text(const std::string& key) const {
    used_.insert(key);
    return boost::trim_copy(tree_->get<std::string>(key));
  }
  std::string text(const std::string& key, const std::string& def) const {
    return has(key) ? text(key) : def;
  }

  double number(const std::string& key, double def) const {
    return has(key) ? parse_double(key, text(key)) : def;
  }
  int integer(const std::string& key, int def) const {
    if (!has(key)) return def;
    const std::string s = text(key);
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != s.size()) fail(key, "expected an integer, got '" + s + "'");
    return v;
  }
  bool boolean(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const std::string s = boost::to_lower_copy(text(key));
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    fail(key, "expected a boolean, got '" + s + "'");
  }
  std::vector<double> numbers(const std::string& key) const {
    std::vector<std::string> parts;
    const std::string s = text(key);
    boost::split(parts, s, boost::is_any_of(", \t"), boost::token_compress_on);
    std::vector<double> out;
    for (const auto& p : parts)
      if (!p.empty()) out.push_back(parse_double(key, p));
    return out;
  }

  // Keys that were present but never read.
  void reject_unused(const std::set<std::string>& allowed_unread = {}) const {
    if (!tree_) return;
    for (const auto& [k, v] : *tree_)
      if (!used_.count(k) && !allowed_unread.count(k))
        throw ConfigError("[" + name_ + "] unknown or inapplicable key '" + k + "'");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError("[" + name_ + "] " + key + ": " + msg);
  }

 private:
  double parse_double(const std::string& key, const std::string& s) const {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != s.size() || !std::isfinite(v))
      fail(key, "expected a finite number, got '" + s + "'");
    return v;
  }

  const pt::ptree* tree_;
  std::string name_;
  mutable std::set<std::string> used_;
};

ScalarProfile profile(const Section& s, const std::string& key, const std::string& def) {
  const std::string text = s.text(key, def);
  try {
    return ScalarProfile::parse(text);
  } catch (const std::exception& e) {
    s.fail(key, e.what());
  }
}

SurfaceFamily parse_family(const Section& s) {
  const std::string name = s.text("family", "axisym");
  const double r0 = s.number("r0", 1.0);
  try {
    if (name == "axisym") return surface::Axisym{r0};
    if (name == "phase_perturbed")
      return surface::PhasePerturbed{r0, s.number("eps", 0.1), s.integer("m", 4)};
    if (name == "displaced_ellipse")
      return surface::DisplacedEllipse{r0, s.number("elongation", 1.0), s.number("eps", 0.0),
                                       s.integer("m", 1)};
    if (name == "exp_sheared") return surface::ExpSheared{r0, s.number("eps", 0.18)};
    if (name == "conjugate_harmonic")
      return surface::ConjugateHarmonic{r0, s.number("eps", 0.05), s.integer("m", 1)};
  } catch (const std::invalid_argument& e) {
    throw ConfigError("[surface] " + std::string(e.what()));
  }
  s.fail("family", "unknown family '" + name + "'");
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

}  // namespace

BoundaryMode boundary_mode_from_string(const std::string& s) {
  if (s == "periodic") return BoundaryMode::periodic;
  if (s == "dirichlet") return BoundaryMode::dirichlet;
  throw ConfigError("boundary mode must be periodic or dirichlet, got '" + s + "'");
}

std::string to_string(BoundaryMode b) {
  return b == BoundaryMode::periodic ? "periodic" : "dirichlet";
}

double RunConfig::export_level() const {
  if (export_psi) return *export_psi;
  return psi_levels[psi_levels.size() / 2];
}

RunConfig parse_config(const std::string& ini_text, const std::string& origin) {
  pt::ptree tree;
  std::istringstream in(ini_text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  static const std::set<std::string> sections = {"run", "surface", "levels", "solve", "field",
                                                 "output"};
  for (const auto& [k, v] : tree) {
    if (!sections.count(k)) throw ConfigError(origin + ": unknown section [" + k + "]");
    if (v.empty() && !v.data().empty())
      throw ConfigError(origin + ": key '" + k + "' outside any section");
  }
  auto section = [&](const std::string& name) {
    const auto it = tree.find(name);
    return Section(it == tree.not_found() ? nullptr : &it->second, name);
  };

  RunConfig cfg;

  const Section run = section("run");
  cfg.name = run.text("name", cfg.name);
  run.reject_unused();

  const Section surf = section("surface");
  cfg.family = parse_family(surf);
  surf.reject_unused();

  const Section field = section("field");
  const std::string kind = field.text("kind", "stack");
  if (kind == "stack") {
    cfg.field = FieldKind::stack;
  } else {
    cfg.field = FieldKind::analytic;
    try {
      cfg.analytic.kind = analytic_kind_from_string(kind);
    } catch (const std::invalid_argument& e) {
      field.fail("kind", e.what());
    }
    const SurfaceFamily& fam = cfg.family;
    cfg.analytic.r0 = fam.r0();
    std::visit(
        [&](const auto& s) {
          if constexpr (requires { s.eps; }) cfg.analytic.eps = s.eps;
          if constexpr (requires { s.m; }) cfg.analytic.m = s.m;
        },
        fam.variant());
    if (cfg.analytic.family().name() != fam.name())
      field.fail("kind", kind + " lives on the " + cfg.analytic.family().name() +
                             " family, not " + fam.name());
    cfg.analytic.C = field.number("C", 1.0);
  }
  cfg.analytic.f = profile(field, "f", "const:1");
  cfg.analytic.g = profile(field, "g", "const:0");
  cfg.test_points = field.integer("test_points", cfg.test_points);
  cfg.fd_step = field.number("fd_step", cfg.fd_step);
  if (cfg.test_points < 6) field.fail("test_points", "need at least 6");
  if (!(cfg.fd_step > 0.0)) field.fail("fd_step", "must be positive");
  if (cfg.field == FieldKind::stack && (field.has("C") || field.has("g")))
    field.fail(field.has("C") ? "C" : "g", "only used by analytic kinds");
  field.reject_unused();

  const Section lv = section("levels");
  cfg.inner_cutoff = lv.number("inner_cutoff", cfg.inner_cutoff);
  if (lv.has("psi")) {
    if (lv.has("psi_min") || lv.has("psi_max") || lv.has("count"))
      lv.fail("psi", "give either an explicit list or psi_min/psi_max/count");
    cfg.psi_levels = lv.numbers("psi");
  } else {
    if (!lv.has("psi_min") || !lv.has("psi_max"))
      throw ConfigError("[levels] needs psi or psi_min/psi_max");
    const double lo = lv.number("psi_min", 0.0), hi = lv.number("psi_max", 0.0);
    const int count = lv.integer("count", 1);
    if (count < 1) lv.fail("count", "must be positive");
    if (count == 1) {
      if (lo != hi) lv.fail("count", "a single level needs psi_min == psi_max");
      cfg.psi_levels = {lo};
    } else {
      for (int k = 0; k < count; ++k) cfg.psi_levels.push_back(lo + (hi - lo) * k / (count - 1));
      cfg.psi_levels.back() = hi;
    }
  }
  lv.reject_unused();
  if (cfg.psi_levels.empty()) throw ConfigError("[levels] no levels given");
  for (std::size_t k = 0; k < cfg.psi_levels.size(); ++k) {
    if (!(cfg.psi_levels[k] > cfg.inner_cutoff))
      throw ConfigError("[levels] level " + fmt(cfg.psi_levels[k]) + " is not above inner_cutoff " +
                        fmt(cfg.inner_cutoff));
    if (k > 0 && !(cfg.psi_levels[k] > cfg.psi_levels[k - 1]))
      throw ConfigError("[levels] levels must be strictly increasing");
  }

  const Section sv = section("solve");
  int n_mu = sv.integer("grid", 32), n_nu = n_mu;
  n_mu = sv.integer("grid_mu", n_mu);
  n_nu = sv.integer("grid_nu", n_nu);
  try {
    cfg.grid = PeriodicGrid(n_mu, n_nu);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("[solve] grid: " + std::string(e.what()));
  }
  cfg.M = sv.integer("M", 1);
  cfg.N = sv.integer("N", 0);
  if (cfg.M == 0 && cfg.N == 0) sv.fail("M", "(M, N) = (0, 0) gives the trivial field");
  cfg.solve.tol = sv.number("tol", cfg.solve.tol);
  cfg.solve.max_iter = sv.integer("max_iter", cfg.solve.max_iter);
  if (!(cfg.solve.tol > 0.0)) sv.fail("tol", "must be positive");
  if (cfg.solve.max_iter < 1) sv.fail("max_iter", "must be positive");
  cfg.bc = boundary_mode_from_string(sv.text("bc", "periodic"));
  sv.reject_unused();

  const Section out = section("output");
  cfg.out_dir = out.text("dir", cfg.out_dir);
  if (out.has("export_psi")) cfg.export_psi = out.number("export_psi", 0.0);
  cfg.export_grid = out.integer("export_grid", cfg.export_grid);
  cfg.vtk = out.boolean("vtk", cfg.vtk);
  out.reject_unused();
  if (cfg.export_grid < 2) throw ConfigError("[output] export_grid must be at least 2");
  if (cfg.export_psi && !(*cfg.export_psi > cfg.inner_cutoff))
    throw ConfigError("[output] export_psi must lie above inner_cutoff");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.grid) {
    try {
      cfg.grid = PeriodicGrid::square(*o.grid);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("--grid: " + std::string(e.what()));
    }
  }
  if (o.levels) {
    const int k = *o.levels;
    if (k < 1) throw ConfigError("--levels must be positive");
    const double lo = cfg.psi_levels.front(), hi = cfg.psi_levels.back();
    if (k > 1 && lo == hi)
      throw ConfigError("--levels needs a configured psi range, not a single level");
    std::vector<double> lv;
    if (k == 1) {
      lv = {cfg.psi_levels[cfg.psi_levels.size() / 2]};
    } else {
      for (int i = 0; i < k; ++i) lv.push_back(lo + (hi - lo) * i / (k - 1));
      lv.back() = hi;
    }
    cfg.psi_levels = lv;
  }
  if (o.tol) {
    if (!(*o.tol > 0.0)) throw ConfigError("--tol must be positive");
    cfg.solve.tol = *o.tol;
  }
  if (o.bc) cfg.bc = *o.bc;
}

std::string to_ini(const RunConfig& cfg) {
  std::ostringstream os;
  os << "[run]\nname = " << cfg.name << "\n\n[surface]\nfamily = " << cfg.family.name()
     << "\nr0 = " << fmt(cfg.family.r0()) << "\n";
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, surface::DisplacedEllipse>)
          os << "elongation = " << fmt(s.elongation) << "\n";
        if constexpr (requires { s.eps; }) os << "eps = " << fmt(s.eps) << "\n";
        if constexpr (requires { s.m; }) os << "m = " << s.m << "\n";
      },
      cfg.family.variant());
  os << "\n[levels]\npsi =";
  for (std::size_t k = 0; k < cfg.psi_levels.size(); ++k)
    os << (k ? ", " : " ") << fmt(cfg.psi_levels[k]);
  os << "\ninner_cutoff = " << fmt(cfg.inner_cutoff) << "\n\n[solve]\ngrid_mu = " << cfg.grid.n_mu
     << "\ngrid_nu = " << cfg.grid.n_nu << "\nM = " << cfg.M << "\nN = " << cfg.N
     << "\ntol = " << fmt(cfg.solve.tol) << "\nmax_iter = " << cfg.solve.max_iter
     << "\nbc = " << to_string(cfg.bc) << "\n\n[field]\nkind = "
     << (cfg.field == FieldKind::stack ? std::string("stack") : to_string(cfg.analytic.kind))
     << "\nf = " << cfg.analytic.f.to_string() << "\n";
  if (cfg.field == FieldKind::analytic)
    os << "g = " << cfg.analytic.g.to_string() << "\nC = " << fmt(cfg.analytic.C) << "\n";
  os << "test_points = " << cfg.test_points << "\nfd_step = " << fmt(cfg.fd_step)
     << "\n\n[output]\ndir = " << cfg.out_dir << "\n";
  if (cfg.export_psi) os << "export_psi = " << fmt(*cfg.export_psi) << "\n";
  os << "export_grid = " << cfg.export_grid << "\nvtk = " << (cfg.vtk ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace clebsch
