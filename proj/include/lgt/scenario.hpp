#pragma once

// Scenario runner: configuration parsing, presets, model preparation, the J
// sweep and CSV / metadata output.

#include <nlohmann/json.hpp>

#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "lgt/dynamics.hpp"
#include "lgt/gauge_basis.hpp"
#include "lgt/lattice.hpp"
#include "lgt/models.hpp"
#include "lgt/strings.hpp"
#include "lgt/version.hpp"

namespace lgt::cli {

enum class ModelKind { u1_square, u1_hex, z2_square, z2_hex, qlm1d, minimal_model };

inline const std::vector<std::pair<std::string, ModelKind>>& model_names() {
  static const std::vector<std::pair<std::string, ModelKind>> v{
      {"u1_square", ModelKind::u1_square}, {"u1_hex", ModelKind::u1_hex},   {"z2_square", ModelKind::z2_square},
      {"z2_hex", ModelKind::z2_hex},       {"qlm1d", ModelKind::qlm1d},     {"minimal_model", ModelKind::minimal_model}};
  return v;
}

inline std::string to_string(ModelKind m) {
  for (const auto& [n, k] : model_names())
    if (k == m) return n;
  return "?";
}

enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_parse_error = 2,
  exit_infeasible_lattice = 3,
  exit_sector_cap = 4,
  exit_propagator = 5,
  exit_invalid_string = 6,
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& key, const std::string& msg)
      : std::runtime_error(source + ":" + std::to_string(line) + (key.empty() ? "" : ": key '" + key + "'") + ": " + msg),
        line_(line),
        key_(key) {}
  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  int line_;
  std::string key_;
};

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return exit_parse_error;
  if (dynamic_cast<const LatticeError*>(&e)) return exit_infeasible_lattice;
  if (dynamic_cast<const SectorSizeError*>(&e) || dynamic_cast<const DimensionCapError*>(&e)) return exit_sector_cap;
  if (dynamic_cast<const KrylovConvergenceError*>(&e)) return exit_propagator;
  if (dynamic_cast<const InvalidStringError*>(&e)) return exit_invalid_string;
  return exit_failure;
}

inline std::string format_number(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct Scenario {
  std::string name = "scenario";
  std::string description;
  ModelKind model = ModelKind::minimal_model;
  LatticeSpec lattice{Geometry::square, 7, 6, Boundary::cylinder_periodic_y, 0};
  Coord source{0, 0};
  Coord sink{0, 0};
  std::optional<StringShape> shape = StringShape::l_shaped;
  std::string path;  // explicit steps, used when shape is empty
  double kappa = 1.0;
  double mass = 0.0;
  double efield = 0.0;
  std::vector<double> plaq{0.0};
  TimeGrid grid;
  std::string propagator = "auto";  // auto | dense | krylov
  double krylov_tol = 1e-10;
  std::size_t sector_cap = kDefaultSectorCap;
  std::size_t minimal_cap = kDefaultMinimalCap;
  std::string prefix;

  std::string output_prefix() const { return prefix.empty() ? name : prefix; }
  bool is_z2() const { return model == ModelKind::z2_square || model == ModelKind::z2_hex; }
};

// ------------------------------------------------------------- parsing -----

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

struct Entry {
  std::string value;
  int line = 0;
};

class Reader {
 public:
  Reader(std::string source, std::map<std::string, Entry> entries)
      : source_(std::move(source)), entries_(std::move(entries)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    auto it = entries_.find(key);
    throw ConfigError(source_, it == entries_.end() ? 0 : it->second.line, key, msg);
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  int line(const std::string& key) const { return has(key) ? entries_.at(key).line : 0; }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    used_.insert(key);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      if (fallback) return *fallback;
      throw ConfigError(source_, 0, key, "missing required key");
    }
    return it->second.value;
  }

  double real(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key) && fallback) return used_.insert(key), *fallback;
    return to_real(key, text(key));
  }

  long integer(const std::string& key, std::optional<long> fallback = std::nullopt) {
    if (!has(key) && fallback) return used_.insert(key), *fallback;
    const std::string v = text(key);
    long out = 0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) fail(key, "expected an integer, got '" + v + "'");
    return out;
  }

  std::vector<double> reals(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) {
    if (!has(key) && fallback) return used_.insert(key), *fallback;
    std::vector<double> out;
    for (const auto& item : split(text(key), ',')) out.push_back(to_real(key, item));
    if (out.empty()) fail(key, "empty list");
    return out;
  }

  Coord coord(const std::string& key) {
    const auto parts = split(text(key), ',');
    if (parts.size() != 2) fail(key, "expected 'x, y'");
    Coord c;
    for (int k = 0; k < 2; ++k) {
      int v = 0;
      auto r = std::from_chars(parts[k].data(), parts[k].data() + parts[k].size(), v);
      if (r.ec != std::errc{} || r.ptr != parts[k].data() + parts[k].size()) fail(key, "bad coordinate '" + parts[k] + "'");
      (k == 0 ? c.x : c.y) = v;
    }
    return c;
  }

  template <class E>
  E choice(const std::string& key, const std::vector<std::pair<std::string, E>>& options, std::optional<E> fallback) {
    if (!has(key) && fallback) return used_.insert(key), *fallback;
    const std::string v = text(key);
    for (const auto& [n, e] : options)
      if (n == v) return e;
    std::string valid;
    for (const auto& [n, e] : options) valid += (valid.empty() ? "" : ", ") + n;
    fail(key, "unknown value '" + v + "' (valid: " + valid + ")");
  }

  void reject_unused() const {
    for (const auto& [k, e] : entries_)
      if (!used_.count(k)) throw ConfigError(source_, e.line, k, "unknown key");
  }

 private:
  double to_real(const std::string& key, const std::string& v) const {
    double out = 0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) fail(key, "expected a number, got '" + v + "'");
    if (!std::isfinite(out)) fail(key, "value must be finite");
    return out;
  }

  std::string source_;
  std::map<std::string, Entry> entries_;
  std::set<std::string> used_;
};

}  // namespace detail

inline Scenario parse_scenario(std::istream& is, const std::string& source = "<config>") {
  std::map<std::string, detail::Entry> entries;
  std::string section, raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string line = raw;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(source, lineno, "", "malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source, lineno, "", "expected key = value");
    const std::string key = (section.empty() ? "" : section + ".") + detail::trim(line.substr(0, eq));
    if (entries.count(key)) throw ConfigError(source, lineno, key, "duplicate key");
    entries[key] = {detail::trim(line.substr(eq + 1)), lineno};
  }

  detail::Reader r(source, std::move(entries));
  Scenario s;
  s.name = r.text("scenario.name", "scenario");
  s.description = r.text("scenario.description", "");
  s.model = r.choice<ModelKind>("scenario.model", model_names(), std::nullopt);

  const std::optional<Geometry> implied_geometry = [&]() -> std::optional<Geometry> {
    switch (s.model) {
      case ModelKind::u1_square:
      case ModelKind::z2_square: return Geometry::square;
      case ModelKind::u1_hex:
      case ModelKind::z2_hex: return Geometry::hexagonal;
      case ModelKind::qlm1d: return Geometry::chain;
      case ModelKind::minimal_model: return std::nullopt;
    }
    return std::nullopt;
  }();
  s.lattice.geometry = r.choice<Geometry>(
      "lattice.geometry",
      {{"square", Geometry::square}, {"hexagonal", Geometry::hexagonal}, {"chain", Geometry::chain}},
      implied_geometry);
  if (implied_geometry && s.lattice.geometry != *implied_geometry)
    r.fail("lattice.geometry", "model " + to_string(s.model) + " requires geometry " + to_string(*implied_geometry));
  const bool chain = s.lattice.geometry == Geometry::chain;
  s.lattice.extent_x = static_cast<int>(r.integer("lattice.extent_x"));
  s.lattice.extent_y = static_cast<int>(r.integer("lattice.extent_y", chain ? std::optional<long>(1) : std::nullopt));
  s.lattice.boundary = r.choice<Boundary>(
      "lattice.boundary", {{"cylinder_periodic_y", Boundary::cylinder_periodic_y}, {"open", Boundary::open}},
      chain ? std::optional<Boundary>(Boundary::open) : std::nullopt);
  s.lattice.parity_offset = static_cast<int>(r.integer("lattice.parity_offset", chain ? 1 : 0));
  if (s.lattice.extent_x <= 0) r.fail("lattice.extent_x", "must be positive");
  if (s.lattice.extent_y <= 0) r.fail("lattice.extent_y", "must be positive");

  s.source = r.coord("charges.source");
  s.sink = r.coord("charges.sink");

  if (r.has("string.path")) {
    if (r.has("string.shape")) r.fail("string.path", "give either string.shape or string.path");
    s.shape.reset();
    s.path = r.text("string.path");
    if (s.path.find_first_not_of("RLUD") != std::string::npos) r.fail("string.path", "steps must be R, L, U or D");
  } else {
    s.shape = r.choice<StringShape>("string.shape",
                                    {{"l_shaped", StringShape::l_shaped},
                                     {"diagonal", StringShape::diagonal},
                                     {"straight", StringShape::straight},
                                     {"s_shaped_hex", StringShape::s_shaped_hex}},
                                    std::nullopt);
  }

  s.kappa = r.real("couplings.kappa", 1.0);
  s.mass = r.real("couplings.mass");
  s.efield = r.real("couplings.efield");
  s.plaq = r.reals("couplings.plaq", std::vector<double>{0.0});

  s.grid.t_max = r.real("time.t_max");
  s.grid.n_points = static_cast<int>(r.integer("time.n_points"));
  s.grid.substeps = static_cast<int>(r.integer("time.substeps", 1));
  if (s.grid.t_max < 0) r.fail("time.t_max", "must be >= 0");
  if (s.grid.n_points <= 0) r.fail("time.n_points", "must be positive");
  if (s.grid.substeps <= 0) r.fail("time.substeps", "must be positive");

  s.propagator = r.choice<std::string>("solver.propagator",
                                       {{"auto", "auto"}, {"dense", "dense"}, {"krylov", "krylov"}}, "auto");
  s.krylov_tol = r.real("solver.krylov_tol", 1e-10);
  if (s.krylov_tol <= 0) r.fail("solver.krylov_tol", "must be positive");
  const long scap = r.integer("solver.sector_cap", static_cast<long>(kDefaultSectorCap));
  const long mcap = r.integer("solver.minimal_cap", static_cast<long>(kDefaultMinimalCap));
  if (scap <= 0) r.fail("solver.sector_cap", "must be positive");
  if (mcap <= 0) r.fail("solver.minimal_cap", "must be positive");
  s.sector_cap = static_cast<std::size_t>(scap);
  s.minimal_cap = static_cast<std::size_t>(mcap);

  s.prefix = r.text("output.prefix", "");
  r.reject_unused();
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw ConfigError(p.string(), 0, "", "cannot open file");
  return parse_scenario(f, p.string());
}

inline std::string format_scenario(const Scenario& s) {
  std::ostringstream o;
  auto list = [](const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_number(v[i]);
    return out;
  };
  o << "[scenario]\n"
    << "name = " << s.name << '\n';
  if (!s.description.empty()) o << "description = " << s.description << '\n';
  o << "model = " << to_string(s.model) << "\n\n"
    << "[lattice]\n"
    << "geometry = " << to_string(s.lattice.geometry) << '\n'
    << "extent_x = " << s.lattice.extent_x << '\n'
    << "extent_y = " << s.lattice.extent_y << '\n'
    << "boundary = " << to_string(s.lattice.boundary) << '\n';
  if (s.lattice.geometry == Geometry::chain) o << "parity_offset = " << s.lattice.parity_offset << '\n';
  o << "\n[charges]\n"
    << "source = " << s.source.x << ", " << s.source.y << '\n'
    << "sink = " << s.sink.x << ", " << s.sink.y << "\n\n"
    << "[string]\n";
  if (s.shape)
    o << "shape = " << to_string(*s.shape) << '\n';
  else
    o << "path = " << s.path << '\n';
  o << "\n[couplings]\n"
    << "kappa = " << format_number(s.kappa) << '\n'
    << "mass = " << format_number(s.mass) << '\n'
    << "efield = " << format_number(s.efield) << '\n'
    << "plaq = " << list(s.plaq) << "\n\n"
    << "[time]\n"
    << "t_max = " << format_number(s.grid.t_max) << '\n'
    << "n_points = " << s.grid.n_points << '\n'
    << "substeps = " << s.grid.substeps << "\n\n"
    << "[solver]\n"
    << "propagator = " << s.propagator << '\n'
    << "krylov_tol = " << format_number(s.krylov_tol) << '\n'
    << "sector_cap = " << s.sector_cap << '\n'
    << "minimal_cap = " << s.minimal_cap << "\n\n"
    << "[output]\n"
    << "prefix = " << s.output_prefix() << '\n';
  return o.str();
}

// ------------------------------------------------------------- presets -----

struct Preset {
  std::string mirrors;
  Scenario scenario;
};

inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = [] {
    auto base = [](std::string name, ModelKind model, LatticeSpec lat, Coord src, Coord snk, StringShape shape,
                   double m, double g, std::vector<double> plaq) {
      Scenario s;
      s.name = std::move(name);
      s.model = model;
      s.lattice = lat;
      s.source = src;
      s.sink = snk;
      s.shape = shape;
      s.mass = m;
      s.efield = g;
      s.plaq = std::move(plaq);
      s.grid = {10.0, 201, 1};
      return s;
    };
    const LatticeSpec sq{Geometry::square, 7, 6, Boundary::cylinder_periodic_y, 0};
    const LatticeSpec hex{Geometry::hexagonal, 7, 6, Boundary::cylinder_periodic_y, 0};
    std::vector<Preset> v;
    v.push_back({"resonant L-shaped string, J sweep",
                 base("square-L-resonant", ModelKind::minimal_model, sq, {1, 2}, {5, 5}, StringShape::l_shaped, 12, 24,
                      {0, 1, 2})});
    v.push_back({"off-resonant L-shaped string, J sweep",
                 base("square-L-offres", ModelKind::minimal_model, sq, {1, 2}, {5, 5}, StringShape::l_shaped, 12, 8,
                      {0, 0.5, 1, 2})});
    v.push_back({"resonant staircase string, J sweep",
                 base("square-diag-resonant", ModelKind::minimal_model, sq, {1, 2}, {5, 5}, StringShape::diagonal, 12,
                      24, {0, 1, 2})});
    v.push_back({"resonant S-shaped hexagonal string, J sweep",
                 base("hex-S-resonant", ModelKind::minimal_model, hex, {1, 1}, {4, 3}, StringShape::s_shaped_hex, 2, 4,
                      {0, 1, 2})});
    v.push_back({"straight hexagonal string without flippable plaquettes",
                 base("hex-1d-resonant", ModelKind::minimal_model, hex, {1, 1}, {6, 1}, StringShape::straight, 2, 4,
                      {0, 2})});
    v.push_back({"off-resonant S-shaped hexagonal string",
                 base("hex-S-offres", ModelKind::minimal_model, hex, {1, 1}, {4, 3}, StringShape::s_shaped_hex, 12, 8,
                      {0, 0.1, 1})});
    {
      Scenario s = base("z2-diag-2ndres", ModelKind::z2_square, {Geometry::square, 3, 3, Boundary::open, 0}, {0, 0},
                        {2, 2}, StringShape::diagonal, 4, 4, {0});
      s.grid = {20.0, 201, 1};
      v.push_back({"Z2 staircase string at the second-order resonance m = g", s});
    }
    {
      Scenario s = base("qlm1d-resonant", ModelKind::qlm1d, {Geometry::chain, 8, 1, Boundary::open, 1}, {0, 0}, {7, 0},
                        StringShape::straight, 12, 24, {0});
      v.push_back({"1+1D QLM string of length 7", s});
    }
    for (auto& p : v) {
      p.scenario.description = p.mirrors;
      p.scenario.prefix = p.scenario.name;
    }
    return v;
  }();
  return all;
}

inline std::optional<Scenario> find_preset(const std::string& name) {
  for (const auto& p : presets())
    if (p.scenario.name == name) return p.scenario;
  return std::nullopt;
}

inline std::string list_presets() {
  std::ostringstream o;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s %-14s %-32s %-6s %-6s %-12s %s\n", "name", "model", "lattice", "m", "g", "J",
                "scenario");
  o << buf;
  for (const auto& p : presets()) {
    const Scenario& s = p.scenario;
    std::string js;
    for (std::size_t i = 0; i < s.plaq.size(); ++i) js += (i ? "," : "") + format_number(s.plaq[i]);
    const std::string lat = to_string(s.lattice.geometry) + " " + std::to_string(s.lattice.extent_x) + "x" +
                            std::to_string(s.lattice.extent_y) + " " + to_string(s.lattice.boundary);
    std::snprintf(buf, sizeof buf, "%-22s %-14s %-32s %-6s %-6s %-12s %s\n", s.name.c_str(), to_string(s.model).c_str(),
                  lat.c_str(), format_number(s.mass).c_str(), format_number(s.efield).c_str(), js.c_str(),
                  p.mirrors.c_str());
    o << buf;
  }
  return o.str();
}

// ---------------------------------------------------------- preparation ----

struct RunOptions {
  std::filesystem::path out_dir = ".";
  int workers = 1;
  std::optional<std::size_t> sector_cap;
  std::optional<std::size_t> minimal_cap;
  std::optional<std::string> propagator;
  std::filesystem::path cache_dir;  // empty: no sector cache
};

inline std::filesystem::path default_cache_dir(const RunOptions& opt) {
  if (const char* env = std::getenv("LGT_CACHE_DIR"); env && *env) return env;
  return opt.cache_dir;
}

// Everything that does not depend on the plaquette coupling.
struct Prepared {
  Scenario scenario;
  std::shared_ptr<const Lattice> lattice;
  ChargeLayout layout;
  StringPath initial_path;
  BasisConfig initial_config;
  bool minimal = false;
  std::optional<MinimalModelBasis> manifold;
  SectorBasis sector;
  std::size_t dimension = 0;
  std::size_t initial_index = 0;
  std::vector<std::size_t> other_strings;
  std::size_t num_strings = 0;
  Eigen::VectorXd occupation;
  bool sector_from_cache = false;

  bool off_resonant() const { return manifold && manifold->off_resonant; }
};

namespace detail {

inline int resolve_site(const Lattice& lat, Coord c, const char* what) {
  auto s = lat.site_at(c.x, c.y);
  if (!s) throw LatticeError(std::string(what) + " (" + std::to_string(c.x) + "," + std::to_string(c.y) + ") is not on the lattice");
  return *s;
}

inline std::string cache_key(const Lattice& lat, const ChargeLayout& layout, GaugeModel model) {
  std::string k = to_string(model) + "_" + to_string(lat.geometry()) + "_" + std::to_string(lat.extent_x()) + "x" +
                  std::to_string(lat.extent_y()) + "_" + to_string(lat.spec().boundary) + "_p" +
                  std::to_string(lat.spec().parity_offset);
  for (auto [s, q] : layout.static_charges) k += "_s" + std::to_string(s) + (q > 0 ? "p" : "m") + std::to_string(std::abs(q));
  return k + ".sector";
}

inline SectorBasis sector_with_cache(const Lattice& lat, const ChargeLayout& layout, GaugeModel model, std::size_t cap,
                                     const std::filesystem::path& cache_dir, bool& from_cache) {
  from_cache = false;
  std::filesystem::path file;
  if (!cache_dir.empty()) {
    file = cache_dir / cache_key(lat, layout, model);
    std::ifstream in(file, std::ios::binary);
    if (in) {
      try {
        SectorBasis b = load_sector(in);
        if (b.matches(lat) && b.model() == model && b.size() <= cap) {
          from_cache = true;
          return b;
        }
      } catch (const std::exception&) {
      }
    }
  }
  SectorBasis b = enumerate_sector(lat, layout, model, cap);
  if (!file.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(cache_dir, ec);
    std::ofstream out(file, std::ios::binary);
    if (out) save_sector(out, b);
  }
  return b;
}

inline StringPath initial_path(const Scenario& s, const Lattice& lat, int src, int snk) {
  const std::string steps = s.shape ? shape_steps(lat, *s.shape, src, snk) : s.path;
  return path_from_steps(lat, src, steps);
}

}  // namespace detail

inline Prepared prepare(const Scenario& s, const RunOptions& opt = {}) {
  Prepared p;
  p.scenario = s;
  if (opt.sector_cap) p.scenario.sector_cap = *opt.sector_cap;
  if (opt.minimal_cap) p.scenario.minimal_cap = *opt.minimal_cap;
  if (opt.propagator) p.scenario.propagator = *opt.propagator;
  const Scenario& sc = p.scenario;
  if (!Couplings{sc.kappa, sc.mass, sc.efield, 0.0}.finite()) throw ConfigError(sc.name, 0, "couplings", "non-finite");

  p.lattice = std::make_shared<const Lattice>(build_lattice(sc.lattice));
  const Lattice& lat = *p.lattice;
  const int src = detail::resolve_site(lat, sc.source, "source");
  const int snk = detail::resolve_site(lat, sc.sink, "sink");
  if (src == snk) throw LatticeError("source and sink coincide");
  p.layout = ChargeLayout::string_pair(src, snk);
  const std::vector<bool> patch = rectangle_patch(lat, src, snk);
  const Couplings c0{sc.kappa, sc.mass, sc.efield, 0.0};

  if (sc.is_z2()) {
    p.initial_path = detail::initial_path(sc, lat, src, snk);
    if (p.initial_path.sink() != snk) throw InvalidStringError("path does not end on the sink");
    if (p.initial_path.length() != lat.manhattan_distance(src, snk)) throw InvalidStringError("string is not minimal");
    p.initial_config = induced_config(lat, p.initial_path, GaugeModel::z2);
    p.sector = detail::sector_with_cache(lat, p.layout, GaugeModel::z2, sc.sector_cap, default_cache_dir(opt),
                                         p.sector_from_cache);
    p.dimension = p.sector.size();
    p.initial_index = *p.sector.find(p.initial_config);
    const auto paths = shortest_paths(lat, src, snk);
    p.num_strings = paths.size();
    for (const auto& path : paths)
      if (auto i = p.sector.find(induced_config(lat, path, GaugeModel::z2)); i && *i != p.initial_index)
        p.other_strings.push_back(*i);
    p.occupation = diagonal_observable(p.sector.configs(), [&](const BasisConfig& cfg) {
      int n = 0;
      for (int v = 0; v < lat.num_sites(); ++v) {
        if (!patch[v]) continue;
        const int expected = p.layout.target(v) != 0 ? -1 : 1;
        n += z2_vertex_eigenvalue(lat, cfg, v) != expected;
      }
      return n;
    });
    return p;
  }

  const StringState st = build_string_state(lat, p.layout, detail::initial_path(sc, lat, src, snk));
  p.initial_path = st.path;
  p.initial_config = st.config;
  const StringSet strings = enumerate_minimal_strings(lat, p.layout, st.path);
  p.num_strings = strings.size();

  if (sc.model == ModelKind::minimal_model) {
    p.minimal = true;
    p.manifold = enumerate_resonant_manifold(lat, p.layout, strings, c0);
    const MinimalModelBasis& mb = *p.manifold;
    if (mb.dimension() > sc.minimal_cap)
      throw DimensionCapError("minimal model dimension " + std::to_string(mb.dimension()) + " exceeds cap " +
                              std::to_string(sc.minimal_cap));
    p.dimension = mb.dimension();
    p.initial_index = *mb.find(st.config);
    for (std::size_t i : mb.string_indices())
      if (i != p.initial_index) p.other_strings.push_back(i);
    std::vector<BasisConfig> cfgs;
    for (const auto& m : mb.states) cfgs.push_back(m.config);
    p.occupation = diagonal_observable(cfgs, [&](const BasisConfig& cfg) { return staggered_occupation(lat, cfg, patch); });
    return p;
  }

  p.sector = detail::sector_with_cache(lat, p.layout, GaugeModel::u1_qlm, sc.sector_cap, default_cache_dir(opt),
                                       p.sector_from_cache);
  p.dimension = p.sector.size();
  p.initial_index = *p.sector.find(st.config);
  for (const auto& cfg : strings.configs)
    if (auto i = p.sector.find(cfg); i && *i != p.initial_index) p.other_strings.push_back(*i);
  p.occupation =
      diagonal_observable(p.sector.configs(), [&](const BasisConfig& cfg) { return staggered_occupation(lat, cfg, patch); });
  return p;
}

// -------------------------------------------------------------- running ----

struct MemberResult {
  double plaq = 0.0;
  std::string propagator;
  std::filesystem::path csv;
  ObservableSeries series;
};

struct RunResult {
  Prepared prepared;
  std::vector<MemberResult> members;
  std::filesystem::path metadata;
  double wall_seconds = 0.0;
};

inline void write_csv(std::ostream& os, const ObservableSeries& s) {
  os << "t,fidelity,overlap_other_strings,matter_occupation,energy,norm_error\n";
  char buf[256];
  for (std::size_t k = 0; k < s.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", s.t[k], s.fidelity[k], s.overlap[k],
                  s.occupation[k], s.energy[k], s.norm_error[k]);
    os << buf;
  }
}

inline std::string csv_name(const Scenario& s, double plaq) {
  return s.output_prefix() + "_J" + format_number(plaq) + ".csv";
}

inline constexpr std::size_t kDenseAutoLimit = 2000;

inline MemberResult run_member(const Prepared& p, double plaq) {
  const Scenario& sc = p.scenario;
  const Lattice& lat = *p.lattice;
  const Couplings c{sc.kappa, sc.mass, sc.efield, plaq};
  const StateVector psi0 = basis_vector(p.dimension, p.initial_index);
  const KrylovOptions kopt{30, sc.krylov_tol, 40};
  MemberResult r;
  r.plaq = plaq;
  auto pick = [&](bool dense_ok) {
    if (sc.propagator == "auto") return dense_ok ? std::string("dense") : std::string("krylov");
    return sc.propagator;
  };
  if (p.minimal) {
    const DenseOperator h = build_minimal_model(*p.manifold, c, sc.minimal_cap);
    r.propagator = pick(true);
    const Trajectory tr = r.propagator == "dense" ? evolve_dense(h, psi0, sc.grid) : evolve_krylov(h, psi0, sc.grid, kopt);
    r.series = measure(h, tr, p.initial_index, p.other_strings, p.occupation);
  } else {
    const SparseOperator h = sc.is_z2() ? build_z2(lat, p.sector, c, p.layout) : build_u1_model(lat, p.sector, c);
    r.propagator = pick(p.dimension <= kDenseAutoLimit);
    const Trajectory tr = r.propagator == "dense" ? evolve_dense(h, psi0, sc.grid) : evolve_krylov(h, psi0, sc.grid, kopt);
    r.series = measure(h, tr, p.initial_index, p.other_strings, p.occupation);
  }
  return r;
}

inline nlohmann::json scenario_json(const Scenario& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["model"] = to_string(s.model);
  j["lattice"] = {{"geometry", to_string(s.lattice.geometry)},
                  {"extent_x", s.lattice.extent_x},
                  {"extent_y", s.lattice.extent_y},
                  {"boundary", to_string(s.lattice.boundary)},
                  {"parity_offset", s.lattice.parity_offset}};
  j["charges"] = {{"source", {s.source.x, s.source.y}}, {"sink", {s.sink.x, s.sink.y}}};
  j["string"] = s.shape ? nlohmann::json{{"shape", to_string(*s.shape)}} : nlohmann::json{{"path", s.path}};
  j["couplings"] = {{"kappa", s.kappa}, {"mass", s.mass}, {"efield", s.efield}, {"plaq", s.plaq}};
  j["time"] = {{"t_max", s.grid.t_max}, {"n_points", s.grid.n_points}, {"substeps", s.grid.substeps}};
  j["solver"] = {{"propagator", s.propagator},
                 {"krylov_tol", s.krylov_tol},
                 {"sector_cap", s.sector_cap},
                 {"minimal_cap", s.minimal_cap}};
  return j;
}

inline RunResult run_scenario(const Scenario& s, const RunOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult out;
  out.prepared = prepare(s, opt);
  const Prepared& p = out.prepared;
  const auto& plaqs = p.scenario.plaq;
  out.members.resize(plaqs.size());
  std::vector<std::exception_ptr> errors(plaqs.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < plaqs.size(); i = next++) {
      try {
        out.members[i] = run_member(p, plaqs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(opt.workers, static_cast<int>(plaqs.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::filesystem::create_directories(opt.out_dir);
  for (auto& m : out.members) {
    m.csv = opt.out_dir / csv_name(p.scenario, m.plaq);
    std::ofstream f(m.csv, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + m.csv.string());
    write_csv(f, m.series);
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  nlohmann::json meta;
  meta["code_version"] = kVersion;
  meta["scenario"] = scenario_json(p.scenario);
  meta["mode"] = p.minimal ? "minimal_model" : "full_ed";
  meta["dimension"] = p.dimension;
  meta["num_minimal_strings"] = p.num_strings;
  meta["initial_string"] = {{"sites", p.initial_path.sites}, {"links", p.initial_path.links}};
  meta["lattice"] = {{"sites", p.lattice->num_sites()},
                     {"links", p.lattice->num_links()},
                     {"plaquettes", p.lattice->num_plaquettes()},
                     {"periodic_y", p.lattice->periodic_y()}};
  if (p.minimal) {
    meta["manifold"] = {{"labels", p.manifold->label_count},
                        {"configurations", p.manifold->dimension()},
                        {"off_resonant", p.manifold->off_resonant}};
  } else {
    meta["sector"] = {{"dimension", p.sector.size()}, {"from_cache", p.sector_from_cache}};
  }
  std::vector<std::string> warnings;
  if (p.off_resonant()) warnings.push_back("off-resonant couplings: manifold contains only unbroken strings");
  meta["warnings"] = warnings;
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& m : out.members) {
    double norm_err = 0.0, drift = 0.0;
    for (std::size_t k = 0; k < m.series.size(); ++k) {
      norm_err = std::max(norm_err, m.series.norm_error[k]);
      drift = std::max(drift, std::abs(m.series.energy[k] - m.series.energy.front()));
    }
    runs.push_back({{"plaq", m.plaq},
                    {"csv", m.csv.filename().string()},
                    {"propagator", m.propagator},
                    {"max_norm_error", norm_err},
                    {"max_energy_drift", drift}});
  }
  meta["runs"] = runs;
  meta["workers"] = n_workers;
  meta["wall_time_seconds"] = out.wall_seconds;
  out.metadata = opt.out_dir / (p.scenario.output_prefix() + ".json");
  std::ofstream mf(out.metadata);
  mf << meta.dump(2) << '\n';
  return out;
}

}  // namespace lgt::cli
