// lgtstrings: run string-dynamics scenarios and inspect their manifolds.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "lgt/scenario.hpp"

namespace fs = std::filesystem;
using namespace lgt;
using namespace lgt::cli;

namespace {

// A scenario argument is a config file if it exists on disk, a preset name
// otherwise.
Scenario resolve(const std::string& arg) {
  if (fs::exists(arg)) return load_scenario(arg);
  if (auto p = find_preset(arg)) return *p;
  throw ConfigError(arg, 0, "", "no such file or preset");
}

int cmd_run(const std::string& arg, const RunOptions& opt) {
  const RunResult r = run_scenario(resolve(arg), opt);
  const Prepared& p = r.prepared;
  if (p.off_resonant()) std::cerr << "warning: off-resonant couplings, manifold contains only unbroken strings\n";
  std::cout << "mode " << (p.minimal ? "minimal_model" : "full_ed") << ", dimension " << p.dimension << '\n';
  for (const auto& m : r.members) std::cout << "wrote " << m.csv.string() << " (" << m.propagator << ")\n";
  std::cout << "wrote " << r.metadata.string() << '\n';
  return exit_ok;
}

int cmd_validate(const std::string& path, const RunOptions& opt) {
  const Scenario s = load_scenario(path);
  const Prepared p = prepare(s, opt);
  std::cout << "ok\n"
            << "model " << to_string(p.scenario.model) << '\n'
            << "lattice " << p.lattice->describe() << " (" << p.lattice->num_sites() << " sites, "
            << p.lattice->num_links() << " links, " << p.lattice->num_plaquettes() << " plaquettes)\n"
            << "string length " << p.initial_path.length() << '\n'
            << "minimal strings " << p.num_strings << '\n'
            << "dimension " << p.dimension << '\n';
  if (p.minimal) std::cout << "labels " << p.manifold->label_count << '\n';
  if (p.off_resonant()) std::cout << "warning: off-resonant couplings\n";
  return exit_ok;
}

int cmd_export(const std::string& arg, const std::string& out, const RunOptions& opt) {
  Scenario s = resolve(arg);
  if (s.model != ModelKind::minimal_model) throw ConfigError(arg, 0, "scenario.model", "export-manifold needs minimal_model");
  const Prepared p = prepare(s, opt);
  if (out.empty() || out == "-") {
    export_manifold(std::cout, *p.manifold);
  } else {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write " + out);
    export_manifold(f, *p.manifold);
  }
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"String dynamics in 2+1D lattice gauge theories"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  RunOptions opt;
  std::size_t sector_cap = 0, minimal_cap = 0;
  std::string out_dir = ".", cache_dir, propagator;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--sector-cap", sector_cap, "Maximum full-ED sector dimension");
    sub->add_option("--minimal-cap", minimal_cap, "Maximum minimal-model dimension");
    sub->add_option("--cache-dir", cache_dir, "Sector cache directory (LGT_CACHE_DIR overrides)");
    sub->add_option("--propagator", propagator, "auto, dense or krylov")->check(CLI::IsMember({"auto", "dense", "krylov"}));
  };

  std::string target;
  auto* run = app.add_subcommand("run", "Run a config file or preset");
  run->add_option("scenario", target, "Config file or preset name")->required();
  run->add_option("-o,--out", out_dir, "Output directory");
  run->add_option("-j,--workers", opt.workers, "Parallel sweep members")->check(CLI::PositiveNumber);
  add_common(run);

  auto* list = app.add_subcommand("presets", "List presets");
  std::string dump;
  list->add_option("--dump", dump, "Print a preset as a config file");

  auto* validate = app.add_subcommand("validate", "Check a config file without running");
  validate->add_option("config", target, "Config file")->required()->check(CLI::ExistingFile);
  add_common(validate);

  std::string manifold_out;
  auto* exp = app.add_subcommand("export-manifold", "Write the minimal-model manifold as text");
  exp->add_option("scenario", target, "Config file or preset name")->required();
  exp->add_option("-o,--out", manifold_out, "Output file (default stdout)");
  add_common(exp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_parse_error;
  }

  opt.out_dir = out_dir;
  opt.cache_dir = cache_dir;
  if (sector_cap) opt.sector_cap = sector_cap;
  if (minimal_cap) opt.minimal_cap = minimal_cap;
  if (!propagator.empty()) opt.propagator = propagator;

  try {
    if (*run) return cmd_run(target, opt);
    if (*validate) return cmd_validate(target, opt);
    if (*exp) return cmd_export(target, manifold_out, opt);
    if (*list) {
      if (dump.empty()) {
        std::cout << list_presets();
      } else {
        auto p = find_preset(dump);
        if (!p) throw ConfigError(dump, 0, "", "no such preset");
        std::cout << format_scenario(*p);
      }
      return exit_ok;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return exit_failure;
}
