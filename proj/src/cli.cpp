#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "mddra/harness.hpp"

namespace mddra::harness {

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct CommonOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> schemes;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config, "YAML config file");
  cmd->add_option("--set", o.overrides, "Override a config key: section.key=value")->take_all();
  cmd->add_option("--seeds", o.seeds, "Seeds (overrides experiment.seeds)")->delimiter(',');
  cmd->add_option("--out", o.out, "Output directory (overrides experiment.output_dir)");
}

ExperimentConfig resolve(const CommonOptions& o) {
  std::optional<std::filesystem::path> path;
  if (!o.config.empty()) path = o.config;
  ExperimentConfig cfg = load_config(path, o.overrides);
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (!o.schemes.empty()) cfg.schemes = o.schemes;
  if (!o.out.empty()) cfg.output_dir = o.out;
  cfg.validate();
  return cfg;
}

}  // namespace

int cli(int argc, const char* const* argv) {
  CLI::App app{"Desk-scale IREE resource allocation simulator"};
  app.require_subcommand(1);
  CommonOptions opt;
  std::vector<std::string> axes;

  auto* version = app.add_subcommand("version", "Print the version");
  auto* simulate = app.add_subcommand("simulate", "Emit the evolved density and traffic fields");
  add_common(simulate, opt);
  auto* optimize = app.add_subcommand("optimize", "Run MDDRA and the selected baselines");
  add_common(optimize, opt);
  optimize->add_option("--schemes", opt.schemes, "Schemes: mddra, 1-4 or baseline tags")->delimiter(',');
  auto* sweep = app.add_subcommand("sweep", "Parameter sweep, one result file per point");
  add_common(sweep, opt);
  sweep->add_option("--schemes", opt.schemes, "Schemes: mddra, 1-4 or baseline tags")->delimiter(',');
  sweep->add_option("--axis", axes, "Axis name=lo:hi:n or name=v1,v2 (Ve, Ta, zeta_min, Pmax, users_ratio)");
  auto* validate = app.add_subcommand("validate", "Run the invariant and oracle checks");
  add_common(validate, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitConfig;
  }

  try {
    if (version->parsed()) {
      std::cout << kVersion << '\n';
      return 0;
    }
    ExperimentConfig cfg = resolve(opt);
    if (simulate->parsed()) {
      std::filesystem::create_directories(cfg.output_dir);
      for (auto seed : cfg.seeds) {
        WorldConfig wc = cfg.world;
        wc.seed = seed;
        const World w = make_world(wc);
        const auto path = cfg.output_dir / ("traffic_seed" + std::to_string(seed) + ".csv");
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
        emit_traffic(w, os);
        std::cout << path.string() << '\n';
      }
      return 0;
    }
    if (optimize->parsed()) {
      const auto result = run_experiment(cfg);
      emit_results(result, cfg, cfg.output_dir);
      for (const auto& name : cfg.schemes) {
        const std::string tag = resolve_scheme(name, cfg.mddra).name;
        std::cout << tag << " mean final eta_T = " << format_double(seed_mean(result, tag)) << " bits/J\n";
      }
      std::cout << "config hash " << result.config_hash << ", results in " << cfg.output_dir.string() << '\n';
      return 0;
    }
    if (sweep->parsed()) {
      for (const auto& a : axes) cfg.axes.push_back(parse_axis(a));
      if (cfg.axes.empty()) throw ConfigError("sweep: give at least one --axis or experiment.sweep entry");
      const auto points = run_sweep(cfg, cfg.output_dir);
      for (const auto& p : points) std::cout << p.file.string() << '\n';
      return 0;
    }
    if (validate->parsed()) {
      bool all = true;
      for (const auto& c : run_checks(cfg)) {
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
        all = all && c.pass;
      }
      return all ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace mddra::harness
