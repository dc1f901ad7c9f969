// Command-line front end: run, converge, limit-compare.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tdscf/harness/config.hpp"
#include "tdscf/harness/converge.hpp"
#include "tdscf/harness/io.hpp"
#include "tdscf/harness/runner.hpp"
#include "tdscf/time_stepping.hpp"

namespace h = tdscf::harness;

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalFailure = 3;

struct Common {
  std::string preset;
  std::string config;
  std::map<std::string, std::string> flags;
  std::vector<std::string> sets;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--preset", c.preset, "example1 | example2 | example3 | example4");
  app->add_option("--config", c.config, "key = value or JSON configuration file");
  for (const char* key : {"epsilon", "delta", "kx", "ky", "dt", "tfinal", "out"}) {
    app->add_option_function<std::string>(std::string("--") + key,
                                           [&c, key](const std::string& v) { c.flags[key] = v; });
  }
  app->add_option("--set", c.sets, "extra override key=value, repeatable");
}

h::ExperimentConfig resolve(const Common& c) {
  h::ExperimentConfig cfg;
  if (!c.config.empty()) {
    cfg = h::load_config_file(c.config);
    if (!c.preset.empty() && cfg.preset != c.preset) throw h::ConfigError("--preset conflicts with --config");
  } else if (!c.preset.empty()) {
    cfg = h::preset(c.preset);
  } else {
    throw h::ConfigError("either --preset or --config is required");
  }
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw h::ConfigError("--set expects key=value, got '" + s + "'");
    h::apply_override(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  h::apply_overrides(cfg, c.flags);
  h::validate(cfg);
  return cfg;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(h::parse_number(item));
  if (out.empty()) throw h::ConfigError("empty value list");
  return out;
}

std::string path_in(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-splitting spectral solvers for the TDSCF and Ehrenfest systems"};
  app.require_subcommand(1);

  Common run_opts;
  auto* run = app.add_subcommand("run", "run one configuration and write trajectory, snapshot and fields");
  add_common(run, run_opts);

  Common conv_opts;
  std::string vary;
  std::string values;
  std::string reference = "auto";
  std::string ref_dt_per_scale = "1/10";
  std::string cache_dir;
  unsigned workers = 0;
  auto* conv = app.add_subcommand("converge", "error sweep against a reference solution");
  add_common(conv, conv_opts);
  conv->add_option("--vary", vary, "dt | dx | dy | epsilon")->required();
  conv->add_option("--values", values, "comma separated, e.g. 0.4/32,0.4/64")->required();
  conv->add_option("--reference", reference, "auto, or a configuration file for the reference run");
  conv->add_option("--ref-dt-per-scale", ref_dt_per_scale, "epsilon sweeps: reference dt / scale");
  conv->add_option("--cache", cache_dir, "directory for cached reference snapshots");
  conv->add_option("--workers", workers, "worker threads, 0 = all cores");

  Common lim_opts;
  std::string epsilons;
  std::string dt_coarse = "0.54/64";
  std::string dt_fine = "0.135";
  auto* lim = app.add_subcommand("limit-compare", "quantum densities against the classical pushforward");
  add_common(lim, lim_opts);
  lim->add_option("--epsilons", epsilons, "comma separated list")->required();
  lim->add_option("--dt-coarse", dt_coarse, "epsilon-independent time step");
  lim->add_option("--dt-fine-per-scale", dt_fine, "fine time step divided by epsilon");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run) {
      const auto cfg = resolve(run_opts);
      const auto out = h::run_experiment(cfg);
      h::write_artifacts(out, cfg.output);
      std::cout << "wrote " << cfg.output << "\n";
    } else if (*conv) {
      const auto cfg = resolve(conv_opts);
      h::ReferencePolicy policy;
      policy.dt_per_scale = h::parse_number(ref_dt_per_scale);
      policy.cache_dir = cache_dir;
      if (reference != "auto") {
        policy.kind = h::ReferencePolicy::Kind::explicit_config;
        policy.config = h::load_config_file(reference);
      }
      const auto result = h::converge(cfg, h::parse_vary(vary), parse_list(values), policy, workers);
      h::write_csv(result.table(), path_in(cfg.output, "sweep.csv"));
      h::write_csv(result.fit_table(), path_in(cfg.output, "sweep_fit.csv"));
      std::cout << "order wf " << h::format_double(result.fit_wf.order) << " (residual "
                << h::format_double(result.fit_wf.residual) << "), rho " << h::format_double(result.fit_rho.order)
                << " (residual " << h::format_double(result.fit_rho.residual) << ")\n";
    } else if (*lim) {
      const auto cfg = resolve(lim_opts);
      h::LimitOptions options;
      options.dt_coarse = h::parse_number(dt_coarse);
      options.dt_fine_per_scale = h::parse_number(dt_fine);
      const auto rows = h::limit_compare(cfg, parse_list(epsilons), options);
      h::write_csv(h::limit_table(rows), path_in(cfg.output, "limit.csv"));
      std::cout << "wrote " << path_in(cfg.output, "limit.csv") << "\n";
    }
  } catch (const h::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const tdscf::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
