// Command-line experiment runner.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "svilab/error.hpp"
#include "svilab/experiment.hpp"

namespace {

struct Flags {
  std::string config;
  std::string instance;
  std::string out;
  long long seed = -1;
  int threads = 0;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "Experiment config file");
  cmd->add_option("--instance", f.instance, "Built-in instance: two_ball, quadratic, box_linear");
  cmd->add_option("--seed", f.seed, "Master seed (overrides the config)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", f.out, "Output directory (overrides the config)");
  cmd->add_option("--threads", f.threads, "Worker threads (default: SVILAB_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);
}

std::string format_value(const nlohmann::json& v) {
  if (v.is_number_float()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v.get<double>());
    return buf;
  }
  if (v.is_array()) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_value(v[i]);
    return s + "]";
  }
  if (v.is_null()) return "nan";
  return v.dump();
}

void print_summary(const std::string& name, const nlohmann::json& r) {
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"kkt", {"active_set", "multipliers", "licq_min_singular_value", "sc_margin", "sosc_min_eig",
               "stationarity_residual", "tangent_dim", "predicted_covariance", "warnings"}},
      {"clt", {"included", "excluded", "predicted_variance_tangent", "empirical_variance_tangent",
               "ks_statistics", "ks_critical_value_5pct", "mean_normal_norm",
               "early_mean_normal_norm", "tangent_to_normal_ratio"}},
      {"saa", {"samples", "replications", "empirical_variance_tangent", "sfb_variance_tangent",
               "relative_difference_tangent", "max_residual"}},
      {"decay", {"k0", "delta", "replications", "slope", "degenerate", "fit_points", "exit_fraction"}},
      {"shadow", {"slope", "degenerate", "fit_points", "projected_noise_mean",
                  "projected_noise_stderr", "projected_noise_count"}},
      {"regularity", {"used", "aiming_margin", "e1_constant", "b_leq_ratio", "strong_a_ratio",
                      "stratum_min_aiming", "aiming_nonmonotone"}},
  };
  std::cout << "[" << name << "]\n";
  for (const auto& k : keys.at(name))
    if (r.contains(k)) std::cout << k << " " << format_value(r[k]) << "\n";
}

int execute(const std::string& sub, const Flags& f) {
  svi::ExperimentConfig cfg;
  if (!f.config.empty()) cfg = svi::load_config(f.config);
  else if (sub == "run") throw svi::ConfigError("config", "run needs --config");
  if (!f.instance.empty()) cfg.instance = f.instance;
  if (f.seed >= 0) cfg.seed = static_cast<std::uint64_t>(f.seed);
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (sub != "run") {
    cfg.diagnostics = {sub};
    if (sub == "clt" || sub == "saa") cfg.diagnostics = {"kkt", sub};
  }
  cfg.validate();

  svi::RunOptions opts;
  opts.threads = f.threads;
  opts.write_files = sub == "run" || !f.out.empty();
  const svi::OutputBundle b = svi::run_experiment(cfg, opts);

  for (const std::string& name : svi::known_diagnostics())
    if (b.reports.contains(name) && (sub == "run" || name == sub)) print_summary(name, b.reports[name]);
  for (const auto& s : b.stages)
    if (s.status != "ok") std::cerr << "stage " << s.name << " failed: " << s.error << "\n";
  if (opts.write_files) std::cout << "wrote " << b.files.size() + 1 << " files to " << b.output_dir << "\n";
  return b.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic variational inequality experiments"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"run", "Run every diagnostic listed in a config"},
      {"kkt", "KKT analysis and predicted covariance"},
      {"clt", "Monte Carlo CLT of averaged iterates"},
      {"saa", "Sample average approximation replications"},
      {"decay", "Distance-to-manifold decay"},
      {"shadow", "Shadow-sequence residuals"},
      {"regularity", "Sampled aiming and regularity constants"},
  };
  for (const auto& [name, help] : subs) add_flags(app.add_subcommand(name, help), flags);
  CLI11_PARSE(app, argc, argv);

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    return execute(sub, flags);
  } catch (const svi::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
