#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "svilab/asymptotics.hpp"

namespace svi {

// Flat `key = value` text. `[section]` lines prefix the keys that follow
// with "section."; `#` starts a comment. Values are numbers, booleans,
// double-quoted strings, or bracketed lists of numbers or strings.
using ConfigValue =
    std::variant<double, bool, std::string, std::vector<double>, std::vector<std::string>>;
using ConfigTable = std::map<std::string, ConfigValue>;

ConfigTable parse_config_text(const std::string& text);

enum class ConstraintShape { kBall, kBox, kHalfspace };

struct InlineConstraint {
  ConstraintShape shape = ConstraintShape::kBall;
  std::vector<double> center;  // ball
  double radius = 1.0;
  std::vector<double> lo, hi;  // box
  std::vector<double> normal;  // halfspace <normal, x> <= offset
  double offset = 0.0;
};

// 0.5 sum_i q_i x_i^2 + <b + noise_scale z, x>, z ~ N(0, I).
struct InlineNLP {
  int dim = 0;
  std::vector<double> linear;
  std::vector<double> quadratic;  // diagonal; empty means zero
  double noise_scale = 1.0;
  std::vector<double> solution;
  double chart_radius = 1.0;
  std::vector<InlineConstraint> constraints;
};

struct ExperimentConfig {
  std::string instance = "two_ball";  // two_ball | quadratic | box_linear | inline
  double schedule_c = 1.0;
  double schedule_gamma = 0.75;
  long K = 100000;
  int R = 200;
  std::uint64_t seed = 1;
  long burn_in = 1;
  std::vector<std::string> diagnostics{"kkt", "clt"};
  std::string output_dir = "out";

  KKTTolerances tol;
  long mc_samples = 100000;

  long saa_k = 10000;
  int saa_R = 200;
  double saa_tol = 1e-8;

  long decay_k0 = 1000;
  double decay_delta = 0.5;
  int decay_R = 100;

  int regularity_N = 1000;
  double regularity_delta = 0.3;
  double regularity_min_distance = 1e-4;
  double regularity_alpha = 1e-6;

  std::vector<double> quadratic_mu{0.0, 0.0, 0.0};
  std::vector<double> box_c{1.0, -1.0};
  InlineNLP nlp;

  // Throws ConfigError naming the first offending key.
  void validate() const;
  // Sorted key = value dump of every effective setting; hashed into the manifest.
  std::string canonical() const;
};

// Unknown keys, wrong types and out-of-range values raise ConfigError.
ExperimentConfig config_from_table(const ConfigTable& table);
ExperimentConfig config_from_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

const std::vector<std::string>& known_diagnostics();

}  // namespace svi
