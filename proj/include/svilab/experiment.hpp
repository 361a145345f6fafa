#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "svilab/asymptotics.hpp"
#include "svilab/config.hpp"
#include "svilab/diagnostics.hpp"

namespace svi {

const char* code_version();

struct Instance {
  StochasticVIProblem problem;
  NLPProblem nlp;
  Manifold manifold;
  Vec solution;
};

Instance make_instance(const ExperimentConfig& cfg);
// Built-in instance with default parameters.
Instance make_instance(const std::string& name);

SolverConfig solver_config(const ExperimentConfig& cfg);

// Tangent variance of sqrt(k)(x_k - x*) over SAA replications.
struct SAAStudy {
  long samples = 0;
  int replications = 0;
  Mat deviations;
  Mat tangent_basis;
  Vec tangent_variance;
  Mat empirical_covariance;
  Mat covariance_stderr;
  double max_residual = 0.0;
  long max_inner_iterations = 0;
};

SAAStudy saa_study(const StochasticVIProblem& p, const Vec& x_star, const Mat& tangent_projector,
                   long k, int replications, std::uint64_t master_seed, double tol, int threads);

// JSON schemas of the emitted reports.
nlohmann::json to_json(const AsymptoticsReport& r);
nlohmann::json to_json(const CLTReport& r);
nlohmann::json to_json(const SAAStudy& r);
nlohmann::json to_json(const DecayReport& r);
nlohmann::json to_json(const ShadowReport& r);
nlohmann::json to_json(const RegularityReport& r);

// CSV dumps: comma-separated, header row, LF endings, %.17g floats.
std::string deviations_csv(const Mat& deviations);
std::string ecdf_csv(const CLTReport& r);
std::string histogram_csv(const CLTReport& r, int bins = 24);
std::string decay_csv(const DecayReport& r);
std::string shadow_csv(const ShadowReport& r);
std::string regularity_csv(const RegularityReport& r);

std::string sha256_hex(const std::string& bytes);

struct StageRecord {
  std::string name;
  std::string status;  // ok | error
  double seconds = 0.0;
  std::string error;
};

struct EmittedFile {
  std::string name;
  std::string sha256;
  std::size_t bytes = 0;
};

struct OutputBundle {
  std::string output_dir;
  std::string config_hash;
  std::vector<StageRecord> stages;
  std::vector<EmittedFile> files;
  nlohmann::json reports;  // report name -> JSON, for completed stages
  int exit_code = 0;
};

struct RunOptions {
  int threads = 0;
  bool write_files = true;
};

// KKT analysis -> predicted covariance -> solver runs -> diagnostics -> emit.
// Each stage is isolated: a failure is recorded and later independent
// stages still run. exit_code is 0 iff no stage failed.
OutputBundle run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

}  // namespace svi
