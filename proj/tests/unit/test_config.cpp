#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "svilab/error.hpp"
#include "svilab/experiment.hpp"

using namespace svi;

namespace {

std::string error_key(const std::string& text) {
  try {
    config_from_text(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("svilab_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Config, ParsesSectionsListsAndComments) {
  const ExperimentConfig c = config_from_text(R"(
# comment
instance = "two_ball"   # trailing comment
K = 1e4
R = 12
diagnostics = ["kkt", "clt"]
[schedule]
gamma = 0.8
c = 0.5
[decay]
delta = 0.25
)");
  EXPECT_EQ(c.K, 10000);
  EXPECT_EQ(c.R, 12);
  EXPECT_DOUBLE_EQ(c.schedule_gamma, 0.8);
  EXPECT_DOUBLE_EQ(c.schedule_c, 0.5);
  EXPECT_DOUBLE_EQ(c.decay_delta, 0.25);
  EXPECT_EQ(c.diagnostics, (std::vector<std::string>{"kkt", "clt"}));
}

TEST(Config, ErrorsNameTheOffendingKey) {
  EXPECT_EQ(error_key("schedule.gamma = 1.2\n"), "gamma");
  EXPECT_EQ(error_key("[schedule]\ngamma = 0.5\n"), "gamma");
  EXPECT_EQ(error_key("K = 5\n"), "K");
  EXPECT_EQ(error_key("R = 0\n"), "R");
  EXPECT_EQ(error_key("K = 10.5\n"), "K");
  EXPECT_EQ(error_key("bogus = 1\n"), "bogus");
  EXPECT_EQ(error_key("instance = 3\n"), "instance");
  EXPECT_EQ(error_key("instance = \"moon\"\n"), "instance");
  EXPECT_EQ(error_key("diagnostics = [\"clt\", \"nope\"]\n"), "diagnostics");
  EXPECT_EQ(error_key("K = 100\nK = 200\n"), "K");
  EXPECT_EQ(error_key("seed = -1\n"), "seed");
  EXPECT_EQ(error_key("K = 500\ndiagnostics = [\"decay\"]\n"), "decay.k0");
  EXPECT_NO_THROW(config_from_text("K = 500\ndiagnostics = [\"clt\"]\n"));
  EXPECT_EQ(error_key("nlp.constraint.1.color = 2\n"), "nlp.constraint.1.color");
  EXPECT_EQ(error_key("instance = \"inline\"\nnlp.dim = 2\nnlp.linear = [1]\nnlp.solution = [0, 0]\n"),
            "nlp.linear");
  try {
    config_from_text("schedule.gamma = 1.2\n");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("gamma"), std::string::npos);
  }
}

TEST(Config, CanonicalFormRoundTrips) {
  const ExperimentConfig a = config_from_text("K = 2000\nseed = 9\n[schedule]\ngamma = 0.7\n");
  const ExperimentConfig b = config_from_text(a.canonical());
  EXPECT_EQ(a.canonical(), b.canonical());
  EXPECT_NE(a.canonical(), config_from_text("K = 2000\nseed = 10\n").canonical());
}

TEST(Config, BundledConfigLoads) {
  const ExperimentConfig c = load_config(SVILAB_SOURCE_DIR "/configs/two_ball_figure1.toml");
  EXPECT_EQ(c.instance, "two_ball");
  EXPECT_EQ(c.K, 100000);
  EXPECT_EQ(c.R, 200);
  EXPECT_DOUBLE_EQ(c.schedule_gamma, 0.75);
}

TEST(Instances, InlineNLPReproducesTwoBall) {
  const ExperimentConfig c = config_from_text(R"(
instance = "inline"
[nlp]
dim = 3
linear = [0, 0, -1]
noise_scale = 1.0
solution = [0, 0, 1.7320508075688772]
constraint.1.kind = "ball"
constraint.1.center = [-1, 0, 0]
constraint.1.radius = 2
constraint.2.kind = "ball"
constraint.2.center = [1, 0, 0]
constraint.2.radius = 2
)");
  const Instance inst = make_instance(c);
  const AsymptoticsReport r = predicted_covariance(inst.problem, inst.nlp, inst.solution);
  EXPECT_EQ(r.kkt.active_set, (std::vector<int>{0, 1}));
  EXPECT_NEAR(r.kkt.multipliers(0), 1.0 / (4.0 * std::sqrt(3.0)), 1e-10);
  EXPECT_NEAR(r.predicted_covariance(1, 1), 3.0, 1e-10);
  EXPECT_EQ(inst.manifold.codim, 2);
  EXPECT_FALSE(inst.manifold.closed_form_projection.has_value());
}

TEST(Instances, InlineBoxAndHalfspace) {
  const ExperimentConfig c = config_from_text(R"(
instance = "inline"
nlp.dim = 2
nlp.linear = [1, -1]
nlp.quadratic = [0, 0]
nlp.noise_scale = 0
nlp.solution = [0, 1]
nlp.constraint.1.kind = "box"
nlp.constraint.1.lo = [0, 0]
nlp.constraint.1.hi = [1, 1]
nlp.constraint.2.kind = "halfspace"
nlp.constraint.2.normal = [1, 1]
nlp.constraint.2.offset = 1.5
)");
  const Instance inst = make_instance(c);
  const KKTReport k = analyze_kkt(inst.nlp, inst.solution);
  EXPECT_EQ(k.active_set.size(), 2u);
  EXPECT_EQ(k.tangent_dim, 0);
}

TEST(Experiment, KKTReportSchema) {
  ExperimentConfig c;
  c.diagnostics = {"kkt"};
  RunOptions o;
  o.write_files = false;
  const OutputBundle b = run_experiment(c, o);
  EXPECT_EQ(b.exit_code, 0);
  const auto& r = b.reports["kkt"];
  for (const char* k : {"active_set", "multipliers", "licq_min_singular_value", "sc_margin",
                        "sosc_min_eig", "tangent_dim", "predicted_covariance"})
    EXPECT_TRUE(r.contains(k)) << k;
  EXPECT_EQ(r["active_set"], nlohmann::json({1, 2}));
  EXPECT_NEAR(r["sosc_min_eig"].get<double>(), 0.5773502691896258, 1e-10);
}

TEST(Experiment, RerunIsByteIdentical) {
  ExperimentConfig c = config_from_text(R"(
K = 2000
R = 12
seed = 5
diagnostics = ["kkt", "clt", "saa", "decay", "shadow", "regularity"]
saa.k = 200
saa.R = 6
decay.R = 60
decay.k0 = 100
regularity.N = 120
)");
  const auto d1 = temp_dir("rerun1"), d2 = temp_dir("rerun2");
  c.output_dir = d1.string();
  RunOptions one;
  one.threads = 1;
  const OutputBundle b1 = run_experiment(c, one);
  c.output_dir = d2.string();
  RunOptions many;
  many.threads = 3;
  const OutputBundle b2 = run_experiment(c, many);
  EXPECT_EQ(b1.exit_code, 0);
  for (const auto& s : b1.stages) EXPECT_EQ(s.status, "ok") << s.name << ": " << s.error;
  ASSERT_EQ(b1.files.size(), b2.files.size());
  for (std::size_t i = 0; i < b1.files.size(); ++i) {
    EXPECT_EQ(b1.files[i].name, b2.files[i].name);
    EXPECT_EQ(b1.files[i].sha256, b2.files[i].sha256) << b1.files[i].name;
    EXPECT_EQ(slurp(d1 / b1.files[i].name), slurp(d2 / b2.files[i].name));
    EXPECT_EQ(sha256_hex(slurp(d1 / b1.files[i].name)), b1.files[i].sha256);
  }
  EXPECT_TRUE(std::filesystem::exists(d1 / "manifest.json"));
  const std::string csv = slurp(d1 / "clt_deviations.csv");
  EXPECT_EQ(csv.rfind("rep,coord,value\n", 0), 0u);
  EXPECT_EQ(csv.find('\r'), std::string::npos);
}

TEST(Experiment, FailingStageDoesNotBlockEarlierOutputs) {
  ExperimentConfig c = config_from_text(R"(
K = 500
R = 4
diagnostics = ["kkt", "decay"]
decay.delta = 0
decay.k0 = 10
decay.R = 60
)");
  const auto d = temp_dir("isolation");
  c.output_dir = d.string();
  const OutputBundle b = run_experiment(c);
  EXPECT_EQ(b.exit_code, 1);
  EXPECT_TRUE(std::filesystem::exists(d / "kkt_report.json"));
  EXPECT_FALSE(std::filesystem::exists(d / "decay_report.json"));
  bool saw_error = false;
  for (const auto& s : b.stages)
    if (s.name == "decay") saw_error = s.status == "error" && !s.error.empty();
  EXPECT_TRUE(saw_error);
}

TEST(Hash, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
