#include "svilab/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>

#include "svilab/error.hpp"
#include "svilab/parallel.hpp"

#ifndef SVILAB_VERSION
#define SVILAB_VERSION "0.0.0"
#endif

namespace svi {

using nlohmann::json;

const char* code_version() { return SVILAB_VERSION; }

namespace {

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

NLPProblem build_inline_nlp(const InlineNLP& desc) {
  const int d = desc.dim;
  const Vec b = to_vec(desc.linear);
  const Vec q = desc.quadratic.empty() ? Vec(Vec::Zero(d)) : to_vec(desc.quadratic);
  const double s = desc.noise_scale;
  NLPProblem nlp;
  nlp.name = "inline";
  nlp.dim = d;
  nlp.objective.sample_value = [b, q, s](const Vec& x, const Vec& z) {
    return 0.5 * x.dot(q.cwiseProduct(x)) + (b + s * z).dot(x);
  };
  nlp.objective.sample_gradient = [b, q, s](const Vec& x, const Vec& z) -> Vec {
    return q.cwiseProduct(x) + b + s * z;
  };
  nlp.objective.mean_value = [b, q](const Vec& x) { return 0.5 * x.dot(q.cwiseProduct(x)) + b.dot(x); };
  nlp.objective.mean_gradient = [b, q](const Vec& x) -> Vec { return q.cwiseProduct(x) + b; };
  nlp.objective.mean_hessian = [q](const Vec&) -> Mat { return q.asDiagonal(); };
  nlp.draw = [d](Sampler& smp) { return smp.normal_vec(d); };
  nlp.gradient_noise_covariance = Mat(s * s * Mat::Identity(d, d));
  nlp.solution_hint = to_vec(desc.solution);
  for (const auto& ic : desc.constraints) {
    switch (ic.shape) {
      case ConstraintShape::kBall:
        nlp.constraints.push_back(ball_constraint(to_vec(ic.center), ic.radius));
        break;
      case ConstraintShape::kBox:
        for (auto& c : box_constraints(to_vec(ic.lo), to_vec(ic.hi))) nlp.constraints.push_back(c);
        break;
      case ConstraintShape::kHalfspace:
        nlp.constraints.push_back(halfspace_constraint(to_vec(ic.normal), ic.offset));
        break;
    }
  }
  return nlp;
}

Instance from_nlp(NLPProblem nlp, const KKTTolerances& tol, double chart_radius) {
  Instance inst;
  inst.solution = *nlp.solution_hint;
  const auto active = active_set(nlp, inst.solution, tol.active);
  inst.manifold = active.empty() ? full_space_manifold(nlp.dim)
                                 : active_constraint_manifold(nlp, active, chart_radius);
  inst.problem = nlp_to_vi(nlp);
  inst.nlp = std::move(nlp);
  return inst;
}

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Instance make_instance(const ExperimentConfig& cfg) {
  if (cfg.instance == "two_ball") {
    TwoBallInstance tb = build_two_ball_instance();
    return {std::move(tb.problem), std::move(tb.nlp), std::move(tb.manifold), tb.solution};
  }
  if (cfg.instance == "quadratic") {
    NLPProblem nlp = build_quadratic_instance(to_vec(cfg.quadratic_mu));
    return from_nlp(std::move(nlp), cfg.tol, 1.0);
  }
  if (cfg.instance == "box_linear") return from_nlp(build_box_linear_instance(to_vec(cfg.box_c)), cfg.tol, 1.0);
  if (cfg.instance == "inline") return from_nlp(build_inline_nlp(cfg.nlp), cfg.tol, cfg.nlp.chart_radius);
  throw ConfigError("instance", "unknown instance '" + cfg.instance + "'");
}

Instance make_instance(const std::string& name) {
  ExperimentConfig cfg;
  cfg.instance = name;
  if (name == "inline") throw ConfigError("instance", "inline instances need a config file");
  return make_instance(cfg);
}

SolverConfig solver_config(const ExperimentConfig& cfg) {
  SolverConfig s;
  s.schedule = StepSchedule(cfg.schedule_c, cfg.schedule_gamma);
  s.iterations = cfg.K;
  s.seed = cfg.seed;
  s.burn_in = cfg.burn_in;
  return s;
}

SAAStudy saa_study(const StochasticVIProblem& p, const Vec& x_star, const Mat& tangent_projector,
                   long k, int replications, std::uint64_t master_seed, double tol, int threads) {
  if (replications < 2) throw std::invalid_argument("SAA study needs at least two replications");
  std::vector<SAAResult> results(static_cast<std::size_t>(replications));
  SAASettings settings;
  settings.tol = tol;
  parallel_for(results.size(), threads, [&](std::size_t r) {
    results[r] = run_saa(p, k, derive_seed(master_seed, "saa", r), settings);
  });
  SAAStudy out;
  out.samples = k;
  out.replications = replications;
  out.deviations.resize(replications, p.dim);
  const double sk = std::sqrt(static_cast<double>(k));
  for (int r = 0; r < replications; ++r) {
    const auto& res = results[static_cast<std::size_t>(r)];
    out.deviations.row(r) = (sk * (res.solution - x_star)).transpose();
    out.max_residual = std::max(out.max_residual, res.residual);
    out.max_inner_iterations = std::max(out.max_inner_iterations, res.iterations);
  }
  out.tangent_basis = range_basis(tangent_projector);
  sample_covariance(out.deviations, out.empirical_covariance, out.covariance_stderr);
  out.tangent_variance =
      (out.tangent_basis.transpose() * out.empirical_covariance * out.tangent_basis).diagonal();
  return out;
}

// ---------------------------------------------------------------------------

json to_json(const AsymptoticsReport& r) {
  json j;
  std::vector<int> active;
  for (int i : r.kkt.active_set) active.push_back(i + 1);
  j["active_set"] = active;
  j["multipliers"] = vector_json(r.kkt.multipliers);
  j["licq_ok"] = r.kkt.licq_ok;
  j["licq_min_singular_value"] = r.kkt.licq_min_singular_value;
  j["sc_margin"] = r.kkt.sc_margin;
  j["sosc_min_eig"] = r.kkt.sosc_min_eig;
  j["stationarity_residual"] = r.kkt.stationarity_residual;
  j["tangent_dim"] = r.kkt.tangent_dim;
  j["tangent_projector"] = matrix_json(r.tangent_projector);
  j["tangent_basis"] = matrix_json(r.tangent_basis);
  j["covariant_hessian"] = matrix_json(r.covariant_hessian);
  j["solution_jacobian"] = matrix_json(r.solution_jacobian);
  j["noise_covariance"] = matrix_json(r.noise_covariance);
  j["noise_covariance_stderr"] = matrix_json(r.noise_covariance_stderr);
  j["noise_covariance_closed_form"] = r.noise_covariance_closed_form;
  j["predicted_covariance"] = matrix_json(r.predicted_covariance);
  j["warnings"] = r.warnings;
  return j;
}

json to_json(const CLTReport& r) {
  json j;
  j["replications"] = r.replications;
  j["included"] = r.replications - r.excluded;
  j["excluded"] = r.excluded;
  j["horizon"] = r.horizon;
  j["early_horizon"] = r.early_horizon;
  j["solution"] = vector_json(r.solution);
  j["tangent_basis"] = matrix_json(r.tangent_basis);
  j["predicted_covariance"] = matrix_json(r.predicted_covariance);
  j["empirical_covariance"] = matrix_json(r.empirical_covariance);
  j["covariance_stderr"] = matrix_json(r.covariance_stderr);
  j["predicted_variance_tangent"] = vector_json(r.predicted_tangent_variance);
  j["empirical_variance_tangent"] = vector_json(r.empirical_tangent_variance);
  const double n = static_cast<double>(r.replications - r.excluded);
  // Standard error of a Gaussian sample variance at the predicted value.
  j["variance_stderr_tangent"] =
      vector_json(r.predicted_tangent_variance * std::sqrt(2.0 / std::max(1.0, n - 1.0)));
  j["ks_statistics"] = r.ks_statistics;
  j["ks_critical_value_5pct"] = 1.36 / std::sqrt(n);
  j["mean_normal_norm"] = r.mean_normal_norm;
  j["early_mean_normal_norm"] = r.early_mean_normal_norm;
  j["tangent_variance"] = r.tangent_variance;
  j["normal_variance"] = r.normal_variance;
  j["tangent_to_normal_ratio"] =
      r.normal_variance > 0.0 ? r.tangent_variance / r.normal_variance
                              : std::numeric_limits<double>::infinity();
  j["failures"] = r.failures;
  return j;
}

json to_json(const SAAStudy& r) {
  json j;
  j["samples"] = r.samples;
  j["replications"] = r.replications;
  j["tangent_basis"] = matrix_json(r.tangent_basis);
  j["empirical_variance_tangent"] = vector_json(r.tangent_variance);
  j["empirical_covariance"] = matrix_json(r.empirical_covariance);
  j["covariance_stderr"] = matrix_json(r.covariance_stderr);
  j["max_residual"] = r.max_residual;
  j["max_inner_iterations"] = r.max_inner_iterations;
  return j;
}

json to_json(const DecayReport& r) {
  json j;
  j["k0"] = r.k0;
  j["delta"] = r.delta;
  j["replications"] = r.replications;
  j["ks"] = r.ks;
  j["mean_sq_distance"] = r.mean_sq_distance;
  j["survivors"] = r.survivors;
  j["slope"] = r.slope;
  j["degenerate"] = r.degenerate;
  j["fit_points"] = r.fit_points;
  j["exit_fraction"] = r.exit_fraction;
  return j;
}

json to_json(const ShadowReport& r) {
  json j;
  j["ks"] = r.ks;
  j["alphas"] = r.alphas;
  j["mean_sq_residual"] = r.mean_sq_residual;
  j["survivors"] = r.survivors;
  j["slope"] = r.slope;
  j["degenerate"] = r.degenerate;
  j["fit_points"] = r.fit_points;
  j["projected_noise_mean"] = vector_json(r.projected_noise_mean);
  j["projected_noise_stderr"] = vector_json(r.projected_noise_stderr);
  j["projected_noise_count"] = r.projected_noise_count;
  return j;
}

json to_json(const RegularityReport& r) {
  json j;
  j["requested"] = r.requested;
  j["used"] = r.used;
  j["aiming_margin"] = r.aiming_margin;
  j["e1_constant"] = r.e1_constant;
  j["b_leq_ratio"] = r.b_leq_ratio;
  j["strong_a_ratio"] = r.strong_a_ratio;
  j["stratum_upper"] = r.stratum_upper;
  j["stratum_min_aiming"] = r.stratum_min_aiming;
  j["aiming_nonmonotone"] = r.aiming_nonmonotone;
  json viol = json::array();
  for (int i : r.violations) {
    const auto& s = r.samples[static_cast<std::size_t>(i)];
    viol.push_back({{"index", i},
                    {"x", vector_json(s.x)},
                    {"nu", vector_json(s.nu)},
                    {"distance", s.distance},
                    {"aiming", s.aiming}});
  }
  j["violations"] = viol;
  return j;
}

std::string deviations_csv(const Mat& d) {
  std::string out = "rep,coord,value\n";
  for (Eigen::Index r = 0; r < d.rows(); ++r)
    for (Eigen::Index c = 0; c < d.cols(); ++c)
      out += std::to_string(r + 1) + "," + std::to_string(c + 1) + "," + fmt(d(r, c)) + "\n";
  return out;
}

std::string ecdf_csv(const CLTReport& r) {
  std::string out = "coord,x,ecdf,cdf\n";
  for (Eigen::Index c = 0; c < r.tangent_coords.cols(); ++c) {
    const double var = r.predicted_tangent_variance(c);
    std::vector<double> xs(static_cast<std::size_t>(r.tangent_coords.rows()));
    for (Eigen::Index i = 0; i < r.tangent_coords.rows(); ++i) xs[static_cast<std::size_t>(i)] = r.tangent_coords(i, c);
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double f = var > 0.0 ? normal_cdf(xs[i], 0.0, var) : std::nan("");
      out += std::to_string(c + 1) + "," + fmt(xs[i]) + "," + fmt((i + 1) / n) + "," + fmt(f) + "\n";
    }
  }
  return out;
}

std::string histogram_csv(const CLTReport& r, int bins) {
  std::string out = "coord,bin_lo,bin_hi,count,expected\n";
  const double n = static_cast<double>(r.tangent_coords.rows());
  for (Eigen::Index c = 0; c < r.tangent_coords.cols(); ++c) {
    const double var = r.predicted_tangent_variance(c);
    if (!(var > 0.0)) continue;
    const double sd = std::sqrt(var);
    const double lo = -4.0 * sd, width = 8.0 * sd / bins;
    std::vector<long> counts(static_cast<std::size_t>(bins), 0);
    for (Eigen::Index i = 0; i < r.tangent_coords.rows(); ++i) {
      const long b = static_cast<long>(std::floor((r.tangent_coords(i, c) - lo) / width));
      if (b >= 0 && b < bins) ++counts[static_cast<std::size_t>(b)];
    }
    for (int b = 0; b < bins; ++b) {
      const double a = lo + b * width, e = a + width;
      const double expected = n * (normal_cdf(e, 0.0, var) - normal_cdf(a, 0.0, var));
      out += std::to_string(c + 1) + "," + fmt(a) + "," + fmt(e) + "," +
             std::to_string(counts[static_cast<std::size_t>(b)]) + "," + fmt(expected) + "\n";
    }
  }
  return out;
}

std::string decay_csv(const DecayReport& r) {
  std::string out = "k,mean_sq_distance,survivors\n";
  for (std::size_t i = 0; i < r.ks.size(); ++i)
    out += std::to_string(r.ks[i]) + "," + fmt(r.mean_sq_distance[i]) + "," +
           std::to_string(r.survivors[i]) + "\n";
  return out;
}

std::string shadow_csv(const ShadowReport& r) {
  std::string out = "k,alpha,mean_sq_residual,survivors\n";
  for (std::size_t i = 0; i < r.ks.size(); ++i)
    out += std::to_string(r.ks[i]) + "," + fmt(r.alphas[i]) + "," + fmt(r.mean_sq_residual[i]) +
           "," + std::to_string(r.survivors[i]) + "\n";
  return out;
}

std::string regularity_csv(const RegularityReport& r) {
  std::string out = "index,distance,aiming,e1_ratio,b_ratio,a_ratio";
  const Eigen::Index d = r.samples.empty() ? 0 : r.samples.front().x.size();
  for (Eigen::Index i = 0; i < d; ++i) out += ",x" + std::to_string(i + 1);
  for (Eigen::Index i = 0; i < d; ++i) out += ",nu" + std::to_string(i + 1);
  out += "\n";
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    const auto& s = r.samples[i];
    out += std::to_string(i) + "," + fmt(s.distance) + "," + fmt(s.aiming) + "," + fmt(s.e1_ratio) +
           "," + fmt(s.b_ratio) + "," + fmt(s.a_ratio);
    for (Eigen::Index k = 0; k < d; ++k) out += "," + fmt(s.x(k));
    for (Eigen::Index k = 0; k < d; ++k) out += "," + fmt(s.nu(k));
    out += "\n";
  }
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

// ---------------------------------------------------------------------------

OutputBundle run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  OutputBundle bundle;
  bundle.output_dir = cfg.output_dir;
  const std::string canonical = cfg.canonical();
  bundle.config_hash = sha256_hex(canonical);
  bundle.reports = json::object();
  std::vector<std::pair<std::string, std::string>> emit;  // file name -> content

  auto wants = [&](const std::string& d) {
    return std::find(cfg.diagnostics.begin(), cfg.diagnostics.end(), d) != cfg.diagnostics.end();
  };
  auto stage = [&](const std::string& name, const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    StageRecord rec{name, "ok", 0.0, ""};
    try {
      fn();
    } catch (const std::exception& e) {
      rec.status = "error";
      rec.error = e.what();
      bundle.exit_code = 1;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bundle.stages.push_back(rec);
    return rec.status == "ok";
  };
  auto add_report = [&](const std::string& name, const json& j) {
    bundle.reports[name] = j;
    emit.emplace_back(name + "_report.json", j.dump(2) + "\n");
  };

  std::optional<Instance> inst;
  stage("instance", [&] { inst = make_instance(cfg); });

  if (inst) {
    const SolverConfig scfg = solver_config(cfg);
    std::optional<AsymptoticsReport> asym;
    if (wants("kkt") || wants("clt") || wants("saa")) {
      stage("kkt", [&] {
        asym = predicted_covariance(inst->problem, inst->nlp, inst->solution, cfg.mc_samples,
                                    derive_seed(cfg.seed, "noise_covariance", 0), cfg.tol);
        if (wants("kkt")) add_report("kkt", to_json(*asym));
      });
    }
    std::optional<CLTReport> clt;
    if (wants("clt")) {
      stage("clt", [&] {
        if (!asym) throw Error("clt: predicted covariance unavailable (kkt stage failed)");
        clt = monte_carlo_clt(inst->problem, inst->manifold, inst->solution,
                              asym->predicted_covariance, scfg, cfg.R, opts.threads);
        add_report("clt", to_json(*clt));
        emit.emplace_back("clt_deviations.csv", deviations_csv(clt->deviations));
        emit.emplace_back("clt_ecdf.csv", ecdf_csv(*clt));
        emit.emplace_back("clt_histogram.csv", histogram_csv(*clt));
      });
    }
    if (wants("saa")) {
      stage("saa", [&] {
        const Mat pt = asym ? asym->tangent_projector
                            : (inst->manifold.codim == 0
                                   ? Mat(Mat::Identity(inst->problem.dim, inst->problem.dim))
                                   : tangent_projector_at(inst->manifold, inst->solution));
        const SAAStudy s = saa_study(inst->problem, inst->solution, pt, cfg.saa_k, cfg.saa_R,
                                     cfg.seed, cfg.saa_tol, opts.threads);
        json j = to_json(s);
        if (clt && clt->empirical_tangent_variance.size() == s.tangent_variance.size()) {
          j["sfb_variance_tangent"] = vector_json(clt->empirical_tangent_variance);
          const Vec rel = ((s.tangent_variance - clt->empirical_tangent_variance).cwiseAbs().array() /
                           clt->empirical_tangent_variance.array())
                              .matrix();
          j["relative_difference_tangent"] = vector_json(rel);
        }
        add_report("saa", j);
        emit.emplace_back("saa_deviations.csv", deviations_csv(s.deviations));
      });
    }
    if (wants("decay") || wants("shadow")) {
      std::string name = wants("decay") ? "decay" : "";
      if (wants("shadow")) name += name.empty() ? "shadow" : "+shadow";
      stage(name, [&] {
        StudyOptions so;
        so.replications = cfg.decay_R;
        so.k0 = cfg.decay_k0;
        so.delta = cfg.decay_delta;
        so.shadow = wants("shadow");
        so.threads = opts.threads;
        SolverConfig c = scfg;
        c.seed = derive_seed(cfg.seed, "decay", 0);
        const ManifoldStudy st = manifold_study(inst->problem, inst->manifold,
                                                tangent_field(inst->problem, inst->manifold),
                                                inst->solution, c, so);
        if (wants("decay")) {
          add_report("decay", to_json(st.decay));
          emit.emplace_back("decay_curve.csv", decay_csv(st.decay));
        }
        if (wants("shadow")) {
          add_report("shadow", to_json(st.shadow));
          emit.emplace_back("shadow_curve.csv", shadow_csv(st.shadow));
        }
      });
    }
    if (wants("regularity")) {
      stage("regularity", [&] {
        RegularityOptions ro;
        ro.samples = cfg.regularity_N;
        ro.delta = cfg.regularity_delta;
        ro.min_distance = cfg.regularity_min_distance;
        ro.alpha = cfg.regularity_alpha;
        ro.seed = derive_seed(cfg.seed, "regularity", 0);
        const RegularityReport r =
            check_regularity(inst->problem, inst->manifold,
                             tangent_field(inst->problem, inst->manifold), inst->solution, ro);
        add_report("regularity", to_json(r));
        emit.emplace_back("regularity_samples.csv", regularity_csv(r));
      });
    }
  }

  for (const auto& [name, content] : emit)
    bundle.files.push_back({name, sha256_hex(content), content.size()});

  if (opts.write_files) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    auto write = [&](const std::string& name, const std::string& content) {
      std::ofstream out(fs::path(cfg.output_dir) / name, std::ios::binary | std::ios::trunc);
      out << content;
      if (!out) throw Error("cannot write " + (fs::path(cfg.output_dir) / name).string());
    };
    for (const auto& [name, content] : emit) write(name, content);

    json manifest;
    manifest["code_version"] = code_version();
    manifest["config_hash"] = bundle.config_hash;
    manifest["config"] = canonical;
    json stages = json::array();
    for (const auto& s : bundle.stages) {
      json js{{"name", s.name}, {"status", s.status}, {"wall_seconds", s.seconds}};
      if (!s.error.empty()) js["error"] = s.error;
      stages.push_back(js);
    }
    manifest["stages"] = stages;
    json files = json::array();
    for (const auto& f : bundle.files)
      files.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    manifest["files"] = files;
    manifest["exit_code"] = bundle.exit_code;
    write("manifest.json", manifest.dump(2) + "\n");
  }
  return bundle;
}

}  // namespace svi
