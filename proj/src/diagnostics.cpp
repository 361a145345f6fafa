#include "svilab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "svilab/error.hpp"
#include "svilab/parallel.hpp"

namespace svi {

CovariantField tangent_field(const StochasticVIProblem& p, const Manifold& m) {
  return [&p, &m](const Vec& y) -> Vec { return tangent_projector_at(m, y) * p.mean(y); };
}

Manifold full_space_manifold(int dim) {
  Manifold m;
  m.ambient_dim = dim;
  m.codim = 0;
  m.defining_map = [](const Vec&) -> Vec { return Vec(0); };
  m.jacobian = [dim](const Vec&) -> Mat { return Mat(0, dim); };
  m.closed_form_projection = [](const Vec& x) -> Vec { return x; };
  m.chart_radius = std::numeric_limits<double>::infinity();
  return m;
}

double normal_cdf(double x, double mean, double variance) {
  return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * variance));
}

double ks_statistic(std::vector<double> samples, double mean, double variance) {
  if (!(variance > 0.0)) throw DegenerateVariance("KS reference variance must be positive");
  if (samples.empty()) throw std::invalid_argument("KS statistic needs samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = normal_cdf(samples[i], mean, variance);
    const double idx = static_cast<double>(i + 1);
    d = std::max({d, idx / n - f, f - (idx - 1.0) / n});
  }
  return d;
}

void sample_covariance(const Mat& rows, Mat& cov, Mat& stderr_out) {
  const Eigen::Index n = rows.rows();
  const Eigen::Index d = rows.cols();
  if (n < 2) throw std::invalid_argument("sample covariance needs at least two rows");
  const Vec mean = rows.colwise().mean().transpose();
  const Mat centered = rows.rowwise() - mean.transpose();
  cov = centered.transpose() * centered / static_cast<double>(n - 1);
  stderr_out.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const Eigen::ArrayXd prod = centered.col(i).array() * centered.col(j).array();
      const double m = prod.mean();
      stderr_out(i, j) = std::sqrt((prod - m).square().mean() / static_cast<double>(n));
    }
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

std::vector<long> log_grid(long lo, long hi, int per_decade) {
  std::vector<long> out;
  if (hi < lo) return out;
  const double span = std::log10(static_cast<double>(hi) / static_cast<double>(lo));
  const int steps = static_cast<int>(std::ceil(span * per_decade));
  for (int j = 0; j <= steps; ++j) {
    const long k = std::lround(static_cast<double>(lo) * std::pow(10.0, j / double(per_decade)));
    if (k > hi) break;
    if (out.empty() || k > out.back()) out.push_back(k);
  }
  if (out.empty() || out.back() != hi) out.push_back(hi);
  return out;
}

// ---------------------------------------------------------------------------

CLTReport monte_carlo_clt(const StochasticVIProblem& p, const Manifold& m, const Vec& x_star,
                          const Mat& predicted_cov, const SolverConfig& cfg, int replications,
                          int threads) {
  if (replications < 2) throw std::invalid_argument("CLT study needs at least two replications");
  if (!(cfg.schedule.gamma() < 1.0))
    throw std::invalid_argument("asymptotic normality requires gamma in (1/2, 1)");
  const long K = cfg.iterations;
  const long early = std::max(1L, K / 10);

  struct RepResult {
    std::optional<Vec> avg;
    std::optional<Vec> early_avg;
    std::string failure;
  };
  std::vector<RepResult> results(static_cast<std::size_t>(replications));
  parallel_for(results.size(), threads, [&](std::size_t r) {
    SolverConfig c = cfg;
    c.seed = derive_seed(cfg.seed, "clt", r);
    c.record_stride = early;
    c.record_iterates = true;
    c.record_distances = false;
    try {
      const Trajectory t = run_sfb(p, c);
      results[r].avg = t.final_average;
      for (std::size_t i = 0; i < t.recorded_indices.size(); ++i)
        if (t.recorded_indices[i] == early) results[r].early_avg = t.averages[i];
    } catch (const Diverged& e) {
      results[r].failure = "replication " + std::to_string(r) + ": " + e.what();
    }
  });

  CLTReport rep;
  rep.replications = replications;
  rep.horizon = K;
  rep.early_horizon = early;
  rep.solution = x_star;
  rep.predicted_covariance = predicted_cov;
  const Eigen::Index d = p.dim;
  int included = 0;
  for (const auto& r : results) {
    if (r.avg) ++included;
    else rep.failures.push_back(r.failure);
  }
  rep.excluded = replications - included;
  if (included < 2) throw Error("fewer than two CLT replications completed");

  rep.deviations.resize(included, d);
  rep.early_deviations.resize(included, d);
  const double sk = std::sqrt(static_cast<double>(K));
  const double se = std::sqrt(static_cast<double>(early));
  Eigen::Index row = 0;
  for (const auto& r : results) {
    if (!r.avg) continue;
    rep.deviations.row(row) = (sk * (*r.avg - x_star)).transpose();
    rep.early_deviations.row(row) = (se * (*r.early_avg - x_star)).transpose();
    ++row;
  }

  rep.tangent_projector = m.codim == 0 ? Mat(Mat::Identity(d, d)) : tangent_projector_at(m, x_star);
  rep.tangent_basis = range_basis(rep.tangent_projector);
  const Mat normal_proj = Mat::Identity(d, d) - rep.tangent_projector;
  rep.tangent_coords = rep.deviations * rep.tangent_basis;
  rep.normal_components = rep.deviations * normal_proj;
  rep.early_normal_components = rep.early_deviations * normal_proj;

  sample_covariance(rep.deviations, rep.empirical_covariance, rep.covariance_stderr);
  const Eigen::Index r_dim = rep.tangent_basis.cols();
  rep.predicted_tangent_variance =
      (rep.tangent_basis.transpose() * predicted_cov * rep.tangent_basis).diagonal();
  rep.empirical_tangent_variance.resize(r_dim);
  Mat cov, err;
  if (r_dim > 0) {
    sample_covariance(rep.tangent_coords, cov, err);
    rep.empirical_tangent_variance = cov.diagonal();
    rep.tangent_variance = cov.trace();
  }
  sample_covariance(rep.normal_components, cov, err);
  rep.normal_variance = cov.trace();

  for (Eigen::Index j = 0; j < r_dim; ++j) {
    const double var = rep.predicted_tangent_variance(j);
    if (var > 0.0) {
      const Vec col = rep.tangent_coords.col(j);
      rep.ks_statistics.push_back(ks_statistic({col.data(), col.data() + col.size()}, 0.0, var));
    } else {
      rep.ks_statistics.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  rep.mean_normal_norm = rep.normal_components.rowwise().norm().mean();
  rep.early_mean_normal_norm = rep.early_normal_components.rowwise().norm().mean();
  return rep;
}

// ---------------------------------------------------------------------------

ShadowTrace shadow_trace(const Manifold& m, const Trajectory& t, const CovariantField& fm,
                         long k_first, long k_last) {
  const long K = t.iterations;
  if (static_cast<long>(t.iterates.size()) != K || static_cast<long>(t.noises.size()) != K - 1)
    throw std::invalid_argument("shadow residuals need a stride-1 trajectory");
  k_first = std::max(1L, k_first);
  k_last = std::min(K - 1, k_last);
  ShadowTrace out;
  if (k_last < k_first) return out;
  Vec y = project_manifold(t.iterates[static_cast<std::size_t>(k_first - 1)], m);
  for (long k = k_first; k <= k_last; ++k) {
    const auto idx = static_cast<std::size_t>(k - 1);
    const Vec y_next = project_manifold(t.iterates[idx + 1], m);
    const double alpha = t.schedule(k);
    const Mat pt = tangent_projector_at(m, y);
    const Vec pnu = pt * t.noises[idx];
    const Vec f = fm(y);
    out.ks.push_back(k);
    out.alphas.push_back(alpha);
    out.residuals.push_back((y_next - y + alpha * f + alpha * pnu) / alpha);
    out.projected_noise.push_back(pnu);
    out.field.push_back(f);
    out.shadows.push_back(y);
    y = y_next;
  }
  return out;
}

namespace {

void fit_log_log(const std::vector<double>& xs, const std::vector<double>& means,
                 const std::vector<bool>& usable, int min_points, double& slope, bool& degenerate,
                 int& points) {
  std::vector<double> lx, ly;
  degenerate = false;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!usable[i]) continue;
    if (!(means[i] > 1e-20)) {
      degenerate = true;
      continue;
    }
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(means[i]));
  }
  points = static_cast<int>(lx.size());
  if (degenerate || points < min_points) {
    degenerate = true;
    slope = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  slope = ols_slope(lx, ly);
}

}  // namespace

ShadowReport shadow_residuals(const Manifold& m, const Trajectory& t, const CovariantField& fm,
                              long k_first) {
  const ShadowTrace tr = shadow_trace(m, t, fm, k_first, t.iterations - 1);
  ShadowReport rep;
  const Eigen::Index d = t.final_iterate.size();
  rep.projected_noise_mean = Vec::Zero(d);
  rep.projected_noise_stderr = Vec::Zero(d);
  if (tr.ks.empty()) {
    rep.degenerate = true;
    rep.slope = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  // Window averages of |E_k|^2 between consecutive grid points.
  const std::vector<long> grid = log_grid(tr.ks.front(), tr.ks.back(), 60);
  std::size_t pos = 0;
  for (long g : grid) {
    double sum = 0.0;
    int cnt = 0;
    while (pos < tr.ks.size() && tr.ks[pos] <= g) {
      sum += tr.residuals[pos].squaredNorm();
      ++cnt;
      ++pos;
    }
    if (cnt == 0) continue;
    rep.ks.push_back(g);
    rep.alphas.push_back(t.schedule(g));
    rep.mean_sq_residual.push_back(sum / cnt);
    rep.survivors.push_back(1);
  }
  std::vector<bool> usable(rep.ks.size());
  for (std::size_t i = 0; i < rep.ks.size(); ++i)
    usable[i] = rep.ks[i] * 10 >= t.iterations;
  fit_log_log(rep.alphas, rep.mean_sq_residual, usable, 2, rep.slope, rep.degenerate,
              rep.fit_points);

  Vec sum = Vec::Zero(d), sumsq = Vec::Zero(d);
  for (const auto& v : tr.projected_noise) {
    sum += v;
    sumsq += v.cwiseAbs2();
  }
  const double n = static_cast<double>(tr.projected_noise.size());
  rep.projected_noise_count = static_cast<long>(n);
  rep.projected_noise_mean = sum / n;
  const Vec var = (sumsq / n - rep.projected_noise_mean.cwiseAbs2()).cwiseMax(0.0);
  rep.projected_noise_stderr = (var / n).cwiseSqrt();
  return rep;
}

ManifoldStudy manifold_study(const StochasticVIProblem& p, const Manifold& m,
                             const CovariantField& fm, const Vec& x_star, const SolverConfig& cfg,
                             const StudyOptions& opts) {
  const long K = cfg.iterations;
  if (opts.k0 < 1 || opts.k0 >= K) throw std::invalid_argument("k0 must lie in [1, K)");
  if (opts.replications < 1) throw std::invalid_argument("study needs replications");
  const std::vector<long> grid = log_grid(opts.k0, K - 1, opts.grid_per_decade);
  const std::size_t G = grid.size();
  const Eigen::Index d = p.dim;

  struct RepResult {
    std::vector<double> dist2;  // NaN once stopped
    std::vector<double> resid2;
    Vec noise_sum, noise_sumsq;
    long noise_count = 0;
    bool exited = false;
  };
  std::vector<RepResult> results(static_cast<std::size_t>(opts.replications));

  parallel_for(results.size(), opts.threads, [&](std::size_t r) {
    SolverConfig c = cfg;
    c.seed = derive_seed(cfg.seed, "manifold_study", r);
    c.record_stride = 1;
    c.record_iterates = true;
    c.record_distances = false;
    const Trajectory t = run_sfb(p, c);

    long tau = K + 1;
    for (long k = opts.k0; k <= K; ++k)
      if ((t.iterates[static_cast<std::size_t>(k - 1)] - x_star).norm() > opts.delta) {
        tau = k;
        break;
      }
    RepResult& out = results[r];
    out.exited = tau <= K;
    out.dist2.assign(G, std::numeric_limits<double>::quiet_NaN());
    out.resid2.assign(G, std::numeric_limits<double>::quiet_NaN());
    out.noise_sum = Vec::Zero(d);
    out.noise_sumsq = Vec::Zero(d);
    for (std::size_t g = 0; g < G; ++g) {
      const long k = grid[g];
      if (tau <= k) break;
      const Vec& x = t.iterates[static_cast<std::size_t>(k - 1)];
      out.dist2[g] = (x - project_manifold(x, m)).squaredNorm();
    }
    if (!opts.shadow) return;
    const long last = std::min(tau - 1, K - 1);
    if (last < opts.k0) return;
    const ShadowTrace tr = shadow_trace(m, t, fm, opts.k0, last);
    std::size_t g = 0;
    for (std::size_t i = 0; i < tr.ks.size(); ++i) {
      out.noise_sum += tr.projected_noise[i];
      out.noise_sumsq += tr.projected_noise[i].cwiseAbs2();
      ++out.noise_count;
      while (g < G && grid[g] < tr.ks[i]) ++g;
      if (g < G && grid[g] == tr.ks[i]) out.resid2[g] = tr.residuals[i].squaredNorm();
    }
  });

  ManifoldStudy study;
  DecayReport& dec = study.decay;
  ShadowReport& sh = study.shadow;
  dec.k0 = opts.k0;
  dec.delta = opts.delta;
  dec.replications = opts.replications;
  dec.ks = grid;
  dec.mean_sq_distance.assign(G, 0.0);
  dec.survivors.assign(G, 0);
  sh.ks = grid;
  sh.mean_sq_residual.assign(G, 0.0);
  sh.survivors.assign(G, 0);
  for (long k : grid) sh.alphas.push_back(cfg.schedule(k));
  Vec nsum = Vec::Zero(d), nsumsq = Vec::Zero(d);
  long ncount = 0;
  int exited = 0;
  for (const auto& r : results) {  // fixed reduction order
    exited += r.exited ? 1 : 0;
    for (std::size_t g = 0; g < G; ++g) {
      if (!std::isnan(r.dist2[g])) {
        dec.mean_sq_distance[g] += r.dist2[g];
        ++dec.survivors[g];
      }
      if (!std::isnan(r.resid2[g])) {
        sh.mean_sq_residual[g] += r.resid2[g];
        ++sh.survivors[g];
      }
    }
    nsum += r.noise_sum;
    nsumsq += r.noise_sumsq;
    ncount += r.noise_count;
  }
  dec.exit_fraction = static_cast<double>(exited) / opts.replications;
  for (std::size_t g = 0; g < G; ++g) {
    dec.mean_sq_distance[g] = dec.survivors[g] > 0
                                  ? dec.mean_sq_distance[g] / dec.survivors[g]
                                  : std::numeric_limits<double>::quiet_NaN();
    sh.mean_sq_residual[g] = sh.survivors[g] > 0 ? sh.mean_sq_residual[g] / sh.survivors[g]
                                                 : std::numeric_limits<double>::quiet_NaN();
  }
  if (dec.survivors.back() < opts.min_survivors)
    throw InsufficientSurvivors("only " + std::to_string(dec.survivors.back()) +
                                    " replications stayed within delta of x*",
                                dec.survivors.back());

  std::vector<bool> usable(G);
  std::vector<double> kd(G);
  for (std::size_t g = 0; g < G; ++g) {
    usable[g] = grid[g] * 10 >= K && dec.survivors[g] >= opts.min_survivors;
    kd[g] = static_cast<double>(grid[g]);
  }
  fit_log_log(kd, dec.mean_sq_distance, usable, opts.min_fit_points, dec.slope, dec.degenerate,
              dec.fit_points);

  sh.projected_noise_mean = Vec::Zero(d);
  sh.projected_noise_stderr = Vec::Zero(d);
  if (opts.shadow) {
    for (std::size_t g = 0; g < G; ++g)
      usable[g] = grid[g] * 10 >= K && sh.survivors[g] >= opts.min_survivors;
    fit_log_log(sh.alphas, sh.mean_sq_residual, usable, opts.min_fit_points, sh.slope,
                sh.degenerate, sh.fit_points);
    if (ncount > 0) {
      const double n = static_cast<double>(ncount);
      sh.projected_noise_count = ncount;
      sh.projected_noise_mean = nsum / n;
      const Vec var = (nsumsq / n - sh.projected_noise_mean.cwiseAbs2()).cwiseMax(0.0);
      sh.projected_noise_stderr = (var / n).cwiseSqrt();
    }
  } else {
    sh.degenerate = true;
    sh.slope = std::numeric_limits<double>::quiet_NaN();
  }
  return study;
}

DecayReport distance_decay(const StochasticVIProblem& p, const Manifold& m, const Vec& x_star,
                           const SolverConfig& cfg, StudyOptions opts) {
  opts.shadow = false;
  return manifold_study(p, m, CovariantField{}, x_star, cfg, opts).decay;
}

// ---------------------------------------------------------------------------

namespace {

double combined_value(const StochasticVIProblem& p, const Vec& x) {
  double v = p.f_part.value(x);
  if (p.g_part) v += p.g_part->value(x);
  return v;
}

// grad_M h(y) from central differences of h along the manifold.
Vec covariant_gradient(const StochasticVIProblem& p, const Manifold& m, const Vec& y,
                       const Mat& basis) {
  constexpr double eps = 1e-6;
  Vec g = Vec::Zero(y.size());
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    const Vec u = basis.col(j);
    const double fp = combined_value(p, project_manifold(y + eps * u, m));
    const double fm = combined_value(p, project_manifold(y - eps * u, m));
    g += ((fp - fm) / (2.0 * eps)) * u;
  }
  return g;
}

Vec random_unit(Sampler& s, const Mat& proj) {
  for (int i = 0; i < 100; ++i) {
    const Vec v = proj * s.normal_vec(proj.rows());
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
  throw Error("could not sample a direction in the requested subspace");
}

}  // namespace

RegularityReport check_regularity(const StochasticVIProblem& p, const Manifold& m,
                                  const CovariantField& fm, const Vec& x_star,
                                  const RegularityOptions& opts) {
  if (opts.samples < 100) throw std::invalid_argument("regularity check needs N >= 100");
  if (m.codim == 0) throw std::invalid_argument("regularity check needs a proper manifold");
  RegularityReport rep;
  rep.requested = opts.samples;
  Sampler s(opts.seed);
  const Eigen::Index d = p.dim;
  const Mat u_star = range_basis(tangent_projector_at(m, x_star));
  const ClosedSet* dom = p.f_part.indicator_set();
  const double ratio = opts.delta / opts.min_distance;

  for (int i = 0; i < opts.samples; ++i) {
    const double t = opts.min_distance * std::pow(ratio, (i + 0.5) / opts.samples);
    // Base point on M within delta/2 of x*.
    Vec xi = s.normal_vec(u_star.cols());
    xi *= (0.5 * opts.delta) * std::pow(s.uniform(), 1.0 / std::max<Eigen::Index>(1, u_star.cols())) /
          std::max(xi.norm(), 1e-300);
    Vec y0;
    try {
      y0 = project_manifold(x_star + u_star * xi, m);
    } catch (const OutOfChart&) {
      continue;
    }
    const Mat normal_proj = Mat::Identity(d, d) - tangent_projector_at(m, y0);
    Vec x = y0 + t * random_unit(s, normal_proj);
    for (int attempt = 0; attempt < 200 && !std::isfinite(p.f_part.value(x)); ++attempt)
      x = y0 + t * random_unit(s, normal_proj);
    if (dom && !dom->contains(x)) x = dom->project(x);
    if (!std::isfinite(p.f_part.value(x))) continue;

    Vec px;
    try {
      px = project_manifold(x, m);
    } catch (const OutOfChart&) {
      continue;
    }
    RegularitySample smp;
    smp.x = x;
    smp.distance = (x - px).norm();
    if (smp.distance < 1e-10) continue;

    const Vec z = p.draw(s);
    smp.nu = p.sample_map(x, z) - p.mean(x);
    const Vec g = generalized_gradient(p, opts.alpha, x, smp.nu);
    smp.aiming = (g - smp.nu).dot(x - px) / smp.distance;
    const Vec tang = tangent_projector_at(m, px) * (g - fm(px) - smp.nu);
    const double noise_scale = 1.0 + smp.nu.norm();
    smp.e1_ratio = tang.norm() / (noise_scale * noise_scale * (smp.distance + opts.alpha));

    // (x', v) with v a proximal subgradient of f + g at x' = prox_f(w).
    const Vec w = x + smp.distance * s.normal_vec(d);
    const Vec xb = prox(p.f_part, 1.0, w);
    const Vec v = (w - xb) + p.g_selection(xb);
    const Mat basis_px = range_basis(tangent_projector_at(m, px));
    Vec y = px;
    if (basis_px.cols() > 0) {
      Vec shift = s.normal_vec(basis_px.cols());
      shift *= smp.distance / std::max(shift.norm(), 1e-300);
      try {
        y = project_manifold(px + basis_px * shift, m);
      } catch (const OutOfChart&) {
      }
    }
    const double gap = (y - xb).norm();
    if (gap > 1e-12) {
      const double vscale = 1.0 + v.norm();
      smp.b_ratio =
          (combined_value(p, xb) + v.dot(y - xb) - combined_value(p, y)) / (vscale * gap);
      const Mat pt_y = tangent_projector_at(m, y);
      const Vec cg = covariant_gradient(p, m, y, range_basis(pt_y));
      smp.a_ratio = (pt_y * (v - cg)).norm() / (vscale * gap);
    }
    rep.samples.push_back(std::move(smp));
  }

  rep.used = static_cast<int>(rep.samples.size());
  if (rep.used == 0) throw Error("no usable regularity samples");
  rep.aiming_margin = std::numeric_limits<double>::infinity();
  rep.e1_constant = 0.0;
  rep.b_leq_ratio = -std::numeric_limits<double>::infinity();
  rep.strong_a_ratio = 0.0;
  for (int decade = 0; opts.min_distance * std::pow(10.0, decade) < opts.delta; ++decade) {
    rep.stratum_upper.push_back(std::min(opts.delta, opts.min_distance * std::pow(10.0, decade + 1)));
    rep.stratum_min_aiming.push_back(std::numeric_limits<double>::infinity());
  }
  for (std::size_t i = 0; i < rep.samples.size(); ++i) {
    const auto& smp = rep.samples[i];
    rep.aiming_margin = std::min(rep.aiming_margin, smp.aiming);
    rep.e1_constant = std::max(rep.e1_constant, smp.e1_ratio);
    rep.b_leq_ratio = std::max(rep.b_leq_ratio, smp.b_ratio);
    rep.strong_a_ratio = std::max(rep.strong_a_ratio, smp.a_ratio);
    if (smp.aiming <= 0.0) rep.violations.push_back(static_cast<int>(i));
    for (std::size_t b = 0; b < rep.stratum_upper.size(); ++b)
      if (smp.distance <= rep.stratum_upper[b]) {
        rep.stratum_min_aiming[b] = std::min(rep.stratum_min_aiming[b], smp.aiming);
        break;
      }
  }
  std::vector<double> filled;
  for (double v : rep.stratum_min_aiming)
    if (std::isfinite(v)) filled.push_back(v);
  const bool up = std::is_sorted(filled.begin(), filled.end());
  const bool down = std::is_sorted(filled.rbegin(), filled.rend());
  rep.aiming_nonmonotone = !(up || down);
  return rep;
}

}  // namespace svi
