#include "svilab/solvers.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>

#include "svilab/error.hpp"

namespace svi {

StepSchedule::StepSchedule(double c, double gamma) : c_(c), gamma_(gamma) {
  if (!(c > 0.0)) throw std::invalid_argument("step schedule needs c > 0");
  if (!(gamma > 0.5 && gamma <= 1.0))
    throw std::invalid_argument("step schedule needs gamma in (1/2, 1]");
}

double StepSchedule::operator()(long k) const {
  if (k < 1) throw std::invalid_argument("step index starts at 1");
  return c_ * std::pow(static_cast<double>(k), -gamma_);
}

double step_size(const StepSchedule& s, long k) { return s(k); }

void SolverConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (burn_in < 1) throw std::invalid_argument("burn_in must be >= 1");
  if (burn_in > iterations) throw std::invalid_argument("burn_in exceeds the horizon");
  if (record_stride < 1) throw std::invalid_argument("record_stride must be >= 1");
  if (!(divergence_bound > 0.0)) throw std::invalid_argument("divergence bound must be positive");
}

Vec generalized_gradient_dir(const StochasticVIProblem& p, double alpha, const Vec& x,
                             const Vec& direction) {
  if (!(alpha > 0.0)) throw std::invalid_argument("generalized gradient needs alpha > 0");
  Vec v = direction;
  if (p.g_part) v += p.g_part->selection(x);
  if (p.f_part.is_zero()) return v;
  return (x - prox(p.f_part, alpha, x - alpha * v)) / alpha;
}

Vec generalized_gradient(const StochasticVIProblem& p, double alpha, const Vec& x, const Vec& nu) {
  return generalized_gradient_dir(p, alpha, x, p.mean(x) + nu);
}

namespace {

void checksum_update(std::uint64_t& h, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::uint64_t bits;
    const double d = v(i);
    std::memcpy(&bits, &d, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
}

}  // namespace

Trajectory run_sfb(const StochasticVIProblem& p, const SolverConfig& cfg, const Manifold* manifold) {
  cfg.validate();
  if (!p.mean_map && !p.noise_map)
    throw MissingMeanMap("problem '" + p.name + "' provides neither A(x) nor a noise oracle");

  Vec x = cfg.initial_point ? *cfg.initial_point : Vec::Zero(p.dim);
  if (x.size() != p.dim) throw std::invalid_argument("initial point has the wrong dimension");
  if (!std::isfinite(p.f_part.value(x))) throw std::invalid_argument("initial point outside dom f");

  Trajectory t;
  t.schedule = cfg.schedule;
  t.iterations = cfg.iterations;
  t.burn_in = cfg.burn_in;
  t.noise_checksum = 0xcbf29ce484222325ULL;
  if (manifold && cfg.record_distances) t.distances.resize(static_cast<std::size_t>(cfg.iterations));

  Sampler sampler(cfg.seed);
  Vec avg = Vec::Zero(p.dim);
  long count = 0;
  const long K = cfg.iterations;

  for (long k = 1;; ++k) {
    if (k >= cfg.burn_in) {
      ++count;
      avg += (x - avg) / static_cast<double>(count);
    }
    const bool record = cfg.record_iterates && (k % cfg.record_stride == 0 || k == K);
    if (record) {
      t.recorded_indices.push_back(k);
      t.iterates.push_back(x);
      t.averages.push_back(count > 0 ? avg : Vec::Constant(p.dim, std::nan("")));
    }
    if (!t.distances.empty()) {
      double dist = std::numeric_limits<double>::quiet_NaN();
      try {
        dist = distance_to_manifold(x, *manifold);
      } catch (const OutOfChart&) {
      }
      t.distances[static_cast<std::size_t>(k - 1)] = dist;
    }
    if (k == K) break;

    const Vec z = p.draw(sampler);
    Vec nu, dir;
    if (p.mean_map) {
      const Vec a = (*p.mean_map)(x);
      nu = p.sample_map(x, z) - a;
      dir = a + nu;
    } else {
      dir = p.sample_map(x, z);
      nu = (*p.noise_map)(x, z);
    }
    checksum_update(t.noise_checksum, nu);
    if (record) t.noises.push_back(nu);

    const double alpha = cfg.schedule(k);
    x -= alpha * generalized_gradient_dir(p, alpha, x, dir);
    if (!x.allFinite() || x.norm() > cfg.divergence_bound)
      throw Diverged("iterate norm exceeded " + std::to_string(cfg.divergence_bound) +
                         " at step " + std::to_string(k + 1),
                     k + 1);
  }
  t.final_iterate = x;
  t.final_average = avg;
  return t;
}

SAAResult run_saa_on_samples(const StochasticVIProblem& p, const std::vector<Vec>& samples,
                             const SAASettings& inner) {
  if (samples.empty()) throw std::invalid_argument("SAA needs at least one sample");
  const double inv_k = 1.0 / static_cast<double>(samples.size());
  auto empirical_mean = [&](const Vec& x) {
    Vec acc = Vec::Zero(p.dim);
    for (const auto& z : samples) acc += p.sample_map(x, z);
    return Vec(acc * inv_k);
  };

  SAAResult out;
  Vec x = inner.initial_point ? *inner.initial_point : Vec::Zero(p.dim);

  // L_hat from finite differences of the empirical map around x0.
  Sampler probe(0x5aa5eedULL);
  const Vec base = empirical_mean(x);
  double lip = 0.0;
  for (int i = 0; i < inner.lipschitz_probes; ++i) {
    Vec u = probe.normal_vec(p.dim);
    u *= inner.probe_radius / u.norm();
    lip = std::max(lip, (empirical_mean(x + u) - base).norm() / inner.probe_radius);
  }
  out.lipschitz_estimate = lip;
  // A constant empirical map has L_hat = 0; any step is stable then.
  const double alpha = lip > 1e-12 ? 1.0 / lip : 1.0;
  out.step = alpha;

  double res = std::numeric_limits<double>::infinity();
  for (long it = 0; it < inner.max_iter; ++it) {
    Vec v = empirical_mean(x) + p.g_selection(x);
    Vec next = prox(p.f_part, alpha, x - alpha * v);
    res = (x - next).norm() / alpha;
    if (res <= inner.tol) {
      out.solution = x;
      out.residual = res;
      out.iterations = it;
      return out;
    }
    x = std::move(next);
  }
  throw NoConvergence("SAA forward-backward iteration did not converge", res);
}

SAAResult run_saa(const StochasticVIProblem& p, long sample_count, std::uint64_t seed,
                  const SAASettings& inner) {
  if (sample_count < 1) throw std::invalid_argument("SAA sample count must be >= 1");
  Sampler sampler(seed);
  std::vector<Vec> samples;
  samples.reserve(static_cast<std::size_t>(sample_count));
  for (long i = 0; i < sample_count; ++i) samples.push_back(p.draw(sampler));
  return run_saa_on_samples(p, samples, inner);
}

}  // namespace svi
