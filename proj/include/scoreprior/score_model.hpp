#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scoreprior/cnn.hpp"
#include "scoreprior/grid.hpp"
#include "scoreprior/oracles.hpp"
#include "scoreprior/parallel.hpp"
#include "scoreprior/rng.hpp"

namespace scoreprior {

/// A denoiser r(.) paired with the noise variance sigma2 it was built for.
/// The score of the smoothed density is the derived quantity
/// (r(z) - z) / sigma2; everything downstream consumes only this pair.
/// Immutable after construction and safe to share across threads.
struct ScoreModel {
  std::function<ImageGrid(const ImageGrid&)> denoiser;
  double noise_variance = 0.0;  // sigma^2

  static ScoreModel from_cnn(std::shared_ptr<const CnnDenoiserParams> params, double sigma2) {
    if (sigma2 <= 0.0) throw ConfigError("ScoreModel: sigma2 must be > 0");
    params->validate();
    return ScoreModel{[params](const ImageGrid& z) { return cnn_forward(*params, z); }, sigma2};
  }

  static ScoreModel from_gaussian_oracle(GaussianPriorOracle oracle, double sigma2) {
    if (sigma2 <= 0.0) throw ConfigError("ScoreModel: sigma2 must be > 0");
    auto shared = std::make_shared<GaussianPriorOracle>(std::move(oracle));
    return ScoreModel{
        [shared, sigma2](const ImageGrid& z) { return gaussian_oracle_denoise(*shared, z, sigma2); },
        sigma2};
  }

  static ScoreModel from_gmm_oracle(GmmPriorOracle oracle, double sigma2) {
    if (sigma2 <= 0.0) throw ConfigError("ScoreModel: sigma2 must be > 0");
    auto shared = std::make_shared<GmmPriorOracle>(std::move(oracle));
    return ScoreModel{
        [shared, sigma2](const ImageGrid& z) { return gmm_oracle_denoise(*shared, z, sigma2); },
        sigma2};
  }

  /// r(z) = z. Its score is identically zero; used by tests.
  static ScoreModel identity(double sigma2) {
    if (sigma2 <= 0.0) throw ConfigError("ScoreModel: sigma2 must be > 0");
    return ScoreModel{[](const ImageGrid& z) { return z; }, sigma2};
  }
};

/// Score of the model's smoothed prior: (r(z) - z) / sigma2.
inline ImageGrid score(const ScoreModel& model, const ImageGrid& z) {
  ImageGrid r = model.denoiser(z);
  require_same_shape(r, z, "score");
  const double inv = 1.0 / model.noise_variance;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = (r[i] - z[i]) * inv;
  if (!is_finite(r)) throw DivergenceError("score: denoiser returned non-finite values");
  return r;
}

struct LangevinConfig {
  long steps = 2000;
  double tau = 0.01;          // step size
  double init_mean = 0.5;
  double init_variance = 0.1;  // defaults mirror the training noise level
  int height = 64;
  int width = 64;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  long record_every = 0;  // > 0: keep every k-th iterate as a trajectory

  void validate() const {
    if (steps < 1) throw ConfigError("langevin: steps must be >= 1");
    if (tau <= 0.0) throw ConfigError("langevin: tau must be > 0");
    if (init_variance < 0.0) throw ConfigError("langevin: init_variance must be >= 0");
    if (height <= 0 || width <= 0) throw ConfigError("langevin: dimensions must be positive");
  }
};

struct LangevinResult {
  ImageGrid sample;                    // final iterate
  std::vector<ImageGrid> trajectory;   // optional snapshots
};

namespace langevin_detail {

constexpr double kDivergenceGuard = 1e3;  // far outside the [0,1]-scale prior

/// Shared unadjusted-Langevin kernel. The likelihood gradient is optional;
/// when absent the update is exactly the prior iteration, so a posterior
/// chain with no measurement term is bit-identical to a prior chain on the
/// same stream.
inline LangevinResult run_chain(
    const ScoreModel& model, const LangevinConfig& cfg,
    const std::function<ImageGrid(const ImageGrid&)>* loglik_grad,
    const ImageGrid* init_override = nullptr) {
  cfg.validate();
  RngStream rng(cfg.seed, cfg.stream_id);
  ImageGrid x = init_override
                    ? *init_override
                    : draw_gaussian(rng, cfg.height, cfg.width, cfg.init_mean, cfg.init_variance);
  const double noise_scale = std::sqrt(2.0 * cfg.tau);
  LangevinResult result;
  for (long k = 0; k < cfg.steps; ++k) {
    const ImageGrid drift = score(model, x);  // (r(x) - x) / sigma^2
    if (loglik_grad) {
      const ImageGrid lik = (*loglik_grad)(x);
      add_scaled(x, lik, cfg.tau);
    }
    add_scaled(x, drift, cfg.tau);
    for (double& v : x.data) v += noise_scale * rng.next_gaussian();
    if (!is_finite(x) || max_abs(x) > kDivergenceGuard)
      throw DivergenceError("langevin: chain diverged at step " + std::to_string(k));
    if (cfg.record_every > 0 && (k + 1) % cfg.record_every == 0) result.trajectory.push_back(x);
  }
  result.sample = std::move(x);
  return result;
}

}  // namespace langevin_detail

/// Unadjusted Langevin sampling of the model's prior from an IID Gaussian
/// initialization; the final iterate is the sample.
inline LangevinResult prior_langevin(const ScoreModel& model, const LangevinConfig& cfg) {
  return langevin_detail::run_chain(model, cfg, nullptr);
}

/// n independent chains on consecutive stream ids (cfg.stream_id + i).
inline std::vector<ImageGrid> sample_prior_ensemble(const ScoreModel& model,
                                                    const LangevinConfig& cfg, int n_samples,
                                                    int threads = 0) {
  if (n_samples < 1) throw ConfigError("sample_prior_ensemble: n_samples must be >= 1");
  std::vector<ImageGrid> samples(static_cast<std::size_t>(n_samples));
  parallel_for(n_samples, threads, [&](int i) {
    LangevinConfig chain_cfg = cfg;
    chain_cfg.stream_id = cfg.stream_id + static_cast<std::uint64_t>(i);
    samples[static_cast<std::size_t>(i)] = prior_langevin(model, chain_cfg).sample;
  });
  return samples;
}

}  // namespace scoreprior
