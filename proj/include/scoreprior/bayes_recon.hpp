#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "scoreprior/forward_models.hpp"
#include "scoreprior/grid.hpp"
#include "scoreprior/parallel.hpp"
#include "scoreprior/score_model.hpp"

namespace scoreprior {

enum class InitKind { measurement_adjoint, random, provided };

/// Starting point for MAP iterations and posterior chains.
/// - measurement_adjoint: A^T y for the linear model; y itself for the
///   phase-only operator (its output already lives in image space).
/// - random: IID Gaussian(mean, variance) from (seed, stream_id).
/// - provided: a caller-supplied grid.
struct InitSpec {
  InitKind kind = InitKind::measurement_adjoint;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  double mean = 0.5;
  double variance = 0.1;
  ImageGrid provided;
};

namespace recon_detail {
inline ImageGrid make_init(const InitSpec& init, const MeasurementModel& model,
                           const ImageGrid& y) {
  switch (init.kind) {
    case InitKind::measurement_adjoint:
      return model.is_linear() ? inpaint_adjoint(model.inpainting(), y) : y;
    case InitKind::random: {
      RngStream rng(init.seed, init.stream_id);
      return draw_gaussian(rng, y.height, y.width, init.mean, init.variance);
    }
    case InitKind::provided:
      if (init.provided.size() == 0) throw ConfigError("init: no grid provided");
      return init.provided;
  }
  throw ConfigError("init: unknown kind");
}
}  // namespace recon_detail

struct MapConfig {
  long steps = 500;
  double step_size = 0.1;
  InitSpec init;

  void validate() const {
    if (steps < 1) throw ConfigError("map: steps must be >= 1");
    if (step_size <= 0.0) throw ConfigError("map: step_size must be > 0");
  }
};

struct MapResult {
  ImageGrid reconstruction;
  std::vector<double> grad_norms;  // ||step direction|| per iteration; the
                                   // objective value itself is not computable
};

/// Gradient descent on the MAP objective via its score-based gradient:
/// x <- x + step * (loglik_grad(x) + score(x)).
inline MapResult map_reconstruct(const ScoreModel& score_model, const MeasurementModel& model,
                                 const ImageGrid& y, const MapConfig& cfg) {
  cfg.validate();
  ImageGrid x = recon_detail::make_init(cfg.init, model, y);
  MapResult result;
  result.grad_norms.reserve(static_cast<std::size_t>(cfg.steps));
  for (long k = 0; k < cfg.steps; ++k) {
    const ImageGrid lik = loglik_grad(model, x, y);
    const ImageGrid prior = score(score_model, x);
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double g = lik[i] + prior[i];
      x[i] += cfg.step_size * g;
      sq += g * g;
    }
    result.grad_norms.push_back(std::sqrt(sq));
    if (!is_finite(x) || max_abs(x) > langevin_detail::kDivergenceGuard)
      throw DivergenceError("map_reconstruct: iterate diverged at step " + std::to_string(k));
  }
  result.reconstruction = std::move(x);
  return result;
}

struct PosteriorConfig {
  int chains = 500;
  long steps_per_chain = 500;
  double tau = 1e-3;
  InitSpec init;
  std::uint64_t seed = 0;
  std::uint64_t base_stream = 0;  // chain i runs on base_stream + i
  int threads = 0;

  void validate() const {
    if (chains < 1) throw ConfigError("posterior: chains must be >= 1");
    if (steps_per_chain < 1) throw ConfigError("posterior: steps_per_chain must be >= 1");
    if (tau <= 0.0) throw ConfigError("posterior: tau must be > 0");
  }
};

struct ChainProvenance {
  std::uint64_t seed = 0;
  std::uint64_t base_stream = 0;
  int chains = 0;
  long steps_per_chain = 0;
  double tau = 0.0;
};

struct ChainResult {
  std::vector<ImageGrid> samples;       // final iterates, chain order
  ImageGrid pixel_mean;                 // MMSE estimate
  ImageGrid pixel_std;                  // pixelwise uncertainty, 1/(n-1)
  std::vector<double> per_sample_psnr;  // filled by callers who know the truth
  int chains_failed = 0;
  ChainProvenance provenance;
};

/// Unbiased pixelwise mean and standard deviation of a sample set, streamed
/// in one pass (Welford).
inline std::pair<ImageGrid, ImageGrid> mmse_from_samples(const std::vector<ImageGrid>& samples) {
  if (samples.size() < 2)
    throw std::invalid_argument("mmse_from_samples: needs at least 2 samples");
  ImageGrid mean(samples[0].height, samples[0].width, 0.0);
  ImageGrid m2(samples[0].height, samples[0].width, 0.0);
  double count = 0.0;
  for (const auto& s : samples) {
    require_same_shape(s, mean, "mmse_from_samples");
    count += 1.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double delta = s[i] - mean[i];
      mean[i] += delta / count;
      m2[i] += delta * (s[i] - mean[i]);
    }
  }
  ImageGrid std_dev(mean.height, mean.width);
  for (std::size_t i = 0; i < m2.size(); ++i)
    std_dev[i] = std::sqrt(std::max(0.0, m2[i] / (count - 1.0)));
  return {std::move(mean), std::move(std_dev)};
}

/// Posterior sampling: independent unadjusted Langevin chains whose drift is
/// the likelihood gradient plus the prior score; final iterates are the
/// samples. Without a measurement model each chain is exactly a prior chain
/// on its stream. Chains that diverge are dropped; the run fails unless at
/// least 90% finish.
inline ChainResult posterior_langevin(const ScoreModel& score_model,
                                      const std::optional<MeasurementModel>& model,
                                      const ImageGrid& y, const PosteriorConfig& cfg) {
  cfg.validate();
  std::vector<std::optional<ImageGrid>> finals(static_cast<std::size_t>(cfg.chains));

  std::optional<ImageGrid> shared_init;
  if (cfg.init.kind != InitKind::random) {
    if (!model && cfg.init.kind == InitKind::measurement_adjoint)
      shared_init = y;  // prior-only reduction: start from the given grid
    else if (model)
      shared_init = recon_detail::make_init(cfg.init, *model, y);
    else
      shared_init = cfg.init.provided;
  }

  std::function<ImageGrid(const ImageGrid&)> lik;
  if (model) lik = [&](const ImageGrid& x) { return loglik_grad(*model, x, y); };

  parallel_for(cfg.chains, cfg.threads, [&](int i) {
    LangevinConfig chain_cfg;
    chain_cfg.steps = cfg.steps_per_chain;
    chain_cfg.tau = cfg.tau;
    chain_cfg.height = y.height;
    chain_cfg.width = y.width;
    chain_cfg.seed = cfg.seed;
    chain_cfg.stream_id = cfg.base_stream + static_cast<std::uint64_t>(i);
    chain_cfg.init_mean = cfg.init.mean;
    chain_cfg.init_variance = cfg.init.variance;
    try {
      const auto result = langevin_detail::run_chain(
          score_model, chain_cfg, model ? &lik : nullptr,
          shared_init ? &*shared_init : nullptr);
      finals[static_cast<std::size_t>(i)] = result.sample;
    } catch (const DivergenceError&) {
      // recorded below; a bounded failure fraction is tolerated
    }
  });

  ChainResult result;
  result.provenance = {cfg.seed, cfg.base_stream, cfg.chains, cfg.steps_per_chain, cfg.tau};
  for (auto& f : finals) {
    if (f)
      result.samples.push_back(std::move(*f));
    else
      ++result.chains_failed;
  }
  if (result.samples.size() < static_cast<std::size_t>(std::ceil(0.9 * cfg.chains)))
    throw DivergenceError("posterior_langevin: " + std::to_string(result.chains_failed) + " of " +
                          std::to_string(cfg.chains) + " chains diverged");
  if (result.samples.size() == 1) {
    result.pixel_mean = result.samples.front();
    result.pixel_std = ImageGrid(y.height, y.width, 0.0);
  } else {
    auto [mean, std_dev] = mmse_from_samples(result.samples);
    result.pixel_mean = std::move(mean);
    result.pixel_std = std::move(std_dev);
  }
  return result;
}

}  // namespace scoreprior
