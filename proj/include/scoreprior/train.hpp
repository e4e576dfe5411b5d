#pragma once

#include <cmath>
#include <vector>

#include "scoreprior/blobs.hpp"
#include "scoreprior/cnn.hpp"
#include "scoreprior/parallel.hpp"

namespace scoreprior {

/// Reserved stream ids within a training seed.
namespace train_streams {
constexpr std::uint64_t kWeightInit = 0;
constexpr std::uint64_t kValidationData = 1;
constexpr std::uint64_t kValidationNoise = 2;
constexpr std::uint64_t kTrainData = 3;
constexpr std::uint64_t kTrainNoise = 4;
}  // namespace train_streams

struct TrainConfig {
  double noise_variance = 0.1;                 // sigma^2
  double learning_rate = std::pow(10.0, -1.5);
  double momentum = 0.9;
  int batch_size = 20;
  long max_steps = 20000;
  int validation_size = 100;
  long validate_every = 100;
  double target_val_mse = 0.0;  // > 0: stop early once validation reaches it
  std::uint64_t seed = 0;
  int threads = 0;

  void validate() const {
    if (noise_variance <= 0.0) throw ConfigError("train: noise_variance must be > 0");
    if (learning_rate < 0.0) throw ConfigError("train: learning_rate must be >= 0");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("train: momentum must be in [0,1)");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (max_steps < 1) throw ConfigError("train: max_steps must be >= 1");
    if (validation_size < 1) throw ConfigError("train: validation_size must be >= 1");
    if (validate_every < 1) throw ConfigError("train: validate_every must be >= 1");
  }
};

struct TrainLogEntry {
  long step;          // steps completed when the row was written
  double train_loss;  // mean batch loss since the previous row
  double val_loss;
};

struct TrainResult {
  CnnDenoiserParams params;  // best-validation parameters
  std::vector<TrainLogEntry> log;
  long steps_run = 0;
  double best_val = 0.0;
  long best_step = 0;
};

namespace train_detail {

inline double mse_pair(const ImageGrid& a, const ImageGrid& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

/// Mean per-pixel MSE of the denoiser over fixed (clean, noisy) pairs.
inline double validation_mse(const CnnDenoiserParams& params, const std::vector<ImageGrid>& clean,
                             const std::vector<ImageGrid>& noisy, int threads) {
  const int n = static_cast<int>(clean.size());
  std::vector<double> losses(static_cast<std::size_t>(n), 0.0);
  const int workers = std::min(resolve_threads(threads), n);
  std::vector<cnn_detail::Workspace> ws_pool(static_cast<std::size_t>(workers));
  parallel_for_workers(n, workers, [&](int i, int worker) {
    const ImageGrid r = cnn_forward(params, noisy[static_cast<std::size_t>(i)],
                                    ws_pool[static_cast<std::size_t>(worker)]);
    losses[static_cast<std::size_t>(i)] = mse_pair(r, clean[static_cast<std::size_t>(i)]);
  });
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(n);
}

}  // namespace train_detail

/// SGD-with-momentum training of the residual CNN denoiser on the blobs
/// distribution: sample a fresh batch, add noise, backpropagate, step.
/// Validation runs on a frozen held-out set (images and noise both fixed from
/// reserved streams); the returned parameters are the best-validation
/// snapshot. Throws DivergenceError when the loss stops being finite.
inline TrainResult train_denoiser(const TrainConfig& config, const CnnArchitecture& arch,
                                  const BlobsConfig& blobs) {
  config.validate();
  arch.validate();
  blobs.validate();

  RngStream init_rng(config.seed, train_streams::kWeightInit);
  CnnDenoiserParams params = init_cnn(arch, init_rng);
  CnnGradients velocity = zero_gradients(params);
  CnnGradients grads = zero_gradients(params);

  // frozen validation pairs
  RngStream val_data_rng(config.seed, train_streams::kValidationData);
  RngStream val_noise_rng(config.seed, train_streams::kValidationNoise);
  std::vector<ImageGrid> val_clean = sample_batch(blobs, val_data_rng, config.validation_size);
  std::vector<ImageGrid> val_noisy;
  val_noisy.reserve(val_clean.size());
  const double sd = std::sqrt(config.noise_variance);
  for (const auto& x : val_clean) {
    ImageGrid z = x;
    for (double& v : z.data) v += sd * val_noise_rng.next_gaussian();
    val_noisy.push_back(std::move(z));
  }

  RngStream data_rng(config.seed, train_streams::kTrainData);
  RngStream noise_rng(config.seed, train_streams::kTrainNoise);

  TrainResult result;
  result.best_val = train_detail::validation_mse(params, val_clean, val_noisy, config.threads);
  result.best_step = 0;
  result.params = params;
  result.log.push_back({0, result.best_val, result.best_val});

  double train_accum = 0.0;
  long accum_count = 0;
  for (long step = 1; step <= config.max_steps; ++step) {
    const std::vector<ImageGrid> batch = sample_batch(blobs, data_rng, config.batch_size);
    const double loss =
        cnn_loss_grad(params, batch, noise_rng, config.noise_variance, grads, config.threads);
    if (!std::isfinite(loss))
      throw DivergenceError("train_denoiser: non-finite loss at step " + std::to_string(step));
    sgd_momentum_step(params, grads, velocity, config.learning_rate, config.momentum);
    train_accum += loss;
    ++accum_count;
    result.steps_run = step;

    if (step % config.validate_every == 0 || step == config.max_steps) {
      const double val = train_detail::validation_mse(params, val_clean, val_noisy, config.threads);
      if (!std::isfinite(val))
        throw DivergenceError("train_denoiser: non-finite validation loss at step " +
                              std::to_string(step));
      result.log.push_back({step, train_accum / static_cast<double>(accum_count), val});
      train_accum = 0.0;
      accum_count = 0;
      if (val < result.best_val) {
        result.best_val = val;
        result.best_step = step;
        result.params = params;
      }
      if (config.target_val_mse > 0.0 && result.best_val < config.target_val_mse) break;
    }
  }
  return result;
}

}  // namespace scoreprior
