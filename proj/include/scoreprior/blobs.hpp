#pragma once

#include <vector>

#include "scoreprior/conv.hpp"
#include "scoreprior/grid.hpp"
#include "scoreprior/rng.hpp"

namespace scoreprior {

enum class Boundary { zero_pad, circular };

/// Synthetic binary "blobs" distribution: IID Gaussian noise, repeatedly
/// box-filtered, then thresholded to {0, 1}.
struct BlobsConfig {
  int height = 64;
  int width = 64;
  int rounds = 10;       // box filter applications
  int kernel_size = 3;   // odd
  double threshold = 0.0;
  Boundary boundary = Boundary::circular;

  void validate() const {
    if (height <= 0 || width <= 0) throw ConfigError("blobs: dimensions must be positive");
    if (rounds < 0) throw ConfigError("blobs: rounds must be >= 0");
    if (kernel_size <= 0 || kernel_size % 2 == 0)
      throw ConfigError("blobs: kernel_size must be odd and positive");
  }
};

/// One draw: pixels strictly above the threshold map to 1.0, the rest to 0.0.
inline ImageGrid sample_blob(const BlobsConfig& config, RngStream& rng) {
  config.validate();
  ImageGrid field = draw_gaussian(rng, config.height, config.width, 0.0, 1.0);
  const ImageGrid kernel = box_kernel(config.kernel_size);
  for (int r = 0; r < config.rounds; ++r) {
    field = config.boundary == Boundary::circular ? conv2_circular(field, kernel)
                                                  : conv2_same(field, kernel);
  }
  for (double& v : field.data) v = v > config.threshold ? 1.0 : 0.0;
  return field;
}

inline std::vector<ImageGrid> sample_batch(const BlobsConfig& config, RngStream& rng,
                                           int batch_size) {
  if (batch_size < 1) throw ConfigError("sample_batch: batch_size must be >= 1");
  std::vector<ImageGrid> batch;
  batch.reserve(static_cast<std::size_t>(batch_size));
  for (int i = 0; i < batch_size; ++i) batch.push_back(sample_blob(config, rng));
  return batch;
}

}  // namespace scoreprior
