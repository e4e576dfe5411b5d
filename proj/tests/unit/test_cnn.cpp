#include <catch2/catch_amalgamated.hpp>

#include "scoreprior/cnn.hpp"
#include "scoreprior/rng.hpp"

using namespace scoreprior;

namespace {

ImageGrid random_grid(int h, int w, RngStream& rng, double scale = 1.0) {
  ImageGrid g(h, w);
  for (double& v : g.data) v = scale * rng.next_gaussian();
  return g;
}

double batch_loss(const CnnDenoiserParams& params, const std::vector<ImageGrid>& clean,
                  const std::vector<ImageGrid>& noisy) {
  double total = 0.0;
  for (std::size_t b = 0; b < clean.size(); ++b) {
    const ImageGrid r = cnn_forward(params, noisy[b]);
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double d = r[i] - clean[b][i];
      total += d * d;
    }
  }
  return total / (static_cast<double>(clean.size()) * static_cast<double>(clean[0].size()));
}

/// max_i |analytic_i - numeric_i| / max_i |numeric_i| over all parameters.
double gradient_check(const CnnArchitecture& arch, std::uint64_t seed, int h, int w,
                      int batch = 2, double step = 1e-5) {
  RngStream rng(seed, 0);
  CnnDenoiserParams params = init_cnn(arch, rng);
  // perturb the zero-initialized final layer so its gradient path is generic
  for (auto& layer : params.layers) {
    double* ptr = layer.weight.data();
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) ptr[i] += 0.05 * rng.next_gaussian();
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = 0.05 * rng.next_gaussian();
  }
  std::vector<ImageGrid> clean, noisy;
  for (int b = 0; b < batch; ++b) {
    clean.push_back(random_grid(h, w, rng));
    noisy.push_back(random_grid(h, w, rng));
  }
  CnnGradients grads;
  cnn_batch_loss_grad(params, clean, noisy, grads);

  double max_abs_err = 0.0, max_numeric = 0.0;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto check_entry = [&](double& p, double analytic) {
      const double saved = p;
      p = saved + step;
      const double up = batch_loss(params, clean, noisy);
      p = saved - step;
      const double down = batch_loss(params, clean, noisy);
      p = saved;
      const double numeric = (up - down) / (2.0 * step);
      max_abs_err = std::max(max_abs_err, std::abs(analytic - numeric));
      max_numeric = std::max(max_numeric, std::abs(numeric));
    };
    double* wp = params.layers[l].weight.data();
    const double* gp = grads.layers[l].weight.data();
    for (Eigen::Index i = 0; i < params.layers[l].weight.size(); ++i) check_entry(wp[i], gp[i]);
    for (Eigen::Index i = 0; i < params.layers[l].bias.size(); ++i)
      check_entry(params.layers[l].bias(i), grads.layers[l].bias(i));
  }
  return max_abs_err / max_numeric;
}

}  // namespace

TEST_CASE("zero-initialized network is exactly the identity denoiser") {
  CnnArchitecture arch;
  arch.depth = 4;
  arch.channels = 8;
  RngStream rng(51, 0);
  CnnDenoiserParams params = init_cnn(arch, rng);
  for (auto& layer : params.layers) {
    layer.weight.setZero();
    layer.bias.setZero();
  }
  RngStream data_rng(51, 1);
  const ImageGrid z = random_grid(16, 16, data_rng);
  const ImageGrid r = cnn_forward(params, z);
  REQUIRE(r.data == z.data);
}

TEST_CASE("fully convolutional: output shape equals input shape") {
  CnnArchitecture arch;
  arch.depth = 3;
  arch.channels = 4;
  RngStream rng(52, 0);
  const CnnDenoiserParams params = init_cnn(arch, rng);
  for (auto [h, w] : {std::pair{64, 64}, std::pair{37, 41}}) {
    RngStream data_rng(52, 1);
    const ImageGrid z = random_grid(h, w, data_rng);
    const ImageGrid r = cnn_forward(params, z);
    CHECK(r.height == h);
    CHECK(r.width == w);
  }
}

TEST_CASE("per-pixel MSE of the freshly initialized network is the noise variance") {
  // init_cnn zeroes the final layer, so r(z) = z and the loss is ||N||^2 / n.
  // sigma2 = 0.1 over 1e5+ pixels: 0.1 +- 0.005.
  CnnArchitecture arch;
  arch.depth = 3;
  arch.channels = 4;
  RngStream rng(53, 0);
  const CnnDenoiserParams params = init_cnn(arch, rng);
  const double sigma2 = 0.1;
  const int batch = 32;  // 32 * 64*64 = 131072 pixels
  std::vector<ImageGrid> clean, noisy;
  RngStream noise(53, 1);
  for (int b = 0; b < batch; ++b) {
    ImageGrid x(64, 64, 0.5);
    ImageGrid z = x;
    for (double& v : z.data) v += std::sqrt(sigma2) * noise.next_gaussian();
    clean.push_back(std::move(x));
    noisy.push_back(std::move(z));
  }
  CnnGradients grads;
  const double loss = cnn_batch_loss_grad(params, clean, noisy, grads);
  CHECK(std::abs(loss - sigma2) < 0.005);
}

TEST_CASE("loss is non-negative") {
  CnnArchitecture arch;
  arch.depth = 2;
  arch.channels = 2;
  RngStream rng(54, 0);
  CnnDenoiserParams params = init_cnn(arch, rng);
  std::vector<ImageGrid> clean{random_grid(8, 8, rng)}, noisy{random_grid(8, 8, rng)};
  CnnGradients grads;
  CHECK(cnn_batch_loss_grad(params, clean, noisy, grads) >= 0.0);
}

TEST_CASE("parameter gradients match central finite differences") {
  // Randomized small architectures, with and without skip connections.
  struct Case {
    int depth, channels;
    bool skip;
    std::uint64_t seed;
  };
  const Case cases[] = {
      {2, 2, true, 101}, {2, 3, false, 102}, {3, 2, true, 103},
      {3, 3, false, 104}, {4, 2, true, 105},
  };
  for (const auto& c : cases) {
    CnnArchitecture arch;
    arch.depth = c.depth;
    arch.channels = c.channels;
    arch.input_skip = c.skip;
    const double rel = gradient_check(arch, c.seed, 8, 8);
    INFO("depth=" << c.depth << " channels=" << c.channels << " skip=" << c.skip);
    REQUIRE(rel < 1e-4);
  }
}

TEST_CASE("final-layer bias gradient on 1x1 images is the mean residual error") {
  // On 1x1 grids every conv is a plain linear map, so the final bias gradient
  // reduces to 2 * mean(r(z) - x), checkable by hand.
  CnnArchitecture arch;
  arch.depth = 2;
  arch.channels = 2;
  arch.input_skip = false;
  RngStream rng(55, 0);
  CnnDenoiserParams params = init_cnn(arch, rng);  // final layer zero => r(z) = z
  std::vector<ImageGrid> clean, noisy;
  clean.push_back(ImageGrid(1, 1, 0.25));
  noisy.push_back(ImageGrid(1, 1, 1.0));
  clean.push_back(ImageGrid(1, 1, -0.5));
  noisy.push_back(ImageGrid(1, 1, 0.5));
  CnnGradients grads;
  cnn_batch_loss_grad(params, clean, noisy, grads);
  const double expected = 2.0 * ((1.0 - 0.25) + (0.5 - -0.5)) / 2.0;
  CHECK(grads.layers[1].bias(0) == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("sgd with zero momentum is plain gradient descent") {
  CnnArchitecture arch;
  arch.depth = 2;
  arch.channels = 2;
  RngStream rng(56, 0);
  CnnDenoiserParams params = init_cnn(arch, rng);
  const CnnDenoiserParams before = params;
  CnnGradients grads = zero_gradients(params);
  grads.layers[0].weight.setConstant(2.0);
  CnnGradients velocity = zero_gradients(params);
  sgd_momentum_step(params, grads, velocity, 0.1, 0.0);
  const Eigen::MatrixXd expected = before.layers[0].weight.array() - 0.2;
  CHECK((params.layers[0].weight - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("zero gradient with nonzero velocity keeps coasting") {
  CnnArchitecture arch;
  arch.depth = 2;
  arch.channels = 2;
  RngStream rng(57, 0);
  CnnDenoiserParams params = init_cnn(arch, rng);
  const CnnDenoiserParams before = params;
  CnnGradients grads = zero_gradients(params);
  CnnGradients velocity = zero_gradients(params);
  velocity.layers[0].weight.setConstant(1.0);
  sgd_momentum_step(params, grads, velocity, 0.1, 0.9);
  const Eigen::MatrixXd expected = before.layers[0].weight.array() + 0.9;
  CHECK((params.layers[0].weight - expected).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(velocity.layers[0].weight(0, 0) == Catch::Approx(0.9));
}

TEST_CASE("momentum descent on a quadratic bowl converges") {
  // f(p) = p^2/2, lr = 0.1, momentum = 0.9: |p| < 1e-6 within 500 steps.
  double p = 1.0, v = 0.0;
  bool converged = false;
  for (int step = 0; step < 500; ++step) {
    v = 0.9 * v - 0.1 * p;
    p += v;
    if (std::abs(p) < 1e-6 && std::abs(v) < 1e-6) {
      converged = true;
      break;
    }
  }
  CHECK(converged);
}

TEST_CASE("inconsistent parameter shapes are rejected") {
  CnnArchitecture arch;
  arch.depth = 2;
  arch.channels = 2;
  RngStream rng(58, 0);
  CnnDenoiserParams params = init_cnn(arch, rng);
  params.layers[0].weight.resize(3, 2);
  CHECK_THROWS_AS(params.validate(), ConfigError);
}

TEST_CASE("batch gradients are identical across thread counts") {
  CnnArchitecture arch;
  arch.depth = 3;
  arch.channels = 4;
  RngStream rng(59, 0);
  CnnDenoiserParams params = init_cnn(arch, rng);
  std::vector<ImageGrid> clean, noisy;
  for (int b = 0; b < 7; ++b) {
    clean.push_back(random_grid(16, 16, rng));
    noisy.push_back(random_grid(16, 16, rng));
  }
  CnnGradients g1, g4;
  const double l1 = cnn_batch_loss_grad(params, clean, noisy, g1, 1);
  const double l4 = cnn_batch_loss_grad(params, clean, noisy, g4, 4);
  REQUIRE(l1 == l4);
  for (std::size_t l = 0; l < g1.layers.size(); ++l) {
    REQUIRE(g1.layers[l].weight == g4.layers[l].weight);
    REQUIRE(g1.layers[l].bias == g4.layers[l].bias);
  }
}
