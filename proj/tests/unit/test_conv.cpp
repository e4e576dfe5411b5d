#include <catch2/catch_amalgamated.hpp>

#include "scoreprior/conv.hpp"
#include "scoreprior/fft.hpp"
#include "scoreprior/rng.hpp"

using namespace scoreprior;

namespace {

ImageGrid random_grid(int h, int w, RngStream& rng) {
  ImageGrid g(h, w);
  for (double& v : g.data) v = rng.next_gaussian();
  return g;
}

// nested-loop reference for conv2_same (cross-correlation, zero pad)
ImageGrid conv2_same_reference(const ImageGrid& g, const ImageGrid& k) {
  const int ch = k.height / 2, cw = k.width / 2;
  ImageGrid out(g.height, g.width, 0.0);
  for (int i = 0; i < g.height; ++i)
    for (int j = 0; j < g.width; ++j)
      for (int a = 0; a < k.height; ++a)
        for (int b = 0; b < k.width; ++b) {
          const int r = i + a - ch, c = j + b - cw;
          if (r >= 0 && r < g.height && c >= 0 && c < g.width)
            out.at(i, j) += k.at(a, b) * g.at(r, c);
        }
  return out;
}

}  // namespace

TEST_CASE("1x1 identity kernel returns the input") {
  RngStream rng(21, 0);
  const ImageGrid g = random_grid(9, 11, rng);
  ImageGrid k(1, 1, 1.0);
  const ImageGrid out = conv2_same(g, k);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(out[i] == g[i]);
  const ImageGrid outc = conv2_circular(g, k);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(outc[i] == g[i]);
}

TEST_CASE("zero padding attenuates boundary averages") {
  const ImageGrid g(6, 6, 1.0);
  const ImageGrid out = conv2_same(g, box_kernel(3));
  CHECK(out.at(3, 3) == Catch::Approx(1.0).margin(1e-15));  // interior
  CHECK(out.at(0, 0) == Catch::Approx(4.0 / 9.0).margin(1e-15));  // corner
}

TEST_CASE("even kernel sizes are rejected") {
  const ImageGrid g(4, 4, 1.0);
  const ImageGrid k(2, 2, 0.25);
  CHECK_THROWS_AS(conv2_same(g, k), std::invalid_argument);
  CHECK_THROWS_AS(conv2_circular(g, k), std::invalid_argument);
}

TEST_CASE("conv2_same matches the nested-loop reference on random 16x16 input") {
  RngStream rng(22, 0);
  const ImageGrid g = random_grid(16, 16, rng);
  const ImageGrid k = random_grid(5, 3, rng);
  const ImageGrid a = conv2_same(g, k);
  const ImageGrid b = conv2_same_reference(g, k);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
}

TEST_CASE("circular convolution of a constant grid has no boundary attenuation") {
  const ImageGrid g(6, 8, 2.5);
  const ImageGrid out = conv2_circular(g, box_kernel(3));
  for (double v : out.data) CHECK(v == Catch::Approx(2.5).margin(1e-14));
}

TEST_CASE("circular convolution equals the DFT-domain pointwise product") {
  RngStream rng(23, 0);
  const ImageGrid g = random_grid(16, 16, rng);
  const ImageGrid k = random_grid(3, 3, rng);
  const ImageGrid direct = conv2_circular(g, k);

  // Spectral oracle: embed the kernel with its center wrapped onto (0,0);
  // under the unitary convention the convolution theorem carries sqrt(H*W).
  ImageGrid padded(g.height, g.width, 0.0);
  const int ch = k.height / 2, cw = k.width / 2;
  for (int a = 0; a < k.height; ++a)
    for (int b = 0; b < k.width; ++b) {
      const int r = ((a - ch) % g.height + g.height) % g.height;
      const int c = ((b - cw) % g.width + g.width) % g.width;
      padded.at(r, c) = k.at(a, b);
    }
  const ComplexGrid G = dft2(g), K = dft2(padded);
  ComplexGrid prod(g.height, g.width);
  const double scale = std::sqrt(static_cast<double>(g.height) * g.width);
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = G[i] * K[i] * scale;
  const ImageGrid spectral = idft2_real(prod);
  for (std::size_t i = 0; i < direct.size(); ++i)
    CHECK(std::abs(direct[i] - spectral[i]) < 1e-10);
}

TEST_CASE("adjoint identity <conv(g,k), h> == <g, adjoint(h,k)>") {
  RngStream rng(24, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const ImageGrid g = random_grid(12, 10, rng);
    const ImageGrid h = random_grid(12, 10, rng);
    const ImageGrid k = random_grid(3, 3, rng);
    const double lhs = dot(conv2_same(g, k), h);
    const double rhs = dot(g, conv2_same_adjoint(h, k));
    REQUIRE(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}
