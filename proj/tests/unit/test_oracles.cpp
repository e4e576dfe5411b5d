#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "scoreprior/oracles.hpp"
#include "scoreprior/rng.hpp"

using namespace scoreprior;

namespace {

ImageGrid random_grid(int h, int w, RngStream& rng) {
  ImageGrid g(h, w);
  for (double& v : g.data) v = rng.next_gaussian();
  return g;
}

Eigen::MatrixXd random_spd(int n, RngStream& rng, double ridge = 0.1) {
  Eigen::MatrixXd b(n, n);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.next_gaussian();
  Eigen::MatrixXd cov = b * b.transpose() / static_cast<double>(n);
  cov.diagonal().array() += ridge;
  return cov;
}

}  // namespace

TEST_CASE("scalar Gaussian oracle shrinks by s2/(s2+sigma2)") {
  // mu=0, Sigma=1, sigma2=1, z=2 -> xhat = 1
  GaussianPriorOracle oracle = GaussianPriorOracle::isotropic(ImageGrid(1, 1, 0.0), 1.0);
  ImageGrid z(1, 1, 2.0);
  CHECK(gaussian_oracle_denoise(oracle, z, 1.0)[0] == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("huge noise collapses the Gaussian oracle to the prior mean") {
  RngStream rng(41, 0);
  ImageGrid mu(4, 4, 0.0);
  const GaussianPriorOracle oracle = GaussianPriorOracle::isotropic(mu, 1.0);
  const ImageGrid z = random_grid(4, 4, rng);
  const ImageGrid xhat = gaussian_oracle_denoise(oracle, z, 1e6);
  CHECK(std::sqrt(squared_norm(xhat - mu)) < 1e-3 * std::sqrt(squared_norm(z - mu)));
}

TEST_CASE("dense Gaussian oracle matches conditioning-by-rejection on 2 pixels") {
  // Importance-free oracle: draw (X, Z) jointly and average X over draws with
  // Z near z. Acceptance window small enough that the conditioning bias is
  // well under the Monte Carlo error.
  RngStream rng(42, 0);
  ImageGrid mu(1, 2);
  mu[0] = 0.3;
  mu[1] = -0.2;
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.6, 0.6, 1.0;
  const GaussianPriorOracle oracle = GaussianPriorOracle::dense(mu, cov);
  const double sigma2 = 0.5;
  ImageGrid z(1, 2);
  z[0] = 1.0;
  z[1] = 0.2;
  const ImageGrid xhat = gaussian_oracle_denoise(oracle, z, sigma2);

  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  const double sd = std::sqrt(sigma2);
  const double window = 0.05;
  double sum0 = 0.0, sum1 = 0.0, sq0 = 0.0, sq1 = 0.0;
  long kept = 0;
  for (long trial = 0; trial < 4000000; ++trial) {
    Eigen::Vector2d e(rng.next_gaussian(), rng.next_gaussian());
    const Eigen::Vector2d x = Eigen::Vector2d(mu[0], mu[1]) + llt.matrixL() * e;
    const double z0 = x[0] + sd * rng.next_gaussian();
    const double z1 = x[1] + sd * rng.next_gaussian();
    if (std::abs(z0 - z[0]) < window && std::abs(z1 - z[1]) < window) {
      sum0 += x[0];
      sum1 += x[1];
      sq0 += x[0] * x[0];
      sq1 += x[1] * x[1];
      ++kept;
    }
  }
  REQUIRE(kept > 1000);
  const double m0 = sum0 / kept, m1 = sum1 / kept;
  const double se0 = std::sqrt((sq0 / kept - m0 * m0) / kept);
  const double se1 = std::sqrt((sq1 / kept - m1 * m1) / kept);
  CHECK(std::abs(xhat[0] - m0) < 3.0 * se0);
  CHECK(std::abs(xhat[1] - m1) < 3.0 * se1);
}

TEST_CASE("oracle Tweedie consistency: (denoise(z)-z)/sigma2 == closed-form score") {
  RngStream rng(43, 0);
  for (int trial = 0; trial < 5; ++trial) {
    const double sigma2 = 0.2 + 0.3 * rng.next_uniform();
    ImageGrid mu = random_grid(4, 4, rng);
    const GaussianPriorOracle oracle = GaussianPriorOracle::dense(mu, random_spd(16, rng));
    const ImageGrid z = random_grid(4, 4, rng);
    const ImageGrid xhat = gaussian_oracle_denoise(oracle, z, sigma2);
    const ImageGrid reference = gaussian_oracle_score(oracle, z, sigma2);
    double max_rel = 0.0;
    const double scale = std::sqrt(squared_norm(reference) / reference.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double tweedie = (xhat[i] - z[i]) / sigma2;
      max_rel = std::max(max_rel, std::abs(tweedie - reference[i]) / scale);
    }
    REQUIRE(max_rel < 1e-10);
  }
}

TEST_CASE("single-component GMM equals the Gaussian oracle") {
  RngStream rng(44, 0);
  ImageGrid mu = random_grid(3, 3, rng);
  GmmPriorOracle gmm;
  gmm.components.push_back({1.0, mu, 0.7});
  const GaussianPriorOracle gaussian = GaussianPriorOracle::isotropic(mu, 0.7);
  const ImageGrid z = random_grid(3, 3, rng);
  const ImageGrid a = gmm_oracle_denoise(gmm, z, 0.3);
  const ImageGrid b = gaussian_oracle_denoise(gaussian, z, 0.3);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == Catch::Approx(b[i]).margin(1e-12));
}

TEST_CASE("symmetric two-component GMM denoises z=0 to 0") {
  ImageGrid mu_pos(2, 2, 0.8), mu_neg(2, 2, -0.8);
  GmmPriorOracle gmm;
  gmm.components.push_back({0.5, mu_pos, 0.2});
  gmm.components.push_back({0.5, mu_neg, 0.2});
  const ImageGrid z(2, 2, 0.0);
  const ImageGrid xhat = gmm_oracle_denoise(gmm, z, 0.4);
  for (double v : xhat.data) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("1-pixel 2-component GMM matches the quadrature posterior mean") {
  GmmPriorOracle gmm;
  gmm.components.push_back({0.3, ImageGrid(1, 1, -1.0), 0.09});
  gmm.components.push_back({0.7, ImageGrid(1, 1, 1.5), 0.25});
  const double sigma2 = 0.3;
  const double z = 0.4;

  // Quadrature oracle: E[X | Z=z] = Int x f_X(x) N(z - x; sigma2) dx / Int ...
  // computed by Simpson's rule, independent of the mixture algebra.
  auto prior_pdf = [&](double x) {
    double p = 0.0;
    for (const auto& c : gmm.components)
      p += c.weight * std::exp(-0.5 * (x - c.mean[0]) * (x - c.mean[0]) / c.variance) /
           std::sqrt(2.0 * std::numbers::pi * c.variance);
    return p;
  };
  auto integrand = [&](double x, bool weighted) {
    const double lik = std::exp(-0.5 * (z - x) * (z - x) / sigma2);
    return prior_pdf(x) * lik * (weighted ? x : 1.0);
  };
  const double lo = -8.0, hi = 8.0;
  const int n = 20000;  // even
  const double h = (hi - lo) / n;
  double numerator = 0.0, denominator = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + h * i;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    numerator += w * integrand(x, true);
    denominator += w * integrand(x, false);
  }
  const double expected = numerator / denominator;

  ImageGrid zg(1, 1, z);
  CHECK(gmm_oracle_denoise(gmm, zg, sigma2)[0] == Catch::Approx(expected).margin(1e-8));
}

TEST_CASE("GMM validation rejects malformed mixtures") {
  GmmPriorOracle empty;
  CHECK_THROWS_AS(empty.validate(), ConfigError);
  GmmPriorOracle bad_weights;
  bad_weights.components.push_back({0.5, ImageGrid(1, 1, 0.0), 1.0});
  CHECK_THROWS_AS(bad_weights.validate(), ConfigError);
}
