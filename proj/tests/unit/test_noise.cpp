#include <doctest.h>

#include <cmath>
#include <random>

#include "rvarena/error.hpp"
#include "rvarena/noise.hpp"

using namespace rvarena;

namespace {

double oracle_kernel(double tau, double sigma, double prot) {
  const double lambda = 3.0 * prot;
  const double s = std::sin(M_PI * tau / prot);
  return sigma * sigma * std::exp(-tau * tau / (2 * lambda * lambda) - 2.0 * s * s);
}

}  // namespace

TEST_CASE("qp kernel values") {
  const GpSpec gp{1.3, 20.0};
  CHECK(qp_kernel(0.0, gp) == doctest::Approx(1.69).epsilon(1e-15));
  CHECK(qp_kernel(20.0, gp) ==
        doctest::Approx(1.69 * std::exp(-400.0 / (2 * 3600.0))).epsilon(1e-12));
  CHECK(qp_kernel(-7.0, gp) == doctest::Approx(qp_kernel(7.0, gp)).epsilon(1e-15));
}

TEST_CASE("build_covariance against elementwise oracle") {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(0.0, 200.0);
  std::vector<double> t(50);
  for (auto& x : t) x = u(g);
  NoiseSpec spec;
  spec.gp = GpSpec{0.8, 27.0};
  const auto cov = build_covariance(t, spec);
  for (int a = 0; a < 50; ++a) {
    for (int b = 0; b < 50; ++b) {
      CHECK(std::abs(cov(a, b) - oracle_kernel(std::abs(t[a] - t[b]), 0.8, 27.0)) < 1e-12);
    }
  }
  CHECK((cov - cov.transpose()).norm() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  CHECK(es.eigenvalues().minCoeff() > -1e-9);

  NoiseSpec white;
  CHECK(build_covariance(t, white).norm() == 0.0);
  CHECK_THROWS_AS(build_covariance(std::vector<double>{}, spec), Error);
}

TEST_CASE("reported sigma") {
  NoiseSpec s;
  s.jitter_ms = 0.75;
  CHECK(reported_sigma(1.0, s) == doctest::Approx(1.25));
  s.gp = GpSpec{1.5, 20.0};
  CHECK(reported_sigma(1.0, s) == doctest::Approx(1.25));
  s.sigmas_include_jitter = false;
  CHECK(reported_sigma(1.0, s) == 1.0);
}

TEST_CASE("white noise variance") {
  Rng rng = make_stream(99, 0);
  NoiseSpec spec;
  const std::vector<double> t{0.0};
  const std::vector<double> sig{2.0};
  double s2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double v = sample_noise(rng, t, sig, spec)[0];
    s2 += v * v;
  }
  CHECK(s2 / n == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("jitter adds in quadrature to the draw") {
  Rng rng = make_stream(5, 0);
  NoiseSpec spec;
  spec.jitter_ms = 1.5;
  const std::vector<double> t{0.0};
  const std::vector<double> sig{2.0};
  double s2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double v = sample_noise(rng, t, sig, spec)[0];
    s2 += v * v;
  }
  CHECK(s2 / n == doctest::Approx(6.25).epsilon(0.05));
}

TEST_CASE("zero-amplitude GP equals white-only draw") {
  const std::vector<double> t{0.0, 1.0, 2.5, 9.0, 30.0};
  const std::vector<double> sig{1.0, 1.2, 0.9, 1.1, 1.0};
  NoiseSpec white;
  NoiseSpec gp0;
  gp0.gp = GpSpec{0.0, 20.0};
  Rng a = make_stream(4, 0), b = make_stream(4, 0);
  const auto wa = sample_noise(a, t, sig, white);
  const auto wb = sample_noise(b, t, sig, gp0);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(wa[i] == wb[i]);
}

TEST_CASE("sample_noise is deterministic and order-stable") {
  const std::vector<double> t{3.0, 1.0, 2.0};
  const std::vector<double> sig{1.0, 2.0, 3.0};
  NoiseSpec spec;
  spec.gp = GpSpec{0.5, 15.0};
  Rng a = make_stream(12, 3), b = make_stream(12, 3);
  CHECK(sample_noise(a, t, sig, spec) == sample_noise(b, t, sig, spec));

  // Same observation gets the same white draw whatever the input order.
  NoiseSpec w;
  Rng c = make_stream(8, 0), d = make_stream(8, 0);
  const auto x = sample_noise(c, t, sig, w);
  const std::vector<double> t2{1.0, 2.0, 3.0};
  const std::vector<double> sig2{2.0, 3.0, 1.0};
  const auto y = sample_noise(d, t2, sig2, w);
  CHECK(x[0] == y[2]);
  CHECK(x[1] == y[0]);
  CHECK(x[2] == y[1]);

  CHECK_THROWS_AS(sample_noise(a, t, std::vector<double>{1.0, 0.0, 1.0}, w), Error);
  CHECK_THROWS_AS(sample_noise(a, t, std::vector<double>{1.0}, w), Error);
}

TEST_CASE("coincident times need the nugget") {
  const std::vector<double> t{5.0, 5.0, 5.0, 6.0};
  const std::vector<double> z{0.3, -1.0, 0.2, 0.5};
  const auto v = correlated_from_normals(t, GpSpec{1.0, 20.0}, z);
  CHECK(v.size() == 4);
  CHECK(std::abs(v[0] - v[1]) < 1e-3);
  CHECK(std::abs(v[1] - v[2]) < 1e-3);
}
