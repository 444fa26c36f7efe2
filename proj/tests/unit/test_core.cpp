#include "oracles.hpp"
#include "unirec/core.hpp"
#include "unirec/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace unirec;

TEST_SUITE("core") {
  TEST_CASE("ensemble is reproducible from (m, n, seed)") {
    const SensingEnsemble a = gaussian_ensemble(2, 3, 7);
    const SensingEnsemble b = gaussian_ensemble(2, 3, 7);
    CHECK(a.rows() == 2);
    CHECK(a.cols() == 3);
    CHECK(a.seed() == 7u);
    CHECK(a.matrix().allFinite());
    CHECK(a.matrix() == b.matrix());
    CHECK(gaussian_ensemble(2, 3, 8).matrix() != a.matrix());
  }

  TEST_CASE("ensemble is filled row by row from one stream") {
    const SensingEnsemble a = gaussian_ensemble(3, 4, 99);
    Rng rng(99);
    for (Eigen::Index i = 0; i < 3; ++i) {
      for (Eigen::Index j = 0; j < 4; ++j) CHECK(a.matrix()(i, j) == rng.normal());
    }
    // A taller ensemble shares its leading rows.
    const SensingEnsemble tall = gaussian_ensemble(5, 4, 99);
    CHECK(tall.matrix().topRows(3) == a.matrix());
  }

  TEST_CASE("column mean and covariance") {
    const SensingEnsemble a1 = gaussian_ensemble(10000, 1, 1);
    CHECK(std::abs(a1.matrix().col(0).mean()) < 4.0 / std::sqrt(10000.0));

    const SensingEnsemble a2 = gaussian_ensemble(10000, 2, 1);
    const Mat cov = a2.matrix().transpose() * a2.matrix() / 10000.0;
    CHECK((cov - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.05);
  }

  TEST_CASE("invalid dimensions") {
    CHECK_THROWS_AS(gaussian_ensemble(0, 3, 1), ArgumentError);
    CHECK_THROWS_AS(gaussian_ensemble(3, 0, 1), ArgumentError);
    CHECK_THROWS_AS(gaussian_ensemble(-1, 3, 1), ArgumentError);
  }

  TEST_CASE("rng uniforms and normals") {
    Rng rng(5);
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      s += u;
    }
    CHECK(std::abs(s / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
    s = 0;
    for (int i = 0; i < n; ++i) {
      const double g = rng.normal();
      s += g;
      s2 += g * g;
    }
    CHECK(std::abs(s / n) < 4 / std::sqrt(double(n)));
    CHECK(std::abs(s2 / n - 1) < 4 * std::sqrt(2.0 / n));
    for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7u);
  }

  TEST_CASE("derive_seed depends only on its arguments") {
    CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
    CHECK(derive_seed(1, {0}) != derive_seed(1, {0, 0}));
  }

  TEST_CASE("sparse apply matches the dense product") {
    const SensingEnsemble a = gaussian_ensemble(30, 40, 3);
    Vec u = Vec::Zero(40);
    u[3] = 1.5;
    u[17] = -2.0;
    CHECK((a.apply(u) - a.matrix() * u).norm() < 1e-12);
    const Vec d = Vec::LinSpaced(40, -1, 1);
    CHECK((a.apply(d) - a.matrix() * d).norm() < 1e-12);
    const Vec r = Vec::LinSpaced(30, 0, 2);
    CHECK((a.apply_transpose(r) - a.matrix().transpose() * r).norm() < 1e-12);
    CHECK_THROWS_AS(a.apply(Vec::Zero(39)), ArgumentError);
  }

  TEST_CASE("dense vector validation") {
    CHECK_THROWS_AS(require_dense_vector(Vec(), "v"), ArgumentError);
    Vec v = Vec::Ones(3);
    CHECK_NOTHROW(require_dense_vector(v, "v"));
    v[1] = std::nan("");
    CHECK_FALSE(all_finite(v));
    CHECK_THROWS_AS(require_dense_vector(v, "v"), ArgumentError);
  }

  TEST_CASE("top-k helpers") {
    const Vec v = (Vec(5) << 1, -4, 4, 0.5, -2).finished();
    const auto idx = top_k_indices(v, 3);
    REQUIRE(idx.size() == 3);
    CHECK(idx[0] == 1);  // tie with index 2, lower index first
    CHECK(idx[1] == 2);
    CHECK(idx[2] == 4);
    CHECK(top_k_norm(v, 2) == doctest::Approx(std::sqrt(32.0)));
    CHECK(top_k_norm(v, 10) == doctest::Approx(v.norm()));
  }

  TEST_CASE("per-sample width supremum matches subset enumeration") {
    Rng rng(11);
    for (int n = 1; n <= 6; ++n) {
      for (int k = 1; k <= n; ++k) {
        for (int rep = 0; rep < 20; ++rep) {
          const Vec g = rng.normal_vector(n);
          // max over k-subsets of <g, g_S / ||g_S||> = ||g_S||.
          double best = 0;
          oracle::for_each_subset(n, k, [&](const std::vector<int>& s) {
            double e = 0;
            for (int i : s) e += g[i] * g[i];
            best = std::max(best, std::sqrt(e));
          });
          CHECK(top_k_norm(g, k) == doctest::Approx(best).epsilon(1e-14));
        }
      }
    }
  }

  TEST_CASE("gaussian width examples") {
    const double e_abs = oracle::gaussian_mean([](double t) { return std::abs(t); }, {0.0});
    CHECK(e_abs == doctest::Approx(std::sqrt(2 / M_PI)).epsilon(1e-10));

    const WidthEstimate w1 = gaussian_width_sparse(1, 1, 200000, 3);
    CHECK(w1.value >= 0);
    CHECK(w1.std_error > 0);
    CHECK(w1.samples == 200000u);
    CHECK(std::abs(w1.value - e_abs) < 4 * w1.std_error);

    // E max(|g1|, |g2|) by two-dimensional quadrature: 2 E[|g1| 1{|g2| < |g1|}].
    const double e_max = oracle::gaussian_mean(
        [](double t) { return 2 * std::abs(t) * (2 * oracle::normal_cdf(std::abs(t)) - 1); }, {0.0});
    CHECK(e_max == doctest::Approx(1.128).epsilon(1e-3));
    const WidthEstimate w2 = gaussian_width_sparse(2, 1, 200000, 4);
    CHECK(std::abs(w2.value - e_max) < 4 * w2.std_error);

    const WidthEstimate w53 = gaussian_width_sparse(5, 3, 5000, 9);
    const WidthEstimate w55 = gaussian_width_sparse(5, 5, 5000, 9);
    CHECK(w55.value >= w53.value);

    CHECK_THROWS_AS(gaussian_width_sparse(3, 4, 10, 1), ArgumentError);
    CHECK_THROWS_AS(gaussian_width_sparse(3, 0, 10, 1), ArgumentError);
    CHECK_THROWS_AS(gaussian_width_sparse(3, 1, 0, 1), ArgumentError);
  }

  TEST_CASE("gaussian width is monotone in k") {
    for (int k = 1; k < 20; ++k) {
      const WidthEstimate a = gaussian_width_sparse(20, k, 2000, 17);
      const WidthEstimate b = gaussian_width_sparse(20, k + 1, 2000, 17);
      CHECK(b.value >= a.value - 3 * std::max(a.std_error, b.std_error));
    }
  }

  TEST_CASE("entropy bound") {
    CHECK(entropy_bound_sparse(5, 5, 3.0) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(entropy_bound_sparse(100, 1, 3.0) == doctest::Approx(std::log(100 * M_E)).epsilon(1e-14));
    CHECK(entropy_bound_sparse(100, 1, 3.0) == doctest::Approx(5.605).epsilon(1e-3));
    for (int k : {1, 3, 7}) {
      const double d = entropy_bound_sparse(50, k, 0.05) - entropy_bound_sparse(50, k, 0.1);
      CHECK(d == doctest::Approx(k * std::log(2.0)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(entropy_bound_sparse(5, 6, 0.1), ArgumentError);
    CHECK_THROWS_AS(entropy_bound_sparse(5, 2, 0.0), ArgumentError);
  }
}
