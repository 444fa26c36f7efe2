#include "oracles.hpp"
#include "unirec/errors.hpp"
#include "unirec/experiments.hpp"
#include "unirec/links.hpp"
#include "unirec/solvers.hpp"

#include <doctest.h>

#include <cmath>

using namespace unirec;

namespace {

Vec sparse_unit(Eigen::Index n, Eigen::Index k, std::uint64_t seed) {
  Rng rng(seed);
  return sample_sparse_sphere(rng, n, k);
}

}  // namespace

TEST_SUITE("solvers") {
  TEST_CASE("gradient vanishes at consistent data") {
    const SensingEnsemble a = gaussian_ensemble(40, 10, 1);
    Rng rng(2);
    for (int rep = 0; rep < 10; ++rep) {
      const Vec u = rng.normal_vector(10);
      const Vec y = a.apply(u);
      CHECK(gradient(GradientOp::scaled_l2(1.0), u, a, y).norm() < 1e-12);
      Vec s = y;
      for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = sign_of(y[i]);
      CHECK(gradient(GradientOp::relu(), u, a, s).norm() == 0.0);
      CHECK(gradient(GradientOp::amplitude(), u, a, y.cwiseAbs()).norm() < 1e-12);
    }
  }

  TEST_CASE("scaled l2 gradient matches finite differences") {
    Rng rng(3);
    for (int rep = 0; rep < 100; ++rep) {
      const Eigen::Index m = 5 + static_cast<Eigen::Index>(rng.below(40));
      const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(15));
      const SensingEnsemble a = gaussian_ensemble(m, n, 100 + static_cast<std::uint64_t>(rep));
      const double mu = 0.2 + 2 * rng.uniform();
      const Vec y = rng.normal_vector(m);
      const Vec u = rng.normal_vector(n);
      auto loss = [&](const Vec& v) {
        return (y - mu * (a.matrix() * v)).squaredNorm() / (2.0 * double(m));
      };
      const Vec fd = oracle::finite_difference(loss, u, 1e-5);
      const Vec g = gradient(GradientOp::scaled_l2(mu), u, a, y);
      CHECK((g - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
    }
  }

  TEST_CASE("relu and amplitude formulas") {
    const SensingEnsemble a = gaussian_ensemble(30, 6, 4);
    Rng rng(5);
    const Vec u = rng.normal_vector(6);
    Vec y(30);
    for (Eigen::Index i = 0; i < 30; ++i) y[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const Vec au = a.matrix() * u;
    Vec r(30), q(30);
    for (Eigen::Index i = 0; i < 30; ++i) {
      r[i] = (sign_of(au[i]) - y[i]) / 60.0;
      q[i] = (std::abs(au[i]) - std::abs(y[i])) * sign_of(au[i]) / 30.0;
    }
    CHECK((gradient(GradientOp::relu(), u, a, y) - a.matrix().transpose() * r).norm() < 1e-12);
    CHECK((gradient(GradientOp::amplitude(), u, a, y.cwiseAbs()) - a.matrix().transpose() * q)
              .norm() < 1e-12);
    y[3] = 0.5;
    CHECK_THROWS_AS(gradient(GradientOp::relu(), u, a, y), ArgumentError);
    CHECK_THROWS_AS(gradient(GradientOp::scaled_l2(1), u, a, Vec::Zero(29)), ArgumentError);
    CHECK_THROWS_AS(GradientOp::scaled_l2(0.0), ArgumentError);
  }

  TEST_CASE("default step sizes") {
    CHECK(GradientOp::scaled_l2(0.5).default_eta() == doctest::Approx(4.0));
    CHECK(GradientOp::relu().default_eta() == doctest::Approx(std::sqrt(2 * M_PI)));
    CHECK(GradientOp::amplitude().default_eta() == 1.0);
    CHECK(GradientOp::from_name("relu", 1).kind() == GradientKind::ReluSubgrad);
    CHECK_THROWS_AS(GradientOp::from_name("newton", 1), ArgumentError);
  }

  TEST_CASE("noiseless linear recovery is exact") {
    const Eigen::Index n = 128, k = 3, m = 60;
    const SensingEnsemble a = gaussian_ensemble(m, n, 7);
    const Vec x = sparse_unit(n, k, 8);
    const Vec y = a.apply(x);

    // Least squares on the true support recovers x.
    std::vector<Eigen::Index> supp;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (x[i] != 0) supp.push_back(i);
    }
    Mat as(m, k);
    for (Eigen::Index j = 0; j < k; ++j) as.col(j) = a.matrix().col(supp[static_cast<std::size_t>(j)]);
    const Vec ls = as.colPivHouseholderQr().solve(y);
    for (Eigen::Index j = 0; j < k; ++j) CHECK(ls[j] == doctest::Approx(x[supp[static_cast<std::size_t>(j)]]));

    SolverConfig cfg;
    cfg.eta = 1.0;
    cfg.max_iters = 200;
    const Trajectory tr = pgd_run(cfg, a, y, ConstraintSet::sparsity_cone(k),
                                  GradientOp::scaled_l2(1.0), x);
    CHECK(tr.errors.back() < 1e-6);
    CHECK(tr.errors.size() == static_cast<std::size_t>(tr.iters_run) + 1);
  }

  TEST_CASE("zero iterations returns the starting point") {
    const SensingEnsemble a = gaussian_ensemble(20, 8, 1);
    const Vec x = sparse_unit(8, 2, 2);
    SolverConfig cfg;
    cfg.max_iters = 0;
    const Vec x0 = (Vec(8) << 0.5, 0, 0, 0, 0, 0, 0, 0).finished();
    cfg.x0 = InitPolicy::from(x0);
    const Trajectory tr =
        pgd_run(cfg, a, a.apply(x), ConstraintSet::sparsity_cone(2), GradientOp::scaled_l2(1), x);
    REQUIRE(tr.iterates.size() == 1);
    CHECK(tr.iterates[0] == x0);
    CHECK(tr.iters_run == 0);
    REQUIRE(tr.errors.size() == 1);
    CHECK(tr.errors[0] == doctest::Approx((x0 - x).norm()));
  }

  TEST_CASE("one-bit recovery") {
    const Eigen::Index n = 128, k = 2, m = 4000;
    const SensingEnsemble a = gaussian_ensemble(m, n, 21);
    const Vec x = sparse_unit(n, k, 22);
    const Vec y = observe(Link::sign(), a, x, 0);
    SolverConfig cfg;
    cfg.eta = M_PI / 2;
    cfg.max_iters = 100;
    const Trajectory tr = pgd_run(cfg, a, y, ConstraintSet::sparsity_cone(k),
                                  GradientOp::scaled_l2(std::sqrt(2 / M_PI)), x);
    CHECK(tr.errors.back() < 0.2);
    const double rate = std::sqrt(double(k) * std::log(M_E * double(n) / double(k)) / double(m));
    CHECK(tr.errors.back() <= 8 * rate);
  }

  TEST_CASE("iterates stay feasible and runs are deterministic") {
    const SensingEnsemble a = gaussian_ensemble(300, 40, 31);
    const Vec x = sparse_unit(40, 3, 32);
    const Vec y = observe(Link::sign(), a, x, 0);
    for (const ConstraintSet& set :
         {ConstraintSet::sparsity_cone(3), ConstraintSet::l1_ball(std::sqrt(3.0)),
          ConstraintSet::l2_ball(1.0)}) {
      SolverConfig cfg;
      cfg.max_iters = 30;
      const GradientOp op = GradientOp::scaled_l2(std::sqrt(2 / M_PI));
      const Trajectory t1 = pgd_run(cfg, a, y, set, op, x);
      const Trajectory t2 = pgd_run(cfg, a, y, set, op, x);
      REQUIRE(t1.iterates.size() == t2.iterates.size());
      for (std::size_t i = 0; i < t1.iterates.size(); ++i) {
        CHECK(t1.iterates[i] == t2.iterates[i]);
        if (i > 0) CHECK(set.contains(t1.iterates[i]));
      }
      CHECK(t1.errors == t2.errors);
    }
  }

  TEST_CASE("normalized runs stay on the sphere") {
    const SensingEnsemble a = gaussian_ensemble(500, 30, 41);
    const Vec x = sparse_unit(30, 2, 42);
    const Vec y = observe(Link::sign(), a, x, 0);
    SolverConfig cfg;
    cfg.normalize = true;
    cfg.max_iters = 20;
    const Trajectory tr = pgd_run(cfg, a, y, ConstraintSet::sparsity_cone(2), GradientOp::relu(), x);
    for (std::size_t i = 1; i < tr.iterates.size(); ++i) {
      CHECK(tr.iterates[i].norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
    cfg.x0 = InitPolicy::zero();
    CHECK_THROWS_AS(pgd_run(cfg, a, y, ConstraintSet::l1_ball(1.0), GradientOp::relu(), x),
                    ArgumentError);
  }

  TEST_CASE("amplitude runs use the phaseless metric and flag oracle starts") {
    const SensingEnsemble a = gaussian_ensemble(800, 32, 51);
    const Vec x = sparse_unit(32, 2, 52);
    const Vec y = observe(Link::amplitude_abs(), a, x, 0);
    SolverConfig cfg;
    cfg.x0 = InitPolicy::near_truth(0.1);
    cfg.max_iters = 50;
    cfg.init_seed = 9;
    const Trajectory tr = pgd_run(cfg, a, y, ConstraintSet::sparsity_cone(2), GradientOp::amplitude(), x);
    CHECK(tr.phaseless);
    CHECK(tr.oracle_init);
    CHECK(tr.errors.front() <= 0.1 + 1e-12);
    CHECK(tr.errors.back() < tr.errors.front());
    CHECK(phaseless_distance(-x, x) == 0.0);
    CHECK(phaseless_distance(x, x) == 0.0);

    cfg.x0 = InitPolicy::near_truth(0.1);
    CHECK_THROWS_AS(pgd_run(cfg, a, y, ConstraintSet::sparsity_cone(2), GradientOp::amplitude()),
                    ArgumentError);
  }

  TEST_CASE("divergence carries the partial trajectory") {
    const SensingEnsemble a = gaussian_ensemble(50, 10, 61);
    const Vec x = sparse_unit(10, 10, 62);
    SolverConfig cfg;
    cfg.eta = 50.0;
    cfg.max_iters = 100;
    try {
      pgd_run(cfg, a, a.apply(x), ConstraintSet::sparsity_cone(10), GradientOp::scaled_l2(1.0), x);
      FAIL("expected divergence");
    } catch (const DivergedError& e) {
      CHECK(e.partial().iters_run < 100);
      CHECK(all_finite(e.partial().final_iterate));
    }
  }

  TEST_CASE("stop tolerance ends early") {
    const SensingEnsemble a = gaussian_ensemble(200, 20, 71);
    const Vec x = sparse_unit(20, 2, 72);
    SolverConfig cfg;
    cfg.max_iters = 1000;
    cfg.stop_tol = 1e-10;
    const Trajectory tr =
        pgd_run(cfg, a, a.apply(x), ConstraintSet::sparsity_cone(2), GradientOp::scaled_l2(1), x);
    CHECK(tr.iters_run < 1000);
    CHECK(tr.errors.back() < 1e-8);
  }

  TEST_CASE("envelope values") {
    CHECK(predict_envelope(0, 0, 0, 1, 1) == 0.0);
    CHECK(predict_envelope(0.25, 0.1, 0, 1, 200) == doctest::Approx(0.4).epsilon(1e-12));
    // Unrolled recursion f_{t+1} = 2 mu1 f_t + 2 mu2 + phi.
    double f = 2.0;
    for (int t = 0; t < 3; ++t) f = 0.5 * f + 0.25;
    CHECK(f == 0.6875);
    CHECK(predict_envelope(0.25, 0.1, 0.05, 2, 3) == doctest::Approx(f).epsilon(1e-15));
    CHECK(predict_envelope(0.3, 0.2, 0.1, 5, 0) == 5.0);
    CHECK_THROWS_AS(predict_envelope(0.5, 0, 0, 1, 1), ContractionError);
    CHECK_THROWS_AS(predict_envelope(0.7, 0, 0, 1, 1), ContractionError);
    CHECK_THROWS_AS(predict_envelope(0.1, -1, 0, 1, 1), ArgumentError);
  }

  TEST_CASE("envelope matches the recursion and is monotone") {
    Rng rng(81);
    for (int rep = 0; rep < 300; ++rep) {
      const double m1 = 0.49 * rng.uniform(), m2 = rng.uniform(), phi = rng.uniform(),
                   init = 3 * rng.uniform();
      const int t = static_cast<int>(rng.below(30));
      double f = init;
      for (int s = 0; s < t; ++s) f = 2 * m1 * f + 2 * m2 + phi;
      const double e = predict_envelope(m1, m2, phi, init, t);
      CHECK(e == doctest::Approx(f).epsilon(1e-12));
      const double d = 0.01 * rng.uniform();
      CHECK(predict_envelope(std::min(m1 + d, 0.499), m2, phi, init, t) >= e - 1e-15);
      CHECK(predict_envelope(m1, m2 + d, phi, init, t) >= e);
      CHECK(predict_envelope(m1, m2, phi + d, init, t) >= e);
      CHECK(predict_envelope(m1, m2, phi, init + d, t) >= e);
    }
  }
}
