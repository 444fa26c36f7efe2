// Acceptance suite. Prints one PASS/FAIL line per criterion; exits 1 when any
// selected criterion fails.

#include "oracles.hpp"
#include "unirec/config.hpp"
#include "unirec/constraints.hpp"
#include "unirec/core.hpp"
#include "unirec/experiments.hpp"
#include "unirec/links.hpp"
#include "unirec/raic.hpp"
#include "unirec/solvers.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace unirec;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string preset(const std::string& name) { return std::string(UNIREC_CONFIG_DIR) + "/" + name; }

std::vector<std::pair<double, double>> sweep_medians(const std::string& name,
                                                     const std::vector<std::string>& overrides = {}) {
  const Config c = load_config(preset(name), overrides);
  return median_worst_error(run_sweep(c.spec));
}

std::string points_text(const std::vector<std::pair<double, double>>& pts) {
  std::string s;
  for (const auto& [m, e] : pts) s += (s.empty() ? "" : " ") + fmt(m) + ":" + fmt(e);
  return s;
}

Outcome slope_criterion(const std::string& name, double lo, double hi) {
  const auto pts = sweep_medians(name);
  const SlopeFit f = fit_loglog_slope(pts);
  return {f.slope >= lo && f.slope <= hi,
          "slope=" + fmt(f.slope) + " in [" + fmt(lo) + ", " + fmt(hi) + "] medians " + points_text(pts)};
}

// 1-bit IHT rate.
Outcome c1() {
  const auto start = std::chrono::steady_clock::now();
  const auto pts = sweep_medians("c1_one_bit.json");
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const SlopeFit f = fit_loglog_slope(pts);
  const bool ok = f.slope >= -0.65 && f.slope <= -0.35 && secs < 600;
  return {ok, "slope=" + fmt(f.slope) + " in [-0.65, -0.35] runtime=" + fmt(secs) + "s < 600s medians " +
                  points_text(pts)};
}

// Modulo recovery.
Outcome c2() {
  const auto pts = sweep_medians("c2_modulo.json");
  const SlopeFit f = fit_loglog_slope(pts);
  const double last = pts.back().second;
  const bool ok = f.slope >= -0.70 && f.slope <= -0.30 && last < 0.15;
  return {ok, "slope=" + fmt(f.slope) + " in [-0.7, -0.3] error_at_largest_m=" + fmt(last) +
                  " < 0.15 medians " + points_text(pts)};
}

// NBIHT rate.
Outcome c3() { return slope_criterion("c3_nbiht.json", -1.25, -0.70); }

// Noisy linear CS: final_error / (beta / sqrt(m)) in a band.
Outcome c4() {
  const Config c = load_config(preset("c4_noisy_cs.json"));
  const double beta = c.spec.corruption.param;
  const auto pts = median_worst_error(run_sweep(c.spec));
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  std::string ratios;
  for (const auto& [m, e] : pts) {
    const double r = e / (beta / std::sqrt(m));
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    ratios += " " + fmt(m) + ":" + fmt(r);
  }
  return {pts.size() == 3 && beta == 5.0 && hi / lo <= 3.0,
          "max/min=" + fmt(hi / lo) + " <= 3 ratios" + ratios};
}

// Bit-flip robustness.
Outcome c5() {
  auto median_at = [](double eta) {
    const auto pts = sweep_medians("c5_bit_flips.json", {"corruption.eta=" + fmt(eta)});
    return pts.at(0).second;
  };
  const double base = median_at(0.0);
  bool ok = true;
  double prev = base;
  std::string s = "baseline=" + fmt(base);
  for (double eta : {0.005, 0.01, 0.02, 0.05}) {
    const double e = median_at(eta);
    const double cap = base + 6 * eta * std::sqrt(std::log(1 / eta));
    ok = ok && e >= prev && e <= cap;
    s += " eta=" + fmt(eta) + ":" + fmt(e) + "(cap " + fmt(cap) + ")";
    prev = e;
  }
  return {ok, s};
}

// RAIC certification with envelope domination of the probed trajectories.
Outcome c6() {
  const Eigen::Index n = 256, k = 4, m = 4000;
  const SensingEnsemble a = gaussian_ensemble(m, n, 11);
  const SignalClass signals(Setting::A, n, k);
  CertifyOptions o;
  o.sampler = ProbeSampler::Trajectory;
  o.n_pairs = 500;
  o.pairs_per_signal = 10;
  o.mu = compute_mu(Link::sign()).mu;
  o.seed = 5;
  o.signal_sampler = [&](Rng& rng) { return signals.sample(rng); };
  const RaicCertificate cert = certify_raic(a, Link::sign(), ConstraintSet::sparsity_cone(k), o);

  int violations = 0, checked = 0;
  for (const ProbedTrajectory& tr : cert.trajectories) {
    for (std::size_t t = 0; t < tr.errors.size(); ++t) {
      const double env =
          predict_envelope(cert.mu1_hat, cert.mu2_hat, 0.0, tr.errors[0], static_cast<int>(t));
      ++checked;
      if (tr.errors[t] > env + 1e-9) ++violations;
    }
  }
  const bool ok = cert.n_pairs == 500 && cert.mu1_hat < 0.5 && violations == 0 && checked > 0;
  return {ok, "mu1_hat=" + fmt(cert.mu1_hat) + " < 0.5 mu2_hat=" + fmt(cert.mu2_hat) +
                  " envelope_violations=" + std::to_string(violations) + "/" + std::to_string(checked)};
}

// Scaling identities.
Outcome c7() {
  const double sign_mu = compute_mu(Link::sign()).mu;
  const double mod_mu = compute_mu(Link::modulo(1.0)).mu;
  const double rho = compute_rho(Link::sign(), 1.0, std::sqrt(2 / M_PI));
  const bool a = std::abs(sign_mu - std::sqrt(2 / M_PI)) <= 1e-8;
  const bool b = std::abs(mod_mu - 1.0) <= 1e-6;
  const bool c = std::abs(rho) <= 1e-9;
  return {a && b && c, std::string("mu(sign)=") + fmt(sign_mu) + (a ? " ok" : " FAIL") +
                           " mu(modulo 1)=" + fmt(mod_mu) + " vs 1" + (b ? " ok" : " FAIL") +
                           " rho(sign)=" + fmt(rho) + (c ? " ok" : " FAIL")};
}

// Oracle equivalence.
Outcome c8() {
  Rng rng(8);
  int ht_bad = 0, l1_bad = 0, dual_bad = 0, convex_bad = 0;
  double l1_worst = 0.0, dual_worst = 0.0, convex_worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = 1 + static_cast<int>(rng.below(10));
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const Vec w = rng.normal_vector(n) * 2.0;
    if (project(ConstraintSet::sparsity_cone(k), w) != oracle::hard_threshold(w, k)) ++ht_bad;
  }
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = 1 + static_cast<int>(rng.below(10));
    const Vec w = rng.normal_vector(n) * 2.0;
    const double r = 0.1 + 3 * rng.uniform();
    const double d =
        (project(ConstraintSet::l1_ball(r), w) - oracle::l1_projection(w, r)).lpNorm<Eigen::Infinity>();
    l1_worst = std::max(l1_worst, d);
    if (!(d <= 1e-6)) ++l1_bad;
  }
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = 1 + static_cast<int>(rng.below(10));
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>((n + 1) / 2)));
    const Vec w = rng.normal_vector(n);
    // Same selection; the sums differ only in order, so allow a few ulps.
    const double ref = oracle::cone_dual(w, k);
    const double rel = std::abs(dual_norm_cone(w, k).value - ref) / ref;
    dual_worst = std::max(dual_worst, rel);
    if (!(rel <= 1e-14)) ++dual_bad;
  }
  for (int rep = 0; rep < 100; ++rep) {
    const double r = 0.5 + rng.uniform();
    const ConstraintSet set = ConstraintSet::l1_ball(r);
    const Vec x = project(set, rng.normal_vector(3));
    const Vec w = rng.normal_vector(3);
    const double phi = 0.1 + rng.uniform();
    const double grid = oracle::l1_dual_grid(w, r, x, phi);
    const double est = dual_norm_convex(w, set, x, phi).value;
    // The grid admits points 1e-12 outside the set, so a zero supremum can
    // come back as ~1e-19; the absolute floor covers that.
    const double gap = std::abs(est - grid);
    if (grid > 1e-12) convex_worst = std::max(convex_worst, gap / grid);
    if (!(gap <= 1e-3 * grid + 1e-12)) ++convex_bad;
  }
  const bool ok = ht_bad == 0 && l1_bad == 0 && dual_bad == 0 && convex_bad == 0;
  return {ok, "hard_threshold mismatches=" + std::to_string(ht_bad) + "/1000 l1_projection mismatches=" +
                  std::to_string(l1_bad) + "/1000 (worst " + fmt(l1_worst) + ") dual_norm_cone mismatches=" +
                  std::to_string(dual_bad) + "/1000 (worst rel " + fmt(dual_worst) + ") dual_norm_convex n=3 worst_rel=" + fmt(convex_worst) +
                  " (" + std::to_string(convex_bad) + "/100 over 1e-3)"};
}

// sup <w, v> over v in (B_1(r) - z) cap t B_2 for n = 4 by a refined grid.
// The value is a lower bound on the supremum.
double l1_dual_grid4(const std::array<double, 4>& w, double r, const std::array<double, 4>& z, double t) {
  constexpr int P = 13;
  const double r_tol = r * (1 + 1e-12), t2 = t * t * (1 + 1e-12);
  std::array<double, 4> center{0, 0, 0, 0}, arg = center;
  double best = 0.0, half = t;
  for (int zoom = 0; zoom < 16; ++zoom) {
    const double h = 2 * half / (P - 1);
    for (int i0 = 0; i0 < P; ++i0) {
      const double v0 = center[0] - half + h * i0;
      for (int i1 = 0; i1 < P; ++i1) {
        const double v1 = center[1] - half + h * i1;
        for (int i2 = 0; i2 < P; ++i2) {
          const double v2 = center[2] - half + h * i2;
          for (int i3 = 0; i3 < P; ++i3) {
            const double v3 = center[3] - half + h * i3;
            const double val = w[0] * v0 + w[1] * v1 + w[2] * v2 + w[3] * v3;
            if (val <= best) continue;
            if (v0 * v0 + v1 * v1 + v2 * v2 + v3 * v3 > t2) continue;
            if (std::abs(z[0] + v0) + std::abs(z[1] + v1) + std::abs(z[2] + v2) + std::abs(z[3] + v3) > r_tol)
              continue;
            best = val;
            arg = {v0, v1, v2, v3};
          }
        }
      }
    }
    center = arg;
    half = 2 * h;
  }
  return best;
}

// Projection lemma audit at n = 4.
Outcome c9() {
  Rng rng(9);
  int violations = 0, exact_violations = 0;
  double worst_gap = 0.0;
  for (int rep = 0; rep < 10000; ++rep) {
    const double r = 0.5 + rng.uniform();
    const Vec z = oracle::l1_projection(rng.normal_vector(4), r);
    const Vec w = rng.normal_vector(4) * 2.0;
    const double t = 0.01 + 2 * rng.uniform();

    const double lhs = (oracle::l1_projection(w, r) - z).norm();
    const Vec d = w - z;
    const double dual = l1_dual_grid4({d[0], d[1], d[2], d[3]}, r, {z[0], z[1], z[2], z[3]}, t);
    const double rhs = std::max(t, (2 / t) * dual);
    if (lhs > rhs + 1e-9) ++violations;

    const LemmaCheck c = projection_lemma_check(ConstraintSet::l1_ball(r), z, w, t);
    if (!c.holds) ++exact_violations;
    worst_gap = std::max(worst_gap, std::abs(c.rhs - rhs) / std::max(1.0, c.rhs));
  }
  return {violations == 0 && exact_violations == 0,
          "grid_oracle_violations=" + std::to_string(violations) + "/10000 library_violations=" +
              std::to_string(exact_violations) + "/10000 worst_rhs_gap=" + fmt(worst_gap)};
}

// Multiplier-process decay.
Outcome c10() {
  const Eigen::Index n = 128, k = 2;
  const double mu = compute_mu(Link::sign()).mu;
  Rng rng(10);
  std::vector<Vec> net;
  for (int i = 0; i < 50; ++i) net.push_back(sample_sparse_sphere(rng, n, k));
  std::vector<std::pair<double, double>> pts;
  for (Eigen::Index m : {500, 2000, 8000}) {
    std::vector<double> sups;
    for (int trial = 0; trial < 5; ++trial) {
      const std::uint64_t s = derive_seed(10, {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(trial)});
      const SensingEnsemble a = gaussian_ensemble(m, n, s);
      sups.push_back(multiplier_process_sup(a, Link::sign(), mu, net, k, derive_seed(s, {1})));
    }
    std::nth_element(sups.begin(), sups.begin() + 2, sups.end());
    pts.emplace_back(static_cast<double>(m), sups[2]);
  }
  const double slope = fit_loglog_slope(pts).slope;
  return {slope >= -0.65 && slope <= -0.35,
          "slope=" + fmt(slope) + " in [-0.65, -0.35] sups " + points_text(pts)};
}

// Gradient correctness against finite differences.
Outcome c11() {
  Rng rng(11);
  double worst = 0.0;
  int bad = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index m = 5 + static_cast<Eigen::Index>(rng.below(60));
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(20));
    const SensingEnsemble a = gaussian_ensemble(m, n, derive_seed(11, {static_cast<std::uint64_t>(rep)}));
    const double mu = 0.2 + 2 * rng.uniform();
    const Vec y = rng.normal_vector(m);
    const Vec u = rng.normal_vector(n);
    const Eigen::MatrixXd& A = a.matrix();
    auto loss = [&](const Vec& v) { return (y - mu * (A * v)).squaredNorm() / (2.0 * double(m)); };
    const Vec fd = oracle::finite_difference(loss, u, 1e-5);
    const Vec g = gradient(GradientOp::scaled_l2(mu), u, a, y);
    const double rel = (g - fd).norm() / fd.norm();
    worst = std::max(worst, rel);
    if (!(rel < 1e-5)) ++bad;
  }
  return {bad == 0, "worst_relative_error=" + fmt(worst) + " < 1e-5 failures=" + std::to_string(bad) + "/100"};
}

const std::vector<std::function<Outcome()>> kCriteria{c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11};

bool report(int id) {
  Outcome o;
  try {
    o = kCriteria.at(static_cast<std::size_t>(id - 1))();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::cout << "C" << id << " " << (o.pass ? "PASS" : "FAIL") << " " << o.detail << std::endl;
  return o.pass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unirec acceptance suite"};
  std::vector<int> ids;
  app.add_option("--criterion", ids, "criterion number (default: all)")
      ->check(CLI::Range(1, static_cast<int>(kCriteria.size())));
  CLI11_PARSE(app, argc, argv);
  if (ids.empty())
    for (int i = 1; i <= static_cast<int>(kCriteria.size()); ++i) ids.push_back(i);
  bool all = true;
  for (int id : ids) all = report(id) && all;
  return all ? 0 : 1;
}
