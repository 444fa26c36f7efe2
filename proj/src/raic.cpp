#include "unirec/raic.hpp"

#include "unirec/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace unirec {
namespace {

double dual_norm_for(const Vec& v, const ConstraintSet& set, const Vec& x,
                     std::optional<double> phi, const DualNormOptions& dual) {
  if (set.is_cone()) return dual_norm_cone(v, set.k()).value;
  if (!set.is_convex()) {
    throw UnsupportedError("raic_residual: no RAIC dual norm for set '" + set.name() + "'");
  }
  if (!phi) throw ArgumentError("raic_residual: convex sets need a scale phi");
  return dual_norm_convex(v, set, x, *phi, dual).value / *phi;
}

Vec unit_sparse(Rng& rng, Eigen::Index n, Eigen::Index k) {
  Vec x = Vec::Zero(n);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) idx[i] = i;
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[i], idx[j]);
    x[idx[i]] = rng.normal();
  }
  const double nrm = x.norm();
  if (nrm == 0.0) x[idx[0]] = 1.0;
  else x /= nrm;
  return x;
}

double xlog1x(double v) { return v > 0.0 ? v * std::log(1.0 / v) : 0.0; }

}  // namespace

double raic_residual(const SensingEnsemble& a, const Vec& y, const GradientOp& op, const Vec& x,
                     const Vec& u, const ConstraintSet& set, double eta,
                     std::optional<double> phi, const DualNormOptions& dual) {
  if (x.size() != a.cols() || u.size() != a.cols()) {
    throw ArgumentError("raic_residual: dimension mismatch");
  }
  if (!(eta > 0.0)) throw ArgumentError("raic_residual: eta must be positive");
  const Vec v = u - x - eta * gradient(op, u, a, y);
  return dual_norm_for(v, set, x, phi, dual);
}

double raic_residual(const SensingEnsemble& a, const Link& link, const Vec& x, const Vec& u,
                     double mu, const ConstraintSet& set, double eta,
                     std::optional<double> phi, std::uint64_t rng_seed) {
  if (x.size() != a.cols()) throw ArgumentError("raic_residual: dimension mismatch");
  const Vec y = observe(link, a, x, rng_seed);
  return raic_residual(a, y, GradientOp::scaled_l2(mu), x, u, set, eta, phi);
}

std::string sampler_name(ProbeSampler s) {
  return s == ProbeSampler::Trajectory ? "trajectory" : "random-random";
}

ProbeSampler sampler_from_name(const std::string& name) {
  if (name == "trajectory") return ProbeSampler::Trajectory;
  if (name == "random-random") return ProbeSampler::RandomRandom;
  throw ArgumentError("unknown probe sampler '" + name + "'");
}

RaicCertificate fit_certificate(std::vector<ResidualRecord> records, double eta,
                                std::optional<double> phi) {
  RaicCertificate c;
  c.eta = eta;
  c.phi = phi;
  c.n_pairs = static_cast<int>(records.size());
  bool any_diag = false;
  for (const auto& r : records) {
    if (r.distance == 0.0) {
      any_diag = true;
      c.mu2_hat = std::max(c.mu2_hat, r.residual);
    }
  }
  if (!any_diag) throw ArgumentError("fit_certificate: no pair with u = x");
  for (const auto& r : records) {
    if (r.distance > 0.0) c.mu1_hat = std::max(c.mu1_hat, (r.residual - c.mu2_hat) / r.distance);
  }
  c.residuals = std::move(records);
  return c;
}

RaicCertificate certify_raic(const SensingEnsemble& a, const Link& link, const ConstraintSet& set,
                             const CertifyOptions& options) {
  if (options.n_pairs < 2) throw ArgumentError("certify_raic: n_pairs must be >= 2");
  if (options.pairs_per_signal < 2) {
    throw ArgumentError("certify_raic: pairs_per_signal must be >= 2");
  }
  const Eigen::Index n = a.cols();
  const double eta = options.eta.value_or(1.0 / (options.mu * options.mu));
  const GradientOp op = GradientOp::scaled_l2(options.mu);
  const int per = options.pairs_per_signal;
  const int n_signals = (options.n_pairs + per - 1) / per;

  std::vector<ResidualRecord> records;
  std::vector<ProbedTrajectory> trajectories;
  int remaining = options.n_pairs;
  for (int s = 0; s < n_signals; ++s) {
    Rng rng(derive_seed(options.seed, {static_cast<std::uint64_t>(s), 0}));
    const Vec x = options.signal_sampler ? options.signal_sampler(rng)
                                         : unit_sparse(rng, n, options.signal_k);
    if (x.size() != n) throw ArgumentError("certify_raic: signal has the wrong dimension");
    if (!set.contains(x, 1e-9)) throw ArgumentError("certify_raic: signal is not in K");
    const Vec y = observe(link, a, x, derive_seed(options.seed, {static_cast<std::uint64_t>(s), 1}));
    const int here = std::min(per, remaining);
    remaining -= here;

    auto add = [&](const Vec& u, int step) {
      ResidualRecord r;
      r.signal = s;
      r.step = step;
      r.distance = (u - x).norm();
      r.residual = raic_residual(a, y, op, x, u, set, eta, options.phi, options.dual);
      records.push_back(r);
    };
    add(x, -1);
    if (here < 2) continue;

    if (options.sampler == ProbeSampler::Trajectory) {
      SolverConfig cfg;
      cfg.eta = eta;
      // One step past the last probed iterate, so every probed pair bounds a successor.
      cfg.max_iters = here - 1;
      const Trajectory tr = pgd_run(cfg, a, y, set, op, x);
      ProbedTrajectory pt;
      pt.signal = s;
      pt.errors = tr.errors;
      for (int t = 0; t + 1 < static_cast<int>(tr.iterates.size()); ++t) add(tr.iterates[t], t);
      trajectories.push_back(std::move(pt));
    } else {
      for (int j = 1; j < here; ++j) {
        Vec d = Vec::Zero(n);
        const Vec dir = unit_sparse(rng, n, std::max<Eigen::Index>(options.signal_k, 1));
        // Radii log-uniform on [1e-2, 1].
        const double radius = std::pow(10.0, -2.0 * rng.uniform());
        d = dir * radius;
        add(project(set, x + d), -1);
      }
    }
  }
  RaicCertificate c = fit_certificate(std::move(records), eta, options.phi);
  c.sampler = sampler_name(options.sampler);
  c.seed = options.seed;
  c.trajectories = std::move(trajectories);
  return c;
}

std::string certificate_to_json(const RaicCertificate& cert, bool with_records) {
  nlohmann::ordered_json j;
  j["mu1_hat"] = cert.mu1_hat;
  j["mu2_hat"] = cert.mu2_hat;
  j["eta"] = cert.eta;
  j["phi"] = cert.phi ? nlohmann::ordered_json(*cert.phi) : nlohmann::ordered_json(nullptr);
  j["n_pairs"] = cert.n_pairs;
  j["sampler"] = cert.sampler;
  j["seed"] = cert.seed;
  if (with_records) {
    auto& arr = j["residuals"] = nlohmann::ordered_json::array();
    for (const auto& r : cert.residuals) {
      arr.push_back({{"signal", r.signal}, {"step", r.step}, {"distance", r.distance},
                     {"residual", r.residual}});
    }
  }
  return j.dump(2);
}

RaicCertificate certificate_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("certificate: ") + e.what());
  }
  RaicCertificate c;
  try {
    c.mu1_hat = j.at("mu1_hat").get<double>();
    c.mu2_hat = j.at("mu2_hat").get<double>();
    c.eta = j.at("eta").get<double>();
    if (!j.at("phi").is_null()) c.phi = j.at("phi").get<double>();
    c.n_pairs = j.at("n_pairs").get<int>();
    c.sampler = j.at("sampler").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("residuals")) {
      for (const auto& r : j["residuals"]) {
        c.residuals.push_back({r.at("signal").get<int>(), r.at("step").get<int>(),
                               r.at("distance").get<double>(), r.at("residual").get<double>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("certificate: ") + e.what());
  }
  return c;
}

double multiplier_process_sup(const SensingEnsemble& a, const Link& link, double mu,
                              const std::vector<Vec>& signal_net, Eigen::Index k,
                              std::uint64_t rng_seed) {
  if (signal_net.empty()) throw ArgumentError("multiplier_process_sup: empty net");
  if (mu == 0.0) throw ArgumentError("multiplier_process_sup: mu must be nonzero");
  const double m = static_cast<double>(a.rows());
  double best = 0.0;
  for (std::size_t j = 0; j < signal_net.size(); ++j) {
    const Vec& x = signal_net[j];
    const Vec y = observe(link, a, x, derive_seed(rng_seed, {j}));
    const Vec v = a.apply_transpose(a.apply(x) - y / mu) / m;
    best = std::max(best, dual_norm_cone(v, k).value);
  }
  return best;
}

double gradient_mismatch_sup(const SensingEnsemble& a, const Vec& clean_y, const Vec& corrupt_y,
                             double mu, double eta, Eigen::Index k, GradientKind family) {
  if (clean_y.size() != corrupt_y.size() || clean_y.size() != a.rows()) {
    throw ArgumentError("gradient_mismatch_sup: length mismatch");
  }
  double c = 0.0;
  switch (family) {
    case GradientKind::ScaledL2: c = mu; break;
    case GradientKind::ReluSubgrad: c = 0.5; break;
    case GradientKind::AmplitudeSubgrad:
      throw UnsupportedError("gradient_mismatch_sup: amplitude mismatch depends on u");
  }
  const Vec v = a.apply_transpose(clean_y - corrupt_y) * (c / static_cast<double>(a.rows()));
  return eta * dual_norm_cone(v, k).value;
}

TheoryBound theory_bound(const TheoryBoundParams& p, BoundMode mode) {
  if (!(p.m > 0.0)) throw ArgumentError("theory_bound: m must be positive");
  if (!(p.eps > 0.0)) throw ArgumentError("theory_bound: eps must be positive");
  if (!(p.zeta > 0.0)) throw ArgumentError("theory_bound: zeta must be positive");
  if (p.zeta >= 1.0) throw DomainError("theory_bound: zeta must be < 1");
  if (p.width_K1 < 0.0 || p.width_X_eps < 0.0 || p.entropy < 0.0) {
    throw ArgumentError("theory_bound: widths and entropy must be nonnegative");
  }
  if (p.mu == 0.0) throw ArgumentError("theory_bound: mu must be nonzero");
  const double sm = std::sqrt(p.m);
  const double zl = xlog1x(p.zeta);
  const double gap = std::isinf(p.phi2) ? 0.0 : p.eps / p.phi2;
  TheoryBound out;
  if (mode == BoundMode::ConeXi) {
    const double w = p.width_K1;
    out.bar = p.entropy / p.m + p.phi5 * p.eps * w / std::sqrt(p.zeta * p.m) +
              p.phi5 * p.eps * std::sqrt(std::log(std::numbers::e / p.zeta));
    if (out.bar >= 1.0) throw DomainError("theory_bound: Xi-bar must be < 1");
    const double bl = xlog1x(out.bar);
    out.bound = std::sqrt(out.bar + p.zeta) * (w / sm + std::sqrt(bl) + std::sqrt(zl)) +
                gap * (w * w / p.m + bl + zl);
  } else {
    const double wk = p.width_K1;
    const double wx = p.width_X_eps == 0.0 ? 0.0 : p.width_X_eps / p.eps;
    out.bar = p.entropy / p.m + p.phi5 * p.width_X_eps / std::sqrt(p.zeta * p.m) +
              p.phi5 * p.eps * std::sqrt(std::log(std::numbers::e / p.zeta));
    if (out.bar >= 1.0) throw DomainError("theory_bound: Upsilon-bar must be < 1");
    const double root = std::sqrt(xlog1x(out.bar) + zl);
    out.bound = gap * (wx / sm + root) * (wk / sm + root) +
                std::sqrt(out.bar + p.zeta) * (wk / sm + root);
  }
  out.discontinuity_cost = p.phi3 / p.mu * out.bound;
  return out;
}

}  // namespace unirec
