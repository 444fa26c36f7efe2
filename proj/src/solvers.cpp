#include "unirec/solvers.hpp"

#include "unirec/links.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

namespace unirec {

GradientOp GradientOp::scaled_l2(double mu) {
  if (mu == 0.0 || !std::isfinite(mu)) throw ArgumentError("scaled l2 gradient needs mu != 0");
  return {GradientKind::ScaledL2, mu};
}

GradientOp GradientOp::relu() { return {GradientKind::ReluSubgrad, 1.0}; }

GradientOp GradientOp::amplitude() { return {GradientKind::AmplitudeSubgrad, 1.0}; }

GradientOp GradientOp::from_name(const std::string& name, double mu) {
  if (name == "scaled-l2") return scaled_l2(mu);
  if (name == "relu") return relu();
  if (name == "amplitude") return amplitude();
  throw ArgumentError("unknown gradient '" + name + "'");
}

std::string GradientOp::name() const {
  switch (kind_) {
    case GradientKind::ScaledL2: return "scaled-l2";
    case GradientKind::ReluSubgrad: return "relu";
    case GradientKind::AmplitudeSubgrad: return "amplitude";
  }
  return "?";
}

double GradientOp::default_eta() const {
  switch (kind_) {
    case GradientKind::ScaledL2: return 1.0 / (mu_ * mu_);
    case GradientKind::ReluSubgrad: return std::sqrt(2.0 * std::numbers::pi);
    case GradientKind::AmplitudeSubgrad: return 1.0;
  }
  return 1.0;
}

Vec gradient_from_margins(const GradientOp& op, const Vec& margins, const SensingEnsemble& a,
                          const Vec& y) {
  const Eigen::Index m = a.rows();
  if (margins.size() != m || y.size() != m) throw ArgumentError("gradient: dimension mismatch");
  Vec r(m);
  switch (op.kind()) {
    case GradientKind::ScaledL2:
      r = op.mu() * (op.mu() * margins - y) / static_cast<double>(m);
      break;
    case GradientKind::ReluSubgrad:
      for (Eigen::Index i = 0; i < m; ++i) {
        if (y[i] != 1.0 && y[i] != -1.0) {
          throw ArgumentError("relu gradient needs observations in {-1, +1}");
        }
        r[i] = (sign_of(margins[i]) - y[i]) / (2.0 * static_cast<double>(m));
      }
      break;
    case GradientKind::AmplitudeSubgrad:
      for (Eigen::Index i = 0; i < m; ++i) {
        r[i] = (std::abs(margins[i]) - y[i]) * sign_of(margins[i]) / static_cast<double>(m);
      }
      break;
  }
  return a.apply_transpose(r);
}

Vec gradient(const GradientOp& op, const Vec& u, const SensingEnsemble& a, const Vec& y) {
  if (u.size() != a.cols()) throw ArgumentError("gradient: dimension mismatch");
  return gradient_from_margins(op, a.apply(u), a, y);
}

double phaseless_distance(const Vec& u, const Vec& x) {
  return std::min((u - x).norm(), (u + x).norm());
}

namespace {

Vec initial_point(const SolverConfig& config, Eigen::Index n, const ConstraintSet& set,
                  const std::optional<Vec>& truth) {
  switch (config.x0.kind) {
    case InitPolicy::Kind::Zero:
      return Vec::Zero(n);
    case InitPolicy::Kind::Given:
      if (config.x0.given.size() != n) throw ArgumentError("pgd_run: x0 has the wrong dimension");
      return config.x0.given;
    case InitPolicy::Kind::NearTruth: {
      if (!truth) throw ArgumentError("pgd_run: near-truth initialization needs the truth");
      if (!(config.x0.delta > 0.0)) throw ArgumentError("pgd_run: near-truth delta must be > 0");
      Rng rng(config.init_seed);
      Vec p = Vec::Zero(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        if ((*truth)[i] != 0.0) p[i] = rng.normal();
      }
      if (p.norm() == 0.0) return *truth;
      // Radius drawn in (0, delta]; projection onto K cannot increase the distance.
      const double radius = config.x0.delta * (1.0 - rng.uniform());
      return project(set, *truth + radius * p / p.norm());
    }
  }
  return Vec::Zero(n);
}

}  // namespace

Trajectory pgd_run(const SolverConfig& config, const SensingEnsemble& a, const Vec& y,
                   const ConstraintSet& set, const GradientOp& op, const std::optional<Vec>& truth) {
  const Eigen::Index n = a.cols();
  if (y.size() != a.rows()) throw ArgumentError("pgd_run: y has the wrong length");
  if (truth && truth->size() != n) throw ArgumentError("pgd_run: truth has the wrong dimension");
  if (config.max_iters < 0) throw ArgumentError("pgd_run: max_iters must be >= 0");
  if (config.thin < 1) throw ArgumentError("pgd_run: thin must be >= 1");
  if (config.normalize && set.is_convex()) {
    throw ArgumentError("pgd_run: normalization needs a cone or sphere constraint");
  }
  if (config.normalize && !(config.target_norm > 0.0)) {
    throw ArgumentError("pgd_run: target_norm must be positive");
  }
  const double eta = config.eta.value_or(op.default_eta());
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ArgumentError("pgd_run: eta must be positive");

  const auto start = std::chrono::steady_clock::now();
  Trajectory tr;
  tr.phaseless = op.kind() == GradientKind::AmplitudeSubgrad;
  tr.oracle_init = config.x0.kind == InitPolicy::Kind::NearTruth;
  const ConstraintSet sphere = ConstraintSet::sphere(config.normalize ? config.target_norm : 1.0);
  const double scale = config.target_norm * std::max(1.0, truth ? truth->norm() : 1.0);

  auto error_of = [&](const Vec& v) {
    return tr.phaseless ? phaseless_distance(v, *truth) : (v - *truth).norm();
  };
  auto record = [&](const Vec& v, int step, bool force) {
    if (truth) tr.errors.push_back(error_of(v));
    if (config.keep_iterates && (force || step % config.thin == 0)) {
      tr.iterates.push_back(v);
      tr.iterate_steps.push_back(step);
    }
  };
  auto elapsed = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  };

  Vec x = initial_point(config, n, set, truth);
  record(x, 0, true);
  for (int t = 0; t < config.max_iters; ++t) {
    Vec next = project(set, x - eta * gradient(op, x, a, y));
    if (config.normalize) next = project(sphere, next);
    if (!all_finite(next) || next.norm() > 1e6 * scale) {
      tr.final_iterate = x;
      tr.wall_ms = elapsed();
      throw DivergedError("pgd_run: iterate diverged at step " + std::to_string(t + 1),
                          std::move(tr));
    }
    const double moved = (next - x).norm();
    x = std::move(next);
    ++tr.iters_run;
    const bool last = t + 1 == config.max_iters || moved < config.stop_tol;
    record(x, tr.iters_run, last);
    if (moved < config.stop_tol) break;
  }
  tr.final_iterate = x;
  tr.wall_ms = elapsed();
  return tr;
}

double predict_envelope(double mu1, double mu2, double phi, double init_error, int t) {
  if (!(mu1 < 0.5)) throw ContractionError("predict_envelope: contraction needs mu1 < 1/2");
  if (mu1 < 0.0 || mu2 < 0.0 || phi < 0.0 || init_error < 0.0 || t < 0) {
    throw ArgumentError("predict_envelope: arguments must be nonnegative");
  }
  const double rate = 2.0 * mu1;
  const double pw = std::pow(rate, t);
  return pw * init_error + (2.0 * mu2 + phi) * (1.0 - pw) / (1.0 - rate);
}

}  // namespace unirec
