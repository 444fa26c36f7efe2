#include "unirec/constraints.hpp"

#include "unirec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace unirec {
namespace {

void require_radius(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw ArgumentError("constraint radius must be positive");
}

void require_size(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size()) throw ArgumentError(std::string(what) + ": dimension mismatch");
}

Vec project_l1(const Vec& w, double r) {
  const double l1 = w.lpNorm<1>();
  if (l1 <= r + 1e-12 * std::max(1.0, r)) return w;
  std::vector<double> a(static_cast<std::size_t>(w.size()));
  for (Eigen::Index i = 0; i < w.size(); ++i) a[i] = std::abs(w[i]);
  std::sort(a.begin(), a.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    cum += a[j];
    const double cand = (cum - r) / static_cast<double>(j + 1);
    if (a[j] > cand) theta = cand;
  }
  Vec out(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double m = std::max(std::abs(w[i]) - theta, 0.0);
    out[i] = w[i] >= 0.0 ? m : -m;
  }
  return out;
}

Vec project_l2(const Vec& w, double r) {
  const double nrm = w.norm();
  if (nrm <= r * (1.0 + 1e-12)) return w;
  return w * (r / nrm);
}

Vec scale_into_ball(Vec v, double phi) {
  const double nrm = v.norm();
  if (nrm > phi) v *= phi / nrm;
  return v;
}

void require_convex_member(const ConstraintSet& set, const Vec& x, double tol, const char* what) {
  if (!set.is_convex()) {
    throw UnsupportedError(std::string(what) + ": set '" + set.name() + "' is not convex");
  }
  if (!set.contains(x, tol)) throw ArgumentError(std::string(what) + ": x is not in K");
}

/// Dykstra projection onto (K - x) cap phi B_2.
Vec project_intersection(const ConstraintSet& set, const Vec& x, double phi, const Vec& v,
                         int sweeps) {
  Vec y = v;
  Vec p = Vec::Zero(v.size());
  Vec q = Vec::Zero(v.size());
  for (int s = 0; s < sweeps; ++s) {
    const Vec a = project(set, y + p + x) - x;
    p = y + p - a;
    const Vec b = project_l2(a + q, phi);
    q = a + q - b;
    y = b;
  }
  // Feasibility: K - x is convex and contains 0, so shrinking keeps membership.
  return scale_into_ball(project(set, y + x) - x, phi);
}

double exhaustive_l2(const Vec& w, double radius, const Vec& x, double phi) {
  const double wn = w.norm();
  if (wn == 0.0) return 0.0;
  const Vec wh = w / wn;
  double best = 0.0;
  auto consider = [&](const Vec& z) {
    if (z.norm() <= radius * (1.0 + 1e-12) && (z - x).norm() <= phi * (1.0 + 1e-12)) {
      best = std::max(best, w.dot(z - x));
    }
  };
  consider(x + phi * wh);
  consider(radius * wh);
  const double d = x.norm();
  if (d > 0.0) {
    const Vec e = x / d;
    const double a = (radius * radius + d * d - phi * phi) / (2.0 * d);
    const double rho2 = radius * radius - a * a;
    if (rho2 >= 0.0) {
      Vec perp = w - w.dot(e) * e;
      const double pn = perp.norm();
      Vec z = a * e;
      if (pn > 0.0) z += std::sqrt(rho2) * perp / pn;
      consider(z);
    }
  }
  return best;
}

double exhaustive_l1(const Vec& w, double radius, const Vec& x, double phi) {
  const Eigen::Index n = w.size();
  if (n > 12) throw ArgumentError("dual_norm_convex_exhaustive: L1 enumeration needs n <= 12");
  double best = 0.0;
  auto consider = [&](const Vec& z) {
    if (z.lpNorm<1>() <= radius * (1.0 + 1e-12) && (z - x).norm() <= phi * (1.0 + 1e-12)) {
      best = std::max(best, w.dot(z - x));
    }
  };
  const double wn = w.norm();
  if (wn == 0.0) return 0.0;
  consider(x + phi * w / wn);

  std::vector<int> sigma(static_cast<std::size_t>(n), 0);
  long total = 1;
  for (Eigen::Index i = 0; i < n; ++i) total *= 3;
  for (long code = 0; code < total; ++code) {
    long c = code;
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < n; ++i) {
      sigma[i] = static_cast<int>(c % 3) - 1;
      c /= 3;
      if (sigma[i] != 0) support.push_back(i);
    }
    if (support.empty()) continue;
    const double s = static_cast<double>(support.size());
    // Face {z : z_j = 0 off S, sigma^T z = r, sigma_i z_i >= 0}.
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (sigma[j] == 0) off += x[j] * x[j];
    }
    double sx = 0.0;
    double sw = 0.0;
    for (Eigen::Index i : support) {
      sx += sigma[i] * x[i];
      sw += sigma[i] * w[i];
    }
    const double shift = (radius - sx) / s;
    double center_gap = shift * shift * s;
    const double rho2 = phi * phi - off - center_gap;

    Vec z = Vec::Zero(n);
    Vec perp = Vec::Zero(n);
    for (Eigen::Index i : support) {
      z[i] = x[i] + shift * sigma[i];
      perp[i] = w[i] - (sw / s) * sigma[i];
    }
    // Vertex-type candidate: LP optimum on this face without the ball.
    if (support.size() == 1) {
      Vec v = Vec::Zero(n);
      v[support[0]] = sigma[support[0]] * radius;
      consider(v);
    }
    if (rho2 < 0.0) continue;
    const double pn = perp.norm();
    if (pn > 0.0) z += std::sqrt(rho2) * perp / pn;
    bool on_face = true;
    for (Eigen::Index i : support) {
      if (sigma[i] * z[i] < -1e-12) on_face = false;
    }
    if (on_face) consider(z);
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// ConstraintSet
// ---------------------------------------------------------------------------

ConstraintSet ConstraintSet::sparsity_cone(Eigen::Index k) {
  if (k < 1) throw ArgumentError("sparsity cone needs k >= 1");
  return {SetKind::SparsityCone, k, 0.0};
}

ConstraintSet ConstraintSet::l1_ball(double radius) {
  require_radius(radius);
  return {SetKind::L1Ball, 0, radius};
}

ConstraintSet ConstraintSet::l2_ball(double radius) {
  require_radius(radius);
  return {SetKind::L2Ball, 0, radius};
}

ConstraintSet ConstraintSet::sphere(double radius) {
  require_radius(radius);
  return {SetKind::Sphere, 0, radius};
}

ConstraintSet ConstraintSet::from_name(std::string_view name, double parameter) {
  if (name == "sigma-k") {
    if (parameter != std::floor(parameter)) throw ArgumentError("sigma-k needs an integer k");
    return sparsity_cone(static_cast<Eigen::Index>(parameter));
  }
  if (name == "l1-ball") return l1_ball(parameter);
  if (name == "l2-ball") return l2_ball(parameter);
  if (name == "sphere") return sphere(parameter);
  throw ArgumentError("unknown constraint set '" + std::string(name) + "'");
}

std::string ConstraintSet::name() const {
  switch (kind_) {
    case SetKind::SparsityCone: return "sigma-k";
    case SetKind::L1Ball: return "l1-ball";
    case SetKind::L2Ball: return "l2-ball";
    case SetKind::Sphere: return "sphere";
  }
  return "?";
}

double ConstraintSet::parameter() const noexcept {
  return kind_ == SetKind::SparsityCone ? static_cast<double>(k_) : radius_;
}

bool ConstraintSet::contains(const Vec& v, double tol) const {
  const double slack = tol * std::max(1.0, radius_);
  switch (kind_) {
    case SetKind::SparsityCone:
      return (v.array() != 0.0).count() <= k_;
    case SetKind::L1Ball:
      return v.lpNorm<1>() <= radius_ + slack;
    case SetKind::L2Ball:
      return v.norm() <= radius_ + slack;
    case SetKind::Sphere:
      return std::abs(v.norm() - radius_) <= slack;
  }
  return false;
}

Vec project(const ConstraintSet& set, const Vec& w) {
  if (w.size() == 0) throw ArgumentError("project: empty vector");
  switch (set.kind()) {
    case SetKind::SparsityCone: {
      if (set.k() >= w.size()) return w;
      Vec out = Vec::Zero(w.size());
      for (Eigen::Index i : top_k_indices(w, set.k())) out[i] = w[i];
      return out;
    }
    case SetKind::L1Ball:
      return project_l1(w, set.radius());
    case SetKind::L2Ball:
      return project_l2(w, set.radius());
    case SetKind::Sphere: {
      const double r = set.radius();
      const double nrm = w.norm();
      if (nrm == 0.0) {
        Vec e = Vec::Zero(w.size());
        e[0] = r;
        return e;
      }
      if (std::abs(nrm - r) <= 1e-12 * r) return w;
      return w * (r / nrm);
    }
  }
  return w;
}

// ---------------------------------------------------------------------------
// Dual norms
// ---------------------------------------------------------------------------

DualNormEstimate dual_norm_cone(const Vec& w, Eigen::Index k) {
  if (k < 1) throw ArgumentError("dual_norm_cone: k must be >= 1");
  return {top_k_norm(w, 2 * k), true, 0};
}

DualNormEstimate dual_norm_convex(const Vec& w, const ConstraintSet& set, const Vec& x, double phi,
                                  const DualNormOptions& options) {
  require_size(w, x, "dual_norm_convex");
  require_radius(phi);
  require_convex_member(set, x, options.membership_tol, "dual_norm_convex");
  DualNormEstimate est{0.0, false, 0};
  const double wn = w.norm();
  if (wn == 0.0) return est;
  const double step = phi / wn;
  const Eigen::Index n = w.size();

  Rng rng(options.seed);
  std::vector<Vec> starts{Vec::Zero(n)};
  for (int s = 0; s < options.random_starts; ++s) {
    const Vec g = rng.normal_vector(n);
    starts.push_back(project_intersection(set, x, phi, phi * g / g.norm(),
                                          options.dykstra_sweeps));
  }
  for (const Vec& start : starts) {
    Vec v = start;
    est.value = std::max(est.value, w.dot(v));
    for (int it = 0; it < options.max_iter; ++it) {
      const Vec next = project_intersection(set, x, phi, v + step * w, options.dykstra_sweeps);
      ++est.iterations;
      est.value = std::max(est.value, w.dot(next));
      const double moved = (next - v).norm();
      v = next;
      if (moved <= options.stop_tol * phi) break;
    }
  }
  return est;
}

DualNormEstimate dual_norm_convex_exhaustive(const Vec& w, const ConstraintSet& set, const Vec& x,
                                             double phi) {
  require_size(w, x, "dual_norm_convex_exhaustive");
  require_radius(phi);
  require_convex_member(set, x, 1e-9, "dual_norm_convex_exhaustive");
  const double v = set.kind() == SetKind::L2Ball ? exhaustive_l2(w, set.radius(), x, phi)
                                                 : exhaustive_l1(w, set.radius(), x, phi);
  return {v, true, 0};
}

LemmaCheck projection_lemma_check(const ConstraintSet& set, const Vec& z, const Vec& w, double t) {
  require_size(w, z, "projection_lemma_check");
  require_radius(t);
  require_convex_member(set, z, 1e-9, "projection_lemma_check");
  LemmaCheck c;
  c.lhs = (project(set, w) - z).norm();
  const Vec diff = w - z;
  const bool exact = set.kind() == SetKind::L2Ball || w.size() <= 4;
  auto evaluate = [&](bool use_exact) {
    const double d = use_exact ? dual_norm_convex_exhaustive(diff, set, z, t).value
                               : dual_norm_convex(diff, set, z, t).value;
    return std::max(t, 2.0 / t * d);
  };
  c.rhs = evaluate(exact);
  c.exact_rhs = exact;
  auto passes = [&] { return c.lhs <= c.rhs + 1e-12 * std::max(1.0, c.rhs); };
  if (!passes() && !exact && w.size() <= 12) {
    c.rhs = evaluate(true);
    c.exact_rhs = true;
  }
  c.slack = c.rhs - c.lhs;
  c.holds = passes();
  return c;
}

}  // namespace unirec
