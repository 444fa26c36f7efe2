#pragma once

#include "unirec/core.hpp"

#include <string>
#include <string_view>

namespace unirec {

enum class SetKind { SparsityCone, L1Ball, L2Ball, Sphere };

/// Constraint set K.
class ConstraintSet {
 public:
  static ConstraintSet sparsity_cone(Eigen::Index k);
  static ConstraintSet l1_ball(double radius);
  static ConstraintSet l2_ball(double radius);
  static ConstraintSet sphere(double radius = 1.0);

  /// Config names "sigma-k", "l1-ball", "l2-ball", "sphere". For "sigma-k"
  /// the parameter is k.
  static ConstraintSet from_name(std::string_view name, double parameter);

  SetKind kind() const noexcept { return kind_; }
  Eigen::Index k() const noexcept { return k_; }
  double radius() const noexcept { return radius_; }
  bool is_cone() const noexcept { return kind_ == SetKind::SparsityCone; }
  bool is_convex() const noexcept { return kind_ == SetKind::L1Ball || kind_ == SetKind::L2Ball; }
  std::string name() const;
  /// Config parameter: k for the cone, otherwise the radius.
  double parameter() const noexcept;

  /// Membership with relative tolerance tol * max(1, radius).
  bool contains(const Vec& v, double tol = 1e-9) const;

 private:
  ConstraintSet(SetKind kind, Eigen::Index k, double radius) : kind_(kind), k_(k), radius_(radius) {}
  SetKind kind_;
  Eigen::Index k_;
  double radius_;
};

/// Euclidean projection onto the set. Hard thresholding keeps the k largest
/// magnitudes (lowest index wins ties); the sphere maps 0 to r e_1.
Vec project(const ConstraintSet& set, const Vec& w);

struct DualNormEstimate {
  double value = 0.0;
  bool exact = true;
  int iterations = 0;
};

/// Norm dual to (Sigma_k - Sigma_k) cap B_2: l2 norm of the top 2k magnitudes.
DualNormEstimate dual_norm_cone(const Vec& w, Eigen::Index k);

struct DualNormOptions {
  int max_iter = 500;
  int dykstra_sweeps = 50;
  int random_starts = 8;
  double stop_tol = 1e-6;         // relative to phi
  double membership_tol = 1e-9;
  std::uint64_t seed = 0x5eedULL;
};

/// Lower bound on sup { <w, v> : v in (K - x) cap phi B_2 } by multi-start
/// projected ascent, with Dykstra's algorithm for the projection. Returns the
/// best feasible value seen, so it is nondecreasing in max_iter.
DualNormEstimate dual_norm_convex(const Vec& w, const ConstraintSet& set, const Vec& x, double phi,
                                  const DualNormOptions& options = {});

/// Exact value of the same supremum. L2 balls use the two-sphere geometry;
/// L1 balls enumerate every face of the cross-polytope (3^n sign patterns),
/// so n is limited to 12.
DualNormEstimate dual_norm_convex_exhaustive(const Vec& w, const ConstraintSet& set, const Vec& x,
                                             double phi);

struct LemmaCheck {
  bool holds = true;
  double lhs = 0.0;    // ||P_K(w) - z||
  double rhs = 0.0;    // max(t, (2/t) ||w - z|| dual over (K - z) cap t B_2)
  double slack = 0.0;  // rhs - lhs
  bool exact_rhs = false;
};

/// Audit of ||P_K(w) - z|| <= max{t, (2/t) ||w - z||_{K_{z,t} dual}} for z in K.
/// The right side is exact for n <= 4 and for L2 balls; otherwise ascent is
/// used and any failure is re-checked exactly (n <= 12) before reporting.
LemmaCheck projection_lemma_check(const ConstraintSet& set, const Vec& z, const Vec& w, double t);

}  // namespace unirec
